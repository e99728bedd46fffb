from dataclasses import dataclass

from .errors import ConfigurationError


@dataclass(frozen=True)
class Tolerances:
    eps_pt: float = 1e-9      # two angles closer than this are the same point
    delta_min: float = 1e-3   # samplers discard tuples with a smaller gap
    tau_rel: float = 1e-9     # strictness margin for inequalities
    tau_root: float = 1e-12   # residual target for root finders
    eps_root: float = 1e-10   # angular accuracy of root finders
    max_iter: int = 200

    def __post_init__(self):
        for name in ("eps_pt", "delta_min", "tau_rel", "tau_root", "eps_root"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"tolerance {name} must be positive")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be at least 1")


DEFAULT = Tolerances()
