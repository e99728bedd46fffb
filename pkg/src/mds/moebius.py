"""Semi-metrics on the circle, their cross-ratio triples, and monotonicity checks."""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .circle import (
    TWO_PI,
    CirclePoint,
    CrossRatioTriple,
    TupleN,
    angular_distance,
    ccw,
    normalize,
)
from .errors import (
    ChartSingularityError,
    ConfigurationError,
    EvaluationError,
)
from .tolerances import DEFAULT, Tolerances


def _angles(x):
    if isinstance(x, CirclePoint):
        return x.theta
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class SemiMetric:
    """A symmetric function on the circle vanishing on the diagonal.

    `remote` marks an infinitely remote point (then the semi-metric is unbounded).
    """
    logeval: Callable
    bounded: bool = True
    remote: Optional[float] = None

    def eval(self, x, y):
        return float(np.exp(self.logeval(_angles(x), _angles(y))))

    def __call__(self, x, y):
        return self.eval(x, y)


class MoebiusStructure:
    """Base class. Subclasses supply a vectorized log of a bounded representative."""
    family = "abstract"

    def logdist(self, x, y):
        raise NotImplementedError

    def dist(self, x, y):
        return np.exp(self.logdist(x, y))

    def descriptor(self):
        return self.family

    def semimetric(self):
        return SemiMetric(self.logdist, bounded=True)

    def supports(self, angles):
        """Whether the structure can be evaluated at these angles (tabulated ones cannot everywhere)."""
        return True


def _chordal_log(x, y):
    with np.errstate(divide="ignore"):
        return np.log(2.0 * np.abs(np.sin((np.asarray(x) - np.asarray(y)) / 2.0)))


@dataclass(frozen=True)
class Canonical(MoebiusStructure):
    family = "canonical"

    def logdist(self, x, y):
        return _chordal_log(x, y)


@dataclass(frozen=True)
class Snowflake(MoebiusStructure):
    """The base semi-metric raised to the power alpha."""
    alpha: float
    base: MoebiusStructure = field(default_factory=Canonical)
    family = "snowflake"

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ConfigurationError(f"snowflake exponent must be positive, got {self.alpha}")

    def logdist(self, x, y):
        return self.alpha * self.base.logdist(x, y)

    def descriptor(self):
        inner = "" if isinstance(self.base, Canonical) else f",{self.base.descriptor()}"
        return f"snowflake({self.alpha!r}{inner})"

    def supports(self, angles):
        return self.base.supports(angles)


@dataclass(frozen=True)
class Ellipse:
    """Curve theta -> (a cos theta, b sin theta)."""
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and np.isfinite(self.a) and np.isfinite(self.b)):
            raise ConfigurationError(f"ellipse semi-axes must be positive, got {(self.a, self.b)}")

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.stack([self.a * np.cos(theta), self.b * np.sin(theta)], axis=-1)

    def logdist(self, x, y):
        # |f(x) - f(y)| = 2|sin(D/2)| sqrt(a^2 sin^2 m + b^2 cos^2 m), D = x - y, m = (x + y)/2
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        m = (x + y) / 2.0
        scale = np.hypot(self.a * np.sin(m), self.b * np.cos(m))
        return _chordal_log(x, y) + np.log(scale)


@dataclass(frozen=True)
class Embedding(MoebiusStructure):
    """Euclidean distance between images of an embedded closed curve."""
    curve: object
    family = "embedding"

    def logdist(self, x, y):
        if hasattr(self.curve, "logdist"):
            return self.curve.logdist(x, y)
        fx, fy = self.curve(x), self.curve(y)
        with np.errstate(divide="ignore"):
            return np.log(np.linalg.norm(fx - fy, axis=-1))

    def descriptor(self):
        c = self.curve
        if isinstance(c, Ellipse):
            return f"ellipse({c.a!r},{c.b!r})"
        return f"embedding({getattr(c, '__name__', type(c).__name__)})"


def ellipse(a, b):
    return Embedding(Ellipse(float(a), float(b)))


@dataclass(frozen=True)
class Perturbed(MoebiusStructure):
    """Chordal distance times (1 + eta sin(theta_x) sin(theta_y))."""
    eta: float
    family = "perturbed"

    def __post_init__(self):
        if not abs(self.eta) < 1:
            raise ConfigurationError(f"perturbation |eta| must be below 1, got {self.eta}")

    def logdist(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return _chordal_log(x, y) + np.log1p(self.eta * np.sin(x) * np.sin(y))

    def descriptor(self):
        return f"perturbed({self.eta!r})"


@dataclass(frozen=True)
class Rescaled(MoebiusStructure):
    """Conformal change d(x,y) -> l(x) l(y) d(x,y) with l = 1 + k sin(theta); same Moebius structure."""
    base: MoebiusStructure = field(default_factory=Canonical)
    k: float = 0.5
    family = "rescaled"

    def __post_init__(self):
        if not abs(self.k) < 1:
            raise ConfigurationError("rescaling amplitude must be below 1")

    def logdist(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return self.base.logdist(x, y) + np.log1p(self.k * np.sin(x)) + np.log1p(self.k * np.sin(y))

    def descriptor(self):
        return f"rescaled({self.base.descriptor()},{self.k!r})"


@dataclass(frozen=True, eq=False)
class Tabulated(MoebiusStructure):
    """A semi-metric known only on a finite grid of angles. No interpolation."""
    angles: np.ndarray
    matrix: np.ndarray
    eps_pt: float = DEFAULT.eps_pt
    family = "tabulated"

    def __post_init__(self):
        ang = np.asarray(self.angles, dtype=float)
        mat = np.asarray(self.matrix, dtype=float)
        n = len(ang)
        if mat.shape != (n, n):
            raise ConfigurationError(f"distance table must be {n}x{n}, got {mat.shape}")
        if n > 1 and np.any(np.diff(ang) <= 0):
            raise ConfigurationError("grid angles must be strictly ascending")
        if not np.all(np.isfinite(mat)):
            raise ConfigurationError("distance table has non-finite entries")
        if np.any(np.diag(mat) != 0):
            raise ConfigurationError("distance table diagonal must vanish")
        if not np.array_equal(mat, mat.T):
            raise ConfigurationError("distance table must be symmetric")
        off = mat[~np.eye(n, dtype=bool)]
        if np.any(off <= 0):
            raise ConfigurationError("off-diagonal distances must be positive")
        object.__setattr__(self, "angles", normalize(ang) if n else ang)
        object.__setattr__(self, "matrix", mat)

    def __hash__(self):
        return hash((self.angles.tobytes(), self.matrix.tobytes()))

    def __eq__(self, other):
        return (isinstance(other, Tabulated) and np.array_equal(self.angles, other.angles)
                and np.array_equal(self.matrix, other.matrix))

    def index(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        gaps = angular_distance(theta[:, None], self.angles[None, :])
        idx = np.argmin(gaps, axis=1)
        if np.any(gaps[np.arange(len(theta)), idx] > self.eps_pt):
            raise ConfigurationError("tabulated structures are defined only at grid points")
        return idx

    def supports(self, angles):
        try:
            self.index(np.ravel(angles))
        except ConfigurationError:
            return False
        return True

    def logdist(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        ix = self.index(np.broadcast_to(x, shape).ravel())
        iy = self.index(np.broadcast_to(y, shape).ravel())
        with np.errstate(divide="ignore"):
            out = np.log(self.matrix[ix, iy]).reshape(shape)
        return out if shape else float(out)

    def descriptor(self):
        return f"tabulated(n={len(self.angles)})"


def canonical_table(n, offset=0.0):
    """Chordal table on n equally spaced angles, handy for tests and examples."""
    ang = normalize(offset + TWO_PI * np.arange(n) / n)
    ang = np.sort(ang)
    mat = 2.0 * np.abs(np.sin((ang[:, None] - ang[None, :]) / 2.0))
    np.fill_diagonal(mat, 0.0)
    return Tabulated(ang, mat)


def _parse_args(text):
    text = text.strip()
    if not text:
        return []
    return [float(t) for t in text.split(",")]


def make_structure(spec) -> MoebiusStructure:
    """Build a structure from a descriptor.

    Accepts an existing structure, a dict like {"family": "snowflake", "alpha": 2},
    or strings such as "canonical", "snowflake(0.5)", "ellipse(2,0.4)", "perturbed(1e-3)".
    """
    if isinstance(spec, MoebiusStructure):
        return spec
    if isinstance(spec, dict):
        fam = spec.get("family")
        try:
            if fam == "canonical":
                return Canonical()
            if fam == "snowflake":
                base = make_structure(spec["base"]) if "base" in spec else Canonical()
                return Snowflake(float(spec["alpha"]), base)
            if fam in ("embedding", "ellipse"):
                return ellipse(spec["a"], spec["b"])
            if fam == "perturbed":
                return Perturbed(float(spec["eta"]))
            if fam == "rescaled":
                return Rescaled(make_structure(spec.get("base", "canonical")), float(spec.get("k", 0.5)))
            if fam == "tabulated":
                return Tabulated(np.asarray(spec["angles"]), np.asarray(spec["matrix"]))
        except KeyError as exc:
            raise ConfigurationError(f"missing parameter {exc} for family {fam!r}") from None
        raise ConfigurationError(f"unknown structure family {fam!r}")
    if not isinstance(spec, str):
        raise ConfigurationError(f"cannot build a structure from {spec!r}")
    s = spec.strip().lower().replace(" ", "")
    name, _, rest = s.partition("(")
    if ":" in name:
        name, _, rest = s.partition(":")
        rest = rest + ")"
    if rest and not rest.endswith(")"):
        raise ConfigurationError(f"malformed structure descriptor {spec!r}")
    try:
        args = _parse_args(rest[:-1]) if rest else []
    except ValueError:
        raise ConfigurationError(f"malformed structure descriptor {spec!r}") from None
    if name == "canonical" and not args:
        return Canonical()
    if name == "snowflake" and len(args) == 1:
        return Snowflake(args[0])
    if name in ("ellipse", "embedding") and len(args) == 2:
        return ellipse(*args)
    if name == "perturbed" and len(args) == 1:
        return Perturbed(args[0])
    if name == "rescaled" and len(args) <= 1:
        return Rescaled(Canonical(), *(args or [0.5]))
    raise ConfigurationError(f"unknown structure descriptor {spec!r}")


def logs_batch(M: MoebiusStructure, Q):
    """All six pairwise log distances of the rows of Q (shape (n, 4))."""
    Q = np.asarray(Q, dtype=float)
    L = {}
    for i in range(4):
        for j in range(i + 1, 4):
            L[(i, j)] = M.logdist(Q[:, i], Q[:, j])
    return L


def cross_ratio_batch(M: MoebiusStructure, Q):
    """Rows (ln cr1, ln cr2, ln cr3) for each 4-tuple row of Q."""
    L = logs_batch(M, Q)
    a = L[0, 2] + L[1, 3] - L[0, 3] - L[1, 2]
    b = L[0, 3] + L[1, 2] - L[0, 1] - L[2, 3]
    c = L[0, 1] + L[2, 3] - L[1, 3] - L[0, 2]
    return np.stack([a, b, c], axis=-1)


def cross_ratio_triple(M: MoebiusStructure, q, tol: Tolerances = DEFAULT) -> CrossRatioTriple:
    if not isinstance(q, TupleN):
        q = TupleN.from_angles(q)
    if len(q) != 4:
        raise ValueError("cross-ratio triples need a 4-tuple")
    q.require_nondegenerate(tol.eps_pt)
    row = cross_ratio_batch(M, q.angles[None, :])[0]
    if not np.all(np.isfinite(row)):
        raise EvaluationError(f"non-finite semi-metric value on {tuple(q.angles)}")
    return CrossRatioTriple(*map(float, row))


def cr_values(M, Q):
    """(cr1, cr2, cr3) themselves rather than their logs."""
    return np.exp(cross_ratio_batch(M, Q))


def metric_inversion(d, omega) -> SemiMetric:
    """Chart semi-metric d_omega(x, y) = d(x, y) / (d(x, omega) d(y, omega))."""
    logd = d.logdist if isinstance(d, MoebiusStructure) else d.logeval
    w = float(_angles(omega))

    def logeval(x, y):
        return logd(x, y) - logd(x, w) - logd(y, w)

    return SemiMetric(logeval, bounded=False, remote=w)


def metric_inversion_eval(d, omega, x, y, tol: Tolerances = DEFAULT) -> float:
    x, y, w = float(_angles(x)), float(_angles(y)), float(_angles(omega))
    if angular_distance(x, w) <= tol.eps_pt or angular_distance(y, w) <= tol.eps_pt:
        raise ChartSingularityError("argument coincides with the infinitely remote point")
    if angular_distance(x, y) <= tol.eps_pt:
        return 0.0
    return metric_inversion(d, w).eval(x, y)


# ---------------------------------------------------------------- monotonicity

@dataclass(frozen=True)
class SamplerConfig:
    samples: int = 10_000
    seed: int = 0
    min_gap: float = DEFAULT.delta_min


@dataclass
class MonotonicityReport:
    passed: bool
    tested: int
    skipped: int
    violations: int
    worst_margin: float
    witness: Optional[tuple] = None
    witness_margins: Optional[tuple] = None
    margins: np.ndarray = field(default=None, repr=False)


def min_gap_rows(Q):
    Q = np.asarray(Q, dtype=float)
    k = Q.shape[1]
    gap = np.full(len(Q), np.inf)
    for i in range(k):
        for j in range(i + 1, k):
            gap = np.minimum(gap, angular_distance(Q[:, i], Q[:, j]))
    return gap


def monotonicity_margins(M: MoebiusStructure, Q):
    """Both log margins of Axiom (M) for rows (x, z, y, u) in cyclic order.

    The separating pairs are (x, y) and (z, u); margins are
    ln(|xy||zu|) - ln(|xz||yu|) and ln(|xy||zu|) - ln(|xu||yz|).
    """
    Q = np.asarray(Q, dtype=float)
    x, z, y, u = Q[:, 0], Q[:, 1], Q[:, 2], Q[:, 3]
    top = M.logdist(x, y) + M.logdist(z, u)
    m1 = top - M.logdist(x, z) - M.logdist(y, u)
    m2 = top - M.logdist(x, u) - M.logdist(y, z)
    return np.stack([m1, m2], axis=-1)


def sample_cyclic(rng, n, k, min_gap=DEFAULT.delta_min):
    """n sorted k-tuples of uniform angles plus a mask of rows with all gaps >= min_gap."""
    Q = np.sort(rng.uniform(0.0, TWO_PI, size=(n, k)), axis=1)
    return Q, min_gap_rows(Q) >= min_gap


def check_monotonicity(M: MoebiusStructure, sampler: SamplerConfig = SamplerConfig(),
                       tol: Tolerances = DEFAULT) -> MonotonicityReport:
    rng = np.random.default_rng(sampler.seed)
    Q, ok = sample_cyclic(rng, sampler.samples, 4, sampler.min_gap)
    Q = Q[ok]
    margins = monotonicity_margins(M, Q)
    worst = margins.min(axis=1)
    bad = worst <= tol.tau_rel
    report = MonotonicityReport(
        passed=not bool(bad.any()),
        tested=int(len(Q)),
        skipped=int((~ok).sum()),
        violations=int(bad.sum()),
        worst_margin=float(worst.min()) if len(worst) else float("nan"),
        margins=worst,
    )
    if bad.any():
        i = int(np.argmin(worst))
        report.witness = tuple(map(float, Q[i]))
        report.witness_margins = tuple(map(float, margins[i]))
    return report


def balls_are_arcs(M: MoebiusStructure, omega, x, radius, grid=720):
    """True if {y : |xy|_omega < radius} is a single arc around x in the chart at omega.

    A sampled necessary condition for Axiom (T); not a certificate.
    """
    chart = metric_inversion(M, omega)
    ys = normalize(omega + TWO_PI * (np.arange(1, grid) / grid))
    inside = chart.logeval(np.full_like(ys, x), ys) < np.log(radius)
    # along the sweep from omega to omega, the ball must be one contiguous run
    changes = np.count_nonzero(np.diff(inside.astype(int)))
    return changes <= 2 and (not inside[0]) and (not inside[-1])


def nesting_margins(M: MoebiusStructure, U, X, Z, Y):
    """ln|xy|_u - ln|xz|_u; positive when the chart at u respects arc nesting xz in xy."""
    Lu = lambda a, b: M.logdist(a, b) - M.logdist(a, U) - M.logdist(b, U)
    return Lu(X, Y) - Lu(X, Z)


def ccw_between(a, b, c):
    """True where b lies strictly inside the ccw arc a -> c."""
    return (ccw(a, b) > 0) & (ccw(a, b) < ccw(a, c))
