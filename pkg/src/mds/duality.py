"""The two maps between Moebius structures and timed causal spaces.

`forward_map` packages a structure as a `TimedSpaceOracle`; `submoebius_batch`
goes back, reading cross-ratio triples off time labels alone.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .circle import (
    CirclePoint,
    CrossRatioTriple,
    TupleN,
    angular_distance,
    from_chart,
    normalize,
    signed_action_batch,
    to_chart,
    TWO_PI,
)
from .errors import (
    ConfigurationError,
    ConstructionError,
    NotMonotoneError,
    OracleInconsistencyError,
)
from .harmonic import (
    CausalClass,
    Event,
    causal_class,
    conjugate_batch,
    harmonic_residual_batch,
    line_time_batch,
    time_batch,
)
from .moebius import (
    MoebiusStructure,
    SamplerConfig,
    Tabulated,
    check_monotonicity,
    cross_ratio_batch,
    monotonicity_margins,
)
from .tolerances import DEFAULT, Tolerances


class TimedSpaceOracle(ABC):
    """Causal classification, time, and the timelike-point solver of a timed space.

    Batch methods default to loops over the scalar ones; concrete oracles may
    override them with vectorized kernels.
    """
    tol: Tolerances = DEFAULT

    def causal_class(self, a: Event, b: Event) -> CausalClass:
        return causal_class(a, b, self.tol.eps_pt)

    @abstractmethod
    def time(self, a: Event, b: Event) -> float:
        ...

    @abstractmethod
    def timelike_point(self, e: Event, x) -> CirclePoint:
        """x_e: the partner y of x with (x, y) on h_e."""

    def line_time(self, e: Event, z, zp) -> float:
        """Time along h_e between z_e and z'_e."""
        z, zp = float(z), float(zp)
        return self.time(Event(z, self.timelike_point(e, z).theta), Event(zp, self.timelike_point(e, zp).theta))

    def time_batch(self, a1, a2, b1, b2):
        return np.array([self.time(Event(*p), Event(*r)) for p, r in
                         zip(zip(a1, a2), zip(b1, b2))])

    def timelike_point_batch(self, e1, e2, x):
        return np.array([self.timelike_point(Event(p, q), v).theta for p, q, v in zip(e1, e2, x)])

    def line_time_batch(self, e1, e2, z, zp):
        w = self.timelike_point_batch(e1, e2, z)
        wp = self.timelike_point_batch(e1, e2, zp)
        return self.time_batch(z, w, zp, wp)


@dataclass(frozen=True)
class StructureOracle(TimedSpaceOracle):
    """The timed causal space of a monotone structure.

    With exact_lines=True, times between events already known to share the
    line h_e use e directly instead of re-solving for the common perpendicular.
    """
    M: MoebiusStructure
    exact_lines: bool = False
    tol: Tolerances = DEFAULT

    def time(self, a, b):
        if a.same(b, self.tol.eps_pt):
            return 0.0
        cls = self.causal_class(a, b)
        if cls is CausalClass.SEPARATE:
            from .errors import CausalClassError
            raise CausalClassError("time is undefined for separating events")
        t, _ = time_batch(self.M, a.p, a.q, b.p, b.q, self.tol)
        return float(t)

    def timelike_point(self, e, x):
        return CirclePoint(float(conjugate_batch(self.M, e.p, e.q, float(x), self.tol)))

    def time_batch(self, a1, a2, b1, b2):
        return time_batch(self.M, a1, a2, b1, b2, self.tol)[0]

    def timelike_point_batch(self, e1, e2, x):
        return conjugate_batch(self.M, e1, e2, x, self.tol)

    def line_time_batch(self, e1, e2, z, zp):
        if self.exact_lines:
            return line_time_batch(self.M, e1, e2, z, zp)
        return super().line_time_batch(e1, e2, z, zp)


@dataclass(frozen=True)
class PerturbedOracle(TimedSpaceOracle):
    """Wraps an oracle and adds `delta` to every time measured along h_target.

    Membership of an event in h_target is decided statelessly through the
    base oracle's timelike-point solver.
    """
    base: TimedSpaceOracle
    target: Event
    delta: float
    match_tol: float = 1e-8

    @property
    def tol(self):
        return self.base.tol

    def _on_target_batch(self, p, q):
        w = self.base.timelike_point_batch(np.full(np.shape(p), self.target.p),
                                           np.full(np.shape(p), self.target.q), p)
        touching = (angular_distance(p, self.target.p) <= self.match_tol) | (
            angular_distance(p, self.target.q) <= self.match_tol)
        return (angular_distance(w, q) <= self.match_tol) & ~touching

    def _is_target_batch(self, e1, e2):
        e1, e2 = np.asarray(e1, float), np.asarray(e2, float)
        direct = (angular_distance(e1, self.target.p) <= self.match_tol) & (
            angular_distance(e2, self.target.q) <= self.match_tol)
        swapped = (angular_distance(e1, self.target.q) <= self.match_tol) & (
            angular_distance(e2, self.target.p) <= self.match_tol)
        return direct | swapped

    def time(self, a, b):
        t = self.base.time(a, b)
        both = self._on_target_batch(np.array([a.p, b.p]), np.array([a.q, b.q]))
        return t + self.delta if both.all() and t > 0 else t

    def timelike_point(self, e, x):
        return self.base.timelike_point(e, x)

    def time_batch(self, a1, a2, b1, b2):
        t = np.asarray(self.base.time_batch(a1, a2, b1, b2), float)
        on = self._on_target_batch(np.asarray(a1, float), np.asarray(a2, float)) & \
            self._on_target_batch(np.asarray(b1, float), np.asarray(b2, float))
        return t + self.delta * (on & (t > 0))

    def timelike_point_batch(self, e1, e2, x):
        return self.base.timelike_point_batch(e1, e2, x)

    def line_time_batch(self, e1, e2, z, zp):
        t = np.asarray(self.base.line_time_batch(e1, e2, z, zp), float)
        return t + self.delta * self._is_target_batch(e1, e2)


def _grid_monotone(M: Tabulated, tol: Tolerances):
    from itertools import combinations
    idx = np.array(list(combinations(range(len(M.angles)), 4)))
    if len(idx) == 0:
        return None
    Q = M.angles[idx]
    m = monotonicity_margins(M, Q)
    worst = m.min(axis=1)
    i = int(np.argmin(worst))
    return None if worst[i] > tol.tau_rel else tuple(map(float, Q[i]))


def forward_map(M: MoebiusStructure, exact_lines: bool = False, tol: Tolerances = DEFAULT,
                check: Optional[SamplerConfig] = SamplerConfig(samples=4000, seed=0)) -> StructureOracle:
    """Timed causal space of M. Refuses structures with a monotonicity witness."""
    if isinstance(M, Tabulated):
        witness = _grid_monotone(M, tol)
        if witness is not None:
            raise NotMonotoneError("tabulated structure violates monotonicity", witness)
    elif check is not None:
        rep = check_monotonicity(M, check, tol)
        if not rep.passed:
            raise NotMonotoneError(f"{M.descriptor()} is not monotone", rep.witness)
    return StructureOracle(M, exact_lines=exact_lines, tol=tol)


# ----------------------------------------------------------- inverse map

@dataclass(frozen=True)
class TimeLabels:
    t12: float
    t23: float
    t34: float
    t41: float

    def opposite_gap(self):
        return max(abs(self.t12 - self.t34), abs(self.t23 - self.t41))

    def consistent(self, tau=1e-9):
        scale = max(1.0, self.t12, self.t23)
        return self.opposite_gap() <= tau * scale


def time_labels_batch(T: TimedSpaceOracle, C):
    """Labels (t12, t23, t34, t41) of cyclically ordered rows C = (c1, c2, c3, c4).

    t_{i,i+1} is the time along h_(c_i, c_{i+1}) between the events through
    the two remaining points.
    """
    C = np.asarray(C, dtype=float)
    c = [C[:, k] for k in range(4)]
    out = []
    for k in range(4):
        e1, e2 = c[k], c[(k + 1) % 4]
        z, zp = c[(k + 2) % 4], c[(k + 3) % 4]
        out.append(np.asarray(T.line_time_batch(e1, e2, z, zp), float))
    return np.stack(out, axis=-1)


def time_labels(T: TimedSpaceOracle, q) -> TimeLabels:
    q = q if isinstance(q, TupleN) else TupleN.from_angles(q)
    C = np.sort(q.require_nondegenerate(T.tol.eps_pt).angles)[None, :]
    return TimeLabels(*map(float, time_labels_batch(T, C)[0]))


# position in the base tuple q0 = (c1, c2, c4, c3) of the k-th cyclic entry
_Q0_POSITION = np.array([0, 1, 3, 2])


def submoebius_batch(T: TimedSpaceOracle, Q, strict: bool = True, tau: float = 1e-9):
    """Cross-ratio triples of 4-tuples computed from time labels only.

    On the base tuple q0 = (c1, c2, c4, c3) the triple is (-t12, t23, t12 - t23);
    any other ordering p = sigma q0 gets sign(sigma) phi(sigma) of that.
    With strict=False the opposite labels are averaged instead of checked.
    """
    Q = np.asarray(Q, dtype=float)
    order = np.argsort(Q, axis=1, kind="stable")
    C = np.take_along_axis(Q, order, axis=1)
    lab = time_labels_batch(T, C)
    t12, t23, t34, t41 = lab.T
    if strict:
        scale = np.maximum(1.0, np.maximum(t12, t23))
        gap = np.maximum(np.abs(t12 - t34), np.abs(t23 - t41))
        bad = np.flatnonzero(~(gap <= tau * scale))
        if bad.size:
            i = int(bad[0])
            raise OracleInconsistencyError(
                f"opposite labels differ by {gap[i]:.3e} on {tuple(map(float, Q[i]))}")
    else:
        t12, t23 = 0.5 * (t12 + t34), 0.5 * (t23 + t41)
    base = np.stack([-t12, t23, t12 - t23], axis=-1)
    rank = np.argsort(order, axis=1)            # rank[i] = cyclic index of Q[i]
    sigma = _Q0_POSITION[rank]                 # p_i = q0_{sigma(i)}, 0-based
    codes = ((sigma[:, 0] * 4 + sigma[:, 1]) * 4 + sigma[:, 2]) * 4 + sigma[:, 3]
    return signed_action_batch(codes, base)


def submoebius_from_timed(T: TimedSpaceOracle, q, strict: bool = True) -> CrossRatioTriple:
    q = q if isinstance(q, TupleN) else TupleN.from_angles(q)
    q.require_nondegenerate(T.tol.eps_pt)
    return CrossRatioTriple(*map(float, submoebius_batch(T, q.angles[None, :], strict)[0]))


@dataclass(frozen=True)
class Codifferential:
    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(CrossRatioTriple(*map(float, r)) for r in self.rows))
        if len(self.rows) != 5:
            raise ValueError("a codifferential has five rows")

    def residuals(self):
        a = [r.a for r in self.rows]
        b = [r.b for r in self.rows]
        A = b[0] + b[3] - b[2] + a[0]
        B = b[0] - b[1] - a[3]
        return A, B


def codifferential_batch(Msub, Q5):
    """Array (n, 5, 3) with rows Msub(q_i), q_i = q without its i-th entry."""
    Q5 = np.asarray(Q5, dtype=float)
    return np.stack([Msub(np.delete(Q5, i, axis=1)) for i in range(5)], axis=1)


def codifferential_residuals_batch(Msub, Q5):
    """Residuals of conditions (A) b1 + b4 = b3 - a1 and (B) b2 = b1 - a4, row-wise."""
    D = codifferential_batch(Msub, Q5)
    a, b = D[:, :, 0], D[:, :, 1]
    A = b[:, 0] + b[:, 3] - b[:, 2] + a[:, 0]
    B = b[:, 0] - b[:, 1] - a[:, 3]
    return A, B


def codifferential_residuals(Msub, q):
    q = q if isinstance(q, TupleN) else TupleN.from_angles(q)
    q.require_nondegenerate()
    A, B = codifferential_residuals_batch(Msub, q.angles[None, :])
    return float(A[0]), float(B[0])


def oracle_submoebius(T: TimedSpaceOracle, strict=True):
    """The sub-Moebius map of T as a batch callable (n, 4) -> (n, 3)."""
    return lambda Q: submoebius_batch(T, Q, strict)


def structure_map(M: MoebiusStructure):
    return lambda Q: cross_ratio_batch(M, Q)


def label_relations_batch(T: TimedSpaceOracle, Q5):
    """Residuals of the 10 relations among the 15 labels of a cyclic 5-tuple.

    Returns (opposite, additive), each of shape (n, 5): for every i,
    t^i_{i+1,i+2} - t^i_{i+3,i+4} and
    t^i_{i+2,i+3} - t^{i+1}_{i+2,i+3} - t^{i+4}_{i+2,i+3}.
    """
    X = np.sort(np.asarray(Q5, dtype=float), axis=1)
    x = lambda k: X[:, k % 5]

    def lab(i, j, k):
        # t^i_{jk}: along h_(x_j, x_k) between the two points other than x_i, x_j, x_k
        others = [m for m in range(5) if m % 5 not in (i % 5, j % 5, k % 5)]
        return np.asarray(T.line_time_batch(x(j), x(k), x(others[0]), x(others[1])), float)

    opp, add = [], []
    for i in range(5):
        opp.append(lab(i, i + 1, i + 2) - lab(i, i + 3, i + 4))
        add.append(lab(i, i + 2, i + 3) - lab(i + 1, i + 2, i + 3) - lab(i + 4, i + 2, i + 3))
    return np.stack(opp, axis=-1), np.stack(add, axis=-1)


# ------------------------------------------------------------- round trip

def roundtrip_batch(M: MoebiusStructure, Q, T: Optional[TimedSpaceOracle] = None, strict=True):
    """Row-wise sup-norm distance between the recovered and the original triples."""
    T = forward_map(M) if T is None else T
    back = submoebius_batch(T, Q, strict)
    return np.max(np.abs(back - cross_ratio_batch(M, Q)), axis=1)


def roundtrip_residual(M: MoebiusStructure, q, T: Optional[TimedSpaceOracle] = None) -> float:
    q = q if isinstance(q, TupleN) else TupleN.from_angles(q)
    q.require_nondegenerate()
    return float(roundtrip_batch(M, q.angles[None, :], T)[0])


# --------------------------------------------------------------- PSL2(R)

@dataclass(frozen=True)
class LinearFractional:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if self.a * self.d - self.b * self.c == 0:
            raise ConfigurationError("linear-fractional map needs ad - bc != 0")

    def chart(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (self.a * s + self.b) / (self.c * s + self.d)
            inf_img = self.a / self.c if self.c != 0 else np.inf
            out = np.where(np.isinf(s), inf_img, out)
        return out

    def __call__(self, theta):
        """The map pulled back to angles through theta = 2 arctan(s)."""
        theta = np.asarray(theta, dtype=float)
        s = np.where(np.abs(theta - np.pi) == 0, np.inf, to_chart(theta))
        return from_chart(self.chart(s))

    def pole(self):
        """Angle sent to infinity, or None."""
        if self.c == 0:
            return None
        return normalize(2 * np.arctan(-self.d / self.c))


@dataclass
class Psl2Report:
    passed: bool
    tested: int
    triple_error: float
    harmonic_error: float
    time_error: float
    tolerance: float


def psl2_pullback_check(coeffs, M0: MoebiusStructure, sampler: SamplerConfig = SamplerConfig(samples=1000),
                        tol: Tolerances = DEFAULT, tolerance: float = 1e-9, avoid: float = 0.05) -> Psl2Report:
    """Check that a linear-fractional map preserves triples, harmonicity and time.

    Sampled angles keep a distance `avoid` from the chart pole and from the
    preimage of the pole so chart arithmetic stays well conditioned.
    """
    g = coeffs if isinstance(coeffs, LinearFractional) else LinearFractional(*coeffs)
    rng = np.random.default_rng(sampler.seed)
    bad = [np.pi] + ([g.pole()] if g.pole() is not None else [])

    def draw(n, k):
        out = []
        while sum(len(o) for o in out) < n:
            Q = rng.uniform(0, TWO_PI, size=(2 * n, k))
            ok = np.ones(len(Q), bool)
            for p in bad:
                ok &= np.all(angular_distance(Q, p) > avoid, axis=1)
            ok &= _min_gap(Q) > sampler.min_gap
            out.append(Q[ok])
        return np.concatenate(out)[:n]

    n = sampler.samples
    Q = draw(n, 4)
    trip = np.max(np.abs(cross_ratio_batch(M0, g(Q)) - cross_ratio_batch(M0, Q)))
    # harmonicity: (x, rho_e x) is harmonic with e, so the images must be too
    E = draw(n, 3)
    y = conjugate_batch(M0, E[:, 0], E[:, 1], E[:, 2], tol)
    gy = g(y)
    keep = np.all(angular_distance(np.stack([y], 1), bad[0]) > avoid, axis=1)
    harm = np.max(np.abs(harmonic_residual_batch(M0, g(E[:, 2])[keep], gy[keep], g(E[:, 0])[keep], g(E[:, 1])[keep])))
    # times between strong-causal pairs: rows sorted, a = (q1, q2), b = (q3, q4)
    S = np.sort(draw(max(1, n // 4), 4), axis=1)
    t0 = time_batch(M0, S[:, 0], S[:, 1], S[:, 2], S[:, 3], tol)[0]
    GS = g(S)
    t1 = time_batch(M0, GS[:, 0], GS[:, 1], GS[:, 2], GS[:, 3], tol)[0]
    tim = np.max(np.abs(t1 - t0))
    passed = max(trip, harm, tim) < tolerance
    return Psl2Report(bool(passed), int(n), float(trip), float(harm), float(tim), tolerance)


def _min_gap(Q):
    from .moebius import min_gap_rows
    return min_gap_rows(Q)


# -------------------------------------------------------------- pentagon

def bracket(M: MoebiusStructure, x, y, z, u):
    """[x, y, z, u] = |xy||zu| / (|xz||yu|)."""
    L = M.logdist
    return float(np.exp(L(x, y) + L(z, u) - L(x, z) - L(y, u)))


PENTAGON_CHAIN = ((1, 3, 4, 2), (6, 3, 4, 5), (6, 8, 7, 5), (9, 8, 7, 10), (9, 1, 2, 10), (4, 1, 2, 3))


@dataclass
class PentagonResult:
    converged: bool
    residual: float
    chain: tuple
    chain_spread: float
    iterations: int
    points: tuple
    closure: tuple
    seed: int = 0
    message: str = ""


def regular_pentagon():
    """Ten angles of a regular right-angled pentagon for the chordal structure."""
    gamma = np.arcsin(np.sqrt(2.0) * np.sin(np.pi / 5))
    pts = []
    for k in range(5):
        c = 2 * np.pi * k / 5
        pts += [c - gamma, c + gamma]
    return normalize(np.array(pts))


def _refl(M, p, q, x, tol):
    return float(conjugate_batch(M, p, q, x, tol))


def _pentagon_from(M, fixed, x2, x3, tol):
    x1, x5, x7, x9, x10 = fixed
    x4 = _refl(M, x1, x2, x3, tol)
    x6 = _refl(M, x3, x4, x5, tol)
    x8 = _refl(M, x5, x6, x7, tol)
    return np.array([x1, x2, x3, x4, x5, x6, x7, x8, x9, x10])


def _closure(M, X):
    # sides L4 = (x7, x8), L5 = (x9, x10), L1 = (x1, x2)
    r1 = harmonic_residual_batch(M, X[6], X[7], X[8], X[9])
    r2 = harmonic_residual_batch(M, X[8], X[9], X[0], X[1])
    return np.array([float(r1), float(r2)])


def pentagon_identity(M: MoebiusStructure, seed: int = 0, tol: Tolerances = DEFAULT,
                      jitter: float = 0.03, fd_step: float = 1e-6, damping: float = 0.5,
                      max_iter: int = 100, target: float = 1e-13) -> PentagonResult:
    """Build ten points whose odd-indexed consecutive pairs are cyclically orthogonal.

    x1, x5, x7, x9, x10 are drawn near a regular pentagon; x4, x6, x8 follow by
    reflections, and (x2, x3) are shot by damped finite-difference Newton on
    the two remaining orthogonality conditions. Returns |[1,3,4,2] - 1| and
    the chain of brackets that must all equal it.
    """
    rng = np.random.default_rng(seed)
    R = regular_pentagon() + rng.normal(0.0, jitter, size=10)
    R = normalize(R)
    fixed = (R[0], R[4], R[6], R[8], R[9])
    v = np.array([R[1], R[2]]) + rng.normal(0.0, jitter / 3, size=2)

    def F(v):
        X = _pentagon_from(M, fixed, v[0], v[1], tol)
        return _closure(M, X), X

    r, X = F(v)
    it = 0
    for it in range(1, max_iter + 1):
        if np.max(np.abs(r)) < target:
            break
        J = np.empty((2, 2))
        for k in range(2):
            dv = np.zeros(2)
            dv[k] = fd_step
            J[:, k] = (F(v + dv)[0] - F(v - dv)[0]) / (2 * fd_step)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        while lam > 1e-6:
            cand = v + lam * step
            rc, Xc = F(cand)
            if np.all(np.isfinite(rc)) and np.linalg.norm(rc) < np.linalg.norm(r):
                v, r, X = cand, rc, Xc
                break
            lam *= damping
        else:
            break
    converged = bool(np.max(np.abs(r)) < 1e-10)
    chain = tuple(bracket(M, *(X[i - 1] for i in idx)) for idx in PENTAGON_CHAIN)
    residual = abs(chain[0] - 1.0)
    spread = max(chain) - min(chain)
    res = PentagonResult(converged, residual, chain, spread, it, tuple(map(float, X)),
                         tuple(map(float, r)), seed)
    if not converged:
        res.message = f"shooting did not converge; last closure residuals {tuple(r)}"
    return res


def pentagon_or_raise(M, seed=0, **kw):
    res = pentagon_identity(M, seed, **kw)
    if not res.converged:
        raise ConstructionError(res.message)
    return res
