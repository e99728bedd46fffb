"""The functional F_ab, the time-condition hierarchy, and Axioms (I) and (C)."""
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .circle import TupleN, angular_distance, ccw, in_open_arc, normalize
from .errors import ConfigurationError, ConstructionError, DomainError
from .harmonic import (
    Event,
    common_perp_batch,
    conjugate_batch,
    line_time_batch,
    point_at_time_batch,
    time_batch,
    _flat,
    _illinois,
)
from .moebius import Canonical, MoebiusStructure, cr_values, min_gap_rows
from .sampling import ChunkResult, draw_cyclic, random_orientation
from .tolerances import DEFAULT, Tolerances

CANONICAL = Canonical()


@dataclass(frozen=True)
class StrongPairConfig:
    """a = (o, o'), b = (w, w') strong causal with (o, w') separating (o', w)."""
    o: float
    o_: float
    w: float
    w_: float

    def __post_init__(self):
        pts = TupleN.from_angles((self.o, self.o_, self.w, self.w_))
        pts.require_nondegenerate()
        for name, v in zip(("o", "o_", "w", "w_"), pts.angles):
            object.__setattr__(self, name, float(v))
        a_sep = in_open_arc(self.w, self.o, self.o_) != in_open_arc(self.w_, self.o, self.o_)
        cross = in_open_arc(self.o_, self.o, self.w_) != in_open_arc(self.w, self.o, self.w_)
        if a_sep or not cross:
            raise ConfigurationError("need strong-causal a, b with (o, w') separating (o', w)")

    @property
    def a(self):
        return Event(self.o, self.o_)

    @property
    def b(self):
        return Event(self.w, self.w_)

    def arc_a(self):
        """(start, length) of the arc oo' not containing b."""
        if in_open_arc(self.w, self.o, self.o_):
            return self.o_, ccw(self.o_, self.o)
        return self.o, ccw(self.o, self.o_)

    def arc_b(self):
        if in_open_arc(self.o, self.w, self.w_):
            return self.w_, ccw(self.w_, self.w)
        return self.w, ccw(self.w, self.w_)

    def in_domain(self, x, xp):
        sa, la = self.arc_a()
        sb, lb = self.arc_b()
        ra, rb = ccw(sa, x), ccw(sb, xp)
        return (ra > 0) & (ra < la) & (rb > 0) & (rb < lb)


@dataclass(frozen=True)
class DabPoint:
    """d = (x, x') with x on the arc oo' and x' on the arc ww'."""
    x: float
    x_: float


def f_ab_batch(M: MoebiusStructure, o, o_, w, w_, x, x_):
    """(t_plus, t_minus, F) along h_d for d = (x, x'), row-wise."""
    t_plus = line_time_batch(M, x, x_, o, w)
    t_minus = line_time_batch(M, x, x_, o_, w_)
    return t_plus, t_minus, 0.5 * (t_plus + t_minus)


def f_ab(M: MoebiusStructure, config: StrongPairConfig, d: DabPoint):
    if not config.in_domain(d.x, d.x_):
        raise DomainError("d is not strictly between (o, w) and (o', w')")
    tp, tm, F = f_ab_batch(M, config.o, config.o_, config.w, config.w_, d.x, d.x_)
    return float(tp), float(tm), float(F)


def split_functional_batch(M, x, x_, a1, a2, b1, b2):
    """F_ab(d) for arbitrary events: endpoints are matched by the side of d they lie on."""
    a_in = in_open_arc(a1, x, x_)
    ap, am = np.where(a_in, a1, a2), np.where(a_in, a2, a1)
    b_in = in_open_arc(b1, x, x_)
    bp, bm = np.where(b_in, b1, b2), np.where(b_in, b2, b1)
    return 0.5 * (line_time_batch(M, x, x_, ap, bp) + line_time_batch(M, x, x_, am, bm))


def perpendicular_of(M, config: StrongPairConfig, tol: Tolerances = DEFAULT) -> DabPoint:
    """d0 = (u, v): the common perpendicular of a and b, u on the arc oo'."""
    u, v = common_perp_batch(M, config.o, config.o_, config.w, config.w_, tol)
    return DabPoint(float(u), float(v))


@dataclass(frozen=True)
class Parametrization:
    """(s, s') coordinates on D_ab: signed times of x_a from u_a on h_a, of x'_b from v_b on h_b."""
    M: MoebiusStructure
    config: StrongPairConfig
    d0: DabPoint
    tol: Tolerances = DEFAULT

    def to_params(self, x, x_):
        c, L = self.config, self.M.logdist
        s = L(c.o, x) + L(c.o_, self.d0.x) - L(c.o, self.d0.x) - L(c.o_, x)
        sp = L(c.w, x_) + L(c.w_, self.d0.x_) - L(c.w, self.d0.x_) - L(c.w_, x_)
        return s, sp

    def from_params(self, s, sp):
        c = self.config
        x = point_at_time_batch(self.M, c.o, c.o_, self.d0.x, s, self.tol)
        x_ = point_at_time_batch(self.M, c.w, c.w_, self.d0.x_, sp, self.tol)
        return x, x_

    def F(self, s, sp):
        x, x_ = self.from_params(s, sp)
        c = self.config
        return f_ab_batch(self.M, c.o, c.o_, c.w, c.w_, x, x_)[2]


@dataclass
class VpResult:
    argmin: DabPoint
    params: tuple
    F_min: float
    F_d0: float
    vp_residual: float
    cycles: int
    converged: bool
    trace: list = field(default_factory=list, repr=False)


def minimize_f_ab(M: MoebiusStructure, config: StrongPairConfig, tol: Tolerances = DEFAULT,
                  grid: int = 64, xtol: float = 1e-8, max_cycles: int = 500) -> VpResult:
    """Grid search on a 64 x 64 net of D_ab, then coordinate-wise golden section in (s, s')."""
    d0 = perpendicular_of(M, config, tol)
    P = Parametrization(M, config, d0, tol)
    sa, la = config.arc_a()
    sb, lb = config.arc_b()
    lam = (np.arange(grid) + 0.5) / grid
    xs = normalize(sa + lam * la)
    xps = normalize(sb + lam * lb)
    S, _ = P.to_params(xs, np.full_like(xs, d0.x_))
    _, SP = P.to_params(np.full_like(xps, d0.x), xps)
    X, XP = np.meshgrid(xs, xps, indexing="ij")
    F = f_ab_batch(M, config.o, config.o_, config.w, config.w_, X, XP)[2]
    i, j = np.unravel_index(np.argmin(F), F.shape)
    s, sp = float(S[i]), float(SP[j])
    step = [float(np.max(np.diff(S))), float(np.max(np.diff(SP)))]
    f = lambda a, b: float(P.F(a, b))
    trace = [(s, sp, f(s, sp))]
    converged = False
    cycle = 0
    for cycle in range(1, max_cycles + 1):
        old = (s, sp)
        r = minimize_scalar(lambda v: f(v, sp), bracket=(s - step[0], s + step[0]), method="golden",
                            tol=1e-12)
        s = float(r.x)
        r = minimize_scalar(lambda v: f(s, v), bracket=(sp - step[1], sp + step[1]), method="golden",
                            tol=1e-12)
        sp = float(r.x)
        moved = max(abs(s - old[0]), abs(sp - old[1]))
        trace.append((s, sp, f(s, sp)))
        step = [max(4 * abs(s - old[0]), 1e-6), max(4 * abs(sp - old[1]), 1e-6)]
        if moved < xtol:
            converged = True
            break
    x, x_ = P.from_params(s, sp)
    F_d0 = float(f_ab_batch(M, config.o, config.o_, config.w, config.w_, d0.x, d0.x_)[2])
    return VpResult(DabPoint(float(x), float(x_)), (s, sp), f(s, sp), F_d0, float(np.hypot(s, sp)),
                    cycle, converged, trace)


# --------------------------------------------------------------- samplers

def sample_strong_pairs(rng, n, min_gap):
    """Rows (o, o', w', w) in cyclic order (either orientation) and the skip count."""
    Q, skipped = draw_cyclic(rng, n, 4, min_gap)
    return random_orientation(rng, Q), skipped


def _rel(x):
    return np.maximum(1.0, np.abs(x))


def wti_chunk(M, rng, n, tol: Tolerances = DEFAULT, min_gap=None) -> ChunkResult:
    """a = (o, o'), b = (w, w'), c = (w, w'') with w'' on b's arc away from a.

    margin = t(a, c) - t(a, b) - t(b, c), where t(b, c) = 0 (light line).
    """
    Q, skipped = draw_cyclic(rng, n, 5, min_gap or tol.delta_min)
    Q = random_orientation(rng, Q)
    o, o_, w_, w2, w = Q.T
    tab, _ = time_batch(M, o, o_, w, w_, tol)
    tac, _ = time_batch(M, o, o_, w, w2, tol)
    tbc, _ = time_batch(M, w, w_, w, w2, tol)
    margin = tac - tab - tbc
    ok = margin > tol.tau_rel * _rel(tac)
    return ChunkResult(margin, ok, Q, skipped)


def ti_chunk(M, rng, n, tol: Tolerances = DEFAULT, min_gap=None, collinear_share=0.1) -> ChunkResult:
    """b strictly between a and c; margin = t(a, c) - t(a, b) - t(b, c).

    Generic triples need margin > tau; the collinear ones (three events on one
    timelike line) need |margin| < tau. The collinear rows are tagged in extras.
    """
    mg = min_gap or tol.delta_min
    Q, skipped = draw_cyclic(rng, n, 6, mg)
    Q = random_orientation(rng, Q)
    b1, a1, a2, b2, c1, c2 = Q.T
    m = int(round(collinear_share * n))
    E, sk2 = draw_cyclic(rng, max(m, 1), 5, mg)
    E = random_orientation(rng, E)[:m]
    # collinear: events through z1, z2, z3 (in this order) on h_e, e = (e1, e2)
    e1, z1, z2, z3, e2 = E.T
    w1, w2, w3 = (conjugate_batch(M, e1, e2, z, tol) for z in (z1, z2, z3))
    A1 = np.concatenate([a1, z1]); A2 = np.concatenate([a2, w1])
    B1 = np.concatenate([b1, z2]); B2 = np.concatenate([b2, w2])
    C1 = np.concatenate([c1, z3]); C2 = np.concatenate([c2, w3])
    tab, _ = time_batch(M, A1, A2, B1, B2, tol)
    tbc, _ = time_batch(M, B1, B2, C1, C2, tol)
    tac, _ = time_batch(M, A1, A2, C1, C2, tol)
    margin = tac - tab - tbc
    collinear = np.concatenate([np.zeros(len(Q), bool), np.ones(len(E), bool)])
    thr = tol.tau_rel * _rel(tac)
    ok = np.where(collinear, np.abs(margin) < thr, margin > thr)
    rows = np.concatenate([Q, np.column_stack([z1, w1, z2, w2, z3, w3])])
    extras = {
        "collinear_max_gap": float(np.max(np.abs(margin[collinear]))) if collinear.any() else 0.0,
        "generic_min_margin": float(np.min(margin[~collinear])) if (~collinear).any() else float("nan"),
    }
    return ChunkResult(margin, ok, rows, skipped + sk2, extras)


def lqi_chunk(M, rng, n, tol: Tolerances = DEFAULT, min_gap=None) -> ChunkResult:
    """d = (x, rho_a x) in D_ab with d != d0; margin = F_ab(d) - F_ab(d0)."""
    mg = min_gap or tol.delta_min
    P, skipped = sample_strong_pairs(rng, n, mg)
    o, o_, w_, w = P.T
    u, v = common_perp_batch(M, o, o_, w, w_, tol)
    # rho_a maps b's away-arc onto the sub-arc of a's away-arc between rho_a(w') and rho_a(w)
    pw_, pw = conjugate_batch(M, o, o_, w_, tol), conjugate_batch(M, o, o_, w, tol)
    x = normalize(pw_ + rng.uniform(0.0, 1.0, size=len(P)) * sweep(pw_, pw, w))
    xp = conjugate_batch(M, o, o_, x, tol)
    keep = (angular_distance(x, u) > mg) & (angular_distance(x, pw) > mg) & (angular_distance(x, pw_) > mg)
    skipped += int((~keep).sum())
    o, o_, w_, w, u, v, x, xp = (arr[keep] for arr in (o, o_, w_, w, u, v, x, xp))
    F = f_ab_batch(M, o, o_, w, w_, x, xp)[2]
    F0 = f_ab_batch(M, o, o_, w, w_, u, v)[2]
    margin = F - F0
    ok = margin > tol.tau_rel * _rel(F0)
    return ChunkResult(margin, ok, np.column_stack([o, o_, w_, w, x, xp]), skipped)


def away_arc(e1, e2, p):
    """(start, ccw length) of the arc of (e1, e2) that does not contain p."""
    p_in = in_open_arc(p, e1, e2)
    return np.where(p_in, e2, e1), np.where(p_in, ccw(e2, e1), ccw(e1, e2))


def in_arc(p, start, length):
    r = ccw(start, p)
    return (r > 0) & (r < length)


def sweep(a, b, avoid):
    """Signed angular sweep from a to b along the arc that misses `avoid`."""
    fwd = ~in_open_arc(avoid, a, b)
    return np.where(fwd, ccw(a, b), -ccw(b, a))


def vp_chunk(M, rng, n, tol: Tolerances = DEFAULT, min_gap=0.05) -> ChunkResult:
    """vp_residual of the F_ab minimizer for sampled strong pairs (slow; keep n small)."""
    P, skipped = sample_strong_pairs(rng, n, min_gap)
    margins, rows, extra_F = [], [], []
    for o, o_, w_, w in P:
        cfg = StrongPairConfig(o, o_, w, w_)
        r = minimize_f_ab(M, cfg, tol)
        margins.append(r.vp_residual)
        extra_F.append(abs(r.F_min - r.F_d0))
        rows.append((o, o_, w_, w))
    margins = np.array(margins)
    ok = margins < 1e-6
    extras = {"max_F_gap": float(max(extra_F)) if extra_F else 0.0}
    return ChunkResult(margins, ok, np.array(rows).reshape(-1, 4), skipped, extras)


# ------------------------------------------------------------- Axiom (I)

def construct_axiom_I(M, P, lam, tol: Tolerances = DEFAULT):
    """Rows q = (o, w, v, w', o', u, x) from strong pairs P = (o, o', w', w) and x-fractions.

    (u, v) is the common perpendicular of (o, o'), (w, w'); x sits at fraction
    lam of the arc from u to o inside the arc oo'.
    """
    o, o_, w_, w = np.asarray(P, float).T
    u, v = common_perp_batch(M, o, o_, w, w_, tol)
    x = normalize(u + lam * sweep(u, o, o_))
    return np.column_stack([o, w, v, w_, o_, u, x])


def _cr1(M, a, b, c, d):
    return cr_values(M, np.column_stack([a, b, c, d]))[:, 0]


def _cr2(M, a, b, c, d):
    return cr_values(M, np.column_stack([a, b, c, d]))[:, 1]


def axiom_I_residual_batch(M, Q7):
    """cr1(q345) - cr1(q123) and Delta = g+ g-, with q345 = (o, w, u, x), q123 = (w', o', u, x)."""
    o, w, v, w_, o_, u, x = np.asarray(Q7, float).T
    g_plus = _cr1(M, o, w, u, x)
    c123 = _cr1(M, w_, o_, u, x)
    return g_plus - c123, g_plus / c123


def axiom_I_residual(M, q, tol: Tolerances = DEFAULT):
    """Residual at a 7-tuple whose q247 and q157 are harmonic (checked)."""
    q = q if isinstance(q, TupleN) else TupleN.from_angles(q)
    q.require_nondegenerate(tol.eps_pt)
    Q = q.angles[None, :]
    o, w, v, w_, o_, u, x = Q.T
    h1 = np.log(_cr2(M, o, v, o_, u))
    h2 = np.log(_cr2(M, w, v, w_, u))
    if max(abs(float(h1[0])), abs(float(h2[0]))) > 1e-9:
        raise ConstructionError("q247 and q157 are not harmonic")
    r, delta = axiom_I_residual_batch(M, Q)
    return float(r[0]), float(delta[0])


def axiom_I_chunk(M, rng, n, tol: Tolerances = DEFAULT, min_gap=None) -> ChunkResult:
    mg = min_gap or tol.delta_min
    P, skipped = sample_strong_pairs(rng, n, mg)
    lam = rng.uniform(0.0, 1.0, size=len(P))
    Q7 = construct_axiom_I(M, P, lam, tol)
    keep = min_gap_rows(Q7) >= mg
    Q7 = Q7[keep]
    skipped += int((~keep).sum())
    r, delta = axiom_I_residual_batch(M, Q7)
    ok = np.log(delta) > tol.tau_rel
    return ChunkResult(r, ok, Q7, skipped, {"min_delta": float(delta.min()) if len(delta) else float("nan")})


# ------------------------------------------------------------- Axiom (C)

def delta_xyz(M, x, y, z, o):
    """delta_{x,y,z}(o) = |yo|^2 / (|xo| |zo|)."""
    L = M.logdist
    return np.exp(2 * L(y, o) - L(x, o) - L(z, o))


def solve_axiom_C(M, o_, x, z, o, tol: Tolerances = DEFAULT):
    """y on the arc from x to z (away from o) with cr3(o',x,y,o) = cr3(o',y,z,o).

    The log residual takes opposite values at y = x and y = z, so a root is
    bracketed unless both vanish.
    """
    shape, (o_, x, z, o) = _flat(o_, x, z, o)
    L = M.logdist
    base = L(o_, x) - L(x, o) - L(z, o) + L(o_, z)
    end = L(x, o) - L(o_, x) - L(z, o) + L(o_, z)      # value at y = x; at y = z it is -end
    if np.any(np.abs(end) < 1e-14):
        raise ConstructionError("constraint degenerates: no sign change between x and z")
    length = sweep(x, z, o)

    def f(lam, idx):
        y = normalize(x[idx] + lam * length[idx])
        return base[idx] + 2 * L(y, o[idx]) - 2 * L(o_[idx], y)

    n = len(x)
    lam = _illinois(f, np.zeros(n), np.ones(n), end, -end, tol, ftol=1e-15)
    y = normalize(x + lam * length)
    return y.reshape(shape) if shape else float(y[0])


def construct_axiom_C(M, P5, tol: Tolerances = DEFAULT):
    """Rows q = (o', x, y, z, o, w) from free rows (o', x, z, o, w) in cyclic order."""
    o_, x, z, o, w = np.asarray(P5, float).T
    y = solve_axiom_C(M, o_, x, z, o, tol)
    return np.column_stack([o_, x, y, z, o, w])


def axiom_C_terms(M, Q6):
    """(cr1(q12), cr1(q14)) with q12 = (y, z, o, w), q14 = (x, y, o, w)."""
    o_, x, y, z, o, w = np.asarray(Q6, float).T
    return _cr1(M, y, z, o, w), _cr1(M, x, y, o, w)


def axiom_C_residual_batch(M, Q6):
    c12, c14 = axiom_C_terms(M, Q6)
    return c12 - c14


def axiom_C_residual(M, q, tol: Tolerances = DEFAULT):
    q = q if isinstance(q, TupleN) else TupleN.from_angles(q)
    q.require_nondegenerate(tol.eps_pt)
    Q = q.angles[None, :]
    o_, x, y, z, o, w = Q.T
    c46 = cr_values(M, np.column_stack([o_, x, y, o]))[:, 2]
    c26 = cr_values(M, np.column_stack([o_, y, z, o]))[:, 2]
    if abs(float(np.log(c46[0] / c26[0]))) > 1e-9:
        raise ConstructionError("cr3(q46) != cr3(q26)")
    return float(axiom_C_residual_batch(M, Q)[0])


def axiom_C_chunk(M, rng, n, tol: Tolerances = DEFAULT, min_gap=None) -> ChunkResult:
    mg = min_gap or tol.delta_min
    P5, skipped = draw_cyclic(rng, n, 5, mg)
    P5 = random_orientation(rng, P5)
    Q6 = construct_axiom_C(M, P5, tol)
    keep = min_gap_rows(Q6) >= mg
    Q6 = Q6[keep]
    skipped += int((~keep).sum())
    c12, c14 = axiom_C_terms(M, Q6)
    r = c12 - c14
    ok = np.log(c12 / c14) > tol.tau_rel
    return ChunkResult(r, ok, Q6, skipped)


# ------------------------------------------------------ fine topology

def epsilon_batch(Q7):
    """eps(q) = |o w|_0^2 / (4 |x w'|_0^2) in the chordal chart with u remote."""
    o, w, v, w_, o_, u, x = np.asarray(Q7, float).T
    L = CANONICAL.logdist
    chart = lambda a, b: L(a, b) - L(a, u) - L(b, u)
    return np.exp(2 * chart(o, w) - 2 * chart(x, w_)) / 4.0


def tracked_cross_ratios(M, Q7):
    """(cr2(q247), cr2(q157), cr1(q345), cr1(q123)) for rows q = (o, w, v, w', o', u, x)."""
    o, w, v, w_, o_, u, x = np.asarray(Q7, float).T
    return np.column_stack([_cr2(M, o, v, o_, u), _cr2(M, w, v, w_, u),
                            _cr1(M, o, w, u, x), _cr1(M, w_, o_, u, x)])


def epsilon_membership_batch(M, Q7):
    eps = epsilon_batch(Q7)
    dev = np.max(np.abs(tracked_cross_ratios(M, Q7) - tracked_cross_ratios(CANONICAL, Q7)), axis=1)
    return eps, dev < eps, dev


def epsilon_neighborhood(M, q, tol: Tolerances = DEFAULT):
    q = q if isinstance(q, TupleN) else TupleN.from_angles(q)
    q.require_nondegenerate(tol.eps_pt)
    eps, member, _ = epsilon_membership_batch(M, q.angles[None, :])
    return float(eps[0]), bool(member[0])


def epsilon_chunk(M, rng, n, tol: Tolerances = DEFAULT, min_gap=None) -> ChunkResult:
    """Constructed (I)-tuples; a row passes when it is in the eps-tube and (I) holds there.

    margin is the (I) residual; extras record how many rows were outside the tube.
    """
    mg = min_gap or tol.delta_min
    P, skipped = sample_strong_pairs(rng, n, mg)
    lam = rng.uniform(0.0, 1.0, size=len(P))
    Q7 = construct_axiom_I(M, P, lam, tol)
    keep = min_gap_rows(Q7) >= mg
    Q7 = Q7[keep]
    skipped += int((~keep).sum())
    eps, member, dev = epsilon_membership_batch(M, Q7)
    r, delta = axiom_I_residual_batch(M, Q7)
    ok = member & (np.log(delta) > tol.tau_rel)
    extras = {"outside_tube": int((~member).sum()), "min_eps": float(eps.min()) if len(eps) else float("nan"),
              "max_dev_over_eps": float(np.max(dev / eps)) if len(eps) else float("nan")}
    return ChunkResult(r, ok, Q7, skipped, extras)


# ------------------------------------------------------------- properties

def additivity_split_batch(M, Q6, tol: Tolerances = DEFAULT):
    """F_ab(d) + F_bc(d) - t(a, c) with d the common perpendicular of a, c.

    Rows are (b1, a1, a2, b2, c1, c2) in cyclic order, so b is between a and c.
    """
    b1, a1, a2, b2, c1, c2 = np.asarray(Q6, float).T
    x, x_ = common_perp_batch(M, a1, a2, c1, c2, tol)
    tac, _ = time_batch(M, a1, a2, c1, c2, tol)
    lhs = split_functional_batch(M, x, x_, a1, a2, b1, b2) + split_functional_batch(M, x, x_, b1, b2, c1, c2)
    return lhs - tac


def monotone_plus_batch(M, P, lam, mu):
    """F+_ab(d') - F+_ab(d) where d' lies between d and e = (o, w).

    Rows P = (o, o', w', w). d = (x, y) sits at fractions lam of the arcs o' -> o
    and w' -> w (as seen from the primed ends); d' moves each endpoint a further
    fraction mu of the remaining way toward o and w.
    """
    o, o_, w_, w = np.asarray(P, float).T
    so, lo = o_, sweep(o_, o, w)
    sw, lw = w_, sweep(w_, w, o)
    x, y = normalize(so + lam * lo), normalize(sw + lam * lw)
    lam2 = lam + mu * (1 - lam)
    x2, y2 = normalize(so + lam2 * lo), normalize(sw + lam2 * lw)
    return line_time_batch(M, x2, y2, o, w) - line_time_batch(M, x, y, o, w)


def second_differences(M, config: StrongPairConfig, center, direction, h=0.1, tol: Tolerances = DEFAULT):
    """F(c - h v) + F(c + h v) - 2 F(c) along lines of the (s, s') plane."""
    P = Parametrization(M, config, perpendicular_of(M, config, tol), tol)
    c = np.atleast_2d(np.asarray(center, float))
    v = np.atleast_2d(np.asarray(direction, float))
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    Fm = P.F(c[:, 0] - h * v[:, 0], c[:, 1] - h * v[:, 1])
    F0 = P.F(c[:, 0], c[:, 1])
    Fp = P.F(c[:, 0] + h * v[:, 0], c[:, 1] + h * v[:, 1])
    return Fm + Fp - 2 * F0
