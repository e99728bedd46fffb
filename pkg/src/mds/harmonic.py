"""Events, causal classes, harmonic conjugates, timelike lines and time.

Scalar functions take `Event` / `CirclePoint` values. The `*_batch` kernels take
numpy arrays of angles and do the same work row by row. Every solver is a
bracketed search with a fixed stopping rule, so results are deterministic.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .circle import Arc, CirclePoint, angular_distance, ccw, in_open_arc, normalize
from .errors import (
    CausalClassError,
    ComparabilityError,
    DegeneracyError,
    DomainError,
    IdenticalEventError,
    StructureViolationError,
)
from .moebius import MoebiusStructure
from .tolerances import DEFAULT, Tolerances


def _theta(p):
    return p.theta if isinstance(p, CirclePoint) else normalize(float(p))


@dataclass(frozen=True)
class Event:
    """Unordered pair of distinct circle points, stored with p < q."""
    p: float
    q: float

    def __post_init__(self):
        a, b = sorted((_theta(self.p), _theta(self.q)))
        if angular_distance(a, b) <= DEFAULT.eps_pt:
            raise DegeneracyError(f"event needs two distinct points, got {(a, b)}")
        object.__setattr__(self, "p", a)
        object.__setattr__(self, "q", b)

    @property
    def points(self):
        return (self.p, self.q)

    def contains(self, x, eps=DEFAULT.eps_pt):
        x = _theta(x)
        return angular_distance(x, self.p) <= eps or angular_distance(x, self.q) <= eps

    def same(self, other, eps=DEFAULT.eps_pt):
        return self.contains(other.p, eps) and self.contains(other.q, eps)

    def arcs(self):
        """The two closed arcs cut out by the event: ccw p -> q and ccw q -> p."""
        return Arc(CirclePoint(self.p), CirclePoint(self.q)), Arc(CirclePoint(self.q), CirclePoint(self.p))


class CausalClass(Enum):
    SEPARATE = "separate"
    LIGHTLIKE = "lightlike"
    STRONG_CAUSAL = "strong_causal"


def causal_class(a: Event, b: Event, eps=DEFAULT.eps_pt) -> CausalClass:
    if a.same(b, eps):
        raise IdenticalEventError("causal class of an event with itself is undefined")
    if a.contains(b.p, eps) or a.contains(b.q, eps):
        return CausalClass.LIGHTLIKE
    if in_open_arc(b.p, a.p, a.q) != in_open_arc(b.q, a.p, a.q):
        return CausalClass.SEPARATE
    return CausalClass.STRONG_CAUSAL


def causal_class_batch(a1, a2, b1, b2, eps=DEFAULT.eps_pt):
    """0 separate, 1 lightlike, 2 strong causal (identical events count as lightlike)."""
    shared = np.zeros(np.shape(a1), dtype=bool)
    for x in (a1, a2):
        for y in (b1, b2):
            shared |= angular_distance(x, y) <= eps
    sep = in_open_arc(b1, a1, a2) != in_open_arc(b2, a1, a2)
    return np.where(shared, 1, np.where(sep, 0, 2))


# ------------------------------------------------------------ harmonicity

def harmonic_residual_batch(M: MoebiusStructure, x, y, z, u):
    """ln(|xz||yu|) - ln(|xu||yz|) for a = (x, y), b = (z, u)."""
    return M.logdist(x, z) + M.logdist(y, u) - M.logdist(x, u) - M.logdist(y, z)


def harmonicity_residual(M: MoebiusStructure, a: Event, b: Event, eps=DEFAULT.eps_pt) -> float:
    pts = (a.p, a.q, b.p, b.q)
    for i in range(4):
        for j in range(i + 1, 4):
            if angular_distance(pts[i], pts[j]) <= eps:
                raise DegeneracyError("harmonicity needs four distinct points")
    return float(harmonic_residual_batch(M, a.p, a.q, b.p, b.q))


def _illinois(f, lo, hi, f_lo, f_hi, tol: Tolerances, width=None, ftol=0.0):
    """Batched Illinois (modified regula falsi) on brackets [lo, hi], row-wise.

    f(v, idx) evaluates the residual for rows idx at values v. f_lo and f_hi
    must have opposite signs. A forced halving every fourth step keeps the
    bracket shrinking. width(v, lo, hi) converts a bracket to the accuracy
    measure that must fall below 2**-52 (defaults to hi - lo). Rows also stop
    once |residual| <= ftol.
    Returns the evaluated point of least |residual| for each row.
    """
    lo, hi = lo.astype(float).copy(), hi.astype(float).copy()
    f_lo, f_hi = f_lo.astype(float).copy(), f_hi.astype(float).copy()
    best = np.where(np.abs(f_lo) <= np.abs(f_hi), lo, hi)
    best_f = np.minimum(np.abs(f_lo), np.abs(f_hi))
    last = np.zeros(lo.shape, dtype=int)
    active = np.flatnonzero(np.sign(f_lo) != np.sign(f_hi))
    for it in range(tol.max_iter):
        if active.size == 0:
            break
        l, h, fl, fh = lo[active], hi[active], f_lo[active], f_hi[active]
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            sec = l - fl * (h - l) / (fh - fl)
        use_sec = np.isfinite(sec) & (sec > l) & (sec < h) & (it % 4 != 3)
        c = np.where(use_sec, sec, 0.5 * (l + h))
        fc = f(c, active)
        better = np.abs(fc) < best_f[active]
        best[active] = np.where(better, c, best[active])
        best_f[active] = np.where(better, np.abs(fc), best_f[active])
        same_as_lo = np.sign(fc) == np.sign(fl)
        lst = last[active]
        # Illinois: halve the stale end when the same end moves twice running
        fh = np.where(same_as_lo & (lst == 1), 0.5 * fh, fh)
        fl = np.where(~same_as_lo & (lst == -1), 0.5 * fl, fl)
        l = np.where(same_as_lo, c, l)
        fl = np.where(same_as_lo, fc, fl)
        h = np.where(same_as_lo, h, c)
        fh = np.where(same_as_lo, fh, fc)
        lo[active], hi[active], f_lo[active], f_hi[active] = l, h, fl, fh
        last[active] = np.where(same_as_lo, 1, -1)
        w = (h - l) if width is None else width(c, l, h)
        finished = (w <= 2.0 ** -52) | (np.abs(fc) <= ftol)
        active = active[~finished]
    return best


def _expit(w):
    return 0.5 * (1.0 + np.tanh(0.5 * w))


W_END = 37.0  # logit bracket; expit(-37) is about 8.5e-17
FTOL = 1e-15  # residuals are logs of O(1) numbers, so this is at rounding level


def _solve_on_arc(residual, start, length, tol: Tolerances, ftol=FTOL):
    """Root of residual(angles) on each arc start -> start + length.

    The arc parameter is lam = expit(w); log-singular residuals at the arc ends
    become nearly linear in w, which keeps regula falsi fast. If the residual
    has no sign change on the bracket the nearer end is returned.
    """
    n = start.shape[0]

    def f(w, idx):
        return residual(normalize(start[idx] + _expit(w) * length[idx]), idx)

    idx = np.arange(n)
    lo = np.full(n, -W_END)
    hi = np.full(n, W_END)
    f_lo, f_hi = f(lo, idx), f(hi, idx)

    def width(c, l, h):
        lam = _expit(c)
        return (h - l) * lam * (1.0 - lam)

    w = _illinois(f, lo, hi, f_lo, f_hi, tol, width, ftol)
    return normalize(start + _expit(w) * length)


def _flat(*arrays):
    arrs = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in arrays))
    shape = arrs[0].shape
    return shape, [np.ravel(a) for a in arrs]


def conjugate_batch(M: MoebiusStructure, e1, e2, x, tol: Tolerances = DEFAULT):
    """Harmonic conjugate of x with respect to e = (e1, e2), row-wise.

    The search runs over the arc of e not containing x, where the residual
    runs from +inf to -inf (or back), so a root is always bracketed.
    """
    shape, (e1, e2, x) = _flat(e1, e2, x)
    x_in = in_open_arc(x, e1, e2)
    start = np.where(x_in, e2, e1)
    length = np.where(x_in, ccw(e2, e1), ccw(e1, e2))
    const = M.logdist(x, e1) - M.logdist(x, e2)

    def residual(y, idx):
        return const[idx] + M.logdist(y, e2[idx]) - M.logdist(y, e1[idx])

    y = _solve_on_arc(residual, start, length, tol)
    return y.reshape(shape) if shape else float(y[0])


def conjugate_multiplicity(M: MoebiusStructure, e: Event, x, grid=2048):
    """Number of sign changes of the residual along the searched arc (1 when unique)."""
    x = _theta(x)
    x_in = in_open_arc(x, e.p, e.q)
    start, end = (e.q, e.p) if x_in else (e.p, e.q)
    lam = (np.arange(1, grid) + 0.5) / (grid + 1)
    ys = normalize(start + lam * ccw(start, end))
    r = harmonic_residual_batch(M, x, ys, e.p, e.q)
    return int(np.count_nonzero(np.diff(np.sign(r)) != 0))


def harmonic_conjugate(M: MoebiusStructure, e: Event, x, tol: Tolerances = DEFAULT,
                       check_unique: bool = False) -> CirclePoint:
    x = _theta(x)
    if e.contains(x, tol.eps_pt):
        raise DomainError("the point lies on the event; no conjugate")
    if check_unique:
        m = conjugate_multiplicity(M, e, x)
        if m != 1:
            raise StructureViolationError(f"harmonic conjugate is not unique ({m} sign changes)")
    y = float(conjugate_batch(M, e.p, e.q, x, tol))
    return CirclePoint(y)


def reflection_map(M: MoebiusStructure, e: Event, x, tol: Tolerances = DEFAULT) -> CirclePoint:
    x = _theta(x)
    if e.contains(x, tol.eps_pt):
        return CirclePoint(x)
    return harmonic_conjugate(M, e, x, tol)


def reflection_batch(M, e1, e2, x, tol: Tolerances = DEFAULT):
    x = np.asarray(x, dtype=float)
    on_e = (angular_distance(x, e1) <= tol.eps_pt) | (angular_distance(x, e2) <= tol.eps_pt)
    safe_x = np.where(on_e, normalize(np.asarray(e1) + ccw(e1, e2) / 2), x)
    y = conjugate_batch(M, e1, e2, safe_x, tol)
    return np.where(on_e, x, y)


def event_on_line(M, e: Event, x, tol: Tolerances = DEFAULT) -> Event:
    """x_e: the event of h_e through x."""
    return Event(_theta(x), harmonic_conjugate(M, e, x, tol).theta)


# -------------------------------------------------------- timelike lines

@dataclass(frozen=True)
class TimelikeLine:
    """h_e with a chosen future arc e+ (ccw from e.p to e.q when plus_ccw)."""
    dual: Event
    plus_ccw: bool = True

    @property
    def plus_arc(self):
        a, b = self.dual.arcs()
        return a if self.plus_ccw else b

    def contains(self, M, a: Event, tau=1e-9):
        return abs(harmonicity_residual(M, a, self.dual)) < tau

    def event_at(self, M, lam, tol: Tolerances = DEFAULT) -> Event:
        """Parametrization of h_e by the interior of e+ (lam in (0, 1))."""
        if not 0.0 < lam < 1.0:
            raise DomainError("parameter must lie in (0, 1)")
        x = self.plus_arc.point(lam)
        return event_on_line(M, self.dual, x, tol)

    def parameter(self, a: Event):
        arc = self.plus_arc
        inside = [p for p in a.points if arc.contains(p, closed=False)]
        if len(inside) != 1:
            raise DomainError("event does not separate the dual event")
        return arc.position(inside[0])


# ---------------------------------------------------- common perpendicular

def common_perp_batch(M: MoebiusStructure, a1, a2, b1, b2, tol: Tolerances = DEFAULT):
    """Common perpendicular (x, y) of strong-causal a, b; x lies on a's arc away from b.

    x is the fixed point of rho_a o rho_b on that arc, found by a bracketed
    search on the displacement in the arc coordinate, and y = rho_b(x).
    """
    shape, (a1, a2, b1, b2) = _flat(a1, a2, b1, b2)
    b_in = in_open_arc(b1, a1, a2)
    start = np.where(b_in, a2, a1)
    length = np.where(b_in, ccw(a2, a1), ccw(a1, a2))

    def displacement(lam, idx):
        x = normalize(start[idx] + lam * length[idx])
        y = conjugate_batch(M, b1[idx], b2[idx], x, tol)
        z = conjugate_batch(M, a1[idx], a2[idx], y, tol)
        return ccw(start[idx], z) / length[idx] - lam

    n = start.shape[0]
    idx = np.arange(n)
    lo, hi = np.zeros(n), np.ones(n)
    lam = _illinois(displacement, lo, hi, displacement(lo, idx), displacement(hi, idx), tol, ftol=FTOL)
    x = normalize(start + lam * length)
    y = conjugate_batch(M, b1, b2, x, tol)
    if not shape:
        return float(x[0]), float(y[0])
    return x.reshape(shape), y.reshape(shape)


def common_perpendicular(M: MoebiusStructure, a: Event, b: Event, tol: Tolerances = DEFAULT) -> Event:
    cls = causal_class(a, b, tol.eps_pt)
    if cls is not CausalClass.STRONG_CAUSAL:
        raise CausalClassError(f"common perpendicular needs strong-causal events, got {cls.value}")
    x, y = common_perp_batch(M, a.p, a.q, b.p, b.q, tol)
    return Event(float(x), float(y))


# ------------------------------------------------------------------ time

def _time_forms(M, x, y, z, u, zp, up):
    """The four equivalent signed forms of the time along h_(x,y).

    z, z' are the endpoints of the two events on the ccw arc x -> y.
    """
    L = M.logdist
    f1 = L(x, zp) + L(y, z) - L(x, z) - L(y, zp)
    f2 = L(x, up) + L(y, u) - L(x, u) - L(y, up)
    f3 = L(x, up) + L(y, z) - L(x, z) - L(y, up)
    f4 = L(x, zp) + L(y, u) - L(x, u) - L(y, zp)
    return np.stack([f1, f2, f3, f4], axis=-1)


def time_on_line_batch(M, x, y, a1, a2, b1, b2):
    """Time between events a, b known to lie on h_(x,y); returns (t, discrepancy).

    The reported value is |mean of the four forms|; the mean is first-order
    insensitive to errors in (x, y), and the spread of the forms is a health metric.
    """
    a_in = in_open_arc(a1, x, y)
    z, u = np.where(a_in, a1, a2), np.where(a_in, a2, a1)
    b_in = in_open_arc(b1, x, y)
    zp, up = np.where(b_in, b1, b2), np.where(b_in, b2, b1)
    F = _time_forms(M, x, y, z, u, zp, up)
    return np.abs(F.mean(axis=-1)), F.max(axis=-1) - F.min(axis=-1)


def time_batch(M: MoebiusStructure, a1, a2, b1, b2, tol: Tolerances = DEFAULT):
    """Time between causally related events, row-wise; NaN where they separate."""
    a1, a2, b1, b2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a1, a2, b1, b2)))
    cls = causal_class_batch(a1, a2, b1, b2, tol.eps_pt)
    t = np.zeros(a1.shape)
    disc = np.zeros(a1.shape)
    strong = cls == 2
    if np.any(strong):
        x, y = common_perp_batch(M, a1[strong], a2[strong], b1[strong], b2[strong], tol)
        t[strong], disc[strong] = time_on_line_batch(M, x, y, a1[strong], a2[strong], b1[strong], b2[strong])
    t[cls == 0] = np.nan
    disc[cls == 0] = np.nan
    return t, disc


def time_between_detailed(M: MoebiusStructure, a: Event, b: Event, tol: Tolerances = DEFAULT):
    """(time, max discrepancy between the four equivalent forms)."""
    if a.same(b, tol.eps_pt):
        return 0.0, 0.0
    cls = causal_class(a, b, tol.eps_pt)
    if cls is CausalClass.SEPARATE:
        raise CausalClassError("time is undefined for separating events")
    if cls is CausalClass.LIGHTLIKE:
        return 0.0, 0.0
    t, d = time_batch(M, a.p, a.q, b.p, b.q, tol)
    return float(t), float(d)


def time_between(M: MoebiusStructure, a: Event, b: Event, tol: Tolerances = DEFAULT) -> float:
    return time_between_detailed(M, a, b, tol)[0]


def line_time_batch(M, e1, e2, z, zp):
    """Time along h_e between z_e and z'_e for z, z' on the same arc of e (closed form)."""
    L = M.logdist
    return np.abs(L(e1, zp) + L(e2, z) - L(e1, z) - L(e2, zp))


def point_at_time_batch(M, e1, e2, z, s, tol: Tolerances = DEFAULT):
    """Point z' on z's arc of e with signed time ln(|xz'||yz|/(|xz||yz'|)) = s.

    Along that arc the signed time runs from -inf at one end of e to +inf at
    the other, so the answer is unique.
    """
    shape, (e1, e2, z, s) = _flat(e1, e2, z, s)
    z_in = in_open_arc(z, e1, e2)
    start = np.where(z_in, e1, e2)
    length = np.where(z_in, ccw(e1, e2), ccw(e2, e1))
    L = M.logdist
    const = L(e2, z) - L(e1, z)

    def residual(zp, idx):
        return L(e1[idx], zp) - L(e2[idx], zp) + const[idx] - s[idx]

    zp = _solve_on_arc(residual, start, length, tol)
    return zp.reshape(shape) if shape else float(zp[0])


# ------------------------------------------------------------ partial order

def _inside(arc_start, arc_len, pts, eps):
    return all(ccw(arc_start, p) <= arc_len + eps or angular_distance(p, arc_start) <= eps for p in pts)


def _cone(e: Event, plus_ccw: bool, a: Event, eps):
    """+1 if a lies in the closed future arc, -1 if in the past arc, 0 if it separates e."""
    plus = (e.p, ccw(e.p, e.q)) if plus_ccw else (e.q, ccw(e.q, e.p))
    minus = (e.q, ccw(e.q, e.p)) if plus_ccw else (e.p, ccw(e.p, e.q))
    if _inside(*plus, a.points, eps):
        return 1, plus
    if _inside(*minus, a.points, eps):
        return -1, minus
    return 0, None


def _sub_arc(a: Event, half):
    """The arc of a inside the given half (start, length) of the circle."""
    start, _ = half
    p, q = sorted(a.points, key=lambda v: ccw(start, v))
    return p, ccw(p, q)


def order_compare(e: Event, plus_ccw: bool, a: Event, b: Event, eps=DEFAULT.eps_pt) -> str:
    """Compare a and b in the order <=_e; returns '<', '=', '>' or 'incomparable'."""
    if a.same(b, eps):
        return "="
    sa, half_a = _cone(e, plus_ccw, a, eps)
    sb, half_b = _cone(e, plus_ccw, b, eps)
    if sa == 0 or sb == 0:
        raise ComparabilityError("event separates e and is not in its causal cone")
    if a.same(e, eps):
        sa = -sb
    if b.same(e, eps):
        sb = -sa
    if sa != sb:
        return "<" if sa < sb else ">"
    half = half_a
    arc_a = _sub_arc(a, half)
    arc_b = _sub_arc(b, half)
    b_in_a = _inside(arc_a[0], arc_a[1], b.points, eps)
    a_in_b = _inside(arc_b[0], arc_b[1], a.points, eps)
    if sa > 0:
        # future cone: the later event is nested inside the earlier one's arc
        if b_in_a:
            return "<"
        if a_in_b:
            return ">"
    else:
        if a_in_b:
            return "<"
        if b_in_a:
            return ">"
    return "incomparable"
