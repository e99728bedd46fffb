"""Upper half-plane model of H^2 used as an independent oracle for the canonical structure."""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .circle import TWO_PI, ccw, from_chart, normalize, separates
from .duality import LinearFractional
from .errors import DegeneracyError, DomainError
from .harmonic import Event, common_perp_batch, time_batch
from .moebius import Canonical
from .time_conditions import DabPoint, StrongPairConfig, f_ab
from .tolerances import DEFAULT, Tolerances

CANONICAL = Canonical()


class _Infinity:
    """The point at infinity of the real line, as a geodesic endpoint."""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()


def _is_inf(p):
    return p is INFINITY


@dataclass(frozen=True)
class UhpPoint:
    re: float
    im: float

    def __post_init__(self):
        if not self.im > 0:
            raise DomainError(f"upper half-plane point needs im > 0, got {self.im}")

    @classmethod
    def from_complex(cls, z):
        return cls(float(np.real(z)), float(np.imag(z)))

    def __complex__(self):
        return complex(self.re, self.im)


@dataclass(frozen=True)
class UhpGeodesic:
    """A geodesic given by its two ends on the extended real line."""
    p: object
    q: object

    def __post_init__(self):
        if _is_inf(self.p) and _is_inf(self.q):
            raise DegeneracyError("geodesic endpoints coincide")
        if not _is_inf(self.p) and not _is_inf(self.q) and float(self.p) == float(self.q):
            raise DegeneracyError("geodesic endpoints coincide")
        if _is_inf(self.p):        # keep the finite end first
            object.__setattr__(self, "p", self.q)
            object.__setattr__(self, "q", INFINITY)

    @property
    def vertical(self):
        return _is_inf(self.q)

    def angles(self, rotation=0.0):
        """Endpoints as circle angles for the chart theta = rotation + 2 arctan(s)."""
        return tuple(normalize(rotation + (np.pi if _is_inf(e) else from_chart(e))) for e in (self.p, self.q))

    @classmethod
    def from_angles(cls, t1, t2, rotation=0.0):
        def end(t):
            r = normalize(t - rotation)
            return INFINITY if r == np.pi else float(np.tan(r / 2.0))
        return cls(end(t1), end(t2))


def uhp_distance(p: UhpPoint, q: UhpPoint) -> float:
    """Hyperbolic distance; the asinh form avoids cancellation of the arccosh form near p = q."""
    chord = np.hypot(p.re - q.re, p.im - q.im)
    return float(2.0 * np.arcsinh(chord / (2.0 * np.sqrt(p.im * q.im))))


def geodesic_intersection(g1: UhpGeodesic, g2: UhpGeodesic) -> UhpPoint:
    if not separates(g1.angles(), g2.angles()):
        raise DomainError("geodesics with non-separating ends do not intersect")
    if g1.vertical:
        g1, g2 = g2, g1
    a1, b1 = float(g1.p), float(g1.q)
    if g2.vertical:
        x = float(g2.p)
    else:
        a2, b2 = float(g2.p), float(g2.q)
        x = (a2 * b2 - a1 * b1) / ((a2 + b2) - (a1 + b1))
    return UhpPoint(x, float(np.sqrt((x - a1) * (b1 - x))))


def geodesic_distance(g1: UhpGeodesic, g2: UhpGeodesic) -> float:
    """Length of the common perpendicular of two geodesics with disjoint, non-separating ends.

    g2 is sent to the imaginary axis by z -> (z - p)/(z - q); then the distance
    to the image semicircle with ends al1, al2 is arccosh((al1 + al2)/|al2 - al1|).
    """
    if separates(g1.angles(), g2.angles()):
        raise DomainError("geodesics intersect")

    def T(z):
        if _is_inf(z):
            return 1.0 if not g2.vertical else np.inf
        if g2.vertical:
            return z - float(g2.p)
        return (z - float(g2.p)) / (z - float(g2.q))

    al = [T(e) for e in (g1.p, g1.q)]
    if any(not np.isfinite(v) or v == 0 for v in al):
        raise DegeneracyError("geodesics share an end")
    al1, al2 = abs(al[0]), abs(al[1])
    return float(np.arccosh((al1 + al2) / abs(al2 - al1)))


def best_rotation(angles):
    """Chart rotation that puts the point at infinity in the middle of the largest gap."""
    a = np.sort(normalize(np.asarray(angles, dtype=float)))
    gaps = np.diff(np.concatenate([a, [a[0] + TWO_PI]]))
    k = int(np.argmax(gaps))
    return normalize(a[k] + gaps[k] / 2.0 - np.pi)


def _geo(e, rotation):
    return UhpGeodesic.from_angles(e[0], e[1], rotation)


# ------------------------------------------------------ involution distance

def _fixed_points(m: LinearFractional):
    """Fixed points (chart values or INFINITY) of a non-identity linear-fractional map."""
    a, b, c, d = m.a, m.b, m.c, m.d
    if c == 0:
        return [b / (d - a), INFINITY]
    disc = (d - a) ** 2 + 4 * b * c
    if disc <= 0:
        raise DomainError("map has no two distinct real fixed points")
    r = np.sqrt(disc)
    return sorted([((a - d) - r) / (2 * c), ((a - d) + r) / (2 * c)])


def _compose(m2: LinearFractional, m1: LinearFractional) -> LinearFractional:
    """m2 o m1."""
    A = np.array([[m2.a, m2.b], [m2.c, m2.d]]) @ np.array([[m1.a, m1.b], [m1.c, m1.d]])
    return LinearFractional(*A.ravel())


def _angle(p):
    return np.pi if _is_inf(p) else float(from_chart(p))


def invariant_sphere_point(s: LinearFractional, x, x_):
    """A point y with (x, x', y, s(y)) harmonic: then {y, s(y)} is an s-invariant sphere.

    x, x' are angles swapped by s; y is searched on the ccw arc from x to x',
    where the harmonic residual runs from -inf to +inf.
    """
    L = CANONICAL.logdist
    length = ccw(x, x_)

    def g(lam):
        y = normalize(x + lam * length)
        z = s(y)
        return float(L(x, y) + L(x_, z) - L(x, z) - L(x_, y))

    lam = brentq(g, 1e-12, 1 - 1e-12, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return float(normalize(x + lam * length))


def involution_space_distance(s: LinearFractional, s_: LinearFractional) -> float:
    """|ss'| = |ln <x, y, y', x'>| for fixed-point-free involutions s, s' of the circle."""
    m = _compose(s_, s)
    if np.allclose([m.b, m.c, m.a - m.d], 0.0, atol=1e-15 * max(abs(m.a), abs(m.d))):
        return 0.0
    x, x_ = (_angle(p) for p in _fixed_points(m))
    y = invariant_sphere_point(s, x, x_)
    y_ = invariant_sphere_point(s_, x, x_)
    L = CANONICAL.logdist
    return float(abs(L(x, y_) + L(y, x_) - L(x, y) - L(y_, x_)))


def involution_distance(t: float) -> float:
    """|ss'| for s(x) = -1/x and s'(x) = -e^{4t}/x (the point reflections at i and e^{2t} i)."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    s = LinearFractional(0.0, -1.0, 1.0, 0.0)
    s_ = LinearFractional(0.0, -float(np.exp(4 * t)), 1.0, 0.0)
    return involution_space_distance(s, s_)


# ------------------------------------------------- functional vs H^2 distance

def feet(config: StrongPairConfig, d: DabPoint):
    """p = oo' cap xx' and q = ww' cap xx' in a chart with infinity in the widest gap."""
    rot = best_rotation([config.o, config.o_, config.w, config.w_, d.x, d.x_])
    dd = _geo((d.x, d.x_), rot)
    p = geodesic_intersection(_geo((config.o, config.o_), rot), dd)
    q = geodesic_intersection(_geo((config.w, config.w_), rot), dd)
    return p, q


def functional_equals_h2_check(config: StrongPairConfig, d: DabPoint) -> float:
    """|F_ab(d) - dist(p, q)| for the canonical structure."""
    F = f_ab(CANONICAL, config, d)[2]
    p, q = feet(config, d)
    return abs(F - uhp_distance(p, q))


@dataclass
class LambertReport:
    t_ac: float
    t_ab: float
    t_bc: float
    alpha_o: float
    o_gamma: float
    alpha_gamma: float
    ab_h2: float
    bc_h2: float

    @property
    def consistent(self):
        """Both quadrilateral comparisons hold and agree with the time inequality."""
        return (self.alpha_o > self.ab_h2 and self.o_gamma > self.bc_h2
                and self.t_ac > self.t_ab + self.t_bc)


def lambert_comparison(a: Event, b: Event, c: Event, tol: Tolerances = DEFAULT) -> LambertReport:
    """Side lengths of the two Lambert quadrilaterals for a < b < c against the times.

    d, p, q are the common perpendiculars of (a, c), (a, b), (b, c); alpha, gamma
    are the feet of d on a, c and o = d cap b. ab_h2 and bc_h2 are the lengths
    of p and q between a, b and b, c, measured with the geodesic-distance formula.
    """
    pts = [a.p, a.q, b.p, b.q, c.p, c.q]
    dx, dy = common_perp_batch(CANONICAL, a.p, a.q, c.p, c.q, tol)
    rot = best_rotation(pts + [dx, dy])
    ga, gb, gc, gd = (_geo(e, rot) for e in ((a.p, a.q), (b.p, b.q), (c.p, c.q), (dx, dy)))
    alpha, gamma, o = geodesic_intersection(ga, gd), geodesic_intersection(gc, gd), geodesic_intersection(gb, gd)
    t = lambda e1, e2: float(time_batch(CANONICAL, e1.p, e1.q, e2.p, e2.q, tol)[0])
    return LambertReport(
        t_ac=t(a, c), t_ab=t(a, b), t_bc=t(b, c),
        alpha_o=uhp_distance(alpha, o), o_gamma=uhp_distance(o, gamma),
        alpha_gamma=uhp_distance(alpha, gamma),
        ab_h2=geodesic_distance(ga, gb), bc_h2=geodesic_distance(gb, gc),
    )


def time_vs_h2_batch(A, B, tol: Tolerances = DEFAULT):
    """|t(a, b) - distance between geodesics a, b| for rows of strong-causal pairs."""
    A, B = np.atleast_2d(A), np.atleast_2d(B)
    t, _ = time_batch(CANONICAL, A[:, 0], A[:, 1], B[:, 0], B[:, 1], tol)
    out = np.empty(len(A))
    for i in range(len(A)):
        rot = best_rotation(np.concatenate([A[i], B[i]]))
        out[i] = abs(t[i] - geodesic_distance(_geo(A[i], rot), _geo(B[i], rot)))
    return out
