"""Points, arcs and tuples on the circle, plus the S4 machinery acting on L4."""
from dataclasses import dataclass
from itertools import permutations
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegeneracyError, InvariantError
from .tolerances import DEFAULT

TWO_PI = 2.0 * np.pi


def normalize(theta):
    """Reduce angles to [0, 2pi). Works on scalars and arrays."""
    r = np.mod(theta, TWO_PI)
    # np.mod can round a tiny negative input up to exactly 2pi
    r = np.where(r >= TWO_PI, r - TWO_PI, r)
    if np.ndim(r) == 0:
        return float(r)
    return r


def ccw(a, b):
    """Counterclockwise sweep from a to b, in [0, 2pi)."""
    return normalize(np.subtract(b, a))


def angular_distance(a, b):
    d = ccw(a, b)
    return np.minimum(d, TWO_PI - d)


def in_open_arc(p, start, end):
    """True where p lies strictly inside the ccw arc from start to end."""
    s = ccw(start, p)
    return (s > 0) & (s < ccw(start, end))


def to_chart(theta):
    """Stereographic chart s = tan(theta/2); theta = pi goes to infinity."""
    return np.tan(np.asarray(theta, dtype=float) / 2.0)


def from_chart(s):
    return normalize(2.0 * np.arctan(s))


@dataclass(frozen=True)
class CirclePoint:
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize(float(self.theta)))

    def __float__(self):
        return self.theta

    def distinct(self, other, eps=DEFAULT.eps_pt):
        return angular_distance(self.theta, float(other)) > eps


def _angle(p):
    return float(p.theta) if isinstance(p, CirclePoint) else normalize(float(p))


@dataclass(frozen=True)
class Arc:
    """Directed arc; with ccw=False it is swept clockwise from start to end."""
    start: CirclePoint
    end: CirclePoint
    ccw: bool = True

    def __post_init__(self):
        for name in ("start", "end"):
            v = getattr(self, name)
            if not isinstance(v, CirclePoint):
                object.__setattr__(self, name, CirclePoint(v))

    @property
    def length(self):
        if self.ccw:
            return ccw(self.start.theta, self.end.theta)
        return ccw(self.end.theta, self.start.theta)

    def position(self, p):
        """Fraction of the arc swept before reaching p (values > 1 are outside)."""
        a = _angle(p)
        sweep = ccw(self.start.theta, a) if self.ccw else ccw(a, self.start.theta)
        return sweep / self.length

    def point(self, lam):
        step = lam * self.length
        return CirclePoint(self.start.theta + step if self.ccw else self.start.theta - step)

    def contains(self, p, closed=True):
        a = _angle(p)
        sweep = ccw(self.start.theta, a) if self.ccw else ccw(a, self.start.theta)
        if closed:
            return sweep <= self.length
        return 0.0 < sweep < self.length


def arcs_of(p, q):
    """The two closed arcs cut out by a point pair; they share only p and q."""
    return Arc(CirclePoint(_angle(p)), CirclePoint(_angle(q))), Arc(CirclePoint(_angle(q)), CirclePoint(_angle(p)))


@dataclass(frozen=True)
class TupleN:
    points: tuple

    def __post_init__(self):
        pts = tuple(p if isinstance(p, CirclePoint) else CirclePoint(p) for p in self.points)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_angles(cls, angles):
        return cls(tuple(CirclePoint(a) for a in angles))

    @property
    def angles(self):
        return np.array([p.theta for p in self.points])

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def min_gap(self):
        a = self.angles
        n = len(a)
        return min(angular_distance(a[i], a[j]) for i in range(n) for j in range(i + 1, n))

    def nondegenerate(self, eps=DEFAULT.eps_pt):
        return self.min_gap() > eps

    def require_nondegenerate(self, eps=DEFAULT.eps_pt):
        if not self.nondegenerate(eps):
            raise DegeneracyError(f"degenerate tuple {tuple(self.angles)}")
        return self

    def delete(self, *indices):
        """q_I: drop the given 1-based entries, keep the induced order."""
        drop = set(indices)
        return TupleN(tuple(p for i, p in enumerate(self.points, 1) if i not in drop))

    def permuted(self, perm):
        return TupleN(tuple(perm.apply(self.points)))


class CrossRatioTriple(NamedTuple):
    """(ln cr1, ln cr2, ln cr3); a point of the plane L4 = {a + b + c = 0}."""
    a: float
    b: float
    c: float

    def in_l4(self, tol=1e-12):
        return abs(self.a + self.b + self.c) <= tol * max(1.0, abs(self.a), abs(self.b), abs(self.c))


# opposite-edge pairings of {1,2,3,4}: P1 = 12|34, P2 = 13|24, P3 = 14|23
PAIRINGS = (
    frozenset([frozenset([1, 2]), frozenset([3, 4])]),
    frozenset([frozenset([1, 3]), frozenset([2, 4])]),
    frozenset([frozenset([1, 4]), frozenset([2, 3])]),
)


@dataclass(frozen=True)
class Permutation4:
    """One-line notation: images[i-1] = pi(i). Acts on tuples by (pi q)_i = q_pi(i)."""
    images: tuple

    def __post_init__(self):
        imgs = tuple(int(i) for i in self.images)
        if sorted(imgs) != [1, 2, 3, 4]:
            raise ValueError(f"not a permutation of 1234: {self.images}")
        object.__setattr__(self, "images", imgs)

    @classmethod
    def parse(cls, word):
        return cls(tuple(int(ch) for ch in str(word)))

    def __str__(self):
        return "".join(str(i) for i in self.images)

    def __call__(self, i):
        return self.images[i - 1]

    @property
    def sign(self):
        imgs = self.images
        inv = sum(1 for i in range(4) for j in range(i + 1, 4) if imgs[i] > imgs[j])
        return -1 if inv % 2 else 1

    def phi(self):
        """Image in S3: phi(pi)(k) is the index of the pairing pi(P_k)."""
        out = []
        for pairing in PAIRINGS:
            moved = frozenset(frozenset(self(i) for i in block) for block in pairing)
            out.append(PAIRINGS.index(moved) + 1)
        return tuple(out)

    def apply(self, seq):
        return tuple(seq[self(i) - 1] for i in range(1, 5))

    def inverse(self):
        inv = [0] * 4
        for i, v in enumerate(self.images, 1):
            inv[v - 1] = i
        return Permutation4(tuple(inv))

    @property
    def code(self):
        c = 0
        for v in self.images:
            c = c * 4 + (v - 1)
        return c


def compose(p: Permutation4, r: Permutation4) -> Permutation4:
    """The permutation acting as p after r on tuples: compose(p, r) q = p (r q)."""
    return Permutation4(tuple(r(p(i)) for i in range(1, 5)))


IDENTITY = Permutation4((1, 2, 3, 4))
ALL_PERMUTATIONS = tuple(Permutation4(p) for p in permutations((1, 2, 3, 4)))
KERNEL = frozenset(Permutation4.parse(w) for w in ("1234", "2143", "4321", "3412"))

# lookup tables indexed by Permutation4.code, for batched evaluation
PERM_SIGN = np.zeros(256)
PERM_TAU = np.zeros((256, 3), dtype=int)
for _p in ALL_PERMUTATIONS:
    PERM_SIGN[_p.code] = _p.sign
    PERM_TAU[_p.code] = np.array(_p.phi()) - 1


def signed_permutation_action(pi: Permutation4, v: Sequence[float]) -> CrossRatioTriple:
    v = CrossRatioTriple(*map(float, v))
    if not v.in_l4():
        raise InvariantError(f"{tuple(v)} is not in L4")
    tau = pi.phi()
    s = pi.sign
    return CrossRatioTriple(*(s * v[tau[k] - 1] for k in range(3)))


def signed_action_batch(codes, values):
    """Row-wise signed action; codes are Permutation4 codes, values has shape (n, 3)."""
    codes = np.asarray(codes)
    tau = PERM_TAU[codes]
    picked = np.take_along_axis(np.asarray(values), tau, axis=1)
    return PERM_SIGN[codes][:, None] * picked


def _pair_angles(pair):
    return tuple(_angle(p) for p in pair)


def separates(pair_a, pair_b, eps=DEFAULT.eps_pt) -> bool:
    p, q = _pair_angles(pair_a)
    z, u = _pair_angles(pair_b)
    if TupleN.from_angles((p, q, z, u)).min_gap() <= eps:
        raise DegeneracyError(f"pairs {(p, q)} and {(z, u)} are not four distinct points")
    inside = int(in_open_arc(z, p, q)) + int(in_open_arc(u, p, q))
    return inside == 1


def separates_batch(p, q, z, u):
    """Vectorized separation test; assumes the four points are distinct."""
    return in_open_arc(z, p, q) != in_open_arc(u, p, q)


def canonical_cyclic_order(q: TupleN, eps=DEFAULT.eps_pt):
    """co(q): the entries of q counterclockwise from the one of minimal angle.

    Returns the reordered tuple and the permutation pi with rep = pi q
    (a Permutation4 for 4-tuples, a plain image tuple otherwise).
    """
    q.require_nondegenerate(eps)
    order = tuple(int(i) + 1 for i in np.argsort(q.angles, kind="stable"))
    rep = TupleN(tuple(q[i - 1] for i in order))
    perm = Permutation4(order) if len(q) == 4 else order
    return rep, perm


def cyclic_word_equal(w1, w2, eps=DEFAULT.eps_pt):
    """Compare two cyclic words of angles up to rotation of the starting index."""
    a, b = np.asarray(w1, float), np.asarray(w2, float)
    if len(a) != len(b):
        return False
    for shift in range(len(b)):
        if np.all(angular_distance(a, np.roll(b, shift)) <= eps):
            return True
    return False
