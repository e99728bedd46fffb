import numpy as np
import pytest
from hypothesis import given, settings

from mds.errors import DegeneracyError, DomainError
from mds.harmonic import Event
from mds.hyperbolic import (
    INFINITY,
    UhpGeodesic,
    UhpPoint,
    feet,
    functional_equals_h2_check,
    geodesic_distance,
    geodesic_intersection,
    involution_distance,
    lambert_comparison,
    time_vs_h2_batch,
    uhp_distance,
)
from mds.moebius import Canonical
from mds.time_conditions import DabPoint, StrongPairConfig, perpendicular_of

from .strategies import tuples


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_doubled_speed(t):
    assert abs(involution_distance(t) - 2 * t) < 1e-10
    assert abs(uhp_distance(UhpPoint(0, 1), UhpPoint(0, np.exp(2 * t))) - 2 * t) < 1e-10


def test_involution_distance_edge():
    assert involution_distance(0.0) == 0.0
    with pytest.raises(DomainError):
        involution_distance(-1.0)


def test_uhp_point_domain():
    with pytest.raises(DomainError):
        UhpPoint(0.0, 0.0)


def test_intersections():
    p = geodesic_intersection(UhpGeodesic(-1.0, 1.0), UhpGeodesic(0.0, INFINITY))
    assert (p.re, p.im) == pytest.approx((0.0, 1.0), abs=1e-15)
    p = geodesic_intersection(UhpGeodesic(0.0, 2.0), UhpGeodesic(1.0, INFINITY))
    assert (p.re, p.im) == pytest.approx((1.0, 1.0), abs=1e-15)
    with pytest.raises(DomainError):
        geodesic_intersection(UhpGeodesic(0.0, 1.0), UhpGeodesic(2.0, 3.0))


def test_geodesic_distance():
    # (-1, 1) and (-e^2, e^2) are concentric: distance 2 along the imaginary axis
    assert abs(geodesic_distance(UhpGeodesic(-1.0, 1.0), UhpGeodesic(-np.e ** 2, np.e ** 2)) - 2.0) < 1e-12
    with pytest.raises(DomainError):
        geodesic_distance(UhpGeodesic(0.0, 2.0), UhpGeodesic(1.0, 3.0))
    with pytest.raises(DegeneracyError):
        geodesic_distance(UhpGeodesic(0.0, 1.0), UhpGeodesic(1.0, 3.0))


@given(tuples(4, 0.02, cyclic=True))
def test_time_is_geodesic_distance(q):
    a1, a2, b1, b2 = q
    assert time_vs_h2_batch(np.array([[a1, a2]]), np.array([[b1, b2]]))[0] < 1e-9


def test_functional_is_distance_between_feet():
    rng = np.random.default_rng(0)
    worst, done = 0.0, 0
    while done < 1000:
        q = np.sort(rng.uniform(0, 2 * np.pi, 4))
        if np.min(np.diff(np.append(q, q[0] + 2 * np.pi))) < 1e-3:
            continue
        o, o_, w_, w = q if rng.random() < 0.5 else np.mod(-q, 2 * np.pi)
        cfg = StrongPairConfig(o, o_, w, w_)
        (sa, la), (sb, lb) = cfg.arc_a(), cfg.arc_b()
        d = DabPoint(sa + la * rng.uniform(0.01, 0.99), sb + lb * rng.uniform(0.01, 0.99))
        worst = max(worst, functional_equals_h2_check(cfg, d))
        done += 1
    assert worst < 1e-9


def test_functional_at_d0_equals_time():
    cfg = StrongPairConfig(0.3, 1.7, 4.4, 3.1)
    d0 = perpendicular_of(Canonical(), cfg)
    assert functional_equals_h2_check(cfg, d0) < 1e-10
    p, q = feet(cfg, d0)
    assert uhp_distance(p, q) > 0


@settings(max_examples=25)
@given(tuples(6, 0.02, cyclic=True))
def test_lambert_comparison(q):
    # cyclic (b1, a1, a2, b2, c1, c2): b sits between a and c
    b1, a1, a2, b2, c1, c2 = q
    rep = lambert_comparison(Event(a1, a2), Event(b1, b2), Event(c1, c2))
    assert rep.consistent, rep
