import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mds.circle import from_chart
from mds.errors import ConfigurationError, ConstructionError, DomainError
from mds.harmonic import time_batch
from mds.moebius import Canonical, Perturbed, Snowflake
from mds.time_conditions import (
    DabPoint,
    Parametrization,
    StrongPairConfig,
    additivity_split_batch,
    axiom_C_chunk,
    axiom_C_residual,
    axiom_I_chunk,
    axiom_I_residual,
    axiom_I_residual_batch,
    construct_axiom_C,
    construct_axiom_I,
    delta_xyz,
    epsilon_chunk,
    epsilon_neighborhood,
    f_ab,
    f_ab_batch,
    lqi_chunk,
    minimize_f_ab,
    monotone_plus_batch,
    perpendicular_of,
    second_differences,
    solve_axiom_C,
    ti_chunk,
    wti_chunk,
)

from .strategies import tuples

M0 = Canonical()
INF = np.pi          # the chart point at infinity
c = from_chart       # chart value -> angle

# a = (o, o'), b = (w, w') in chart coordinates o = -1, o' = -3, w' = 2, w = 1
CFG = StrongPairConfig(c(-1.0), c(-3.0), c(1.0), c(2.0))


def strong_pairs(min_gap=0.05):
    return tuples(4, min_gap, cyclic=True).flatmap(
        lambda q: st.booleans().map(lambda flip: tuple(np.mod(-np.array(q), 2 * np.pi)) if flip else tuple(q)))


def test_config_validation():
    with pytest.raises(ConfigurationError):
        StrongPairConfig(0.0, 2.0, 1.0, 3.0)        # a and b separate
    with pytest.raises(ConfigurationError):
        StrongPairConfig(c(-1.0), c(-3.0), c(2.0), c(1.0))   # wrong pairing of the ends


def test_f_ab_domain():
    with pytest.raises(DomainError):
        f_ab(M0, CFG, DabPoint(c(0.5), c(1.5)))


def test_f_at_perpendicular_equals_time():
    d0 = perpendicular_of(M0, CFG)
    t_plus, t_minus, F = f_ab(M0, CFG, d0)
    t, _ = time_batch(M0, CFG.o, CFG.o_, CFG.w, CFG.w_)
    assert abs(t_plus - t_minus) < 1e-9 and abs(F - t) < 1e-9


def test_parametrization_roundtrip():
    P = Parametrization(M0, CFG, perpendicular_of(M0, CFG))
    x, x_ = P.from_params(np.array([0.3, -1.2]), np.array([-0.7, 2.0]))
    s, sp = P.to_params(x, x_)
    assert np.allclose(s, [0.3, -1.2], atol=1e-9) and np.allclose(sp, [-0.7, 2.0], atol=1e-9)


def test_variational_principle_canonical():
    r = minimize_f_ab(M0, CFG)
    assert r.converged and r.vp_residual < 1e-6
    assert r.F_min <= r.F_d0 + 1e-12


def test_snowflake_scales_functional():
    rng = np.random.default_rng(0)
    sa, la = CFG.arc_a()
    sb, lb = CFG.arc_b()
    x, x_ = sa + la * rng.uniform(0.05, 0.95, 50), sb + lb * rng.uniform(0.05, 0.95, 50)
    F0 = f_ab_batch(M0, CFG.o, CFG.o_, CFG.w, CFG.w_, x, x_)[2]
    F5 = f_ab_batch(Snowflake(0.5), CFG.o, CFG.o_, CFG.w, CFG.w_, x, x_)[2]
    assert np.allclose(F5, 0.5 * F0, rtol=1e-12)


@given(tuples(6, 0.02, cyclic=True))
def test_functional_splits_additively(q):
    # q = (b1, a1, a2, b2, c1, c2) cyclically ordered puts b between a and c
    assert abs(additivity_split_batch(M0, np.array([q]))[0]) < 1e-9


@given(strong_pairs(), st.floats(0.05, 0.9), st.floats(0.05, 0.9))
def test_plus_functional_increases_toward_e(P, lam, mu):
    assert monotone_plus_batch(M0, np.array([P]), np.array([lam]), np.array([mu]))[0] > 0


@settings(max_examples=20)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(0, 2 * np.pi))
def test_functional_convex_along_lines(s, sp, phi):
    d2 = second_differences(M0, CFG, [s, sp], [np.cos(phi), np.sin(phi)], h=0.1)
    assert d2[0] > 0


# ------------------------------------------------------------ Axiom (I)

def test_axiom_I_construction_and_positivity():
    rng = np.random.default_rng(1)
    P = np.array([[c(-1.0), c(-3.0), c(2.0), c(1.0)]] * 5)
    Q7 = construct_axiom_I(M0, P, rng.uniform(0.1, 0.9, 5))
    for q in Q7:
        r, delta = axiom_I_residual(M0, q)
        assert r > 0 and delta > 1


def test_axiom_I_residual_vanishes_as_x_tends_to_u():
    P = np.array([[c(-1.0), c(-3.0), c(2.0), c(1.0)]] * 4)
    r, _ = axiom_I_residual_batch(M0, construct_axiom_I(M0, P, np.array([1e-2, 1e-4, 1e-6, 1e-8])))
    assert np.all(np.diff(np.abs(r)) < 0) and abs(r[-1]) < 1e-6


def test_axiom_I_rejects_non_harmonic_tuple():
    with pytest.raises(ConstructionError):
        axiom_I_residual(M0, (0.1, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0))


@pytest.mark.parametrize("M", [Canonical(), Snowflake(2.0)], ids=["canonical", "snowflake2"])
def test_axiom_I_chunk(M):
    res = axiom_I_chunk(M, np.random.default_rng(2), 1000)
    assert res.ok.all() and res.margins.min() > 0


# ------------------------------------------------------------ Axiom (C)

def test_axiom_C_chart_example():
    o_, x, y, z, o, w = INF, c(-4.0), c(-2.0), c(-1.0), c(0.0), c(1.0)
    assert abs(solve_axiom_C(M0, o_, x, z, o) - y) < 1e-10
    # ratios of delta values are cross-ratio products, so chart values carry over
    d = lambda p: delta_xyz(M0, x, y, z, p)
    assert abs(d(o_) / d(o) - 1.0) < 1e-12
    assert abs(d(w) / d(o) - 0.9) < 1e-12
    assert abs(axiom_C_residual(M0, (o_, x, y, z, o, w)) - 2.0 / 15.0) < 1e-12


def test_axiom_C_rejects_unconstrained_tuple():
    with pytest.raises(ConstructionError):
        axiom_C_residual(M0, (INF, c(-4.0), c(-3.0), c(-1.0), c(0.0), c(1.0)))


def test_axiom_C_chunk_positive():
    res = axiom_C_chunk(M0, np.random.default_rng(3), 1000)
    assert res.ok.all() and res.margins.min() > 0


@given(tuples(5, 0.02, cyclic=True))
def test_axiom_C_constraint_holds_after_solve(P5):
    q = construct_axiom_C(M0, np.array([P5]))[0]
    assert axiom_C_residual(M0, q) > 0


# ------------------------------------------------------------ fine topology

def test_epsilon_chart_example():
    q = tuple(c(v) if v is not None else INF for v in (0.0, 1.0, 1.5, 2.0, 3.0, None, -3.0))
    eps, _ = epsilon_neighborhood(M0, q)
    assert abs(eps - 0.01) < 1e-12
    assert epsilon_neighborhood(M0, q)[1]          # M0 itself sits in its own tube


def test_perturbed_family_in_tube_satisfies_I():
    res = epsilon_chunk(Perturbed(1e-5), np.random.default_rng(4), 1000, min_gap=0.05)
    assert res.extras["outside_tube"] == 0 and res.ok.all()


# ------------------------------------------------------------ hierarchy

def test_wti_chunk(monotone_family):
    res = wti_chunk(monotone_family, np.random.default_rng(5), 500)
    assert res.ok.all()


def test_ti_chunk_collinear_equality():
    res = ti_chunk(M0, np.random.default_rng(6), 500)
    assert res.extras["collinear_max_gap"] < 1e-9
    assert res.extras["generic_min_margin"] > 0


def test_lqi_chunk():
    res = lqi_chunk(M0, np.random.default_rng(7), 500)
    assert res.tested > 300 and res.ok.all()
