import numpy as np
import pytest
from hypothesis import given, settings

from mds.duality import (
    LinearFractional,
    PerturbedOracle,
    StructureOracle,
    codifferential_residuals,
    codifferential_residuals_batch,
    forward_map,
    label_relations_batch,
    oracle_submoebius,
    pentagon_identity,
    psl2_pullback_check,
    regular_pentagon,
    roundtrip_batch,
    structure_map,
    submoebius_batch,
    submoebius_from_timed,
    time_labels,
)
from mds.errors import ConfigurationError, NotMonotoneError, OracleInconsistencyError
from mds.harmonic import Event
from mds.moebius import Canonical, SamplerConfig, Snowflake, canonical_table, cross_ratio_batch, ellipse

from .strategies import tuples

PI = np.pi
LN2 = np.log(2.0)


def test_forward_map_canonical_line():
    T = forward_map(Canonical())
    x = np.linspace(0.1, 3.0, 20)
    assert np.allclose(T.timelike_point_batch(np.zeros(20), np.full(20, PI), x), 2 * PI - x, atol=1e-10)


def test_forward_map_refuses_ellipse_with_witness():
    with pytest.raises(NotMonotoneError) as exc:
        forward_map(ellipse(2, 0.4), check=SamplerConfig(samples=100_000, seed=42))
    assert exc.value.witness is not None and len(exc.value.witness) == 4


def test_square_labels_and_triple():
    T = forward_map(Canonical())
    q = (0.0, PI / 2, 3 * PI / 2, PI)
    lab = time_labels(T, q)
    assert lab.t12 == pytest.approx(LN2, abs=1e-12) and lab.consistent()
    assert submoebius_from_timed(T, q) == pytest.approx((-LN2, LN2, 0.0), abs=1e-12)


@settings(max_examples=15)
@given(tuples(4))
def test_roundtrip_identity(q):
    for M in (Canonical(), Snowflake(0.5), Snowflake(2.0)):
        assert roundtrip_batch(M, np.array([q]))[0] < 1e-9


def test_roundtrip_batch_and_tabulated_grid():
    rng = np.random.default_rng(5)
    Q = rng.uniform(0, 2 * PI, (500, 4))
    Q = Q[np.min(np.abs(np.angle(np.exp(1j * (Q[:, :, None] - Q[:, None, :]))))
                 + 10 * np.eye(4)[None], axis=(1, 2)) > 0.01]
    assert np.max(roundtrip_batch(Canonical(), Q)) < 1e-9
    T = canonical_table(8)
    G = T.angles[np.array([[0, 3, 5, 6], [7, 1, 2, 4], [2, 6, 0, 3]])]
    assert np.max(roundtrip_batch(T, G, forward_map(T, exact_lines=True))) < 1e-12


@settings(max_examples=15)
@given(tuples(5))
def test_conditions_ab_vanish(q):
    for M in (Canonical(), Snowflake(2.0)):
        A, B = codifferential_residuals(oracle_submoebius(forward_map(M)), q)
        assert max(abs(A), abs(B)) < 1e-9
        A, B = codifferential_residuals(structure_map(M), q)
        assert max(abs(A), abs(B)) < 1e-12


@settings(max_examples=15)
@given(tuples(5, cyclic=True))
def test_label_relations(q):
    opp, add = label_relations_batch(forward_map(Canonical()), np.array([q]))
    assert np.max(np.abs(opp)) < 1e-9 and np.max(np.abs(add)) < 1e-9


def test_injected_label_fault_is_visible():
    q = np.array([[0.3, 1.4, 2.6, 3.9, 5.1]])
    base = forward_map(Canonical())
    # shift every time measured along h_(q1, q2) by 0.1
    bad = PerturbedOracle(base, Event(0.3, 1.4), 0.1)
    A, B = codifferential_residuals_batch(oracle_submoebius(bad, strict=False), q)
    assert max(abs(A[0]), abs(B[0])) > 0.01
    with pytest.raises(OracleInconsistencyError):
        submoebius_batch(bad, q[:, [0, 1, 2, 3]])


def test_pentagon_identity():
    for M in (Canonical(), Snowflake(1.5)):
        for seed in (0, 1, 2):
            res = pentagon_identity(M, seed)
            assert res.converged and res.residual < 1e-6 and res.chain_spread < 1e-6


def test_regular_pentagon_is_exact():
    X = regular_pentagon()
    M = Canonical()
    # consecutive sides orthogonal: rho_(x_i, x_{i+1})(x_{i+2}) = x_{i+3} for odd i
    for i in range(0, 10, 2):
        r = np.log(np.exp(M.logdist(X[i], X[(i + 2) % 10]) + M.logdist(X[(i + 1) % 10], X[(i + 3) % 10])
                          - M.logdist(X[i], X[(i + 3) % 10]) - M.logdist(X[(i + 1) % 10], X[(i + 2) % 10])))
        assert abs(r) < 1e-12


def test_psl2_pullback():
    rep = psl2_pullback_check((2.0, 1.0, 1.0, 1.0), Canonical(), SamplerConfig(samples=400, seed=1))
    assert rep.passed, rep
    with pytest.raises(ConfigurationError):
        LinearFractional(1, 2, 2, 4)


def test_structure_oracle_scalar_paths_agree():
    T = StructureOracle(Canonical())
    a, b = Event(0.2, 1.0), Event(2.0, 3.0)
    t = T.time(a, b)
    assert t == pytest.approx(float(T.time_batch([0.2], [1.0], [2.0], [3.0])[0]), abs=1e-14)
    assert cross_ratio_batch(Canonical(), np.array([[0.2, 1.0, 2.0, 3.0]])).shape == (1, 3)


def test_conditions_ab_batched():
    rng = np.random.default_rng(11)
    Q = np.sort(rng.uniform(0, 2 * PI, (3000, 5)), axis=1)
    Q = Q[np.min(np.diff(np.concatenate([Q, Q[:, :1] + 2 * PI], axis=1), axis=1), axis=1) > 1e-3]
    Q = np.take_along_axis(Q, rng.permuted(np.tile(np.arange(5), (len(Q), 1)), axis=1), axis=1)
    A, B = codifferential_residuals_batch(oracle_submoebius(forward_map(Snowflake(0.5)), strict=False), Q)
    assert max(np.max(np.abs(A)), np.max(np.abs(B))) < 1e-9
