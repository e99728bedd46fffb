import numpy as np
import pytest

from mds.axioms import SUITE, h4, ht_chunk
from mds.moebius import ellipse


@pytest.mark.parametrize("name", list(SUITE))
def test_axiom_holds_on_monotone_family(name, monotone_family):
    res = SUITE[name](monotone_family, np.random.default_rng(hash(name) % 2 ** 32), 300)
    assert res.tested > 200
    assert res.ok.all(), (name, res.rows[~res.ok][:3])


def test_uniqueness_fails_off_monotone():
    # the flat ellipse is not monotone and harmonic conjugates stop being unique
    res = h4(ellipse(2, 0.4), np.random.default_rng(0), 2000)
    assert res.extras["max_multiplicity"] >= 3 and not res.ok.all()


def test_ht_chunk_tallies():
    from mds.moebius import Canonical
    res = ht_chunk(Canonical(), np.random.default_rng(1), 64)
    labels = res.extras["axiom_index"]
    assert len(labels) == res.tested == sum(res.extras[f"{k}_tested"] for k in SUITE)
    assert set(np.unique(labels)) == set(range(len(SUITE)))
    assert all(res.extras[f"{k}_violations"] == 0 for k in SUITE)
