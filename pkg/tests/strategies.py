"""Shared hypothesis strategies: well-separated points on the circle."""
import numpy as np
from hypothesis import strategies as st

from mds.moebius import min_gap_rows

angle = st.floats(0.0, 2 * np.pi, exclude_max=True, allow_nan=False)


def tuples(k, min_gap=0.05, cyclic=False):
    def ok(t):
        return min_gap_rows(np.array([t])).item() >= min_gap
    s = st.lists(angle, min_size=k, max_size=k).filter(ok)
    return s.map(sorted) if cyclic else s
