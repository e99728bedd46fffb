"""Deterministic seed streams and the per-chunk result type shared by all checks."""
from dataclasses import dataclass, field

import numpy as np

from .circle import TWO_PI
from .moebius import min_gap_rows

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 output for state x (the standard avalanche finalizer)."""
    z = (x + GOLDEN64) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def task_seed(master: int, index: int) -> int:
    """Seed of task `index`: splitmix64(master ^ splitmix64(index))."""
    return splitmix64((int(master) & MASK64) ^ splitmix64(int(index)))


def task_rng(master: int, index: int) -> np.random.Generator:
    return np.random.default_rng(task_seed(master, index))


def draw_cyclic(rng, n, k, min_gap):
    """n candidate k-tuples sorted by angle; returns (valid rows, skipped count)."""
    Q = np.sort(rng.uniform(0.0, TWO_PI, size=(n, k)), axis=1)
    ok = min_gap_rows(Q) >= min_gap
    return Q[ok], int((~ok).sum())


def random_orientation(rng, Q):
    """Mirror a random half of the rows (theta -> -theta), keeping column roles.

    Mirrored rows list their points clockwise, so both orientations of every
    configuration get sampled.
    """
    flip = rng.random(len(Q)) < 0.5
    out = Q.copy()
    out[flip] = np.mod(-out[flip], TWO_PI)
    return out


@dataclass
class ChunkResult:
    """Per-sample outcome of one chunk of a sampled check."""
    margins: np.ndarray
    ok: np.ndarray
    rows: np.ndarray
    skipped: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def tested(self):
        return int(len(self.margins))


def empty_chunk(width, skipped=0):
    return ChunkResult(np.zeros(0), np.zeros(0, bool), np.zeros((0, width)), skipped)
