"""Exact frequency moments and the sampling (AMS) basic estimate."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class FrequencyVector:
    counts: dict[int, int]
    total: int

    def __getitem__(self, element: int) -> int:
        return self.counts.get(element, 0)

    def max_count(self) -> int:
        return max(self.counts.values()) if self.counts else 0


def _as_array(stream: Sequence[int] | np.ndarray) -> np.ndarray:
    arr = np.asarray(stream)
    if arr.ndim != 1:
        raise ValueError("stream must be one-dimensional")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        raise TypeError(f"stream elements must be integers, got {arr.dtype}")
    return arr.astype(np.int64, copy=False)


def frequency_vector(stream) -> FrequencyVector:
    arr = _as_array(stream)
    if arr.size == 0:
        raise ValueError("stream must be nonempty")
    values, counts = np.unique(arr, return_counts=True)
    return FrequencyVector(
        counts={int(v): int(c) for v, c in zip(values, counts)},
        total=int(arr.size),
    )


def fk_from_counts(counts: np.ndarray, k: int) -> int:
    """Sum of ``c**k`` over ``counts``, in exact Python integers."""
    counts = np.asarray(counts)
    counts = counts[counts > 0]
    if counts.size == 0:
        return 0
    # Group equal multiplicities so the big-integer work is per distinct count.
    values, mult = np.unique(counts, return_counts=True)
    return sum(int(m) * int(v) ** k for v, m in zip(values, mult))


def exact_fk(stream, k: int) -> int:
    """F_k = sum_i f_i^k.

    Computed with unbounded Python integers, so it never wraps around.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    arr = _as_array(stream)
    if arr.size == 0:
        return 0
    _, counts = np.unique(arr, return_counts=True)
    return fk_from_counts(counts, k)


def basic_estimate(m: int, r: int, k: int) -> int:
    """One AMS sample: ``m * (r^k - (r-1)^k)``."""
    return m * (r**k - (r - 1) ** k)


def suffix_counts(stream) -> np.ndarray:
    """``out[j]`` = occurrences of ``stream[j]`` at positions ``>= j``."""
    arr = _as_array(stream)
    out = np.empty(arr.size, dtype=np.int64)
    seen: dict[int, int] = {}
    for j in range(arr.size - 1, -1, -1):
        x = int(arr[j])
        seen[x] = seen.get(x, 0) + 1
        out[j] = seen[x]
    return out


def ams_all_positions(stream, k: int) -> list[int]:
    """The basic estimate for every possible sampled position."""
    arr = _as_array(stream)
    m = int(arr.size)
    return [basic_estimate(m, int(r), k) for r in suffix_counts(arr)]


def ams_enumeration_mean(stream, k: int) -> Fraction:
    """Exact mean of the basic estimate over all start positions.

    Telescoping makes this equal to F_k for every stream.
    """
    values = ams_all_positions(stream, k)
    return Fraction(sum(values), len(values))


def ams_estimate(stream, k: int, sample_count: int, seed: int) -> Fraction:
    """Mean of ``sample_count`` independent basic estimates, in one pass."""
    from romlab.estimators import AmsEstimator

    arr = _as_array(stream)
    if arr.size == 0:
        raise ValueError("stream must be nonempty")
    est = AmsEstimator(k, int(arr.size), sample_count, seed)
    est.update_many(arr)
    return est.estimate()
