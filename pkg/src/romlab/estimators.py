"""One-pass F_k estimators whose memory can be handed between players.

Serialized state layout (all integers little-endian)::

    u32   payload length L
    L bytes payload

AMS payload (magic ``AMSE``)::

    4s magic | u16 version | u16 k | u64 seed | u64 length | u64 processed
    | u32 sample_count | u32 elements[sample_count] | u32 counts[sample_count]

Sampled positions are not stored: they are regenerated from
``(seed, length, sample_count)``, which plays the role of public randomness.
A sample whose position has not been reached yet holds element 0, count 0.

Exact payload (magic ``EXFK``)::

    4s magic | u16 version | u16 k | u64 processed | u32 distinct
    | u32 ids[distinct] | u32 counts[distinct]

``ids`` are in order of first appearance in the stream. The version field is 1 for both; it changes only with
a breaking layout change, since reported state sizes depend on it.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from romlab.moments import _as_array, basic_estimate, fk_from_counts
from romlab.seeding import rng_for

STATE_VERSION = 1
_PREFIX = struct.Struct("<I")
_AMS_HEAD = struct.Struct("<4sHHQQQI")
_EXACT_HEAD = struct.Struct("<4sHHQI")
_U32_MAX = 2**32 - 1


@dataclass(frozen=True)
class EstimatorState:
    content: bytes

    @property
    def size_bits(self) -> int:
        return 8 * len(self.content)


def _wrap(payload: bytes) -> EstimatorState:
    return EstimatorState(_PREFIX.pack(len(payload)) + payload)


def _unwrap(state: EstimatorState | bytes) -> bytes:
    raw = state.content if isinstance(state, EstimatorState) else bytes(state)
    (length,) = _PREFIX.unpack_from(raw, 0)
    payload = raw[_PREFIX.size:]
    if len(payload) != length:
        raise ValueError(f"state length prefix says {length} bytes, found {len(payload)}")
    return payload


def _check_ids(chunk: np.ndarray) -> None:
    if chunk.size and (chunk.min() < 0 or chunk.max() > _U32_MAX):
        raise ValueError("element identifiers must fit in an unsigned 32-bit integer")


class AmsEstimator:
    """Sampling estimator: each sample fixes a uniform position ``j`` and
    counts the occurrences of ``a_j`` from ``j`` to the end of the stream.

    All samples advance together during a single pass.
    """

    MAGIC = b"AMSE"

    def __init__(self, k: int, length: int, sample_count: int, seed: int):
        if sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if length < 1:
            raise ValueError("length must be >= 1")
        self.k = int(k)
        self.length = int(length)
        self.sample_count = int(sample_count)
        self.seed = int(seed)
        self.positions = rng_for(self.seed, "ams-positions").integers(
            0, self.length, self.sample_count, dtype=np.int64
        )
        self.processed = 0
        self.elements = np.zeros(self.sample_count, dtype=np.int64)
        self.counts = np.zeros(self.sample_count, dtype=np.int64)

    def update(self, x: int) -> None:
        self.update_many(np.array([x], dtype=np.int64))

    def update_many(self, chunk) -> None:
        chunk = _as_array(chunk)
        size = int(chunk.size)
        if size == 0:
            return
        if self.processed + size > self.length:
            raise ValueError("more items than the declared stream length")
        _check_ids(chunk)
        lo, hi = self.processed, self.processed + size

        starting = (self.positions >= lo) & (self.positions < hi)
        self.elements[starting] = chunk[self.positions[starting] - lo]
        active = self.positions < hi
        if active.any():
            # Count occurrences of each sample's element at chunk offsets
            # >= its start, via a (value, offset) sorted key.
            stride = size + 1
            offsets = np.arange(size, dtype=np.int64)
            keys = np.sort(chunk * stride + offsets)
            elem = self.elements[active]
            start = np.maximum(self.positions[active] - lo, 0)
            left = np.searchsorted(keys, elem * stride + start, side="left")
            right = np.searchsorted(keys, elem * stride + (size - 1), side="right")
            self.counts[active] += right - left
        self.processed = hi

    def estimate(self) -> Fraction:
        if self.processed != self.length:
            raise ValueError(f"stream incomplete: {self.processed} of {self.length} items seen")
        values, mult = np.unique(self.counts, return_counts=True)
        total = sum(int(c) * basic_estimate(self.length, int(r), self.k) for r, c in zip(values, mult))
        return Fraction(total, self.sample_count)

    def state(self) -> EstimatorState:
        head = _AMS_HEAD.pack(self.MAGIC, STATE_VERSION, self.k, self.seed, self.length,
                              self.processed, self.sample_count)
        return _wrap(head + self.elements.astype("<u4").tobytes() + self.counts.astype("<u4").tobytes())

    @classmethod
    def from_payload(cls, payload: bytes) -> "AmsEstimator":
        magic, version, k, seed, length, processed, s = _AMS_HEAD.unpack_from(payload, 0)
        if magic != cls.MAGIC or version != STATE_VERSION:
            raise ValueError(f"not an AMS state (magic={magic!r}, version={version})")
        est = cls(k, length, s, seed)
        body = np.frombuffer(payload, dtype="<u4", offset=_AMS_HEAD.size)
        if body.size != 2 * s:
            raise ValueError("truncated AMS state")
        est.elements = body[:s].astype(np.int64)
        est.counts = body[s:].astype(np.int64)
        est.processed = processed
        return est


class ExactEstimator:
    """Keeps the full frequency vector; the ground-truth oracle."""

    MAGIC = b"EXFK"

    def __init__(self, k: int, universe: int = 0):
        self.k = int(k)
        self.processed = 0
        self._counts = np.zeros(max(int(universe), 0) + 1, dtype=np.int64)
        self._ids = np.zeros(0, dtype=np.int64)

    def update(self, x: int) -> None:
        self.update_many(np.array([x], dtype=np.int64))

    def update_many(self, chunk) -> None:
        chunk = _as_array(chunk)
        if chunk.size == 0:
            return
        _check_ids(chunk)
        values, first, counts = np.unique(chunk, return_index=True, return_counts=True)
        top = int(values[-1])
        if top >= self._counts.size:
            grown = np.zeros(max(top + 1, 2 * self._counts.size), dtype=np.int64)
            grown[: self._counts.size] = self._counts
            self._counts = grown
        fresh = self._counts[values] == 0
        if fresh.any():
            # Keep first-seen order so serialization never needs a sort.
            self._ids = np.concatenate([self._ids, values[fresh][np.argsort(first[fresh])]])
        self._counts[values] += counts
        self.processed += int(chunk.size)

    def estimate(self) -> Fraction:
        return Fraction(fk_from_counts(self._counts[self._ids], self.k))

    def state(self) -> EstimatorState:
        ids = self._ids
        head = _EXACT_HEAD.pack(self.MAGIC, STATE_VERSION, self.k, self.processed, ids.size)
        return _wrap(head + ids.astype("<u4").tobytes() + self._counts[ids].astype("<u4").tobytes())

    @classmethod
    def from_payload(cls, payload: bytes) -> "ExactEstimator":
        magic, version, k, processed, d = _EXACT_HEAD.unpack_from(payload, 0)
        if magic != cls.MAGIC or version != STATE_VERSION:
            raise ValueError(f"not an exact state (magic={magic!r}, version={version})")
        body = np.frombuffer(payload, dtype="<u4", offset=_EXACT_HEAD.size)
        if body.size != 2 * d:
            raise ValueError("truncated exact state")
        ids, counts = body[:d].astype(np.int64), body[d:].astype(np.int64)
        est = cls(k, int(ids.max()) if d else 0)
        est._counts[ids] = counts
        est._ids = ids
        est.processed = processed
        return est


ESTIMATORS = ("exact", "ams")


def new_estimator(kind: str, k: int, length: int, sample_count: int = 4096, seed: int = 0,
                  universe: int = 0):
    if kind == "ams":
        return AmsEstimator(k, length, sample_count, seed)
    if kind == "exact":
        return ExactEstimator(k, universe)
    raise ValueError(f"unknown estimator {kind!r}; expected one of {ESTIMATORS}")


def load_estimator(state: EstimatorState | bytes):
    payload = _unwrap(state)
    magic = payload[:4]
    if magic == AmsEstimator.MAGIC:
        return AmsEstimator.from_payload(payload)
    if magic == ExactEstimator.MAGIC:
        return ExactEstimator.from_payload(payload)
    raise ValueError(f"unknown estimator state magic {magic!r}")


def segments_from_cuts(length: int, cuts: Iterable[int]) -> list[tuple[int, int]]:
    """Half-open ``[lo, hi)`` ranges split at the 0-based ``cuts``."""
    points = sorted({int(c) for c in cuts if 0 < int(c) < length})
    edges = [0, *points, length]
    return list(zip(edges[:-1], edges[1:]))


def estimator_run_segmented(
    stream,
    k: int,
    sample_count: int,
    seed: int,
    cuts: Sequence[int] = (),
    estimator: str = "ams",
    universe: int = 0,
) -> tuple[Fraction, int]:
    """Run one pass, serializing and reloading the state after every segment.

    ``cuts`` are the 0-based indices where a new segment (a new writer)
    begins. Returns the final estimate and the largest serialized state, in
    bits, over all handoffs. The final segment's handoff is the report to the
    referee, so an unsegmented run has exactly one handoff.
    """
    arr = _as_array(stream)
    if arr.size == 0:
        raise ValueError("stream must be nonempty")
    est = new_estimator(estimator, k, int(arr.size), sample_count, seed, universe)
    max_bits = 0
    for lo, hi in segments_from_cuts(int(arr.size), cuts):
        est.update_many(arr[lo:hi])
        state = est.state()
        max_bits = max(max_bits, state.size_bits)
        est = load_estimator(state)
    return est.estimate(), max_bits
