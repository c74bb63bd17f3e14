"""Width-``w`` cyclic intervals on ``[n]``, their overlap structure, the
A/B segment decomposition of ``[n]`` and a Monte-Carlo check of the
triple/pair overlap bounds.

Positions are 1-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from romlab.errors import DecompositionGap, NotMember, ProtocolAbort
from romlab.params import Params, ceil_snap, npow
from romlab.seeding import rng_for


@dataclass(frozen=True)
class CyclicInterval:
    start: int
    width: int
    n: int

    def __post_init__(self):
        if not 1 <= self.start <= self.n:
            raise ValueError(f"start {self.start} outside [1, {self.n}]")
        if not 1 <= self.width <= self.n:
            raise ValueError(f"width {self.width} outside [1, {self.n}]")

    @property
    def end(self) -> int:
        return (self.start + self.width - 2) % self.n + 1

    @property
    def wraps(self) -> bool:
        return self.start + self.width - 1 > self.n

    def members(self) -> list[int]:
        """Positions in traversal order, beginning at ``start``."""
        return [(self.start - 1 + j) % self.n + 1 for j in range(self.width)]

    def __contains__(self, j: int) -> bool:
        return 1 <= j <= self.n and (j - self.start) % self.n < self.width

    def rank(self, j: int) -> int:
        """1-based rank of ``j`` in traversal order."""
        if j not in self:
            raise NotMember(f"{j} is not in the interval starting at {self.start} (width {self.width})")
        return (j - self.start) % self.n + 1


def interval_members(interval: CyclicInterval) -> list[int]:
    return interval.members()


def interval_rank(interval: CyclicInterval, j: int) -> int:
    return interval.rank(j)


@dataclass(frozen=True)
class SortedIntervals:
    """Non-wrapping intervals ``I_1..I_t`` ordered by end point.

    Ties on the end are broken by start, then draw index; with a common
    width equal ends imply equal starts, so the draw index decides.
    """

    starts: np.ndarray
    width: int
    n: int
    draw_index: np.ndarray

    @property
    def t(self) -> int:
        return int(self.starts.size)

    @property
    def ends(self) -> np.ndarray:
        return self.starts + (self.width - 1)

    def interval(self, i: int) -> CyclicInterval:
        """The ``i``-th interval, 1-based."""
        return CyclicInterval(int(self.starts[i - 1]), self.width, self.n)

    @classmethod
    def from_starts(cls, starts, width: int, n: int) -> "SortedIntervals":
        starts = np.asarray(starts, dtype=np.int64)
        ends = (starts + width - 2) % n + 1
        draw = np.arange(starts.size)
        order = np.lexsort((draw, starts, ends))
        return cls(starts=starts[order], width=int(width), n=int(n), draw_index=draw[order])


def sample_intervals(params: Params, seed: int) -> SortedIntervals:
    """Draw ``t`` starts uniformly from ``[n]`` and sort by end.

    Raises ``ProtocolAbort("WrappedInterval")`` when the smallest end is
    below ``w``, which happens exactly when some interval wraps.
    """
    rng = rng_for(seed, "intervals")
    starts = rng.integers(1, params.n + 1, size=params.t, dtype=np.int64)
    return sort_or_abort(starts, params.w, params.n)


def sort_or_abort(starts, w: int, n: int) -> SortedIntervals:
    starts = np.asarray(starts, dtype=np.int64)
    b1 = int(((starts + w - 2) % n + 1).min())
    if b1 < w:
        raise ProtocolAbort(ProtocolAbort.WRAPPED, f"b_1 = {b1} < w = {w}")
    return SortedIntervals.from_starts(starts, w, n)


@dataclass(frozen=True)
class IntersectionStats:
    triple_exists: bool
    overlapping_pair_count: int
    pairs: list[tuple[int, int]] = field(repr=False)


def intersection_stats(intervals: SortedIntervals) -> IntersectionStats:
    """Triple-overlap flag and all intersecting pairs (1-based, ``i < j``).

    With equal widths and sorting by end the starts are sorted too, so
    ``I_j`` (``j > i``) meets ``I_i`` iff ``a_j <= b_i``.
    """
    a = intervals.starts
    b = intervals.ends
    t = a.size
    hi = np.searchsorted(a, b, side="right")
    idx = np.arange(t)
    partners = hi - idx - 1
    triple = bool(np.any(partners >= 2))
    count = int(partners.sum())
    first = np.repeat(idx, partners)
    # Offsets 1..partners[i] for each i, flattened.
    offsets = np.arange(count) - np.repeat(np.cumsum(partners) - partners, partners) + 1
    second = first + offsets
    pairs = list(zip((first + 1).tolist(), (second + 1).tolist()))
    return IntersectionStats(triple, count, pairs)


@dataclass(frozen=True)
class Segment:
    """A plain range ``[lo, hi]``; empty when ``hi < lo``.

    ``label`` is ``"A"`` or ``"B"``; ``index`` the subscript; ``kind`` is
    ``"easy"`` or ``"doubled"`` for A segments and ``None`` for B segments.
    """

    label: str
    index: int
    lo: int
    hi: int
    kind: str | None = None

    @property
    def size(self) -> int:
        return max(0, self.hi - self.lo + 1)

    @property
    def empty(self) -> bool:
        return self.hi < self.lo

    def positions(self) -> range:
        return range(self.lo, self.hi + 1)


@dataclass(frozen=True)
class Decomposition:
    """``A_0, B_1, A_1, ..., B_t, A_t`` in order."""

    n: int
    t: int
    segments: list[Segment]

    def A(self, i: int) -> Segment:
        return self.segments[2 * i]

    def B(self, i: int) -> Segment:
        return self.segments[2 * i - 1]

    def coverage(self) -> np.ndarray:
        """How many segments cover each position; index 0 unused."""
        diff = np.zeros(self.n + 2, dtype=np.int64)
        for seg in self.segments:
            if not seg.empty:
                diff[seg.lo] += 1
                diff[seg.hi + 1] -= 1
        return np.cumsum(diff)[: self.n + 1]


def decompose(intervals: SortedIntervals, params: Params | None = None) -> Decomposition:
    """Split ``[n]`` into easy/doubled A segments and private B segments.

    ``A_i`` is doubled when ``b_i >= a_{i+1}`` and then equals
    ``[a_{i+1}, b_i]``; otherwise it is the (possibly empty) gap
    ``[b_i + 1, a_{i+1} - 1]``. Sentinels: ``b_0 = 0``, ``a_{t+1} = n + 1``.
    """
    n = intervals.n if params is None else params.n
    t = intervals.t
    a = [0, *intervals.starts.tolist(), n + 1]
    b = [0, *intervals.ends.tolist(), n + 1]
    segments: list[Segment] = []
    for i in range(t + 1):
        if i > 0:
            # B_i = I_i minus both neighbours; only neighbours can meet I_i.
            lo = max(a[i], b[i - 1] + 1)
            hi = min(b[i], a[i + 1] - 1)
            segments.append(Segment("B", i, lo, hi))
        if b[i] >= a[i + 1]:
            segments.append(Segment("A", i, a[i + 1], b[i], "doubled"))
        else:
            segments.append(Segment("A", i, b[i] + 1, a[i + 1] - 1, "easy"))
    dec = Decomposition(n, t, segments)
    _validate(dec, intervals)
    return dec


def _validate(dec: Decomposition, intervals: SortedIntervals) -> None:
    cov = dec.coverage()[1:]
    if cov.size and (cov.min() != 1 or cov.max() != 1):
        gaps = np.flatnonzero(cov == 0) + 1
        doubles = np.flatnonzero(cov > 1) + 1
        raise DecompositionGap(
            f"{gaps.size} uncovered positions (first {gaps[:5].tolist()}), "
            f"{doubles.size} multiply covered (first {doubles[:5].tolist()})"
        )
    a, b = intervals.starts, intervals.ends
    if a.size >= 3 and np.any(a[2:] <= b[:-2]):
        raise DecompositionGap("non-consecutive intervals intersect")
    for i in range(1, dec.t):
        seg = dec.A(i)
        if seg.kind == "doubled" and (seg.lo, seg.hi) != (int(a[i]), int(b[i - 1])):
            raise DecompositionGap(f"doubled A_{i} differs from I_{i} ∩ I_{i + 1}")


# Cyclic statistics (intervals may wrap).


def cyclic_intersection_stats(starts, w: int, n: int) -> tuple[bool, int]:
    """(some position in >= 3 intervals, number of intersecting pairs).

    Two arcs meet iff one starts inside the other. Requires ``2w - 1 <= n``
    so an intersecting pair is seen from exactly one side.
    """
    if 2 * w - 1 > n:
        raise ValueError("cyclic stats need 2w - 1 <= n")
    s = np.sort(np.asarray(starts, dtype=np.int64))
    t = s.size
    if t < 2:
        return False, 0
    doubled = np.concatenate([s, s + n])
    hi = np.searchsorted(doubled, s + (w - 1), side="right")
    ahead = np.minimum(hi - np.arange(t) - 1, t - 1)
    # A point covered by 3 arcs is covered at some arc start; the arc starting
    # at s_i covers the starts of its successors within w - 1.
    return bool(np.any(ahead >= 2)), int(ahead.sum())


def block_touch_counts(starts, w: int, n: int) -> tuple[int, int]:
    """Blocks ``J_i = [1 + (i-1)w, iw]`` touched by >= 3 and >= 2 intervals.

    The last block may be short when ``w`` does not divide ``n``.
    """
    num_blocks = -(-n // w)
    touched = np.zeros(num_blocks, dtype=np.int64)
    for a in np.asarray(starts, dtype=np.int64).tolist():
        first = (a - 1) // w
        last_pos = (a + w - 2) % n + 1
        last = (last_pos - 1) // w
        if a + w - 1 <= n:
            blocks = range(first, last + 1)
        else:
            blocks = [*range(first, num_blocks), *range(0, last + 1)]
        for blk in set(blocks):
            touched[blk] += 1
    return int(np.sum(touched >= 3)), int(np.sum(touched >= 2))


@dataclass(frozen=True)
class Lemma1Report:
    n: int
    k: int
    c1: float
    t: int
    w: int
    trials: int
    empirical_triple_prob: float
    mean_overlap_pairs: float
    empirical_pair_exceed_prob: float
    pair_threshold: float
    analytic_triple_bound: float
    analytic_pair_bound: float
    # Block statistics from the counting argument, averaged over trials.
    mean_blocks_touched_3: float = 0.0
    mean_blocks_touched_2: float = 0.0
    pair_count_std: float = 0.0

    CSV_FIELDS = ("n", "k", "c1", "trials", "empirical_triple_prob", "analytic_triple_bound",
                  "mean_overlap_pairs", "analytic_pair_bound", "empirical_pair_exceed_prob")

    def csv_row(self) -> dict:
        return {f: getattr(self, f) for f in self.CSV_FIELDS}

    @property
    def triple_se(self) -> float:
        p = self.empirical_triple_prob
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def pair_mean_se(self) -> float:
        return self.pair_count_std / math.sqrt(self.trials)


def verify_lemma1(n: int, k: int, c1: float, trials: int, seed: int,
                  block_stats: bool = False) -> Lemma1Report:
    """Sample ``t = ceil(n^(1/k))`` uniform cyclic intervals of width
    ``w = ceil(c1 n^(1 - 3/(2k)))`` per trial and record triple overlaps and
    intersecting-pair counts. Trial ``i`` uses sub-seed ``(seed, "lemma1", i)``.
    """
    if trials < 100:
        raise ValueError("trials must be >= 100")
    t = ceil_snap(npow(n, 1.0 / k))
    w = ceil_snap(c1 * npow(n, 1.0 - 3.0 / (2 * k)))
    threshold = npow(n, 1.0 / (2 * k))
    triples = 0
    exceed = 0
    pair_counts = np.empty(trials, dtype=np.int64)
    touched3 = touched2 = 0
    for trial in range(trials):
        starts = rng_for(seed, "lemma1", trial).integers(1, n + 1, size=t, dtype=np.int64)
        triple, pairs = cyclic_intersection_stats(starts, w, n)
        triples += triple
        exceed += pairs > threshold
        pair_counts[trial] = pairs
        if block_stats:
            b3, b2 = block_touch_counts(starts, w, n)
            touched3 += b3
            touched2 += b2
    return Lemma1Report(
        n=n, k=k, c1=c1, t=t, w=w, trials=trials,
        empirical_triple_prob=triples / trials,
        mean_overlap_pairs=float(pair_counts.mean()),
        empirical_pair_exceed_prob=exceed / trials,
        pair_threshold=threshold,
        analytic_triple_bound=8 * c1**2,
        analytic_pair_bound=4 * c1 * threshold,
        mean_blocks_touched_3=touched3 / trials,
        mean_blocks_touched_2=touched2 / trials,
        pair_count_std=float(pair_counts.std(ddof=1)),
    )
