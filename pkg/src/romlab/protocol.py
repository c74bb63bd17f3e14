"""The players-to-stream reduction.

``t`` players each hold one set of a promise disjointness instance. Shared
random intervals place every player's (permuted, relabelled) set into a
window of the ``n``-position stream; gaps are padded with fresh fillers and
overlaps between neighbouring windows are split block by block with shared
bits. The players then simulate a one-pass F_k estimator over the stream,
handing its state to the next writer at each writer change, and answer YES
when the estimate exceeds ``2n``.

Seeds: public randomness uses sub-seeds ``(seed, "intervals")``,
``(seed, "sigma")`` and ``(seed, "r")``; player ``i`` permutes its set with
``(seed, "player", i)`` and flips its keep/drop coins with
``(seed, "coins", i)``; the estimator uses ``(seed, "estimator")``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from romlab.disjointness import DisjInstance, Kind
from romlab.errors import AssemblyIncomplete, ProtocolAbort
from romlab.estimators import estimator_run_segmented
from romlab.intervals import Decomposition, SortedIntervals, decompose, intersection_stats, sample_intervals
from romlab.moments import exact_fk
from romlab.params import Params
from romlab.seeding import rng_for, sub_seed


@dataclass(frozen=True)
class PublicRandomness:
    intervals: SortedIntervals
    sigma: np.ndarray  # sigma[x] for x in [1, 2n]; sigma[0] unused
    r: np.ndarray  # one bit per block of width w2
    overlapping_pairs: int = 0


def draw_public_randomness(params: Params, seed: int) -> PublicRandomness:
    """Raises :class:`ProtocolAbort` on a wrapped interval or a triple overlap."""
    intervals = sample_intervals(params, seed)
    stats = intersection_stats(intervals)
    if stats.triple_exists:
        raise ProtocolAbort(ProtocolAbort.TRIPLE, f"{stats.overlapping_pair_count} overlapping pairs")
    sigma = np.zeros(2 * params.n + 1, dtype=np.int64)
    sigma[1:] = rng_for(seed, "sigma").permutation(2 * params.n) + 1
    r = rng_for(seed, "r").integers(0, 2, size=params.num_blocks, dtype=np.uint8)
    return PublicRandomness(intervals, sigma, r, stats.overlapping_pair_count)


@dataclass(frozen=True)
class PlayerString:
    player: int
    seq: np.ndarray  # seq[l - 1] is s^i_l


def build_player_string(instance: DisjInstance, i: int, sigma: np.ndarray, seed: int) -> PlayerString:
    """Player ``i``'s set in a private uniformly random order, mapped through sigma."""
    s = np.asarray(instance.sets[i - 1], dtype=np.int64)
    order = rng_for(seed, "player", i).permutation(s)
    return PlayerString(i, sigma[order])


def player_coins(i: int, w: int, seed: int) -> np.ndarray:
    """Player ``i``'s keep/drop coin for each rank ``1..w`` (True keeps the set element)."""
    return rng_for(seed, "coins", i).integers(0, 2, size=w, dtype=np.uint8).astype(bool)


class Filler(NamedTuple):
    pass


class SetElement(NamedTuple):
    player: int
    rank: int


@dataclass(frozen=True)
class StreamAssembly:
    elements: np.ndarray  # length n, values in [1, 2n]
    writer: np.ndarray  # length n, values in [1, t]
    source_player: np.ndarray  # 0 marks a filler
    source_rank: np.ndarray
    decomposition: Decomposition

    @property
    def n(self) -> int:
        return int(self.elements.size)

    def provenance(self, j: int) -> Filler | SetElement:
        """Where position ``j`` (1-based) came from."""
        p = int(self.source_player[j - 1])
        return Filler() if p == 0 else SetElement(p, int(self.source_rank[j - 1]))

    def writer_changes(self) -> np.ndarray:
        """0-based indices where a new writer takes over."""
        return np.flatnonzero(self.writer[1:] != self.writer[:-1]) + 1


def assemble_stream(instance: DisjInstance, randomness: PublicRandomness, params: Params,
                    seed: int) -> StreamAssembly:
    """Fill every position of ``[n]`` by the four placement rules.

    * easy ``A_{i-1}``: player ``i`` writes filler ``sigma(n + j)``; the last
      gap ``A_t`` belongs to player ``t``;
    * ``B_i``: player ``i`` writes ``s^i_l`` (``j`` the ``l``-th member of
      ``I_i``) or, on a private coin, the filler;
    * doubled ``A_i = I_i ∩ I_{i+1}``, position in block ``m``: ``r_m = 1``
      gives the position to player ``i`` (``s^i_l``), ``r_m = 0`` to player
      ``i + 1`` (``s^{i+1}_l``).
    """
    n, t, w = params.n, params.t, params.w
    if instance.t != t or instance.w != w:
        raise ValueError(f"instance has t={instance.t}, w={instance.w}; params expect t={t}, w={w}")
    iv = randomness.intervals
    dec = decompose(iv, params)
    sigma = randomness.sigma
    strings = np.vstack([build_player_string(instance, i, sigma, seed).seq for i in range(1, t + 1)])
    starts = iv.starts

    elements = np.zeros(n, dtype=np.int64)
    writer = np.zeros(n, dtype=np.int32)
    src_player = np.zeros(n, dtype=np.int32)
    src_rank = np.zeros(n, dtype=np.int32)
    fill = sigma[n + 1: 2 * n + 1]  # fill[j - 1] = sigma(n + j)

    for seg in dec.segments:
        if seg.empty:
            continue
        lo, hi = seg.lo - 1, seg.hi  # 0-based half-open slice
        if seg.label == "B":
            i = seg.index
            ranks = np.arange(seg.lo, seg.hi + 1) - starts[i - 1] + 1
            keep = player_coins(i, w, seed)[ranks - 1]
            writer[lo:hi] = i
            elements[lo:hi] = np.where(keep, strings[i - 1, ranks - 1], fill[lo:hi])
            src_player[lo:hi] = np.where(keep, i, 0)
            src_rank[lo:hi] = np.where(keep, ranks, 0)
        elif seg.kind == "easy":
            writer[lo:hi] = min(seg.index + 1, t)
            elements[lo:hi] = fill[lo:hi]
        else:
            i = seg.index
            pos = np.arange(seg.lo, seg.hi + 1)
            bits = randomness.r[(pos - 1) // params.w2]
            who = np.where(bits == 1, i, i + 1)
            ranks = pos - starts[who - 1] + 1
            writer[lo:hi] = who
            elements[lo:hi] = strings[who - 1, ranks - 1]
            src_player[lo:hi] = who
            src_rank[lo:hi] = ranks

    missing = np.flatnonzero(writer == 0)
    if missing.size:
        raise AssemblyIncomplete(f"{missing.size} positions unassigned (first {(missing[:5] + 1).tolist()})")
    return StreamAssembly(elements, writer, src_player, src_rank, dec)


def count_messages(writer) -> int:
    """One message per writer change, plus the final report."""
    writer = np.asarray(writer)
    return 1 + int(np.count_nonzero(writer[1:] != writer[:-1]))


def message_bound(params: Params, overlapping_pairs: int) -> int:
    return 4 * (params.t + 1) + overlapping_pairs * (-(-params.w // params.w2) + 2)


def decide(estimate, n: int) -> Kind:
    return Kind.YES if estimate > 2 * n else Kind.NO


@dataclass(frozen=True)
class ProtocolOutcome:
    seed: int
    kind: Kind
    decision: Kind | None
    estimate: float | None
    exact_fk: int | None
    messages: int
    max_state_bits: int
    reference_budget: float
    aborted: str | None = None
    witness_multiplicity: int | None = None
    overlapping_pairs: int | None = None

    @property
    def total_bits(self) -> int:
        return self.messages * self.max_state_bits

    @property
    def correct(self) -> bool:
        return self.decision is not None and self.decision == self.kind

    CSV_FIELDS = ("seed", "kind", "decision", "correct", "aborted", "abort_reason", "exact_fk",
                  "estimate", "messages", "max_state_bits", "total_bits", "reference_budget")

    def csv_row(self) -> dict:
        return {
            "seed": self.seed,
            "kind": self.kind.value,
            "decision": self.decision.value if self.decision else "",
            "correct": int(self.correct),
            "aborted": int(self.aborted is not None),
            "abort_reason": self.aborted or "",
            "exact_fk": "" if self.exact_fk is None else self.exact_fk,
            "estimate": "" if self.estimate is None else repr(self.estimate),
            "messages": self.messages,
            "max_state_bits": self.max_state_bits,
            "total_bits": self.total_bits,
            "reference_budget": repr(self.reference_budget),
        }


def reference_budget(params: Params) -> float:
    """``N / (t log2 N)``, the black-box communication reference; reported only."""
    return params.N / (params.t * math.log2(params.N))


def run_protocol(instance: DisjInstance, params: Params, estimator: str = "exact", seed: int = 0,
                 sample_count: int = 4096, keep_assembly: bool = False):
    """Run the reduction end to end.

    Returns a :class:`ProtocolOutcome`; with ``keep_assembly`` returns
    ``(outcome, assembly)`` where the assembly is ``None`` on abort.
    """
    budget = reference_budget(params)
    try:
        randomness = draw_public_randomness(params, seed)
    except ProtocolAbort as exc:
        outcome = ProtocolOutcome(seed=seed, kind=instance.kind, decision=None, estimate=None,
                                  exact_fk=None, messages=0, max_state_bits=0,
                                  reference_budget=budget, aborted=exc.reason)
        return (outcome, None) if keep_assembly else outcome
    assembly = assemble_stream(instance, randomness, params, seed)
    cuts = assembly.writer_changes()
    estimate, max_bits = estimator_run_segmented(
        assembly.elements, params.k, sample_count, sub_seed(seed, "estimator"),
        cuts, estimator=estimator, universe=2 * params.n,
    )
    multiplicity = None
    if instance.witness is not None:
        multiplicity = int(np.count_nonzero(assembly.elements == randomness.sigma[instance.witness]))
    outcome = ProtocolOutcome(
        seed=seed, kind=instance.kind, decision=decide(estimate, params.n),
        estimate=float(estimate), exact_fk=exact_fk(assembly.elements, params.k),
        messages=count_messages(assembly.writer), max_state_bits=max_bits,
        reference_budget=budget, witness_multiplicity=multiplicity,
        overlapping_pairs=randomness.overlapping_pairs,
    )
    return (outcome, assembly) if keep_assembly else outcome


STREAM_MAGIC = b"ROML"
STREAM_VERSION = 1
_STREAM_HEAD = struct.Struct("<4sIII")


def export_stream(path, elements, k: int) -> None:
    """Binary stream file: 16-byte header (magic ``ROML``, u32 version, u32 n,
    u32 k) then ``n`` little-endian u32 element ids."""
    elements = np.asarray(elements)
    data = _STREAM_HEAD.pack(STREAM_MAGIC, STREAM_VERSION, elements.size, k)
    Path(path).write_bytes(data + elements.astype("<u4").tobytes())


def read_stream(path) -> tuple[np.ndarray, int]:
    raw = Path(path).read_bytes()
    magic, version, n, k = _STREAM_HEAD.unpack_from(raw, 0)
    if magic != STREAM_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != STREAM_VERSION:
        raise ValueError(f"unsupported stream version {version}")
    elements = np.frombuffer(raw, dtype="<u4", offset=_STREAM_HEAD.size)
    if elements.size != n:
        raise ValueError(f"header says {n} elements, file has {elements.size}")
    return elements.astype(np.int64), k
