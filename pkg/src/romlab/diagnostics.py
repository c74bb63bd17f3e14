"""Spacing of random subsets and tests of how random the assembled stream's
order looks from the heavy element's point of view."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from romlab.disjointness import Kind, gen_instance_for
from romlab.errors import ProtocolAbort
from romlab.params import Params, ceil_snap, npow
from romlab.protocol import StreamAssembly, assemble_stream, draw_public_randomness
from romlab.seeding import rng_for, sub_seed

ALPHA = 0.01


def min_pairwise_gap(positions, n: int) -> int:
    """Smallest ``|j - i|`` over distinct members (linear, not cyclic).

    A single position has no pairs; ``n`` is returned as a vacuous maximum.
    """
    s = np.sort(np.asarray(positions, dtype=np.int64))
    if s.size == 0:
        raise ValueError("need at least one position")
    if s.size == 1:
        return int(n)
    return int(np.diff(s).min())


@dataclass(frozen=True)
class GapReport:
    n: int
    k: int
    c2: float
    subset_size: int
    trials: int
    threshold: int
    empirical_fail_prob: float
    expected_close_pairs: float

    CSV_FIELDS = ("n", "k", "c2", "subset_size", "trials", "threshold",
                  "empirical_fail_prob", "expected_close_pairs")

    def csv_row(self) -> dict:
        return {f: getattr(self, f) for f in self.CSV_FIELDS}

    @property
    def fail_se(self) -> float:
        p = self.empirical_fail_prob
        return math.sqrt(p * (1 - p) / self.trials)


def verify_lemma2(n: int, k: int, c2: float, trials: int, seed: int) -> GapReport:
    """Frequency with which a uniform ``ceil(n^(1/k))``-subset of ``[n]`` has
    two members closer than ``ceil(c2 n^(1 - 2/k))``."""
    if trials < 100:
        raise ValueError("trials must be >= 100")
    size = ceil_snap(npow(n, 1.0 / k))
    if size < 2:
        raise ValueError("subset size ceil(n^(1/k)) must be >= 2")
    threshold = ceil_snap(c2 * npow(n, 1.0 - 2.0 / k))
    fails = 0
    for trial in range(trials):
        subset = rng_for(seed, "lemma2", trial).choice(n, size=size, replace=False) + 1
        fails += min_pairwise_gap(subset, n) < threshold
    return GapReport(
        n=n, k=k, c2=c2, subset_size=size, trials=trials, threshold=threshold,
        empirical_fail_prob=fails / trials,
        expected_close_pairs=math.comb(size, 2) * (2 * threshold) / n,
    )


def heavy_positions(assembly: StreamAssembly, witness: int | None, sigma: np.ndarray) -> list[int]:
    """1-based positions holding ``sigma(witness)``, ascending."""
    if witness is None:
        return []
    return (np.flatnonzero(assembly.elements == sigma[witness]) + 1).tolist()


def thinned_uniform_sample(t: int, n: int, seed: int) -> list[int]:
    """``t`` distinct uniform positions, each kept independently with probability 1/2."""
    if t > n:
        raise ValueError(f"t = {t} exceeds n = {n}")
    rng = rng_for(seed, "thinned")
    picked = rng.choice(n, size=t, replace=False) + 1
    keep = rng.integers(0, 2, size=t).astype(bool)
    return np.sort(picked[keep]).tolist()


def binomial_chisquare(counts, t: int, min_expected: float = 5.0) -> tuple[float, float, int]:
    """Chi-square fit of integer ``counts`` to Binomial(t, 1/2).

    Outcomes are pooled from both tails inward until every bin expects at
    least ``min_expected``. Returns ``(statistic, p_value, bins)``.
    """
    counts = np.asarray(counts, dtype=np.int64)
    total = counts.size
    pmf = stats.binom.pmf(np.arange(t + 1), t, 0.5)
    observed = np.bincount(np.clip(counts, 0, t), minlength=t + 1).astype(float)
    edges = _pool_bins(pmf * total, min_expected)
    obs = np.array([observed[a:b].sum() for a, b in edges])
    exp = np.array([pmf[a:b].sum() for a, b in edges]) * total
    if len(edges) < 2:
        return 0.0, 1.0, len(edges)
    stat = float(((obs - exp) ** 2 / exp).sum())
    return stat, float(stats.chi2.sf(stat, len(edges) - 1)), len(edges)


def _pool_bins(expected: np.ndarray, min_expected: float) -> list[tuple[int, int]]:
    size = expected.size
    lo = 0
    acc = expected[0]
    while lo + 1 < size and acc < min_expected:
        lo += 1
        acc += expected[lo]
    hi = size - 1
    acc = expected[hi]
    while hi - 1 > lo and acc < min_expected:
        hi -= 1
        acc += expected[hi]
    edges = [(0, lo + 1)]
    edges += [(j, j + 1) for j in range(lo + 1, hi)]
    if hi > lo:
        edges.append((hi, size))
    return edges


@dataclass(frozen=True)
class UniformityReport:
    batches: int
    completed: int
    aborted: int
    t: int
    mean_survivors: float
    chi2_stat: float
    chi2_pvalue: float
    chi2_pass: bool
    ks_stat: float
    ks_pvalue: float
    ks_pass: bool
    spacing_freq: float

    CSV_FIELDS = ("batches", "completed", "aborted", "t", "mean_survivors", "chi2_stat",
                  "chi2_pvalue", "chi2_pass", "ks_stat", "ks_pvalue", "ks_pass", "spacing_freq")

    def csv_row(self) -> dict:
        row = {f: getattr(self, f) for f in self.CSV_FIELDS}
        row["chi2_pass"] = int(self.chi2_pass)
        row["ks_pass"] = int(self.ks_pass)
        return row


def order_uniformity_test(params: Params, batches: int, seed: int, kind: Kind = Kind.YES,
                          alpha: float = ALPHA) -> UniformityReport:
    """Assemble ``batches`` YES streams and compare the witness's surviving
    placements with the thinned-uniform model.

    (a) survivor count vs Binomial(t, 1/2), chi-square; (b) pooled heavy
    positions vs pooled thinned-uniform positions, two-sample KS; plus the
    frequency with which all heavy positions are at least ``w2`` apart.
    Aborted batches are counted and skipped.
    """
    if batches < 30:
        raise ValueError("batches must be >= 30")
    kind = Kind.parse(kind)
    survivors: list[int] = []
    heavy_pool: list[int] = []
    model_pool: list[int] = []
    spaced = 0
    aborted = 0
    for b in range(batches):
        run_seed = sub_seed(seed, "diag-protocol", b)
        try:
            randomness = draw_public_randomness(params, run_seed)
        except ProtocolAbort:
            aborted += 1
            continue
        instance = gen_instance_for(params, kind, sub_seed(seed, "diag-instance", b))
        assembly = assemble_stream(instance, randomness, params, run_seed)
        heavy = heavy_positions(assembly, instance.witness, randomness.sigma)
        survivors.append(len(heavy))
        heavy_pool.extend(heavy)
        model_pool.extend(thinned_uniform_sample(params.t, params.n, sub_seed(seed, "diag-model", b)))
        if len(heavy) < 2 or min_pairwise_gap(heavy, params.n) >= params.w2:
            spaced += 1
    completed = len(survivors)
    if completed == 0:
        nan = float("nan")
        return UniformityReport(batches, 0, aborted, params.t, nan, nan, nan, False, nan, nan, False, nan)
    chi2_stat, chi2_p, _ = binomial_chisquare(survivors, params.t)
    if heavy_pool and model_pool:
        ks = stats.ks_2samp(heavy_pool, model_pool)
        ks_stat, ks_p = float(ks.statistic), float(ks.pvalue)
    else:
        ks_stat, ks_p = float("nan"), float("nan")
    return UniformityReport(
        batches=batches, completed=completed, aborted=aborted, t=params.t,
        mean_survivors=float(np.mean(survivors)),
        chi2_stat=chi2_stat, chi2_pvalue=chi2_p, chi2_pass=chi2_p >= alpha,
        ks_stat=ks_stat, ks_pvalue=ks_p, ks_pass=bool(ks_p >= alpha),
        spacing_freq=spaced / completed,
    )
