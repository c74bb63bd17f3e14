import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_params
from romlab.errors import DecompositionGap, NotMember, ProtocolAbort
from romlab.intervals import (
    CyclicInterval,
    Lemma1Report,
    SortedIntervals,
    block_touch_counts,
    cyclic_intersection_stats,
    decompose,
    intersection_stats,
    interval_members,
    interval_rank,
    sample_intervals,
    sort_or_abort,
    verify_lemma1,
)


def brute_stats(starts, w, n, cyclic=False):
    """Membership-count oracle: O(t^2 w)."""
    members = [{(a - 1 + j) % n + 1 if cyclic else a + j for j in range(w)} for a in starts]
    cover = {}
    for m in members:
        for p in m:
            cover[p] = cover.get(p, 0) + 1
    pairs = [(i + 1, j + 1) for i in range(len(members)) for j in range(i + 1, len(members))
             if members[i] & members[j]]
    return any(c >= 3 for c in cover.values()), pairs


def test_members_and_rank():
    iv = CyclicInterval(11, 3, 12)
    assert interval_members(iv) == [11, 12, 1]
    assert interval_rank(iv, 1) == 3
    assert iv.wraps and iv.end == 1
    assert interval_rank(CyclicInterval(3, 3, 12), 4) == 2
    with pytest.raises(NotMember):
        interval_rank(CyclicInterval(3, 3, 12), 7)


@given(st.integers(2, 60), st.data())
def test_cyclic_interval_membership(n, data):
    a = data.draw(st.integers(1, n))
    w = data.draw(st.integers(1, n))
    iv = CyclicInterval(a, w, n)
    members = iv.members()
    assert len(set(members)) == w
    assert all(iv.rank(j) == r for r, j in enumerate(members, start=1))
    assert iv.end == members[-1]
    if w < n:
        assert iv.wraps == (iv.end < a)


def test_wrapped_start_aborts():
    with pytest.raises(ProtocolAbort) as info:
        sort_or_abort([5, 11, 2], 3, 12)
    assert info.value.reason == "WrappedInterval"


def test_sorted_by_end():
    iv = sort_or_abort([7, 2], 3, 12)
    assert iv.starts.tolist() == [2, 7]
    assert iv.ends.tolist() == [4, 9]
    assert iv.draw_index.tolist() == [1, 0]


def test_ties_broken_by_draw_index():
    iv = SortedIntervals.from_starts([4, 2, 4], 3, 20)
    assert iv.starts.tolist() == [2, 4, 4]
    assert iv.draw_index.tolist() == [1, 0, 2]


def test_sample_intervals_is_deterministic(small_params):
    a = sample_intervals(small_params, 17)
    b = sample_intervals(small_params, 17)
    assert np.array_equal(a.starts, b.starts)
    assert np.all(np.diff(a.ends) >= 0)


@pytest.mark.parametrize("intervals, expected", [
    ([3, 4, 5], (True, 3, [(1, 2), (1, 3), (2, 3)])),
    ([2, 8], (False, 0, [])),
    ([3, 4, 8], (False, 1, [(1, 2)])),
])
def test_intersection_stats_examples(intervals, expected):
    st_ = intersection_stats(SortedIntervals.from_starts(intervals, 3, 12))
    assert (st_.triple_exists, st_.overlapping_pair_count, st_.pairs) == expected


def test_intersection_stats_exhaustive_small_cases():
    rng = np.random.default_rng(0)
    checked = 0
    for n in range(16, 201, 8):
        for t in range(2, 21):
            for w in {1, 2, max(1, n // (2 * t)), max(1, n // t)}:
                if w > n:
                    continue
                starts = rng.integers(1, n - w + 2, size=t)
                iv = SortedIntervals.from_starts(starts, w, n)
                got = intersection_stats(iv)
                triple, pairs = brute_stats(iv.starts.tolist(), w, n)
                assert got.triple_exists == triple
                assert got.pairs == pairs
                checked += 1
    assert checked > 1000


def test_cyclic_stats_match_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(2000):
        n = int(rng.integers(8, 120))
        t = int(rng.integers(1, 15))
        w = int(rng.integers(1, (n + 1) // 2 + 1))
        starts = rng.integers(1, n + 1, size=t)
        triple, pairs = cyclic_intersection_stats(starts, w, n)
        b_triple, b_pairs = brute_stats(starts.tolist(), w, n, cyclic=True)
        assert (triple, pairs) == (b_triple, len(b_pairs))


def test_block_touch_counts():
    # n = 12, w = 3: blocks [1,3] [4,6] [7,9] [10,12].
    assert block_touch_counts([2, 3, 3], 3, 12) == (2, 2)
    assert block_touch_counts([11], 3, 12) == (0, 0)
    assert block_touch_counts([11, 12, 1], 3, 12) == (1, 2)


def segs(dec):
    return {(s.label, s.index): (s.lo, s.hi, s.kind) for s in dec.segments if not s.empty}


def test_decompose_overlap():
    dec = decompose(SortedIntervals.from_starts([3, 4], 3, 12))
    assert segs(dec) == {
        ("A", 0): (1, 2, "easy"), ("B", 1): (3, 3, None), ("A", 1): (4, 5, "doubled"),
        ("B", 2): (6, 6, None), ("A", 2): (7, 12, "easy"),
    }


def test_decompose_shared_endpoint_is_doubled():
    dec = decompose(SortedIntervals.from_starts([3, 5], 3, 12))
    got = segs(dec)
    assert got[("A", 1)] == (5, 5, "doubled")
    assert got[("B", 1)] == (3, 4, None)
    assert got[("B", 2)] == (6, 7, None)


def test_decompose_disjoint():
    dec = decompose(SortedIntervals.from_starts([2, 8], 3, 12))
    got = segs(dec)
    assert got[("A", 1)] == (5, 7, "easy")
    assert got[("B", 1)] == (2, 4, None)
    assert got[("B", 2)] == (8, 10, None)


def test_identical_intervals_fully_doubled():
    dec = decompose(SortedIntervals.from_starts([4, 4], 3, 12))
    got = segs(dec)
    assert got[("A", 1)] == (4, 6, "doubled")
    assert ("B", 1) not in got and ("B", 2) not in got


def test_triple_overlap_is_a_gap():
    with pytest.raises(DecompositionGap):
        decompose(SortedIntervals.from_starts([3, 4, 5], 3, 12))


@settings(max_examples=300, deadline=None)
@given(st.integers(16, 200), st.data())
def test_decomposition_partitions_and_matches_definitions(n, data):
    t = data.draw(st.integers(2, 20))
    w = data.draw(st.integers(1, max(1, n // t)))
    starts = data.draw(st.lists(st.integers(1, n - w + 1), min_size=t, max_size=t))
    iv = SortedIntervals.from_starts(starts, w, n)
    if intersection_stats(iv).triple_exists:
        return
    dec = decompose(iv)
    cover = dec.coverage()[1:]
    assert np.all(cover == 1)
    members = [set(range(a, a + w)) for a in iv.starts.tolist()]
    for i in range(1, t + 1):
        prev = members[i - 2] if i > 1 else set()
        nxt = members[i] if i < t else set()
        assert set(dec.B(i).positions()) == members[i - 1] - prev - nxt
        if i < t and dec.A(i).kind == "doubled":
            assert set(dec.A(i).positions()) == members[i - 1] & members[i]
    # Only neighbours meet.
    for i in range(t):
        for j in range(i + 2, t):
            assert not members[i] & members[j]


def test_decomposition_over_many_seeds(small_params):
    completed = 0
    for seed in range(2000):
        try:
            iv = sample_intervals(small_params, seed)
        except ProtocolAbort:
            continue
        if intersection_stats(iv).triple_exists:
            continue
        dec = decompose(iv, small_params)
        assert np.all(dec.coverage()[1:] == 1)
        completed += 1
    assert completed > 1900


def test_lemma1_analytic_bounds():
    rep = verify_lemma1(10**6, 3, 0.05, 100, seed=0)
    assert rep.analytic_triple_bound == pytest.approx(0.02)
    assert rep.analytic_pair_bound == pytest.approx(2.0)
    assert (rep.t, rep.w, rep.pair_threshold) == (100, 50, 10.0)
    assert list(rep.csv_row()) == list(Lemma1Report.CSV_FIELDS)


def test_lemma1_tiny_width_never_triples():
    rep = verify_lemma1(10**6, 3, 0.001, 10_000, seed=2)
    assert rep.w == 1
    assert rep.empirical_triple_prob == 0


def test_lemma1_within_analytic_bounds():
    rep = verify_lemma1(10**5, 3, 0.1, 2000, seed=3, block_stats=True)
    for p in (rep.empirical_triple_prob, rep.empirical_pair_exceed_prob):
        assert 0 <= p <= 1
    se = math.sqrt(rep.analytic_triple_bound * (1 - rep.analytic_triple_bound) / rep.trials)
    assert rep.empirical_triple_prob <= rep.analytic_triple_bound + 3 * se
    assert rep.mean_overlap_pairs <= rep.analytic_pair_bound + 3 * rep.pair_mean_se
    # Block counts dominate the interval events they are used to bound.
    assert rep.mean_blocks_touched_3 >= 0
    assert rep.mean_blocks_touched_2 >= rep.mean_blocks_touched_3


def test_lemma1_requires_enough_trials():
    with pytest.raises(ValueError):
        verify_lemma1(10**6, 3, 0.05, 99, seed=0)


def test_abort_on_wrap_with_many_intervals():
    params = make_params(n=100, t=8, w=30)
    reasons = set()
    for seed in range(50):
        try:
            sample_intervals(params, seed)
        except ProtocolAbort as exc:
            reasons.add(exc.reason)
    assert reasons == {"WrappedInterval"}
