import numpy as np
import pytest

from conftest import make_params
from romlab.disjointness import DisjInstance, Kind, gen_instance_for
from romlab.errors import AssemblyIncomplete, ProtocolAbort
from romlab.estimators import estimator_run_segmented
from romlab.intervals import SortedIntervals
from romlab.moments import exact_fk
from romlab.protocol import (
    Filler,
    PublicRandomness,
    SetElement,
    assemble_stream,
    build_player_string,
    count_messages,
    decide,
    draw_public_randomness,
    export_stream,
    message_bound,
    player_coins,
    read_stream,
    reference_budget,
    run_protocol,
)


def micro(r_bits, kind=Kind.NO):
    """n = 12, t = 2, w = 3, intervals [3,5] and [4,6], sigma the identity."""
    params = make_params(n=12, t=2, w=3)
    sets = ([1, 2, 3], [4, 5, 6]) if kind is Kind.NO else ([1, 2, 3], [1, 5, 6])
    inst = DisjInstance(N=12, t=2, w=3, kind=kind, sets=tuple(np.array(s) for s in sets),
                        witness=1 if kind is Kind.YES else None)
    sigma = np.arange(25, dtype=np.int64)
    r = np.zeros(12, dtype=np.uint8)
    r[3], r[4] = r_bits
    rand = PublicRandomness(SortedIntervals.from_starts([3, 4], 3, 12), sigma, r)
    return params, inst, rand


@pytest.mark.parametrize("r_bits", [(1, 0), (0, 1), (1, 1), (0, 0)])
def test_micro_assembly_follows_each_rule(r_bits):
    params, inst, rand = micro(r_bits)
    seed = 5
    asm = assemble_stream(inst, rand, params, seed)
    s1 = build_player_string(inst, 1, rand.sigma, seed).seq
    s2 = build_player_string(inst, 2, rand.sigma, seed).seq
    coins1, coins2 = player_coins(1, 3, seed), player_coins(2, 3, seed)
    # Leading gap A_0 = [1, 2]: player 1 writes fillers sigma(n + j).
    for j in (1, 2):
        assert (asm.elements[j - 1], asm.writer[j - 1], asm.provenance(j)) == (12 + j, 1, Filler())
    # B_1 = {3}: rank 1 of I_1, kept or replaced on player 1's coin.
    assert asm.writer[2] == 1
    if coins1[0]:
        assert (asm.elements[2], asm.provenance(3)) == (s1[0], SetElement(1, 1))
    else:
        assert (asm.elements[2], asm.provenance(3)) == (15, Filler())
    # Doubled A_1 = {4, 5}: r_m = 1 -> player 1, r_m = 0 -> player 2; both at rank 2 / 1 resp.
    for j, bit in zip((4, 5), r_bits):
        who = 1 if bit else 2
        rank = j - (3 if who == 1 else 4) + 1
        seq = s1 if who == 1 else s2
        assert asm.writer[j - 1] == who
        assert asm.elements[j - 1] == seq[rank - 1]
        assert asm.provenance(j) == SetElement(who, rank)
    # B_2 = {6}: rank 3 of I_2.
    assert asm.writer[5] == 2
    expected = s2[2] if coins2[2] else 18
    assert asm.elements[5] == expected
    # Trailing gap A_2 = [7, 12] belongs to player t.
    assert asm.writer[6:].tolist() == [2] * 6
    assert asm.elements[6:].tolist() == list(range(19, 25))
    assert count_messages(asm.writer) == 1 + len(asm.writer_changes())


def test_micro_no_instance_is_all_distinct():
    params, inst, rand = micro((1, 0))
    asm = assemble_stream(inst, rand, params, 3)
    assert len(set(asm.elements.tolist())) == 12
    assert exact_fk(asm.elements, 3) == 12


def test_micro_messages_follow_writer_runs():
    params, inst, rand = micro((1, 0))
    asm = assemble_stream(inst, rand, params, 0)
    assert asm.writer.tolist() == [1] * 4 + [2] * 8
    assert count_messages(asm.writer) == 2
    params, inst, rand = micro((0, 1))
    asm = assemble_stream(inst, rand, params, 0)
    assert asm.writer.tolist()[:6] == [1, 1, 1, 2, 1, 2]
    assert count_messages(asm.writer) == 4


def test_assembly_rejects_mismatched_instance():
    params, inst, rand = micro((1, 0))
    other = DisjInstance(N=12, t=2, w=2, kind=Kind.NO, sets=(np.array([1, 2]), np.array([3, 4])))
    with pytest.raises(ValueError):
        assemble_stream(other, rand, params, 0)


def test_player_string_order_is_uniform():
    inst = DisjInstance(N=4, t=2, w=2, kind=Kind.NO, sets=(np.array([1, 2]), np.array([3, 4])))
    sigma = np.arange(9, dtype=np.int64)
    first = sum(build_player_string(inst, 1, sigma, seed).seq[0] == 1 for seed in range(10_000))
    # Binomial(10^4, 1/2): sd 50.
    assert abs(first - 5000) < 250


def test_player_string_is_sigma_of_set():
    inst = DisjInstance(N=6, t=2, w=3, kind=Kind.NO, sets=(np.array([1, 2, 3]), np.array([4, 5, 6])))
    sigma = np.array([0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120])
    seq = build_player_string(inst, 2, sigma, 1).seq
    assert sorted(seq.tolist()) == [40, 50, 60]


def test_count_messages_and_decide():
    assert count_messages([1, 1, 1]) == 1
    assert count_messages([1, 2, 1, 2]) == 4
    assert count_messages([1, 1, 2, 2, 3]) == 3
    assert decide(2001, 1000) is Kind.YES
    assert decide(2000, 1000) is Kind.NO
    assert decide(1000, 1000) is Kind.NO


def test_message_bound_formula():
    params = make_params(n=1000, t=10, w=25, w2=4)
    assert message_bound(params, 0) == 44
    assert message_bound(params, 3) == 44 + 3 * (7 + 2)


def test_wrapped_interval_aborts():
    params = make_params(n=100, t=8, w=30)
    reasons = []
    for seed in range(200):
        try:
            draw_public_randomness(params, seed)
            reasons.append(None)
        except ProtocolAbort as exc:
            reasons.append(exc.reason)
    assert "WrappedInterval" in reasons
    seed = reasons.index("WrappedInterval")
    inst = DisjInstance(N=100, t=8, w=30, kind=Kind.NO, sets=tuple(np.arange(1, 31) for _ in range(8)))
    out = run_protocol(inst, params, seed=seed)
    assert out.aborted == "WrappedInterval"
    assert out.decision is None and not out.correct and out.messages == 0


def test_protocol_is_deterministic(small_params):
    inst = gen_instance_for(small_params, Kind.YES, 4)
    a = run_protocol(inst, small_params, seed=11)
    b = run_protocol(inst, small_params, seed=11)
    assert a == b


def test_protocol_end_to_end(small_params):
    runs = 0
    for seed in range(12):
        kind = Kind.YES if seed % 2 else Kind.NO
        inst = gen_instance_for(small_params, kind, 100 + seed)
        out, asm = run_protocol(inst, small_params, seed=seed, keep_assembly=True)
        if out.aborted:
            continue
        runs += 1
        assert out.correct
        assert out.exact_fk == exact_fk(asm.elements, small_params.k)
        assert out.estimate == out.exact_fk
        assert out.messages == count_messages(asm.writer)
        assert out.messages <= message_bound(small_params, out.overlapping_pairs)
        if kind is Kind.NO:
            assert out.exact_fk == small_params.n
            assert len(np.unique(asm.elements)) == small_params.n
        else:
            assert out.witness_multiplicity >= 2
        # Every stream element is a relabelled set member or a filler.
        assert asm.elements.min() >= 1 and asm.elements.max() <= 2 * small_params.n
    assert runs >= 10


def test_easy_gaps_hold_fillers(small_params):
    for seed in range(20):
        try:
            rand = draw_public_randomness(small_params, seed)
        except ProtocolAbort:
            continue
        inst = gen_instance_for(small_params, Kind.NO, seed)
        asm = assemble_stream(inst, rand, small_params, seed)
        a0 = asm.decomposition.A(0)
        for j in range(a0.lo, a0.hi + 1, max(1, (a0.hi - a0.lo) // 20)):
            assert asm.elements[j - 1] == rand.sigma[small_params.n + j]
            assert asm.writer[j - 1] == 1
            assert asm.provenance(j) == Filler()
        return
    pytest.fail("every seed aborted")


def test_segmentation_does_not_change_estimates():
    rng = np.random.default_rng(0)
    stream = rng.integers(1, 300, size=5000)
    cuts = np.sort(rng.choice(np.arange(1, 5000), size=40, replace=False))
    for kind in ("exact", "ams"):
        whole, _ = estimator_run_segmented(stream, 3, 256, 9, (), estimator=kind, universe=300)
        split, _ = estimator_run_segmented(stream, 3, 256, 9, cuts, estimator=kind, universe=300)
        assert whole == split


def test_ams_protocol_runs(small_params):
    inst = gen_instance_for(small_params, Kind.NO, 1)
    for seed in range(10):
        out = run_protocol(inst, small_params, estimator="ams", seed=seed, sample_count=64)
        if not out.aborted:
            assert out.max_state_bits == 8 * (4 + 36 + 8 * 64)
            return
    pytest.fail("every seed aborted")


def test_reference_budget(default_params):
    assert reference_budget(default_params) == pytest.approx(10**6 / (10**4 * np.log2(10**6)))


def test_stream_export_round_trip(tmp_path):
    elements = np.array([5, 1, 2**32 - 1, 7])
    path = tmp_path / "s.bin"
    export_stream(path, elements, 3)
    raw = path.read_bytes()
    assert raw[:4] == b"ROML" and len(raw) == 16 + 16
    got, k = read_stream(path)
    assert k == 3 and got.tolist() == elements.tolist()
    path.write_bytes(raw[:-4])
    with pytest.raises(ValueError):
        read_stream(path)
