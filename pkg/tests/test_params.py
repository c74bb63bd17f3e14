import math

import pytest
from hypothesis import given, settings, strategies as st

from romlab.errors import InvalidScale
from romlab.params import ceil_snap, derive_params, npow


def test_default_params():
    p = derive_params(10**6, 3, c=0.5, c1=0.05, c2=0.005, t_factor=100)
    assert (p.t, p.w, p.N) == (10_000, 50, 10**6)
    # n^(1 - 2/3) = 100, so w2 = ceil(0.5) = 1 and every position is its own block.
    assert p.w2 == 1
    assert p.num_blocks == 10**6


def test_small_c_overflows_universe():
    with pytest.raises(InvalidScale, match="N = 2000000 > n"):
        derive_params(10**6, 3, c=0.25, c1=0.05, c2=0.005, t_factor=100)


def test_lemma_mode_small_n():
    p = derive_params(4096, 2, c=1, c1=0.1, c2=0.01, t_factor=1)
    assert p.t == 64
    assert p.w == 1


def test_roots_are_snapped():
    assert npow(10**6, 1 / 3) == 100.0
    assert npow(10**6, 1 / 6) == 10.0
    assert ceil_snap(npow(10**6, 1 / 3)) == 100
    assert derive_params(10**6, 3, t_factor=1, c=1).t == 100


@pytest.mark.parametrize("bad", [
    dict(n=15, k=3), dict(n=100, k=1), dict(n=100, k=3, c=0), dict(n=100, k=3, c1=1.0),
    dict(n=100, k=3, c2=0.0), dict(n=100, k=3, t_factor=0),
])
def test_rejects_out_of_range_constants(bad):
    with pytest.raises(ValueError):
        derive_params(**bad)


@settings(max_examples=300, deadline=None)
@given(
    n=st.integers(16, 10**7),
    k=st.integers(2, 8),
    c=st.sampled_from([1.0, 0.5, 0.25, 0.125]),
    c1=st.floats(0.001, 0.9),
    c2=st.floats(0.001, 0.9),
    t_factor=st.integers(1, 100),
)
def test_invariants_hold_whenever_feasible(n, k, c, c1, c2, t_factor):
    try:
        p = derive_params(n, k, c, c1, c2, t_factor)
    except InvalidScale:
        return
    assert p.w >= 1 and p.w2 >= 1
    assert 2 <= p.t <= p.n
    assert p.N <= p.n
    assert p.t * p.w <= p.N
    assert p.num_blocks * p.w2 >= p.n > (p.num_blocks - 1) * p.w2
    assert p.t == math.ceil(t_factor * n ** (1 / k) - 1e-6)
