from collections import Counter

from hypothesis import given
from hypothesis import strategies as st

from stsampler.rng import MASK64, SplitMix64, derive_seed, mix


def test_reference_stream():
    # published SplitMix64 outputs for seed 0
    r = SplitMix64(0)
    assert [r.next64() for _ in range(3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_derive_seed():
    assert derive_seed(7, 3) == 7 ^ mix(3)
    assert len({derive_seed(0, r) for r in range(10_000)}) == 10_000


@given(st.integers(0, MASK64), st.integers(1, 1000))
def test_below_range(seed, n):
    r = SplitMix64(seed)
    assert all(0 <= r.below(n) < n for _ in range(20))


@given(st.integers(0, MASK64), st.integers(1, 30), st.data())
def test_choose_without_replacement(seed, size, data):
    j = data.draw(st.integers(0, size))
    items = list(range(size))
    picked = SplitMix64(seed).choose(items, j)
    assert len(picked) == j == len(set(picked)) and set(picked) <= set(items)


def test_choose_uniform_subsets():
    r = SplitMix64(99)
    counts = Counter(frozenset(r.choose(range(5), 2)) for _ in range(50_000))
    assert len(counts) == 10
    assert all(abs(c - 5_000) < 4 * (5_000 * 0.9) ** 0.5 for c in counts.values())
