import itertools

import pytest

from stsampler.cnf import Formula, energy, parse_dimacs, serialize_dimacs
from stsampler.counter import exact_count_bruteforce, exact_count_enumerate
from stsampler.instances import (
    FamilySpec,
    embed_barrier,
    gen_asym_xor_barrier,
    gen_plateau,
    gen_rand3sat,
    gen_xor_barrier,
    select_balanced_variable,
)
from stsampler.oracle import brute_force_solutions


def test_plateau_clauses():
    f = gen_plateau(2)
    assert f.num_vars == 4
    assert f.clauses == ((1, 2), (1, 3), (-1, 4), (-1, -4))
    assert f.comments == ("t plateau b=2",)


@pytest.mark.parametrize("b", range(1, 11))
def test_plateau_two_solutions(b):
    f = gen_plateau(b)
    assert f.num_clauses == b + 2
    sols = brute_force_solutions(f)
    assert sols == [(0,) + (1,) * b + (0,), (0,) + (1,) * b + (1,)]
    for z in (0, 1):
        assert energy(f, (1,) + (1,) * b + (z,)) == 1


@pytest.mark.parametrize("b", range(1, 11))
def test_xor_barrier_solutions(b):
    f = gen_xor_barrier(b)
    assert f.num_vars == b + 1 and f.num_clauses == 2 * b
    assert all(len(c) == 2 for c in f.clauses)
    assert (-1, 2) in f.clauses and (1, -2) in f.clauses
    expect = [a for a in itertools.product((0, 1), repeat=b + 1) if all(a[j] == a[0] for j in range(1, b + 1))]
    assert brute_force_solutions(f) == expect


def _barrier_height(b):
    """Min over single-flip paths between 0..0 and 1..1 of the max energy (Dijkstra on the max-cost)."""
    import heapq

    f = gen_xor_barrier(b)
    n = b + 1
    start, goal = 0, (1 << n) - 1
    e = {s: energy(f, tuple((s >> (n - 1 - i)) & 1 for i in range(n))) for s in range(1 << n)}
    best = {start: e[start]}
    heap = [(e[start], start)]
    while heap:
        h, s = heapq.heappop(heap)
        if s == goal:
            return h
        if h > best.get(s, 1 << 30):
            continue
        for i in range(n):
            t = s ^ (1 << i)
            ht = max(h, e[t])
            if ht < best.get(t, 1 << 30):
                best[t] = ht
                heapq.heappush(heap, (ht, t))


@pytest.mark.parametrize("b", range(1, 9))
def test_xor_barrier_height(b):
    assert _barrier_height(b) >= -(-b // 2)


def test_asym_layout_and_counts():
    f = gen_asym_xor_barrier(80, 4)
    assert f.num_vars == 85 and f.num_clauses == 164
    assert exact_count_enumerate(f, max_models=1000).count == 17
    for b, l in [(1, 1), (3, 2), (5, 5), (10, 8), (8, 10)]:
        g = gen_asym_xor_barrier(b, l)
        sols = brute_force_solutions(g)
        assert len(sols) == 2**l + 1
        zero = [s for s in sols if s[0] == 0]
        assert zero == [(0,) * (b + 1) + (1,) * l]


def test_embed_preserves_count():
    for s in range(100):
        n = 3 + s % 8
        f = gen_rand3sat(n, 3 * n, seed=s)
        for z in (1, n):
            g = embed_barrier(f, z, 3)
            assert g.num_vars == n + 3 and g.num_clauses == f.num_clauses + 6
            assert exact_count_bruteforce(g) == exact_count_bruteforce(f)
    unsat = Formula(2, ((1,), (-1,)))
    assert exact_count_bruteforce(embed_barrier(unsat, 2, 4)) == 0
    with pytest.raises(ValueError):
        embed_barrier(unsat, 3, 2)


def test_embed_comment_and_round_trip():
    g = embed_barrier(gen_plateau(2), 2, 3)
    assert g.comments[-1] == "t embed z=2 b=3"
    assert parse_dimacs(serialize_dimacs(g)) == g


def test_rand3sat_shape():
    f = gen_rand3sat(75, 315, seed=1)
    assert f.num_vars == 75 and f.num_clauses == 315
    assert all(len(c) == 3 and len({abs(l) for l in c}) == 3 for c in f.clauses)
    assert gen_rand3sat(75, 315, seed=1) == f
    assert gen_rand3sat(75, 315, seed=2) != f
    with pytest.raises(ValueError):
        gen_rand3sat(2, 5)


def test_generators_round_trip():
    for f in (gen_plateau(5), gen_xor_barrier(7), gen_asym_xor_barrier(4, 2), gen_rand3sat(10, 40, 3)):
        text = serialize_dimacs(f)
        assert text.startswith("c t ")
        assert serialize_dimacs(parse_dimacs(text)) == text


def test_select_balanced_examples():
    assert select_balanced_variable(Formula(2, ((1, 2),))) == 1
    assert select_balanced_variable(gen_xor_barrier(6)) == 1
    assert select_balanced_variable(Formula(3, ((1,), (-2,), (3,)))) == 1
    # x2 and x3 are both exactly balanced; the lower index wins
    f = Formula(3, ((1,), (1, 2)))
    assert select_balanced_variable(f) == 2


def test_select_balanced_cap_and_unsat():
    with pytest.raises(ValueError):
        select_balanced_variable(Formula(1, ((1,), (-1,))))
    with pytest.raises(ValueError):
        select_balanced_variable(Formula(12, ()), max_models=100)


def test_family_spec():
    assert FamilySpec("plateau", {"b": 3}).generate() == gen_plateau(3)
    assert FamilySpec("asymxorbarrier", {"b": 3, "l": 2}).generate() == gen_asym_xor_barrier(3, 2)
    host = gen_plateau(2)
    assert FamilySpec("embed", {"z": 1, "b": 2}).generate(host) == embed_barrier(host, 1, 2)
    with pytest.raises(ValueError):
        FamilySpec("latin")
    with pytest.raises(ValueError):
        gen_plateau(0)
