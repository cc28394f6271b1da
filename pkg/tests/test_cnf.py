import numpy as np
import pytest
from hypothesis import given, settings

from stsampler.baselines import ChainState
from stsampler.cnf import (
    DimacsError,
    Formula,
    VariableOrdering,
    assignment_from_bits,
    assignment_to_bits,
    energies,
    energy,
    is_solution,
    normalize_clause,
    parse_dimacs,
    serialize_dimacs,
)
from stsampler.instances import gen_plateau, gen_xor_barrier
from stsampler.rng import SplitMix64

from conftest import formula_and_assignment, formulas


def test_parse_basic():
    f = parse_dimacs("p cnf 2 1\n1 2 0")
    assert f.num_vars == 2
    assert f.clauses == ((1, 2),)


@pytest.mark.parametrize(
    "text, message, line",
    [
        ("p cnf 2 1\n3 0", "literal out of range", 2),
        ("1 2 0\n", "missing header", 1),
        ("p cnf x 1\n1 0", "malformed header", 1),
        ("p dnf 2 1\n1 0", "malformed header", 1),
        ("p cnf 2 2\n1 0\n", "clause count mismatch", 2),
        ("p cnf 2 2\n1 0\n0\n", "empty clause", 3),
        ("p cnf 2 1\np cnf 2 1\n1 0", "duplicate header", 2),
        ("p cnf 2 1\n1 a 0", "bad token", 2),
    ],
)
def test_parse_errors(text, message, line):
    with pytest.raises(DimacsError) as err:
        parse_dimacs(text)
    assert message in str(err.value)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_literal_out_of_range_message():
    with pytest.raises(DimacsError, match=r"^literal out of range, line 2$"):
        parse_dimacs("p cnf 2 1\n3 0")


def test_duplicates_normalized_and_tautology_kept():
    f = parse_dimacs("p cnf 2 2\n1 1 2 0\n1 -1 0\n")
    assert f.clauses == ((1, 2), (1, -1))
    assert f.num_clauses == 2
    assert f.tautologies == (1,)


def test_multiline_clause_and_trailer():
    f = parse_dimacs("c hello\np cnf 3 2\n1 2\n3 0 -1\n0\n%\n0\n")
    assert f.clauses == ((1, 2, 3), (-1,))
    assert f.comments == ("hello",)


def test_serialize_unit():
    assert serialize_dimacs(Formula(1, ((1,),))) == "p cnf 1 1\n1 0\n"


def test_serialize_comments_first():
    text = serialize_dimacs(gen_plateau(2))
    assert text.splitlines()[0] == "c t plateau b=2"
    assert text.splitlines()[1].startswith("p cnf")


def test_plateau_round_trip_bytes():
    text = serialize_dimacs(gen_plateau(2))
    assert serialize_dimacs(parse_dimacs(text)) == text


@given(formulas())
def test_round_trip_property(f):
    assert parse_dimacs(serialize_dimacs(f)) == f


def test_energy_examples():
    assert energy(Formula(2, ((1, 2),)), (0, 0)) == 1
    # x1=1, y=(1,1,0,0): violated clauses are (-x1|y3) and (-x1|y4)
    assert energy(gen_xor_barrier(4), (1, 1, 1, 0, 0)) == 2
    p = gen_plateau(4)
    for z in (0, 1):
        assert energy(p, (1, 1, 1, 1, 1, z)) == 1


def test_is_solution_examples():
    for b in (1, 5, 20):
        f = gen_xor_barrier(b)
        assert is_solution(f, (0,) * (b + 1))
        assert is_solution(f, (1,) * (b + 1))
        assert not is_solution(f, (1, 0) + (1,) * (b - 1))
    assert is_solution(Formula(3, ()), (0, 1, 0))


def test_length_mismatch():
    with pytest.raises(ValueError):
        energy(Formula(2, ((1,),)), (0,))
    with pytest.raises(ValueError):
        is_solution(Formula(2, ((1,),)), (0, 0, 0))


def test_formula_validation():
    with pytest.raises(ValueError):
        Formula(2, ((3,),))
    with pytest.raises(ValueError):
        Formula(2, ((),))


@given(formula_and_assignment())
def test_energy_bounds(fa):
    f, a = fa
    e = energy(f, a)
    assert 0 <= e <= f.num_clauses
    assert (e == 0) == is_solution(f, a)


@given(formulas(max_vars=6))
@settings(max_examples=50)
def test_vectorized_energies_match(f):
    n = f.num_vars
    batch = ((np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.int8)
    got = energies(f, batch)
    assert [int(x) for x in got] == [energy(f, tuple(row)) for row in batch]


def test_delta_energy_matches_recompute():
    rng = SplitMix64(2024)
    for trial in range(10_000):
        n = 1 + rng.below(10)
        m = rng.below(15)
        clauses = []
        for _ in range(m):
            w = 1 + rng.below(4)
            clauses.append(tuple((1 + rng.below(n)) * (1 if rng.below(2) else -1) for _ in range(w)))
        f = Formula(n, tuple(normalize_clause(c) for c in clauses))
        a = tuple(rng.below(2) for _ in range(n))
        v = 1 + rng.below(n)
        st = ChainState(f, a, seed=trial)
        d = st.delta(v)
        flipped = list(a)
        flipped[v - 1] ^= 1
        assert d == energy(f, flipped) - energy(f, a)
        assert st.flip(v) == d
        assert st.energy == energy(f, flipped)


def test_bits_round_trip_with_ordering():
    order = VariableOrdering((3, 1, 2))
    a = (1, 0, 1)
    bits = assignment_to_bits(a, order)
    assert bits == "110"
    assert assignment_from_bits(bits, order) == a
    with pytest.raises(ValueError):
        VariableOrdering((1, 1, 2))
