import json
import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stsampler.cnf import Formula, VariableOrdering, assignment_to_bits, is_solution
from stsampler.instances import gen_asym_xor_barrier, gen_plateau, gen_rand3sat, gen_xor_barrier
from stsampler.oracle import BruteForceOracle, Oracle, brute_force_solutions
from stsampler.rng import SplitMix64, derive_seed
from stsampler.sampler import (
    ROOT,
    LevelSet,
    NotAPseudoSolution,
    PseudoSolution,
    SamplerConfig,
    black_box_sampler,
    descendants,
    draw_samples,
    search_tree_sampler,
)

from conftest import formulas

OR2 = Formula(2, ((1, 2),))


def _prefix_sets(f, ordering=None):
    """Brute-force S_i for every level i, as sets of prefix strings."""
    order = ordering.permutation if ordering else tuple(range(1, f.num_vars + 1))
    sols = [assignment_to_bits(s, VariableOrdering(order)) for s in brute_force_solutions(f)]
    return [{s[:i] for s in sols} for i in range(f.num_vars + 1)]


def test_pseudosolution_text():
    s = PseudoSolution.from_prefix((1, 0, 1))
    assert s.text() == "101" and s.prefix == (1, 0, 1)
    assert ROOT.text() == "" and ROOT.prefix == ()


def test_descendants_examples():
    o = Oracle(OR2)
    assert descendants(OR2, ROOT, 1, o).texts() == ["0", "1"]
    assert o.stats.total_calls == 3
    xb = gen_xor_barrier(6)
    o = Oracle(xb)
    assert descendants(xb, PseudoSolution(1, 1), 1, o).texts() == ["11"]
    assert o.stats.total_calls == 2
    assert descendants(xb, ROOT, 1, Oracle(xb)).texts() == ["0", "1"]


def test_descendants_rejects_non_pseudosolution():
    with pytest.raises(NotAPseudoSolution):
        descendants(gen_plateau(3), PseudoSolution(1, 1), 1, Oracle(gen_plateau(3)))


@given(formulas(max_vars=7, max_clauses=10, max_width=3), st.integers(1, 3))
@settings(max_examples=80)
def test_descendants_match_brute_force(f, lb):
    S = _prefix_sets(f)
    if not S[-1]:
        return
    for level in range(f.num_vars):
        w = min(lb, f.num_vars - level)
        for p in sorted(S[level]):
            o = Oracle(f)
            d = descendants(f, PseudoSolution(level, int(p, 2) if p else 0), lb, o, memo=False)
            expect = sorted(q for q in S[level + w] if q.startswith(p))
            assert d.texts() == expect
            assert 1 <= len(d) <= 2**w
            assert o.stats.total_calls == len(d) + 1
            assert o.stats.unsat_answers == 1


def test_memo_replays_metering():
    f = gen_rand3sat(10, 30, seed=2)
    o = Oracle(f)
    descendants(f, ROOT, 2, o)
    first = o.stats.total_calls
    runs = o.stats.solver_runs
    descendants(f, ROOT, 2, o)
    assert o.stats.total_calls == 2 * first
    assert o.stats.solver_runs == runs


def test_black_box_examples():
    cfg = SamplerConfig(k=2)
    out, counts = black_box_sampler(OR2, LevelSet.of(1, [0, 1]), cfg, Oracle(OR2))
    assert out.texts() == ["01", "10", "11"]
    assert sorted(counts) == [1, 2]
    with pytest.raises(ValueError):
        black_box_sampler(OR2, LevelSet(1, ()), cfg, Oracle(OR2))


def test_black_box_full_phi_gives_next_level():
    f = gen_rand3sat(10, 35, seed=4)
    S = _prefix_sets(f)
    for i in range(f.num_vars):
        phi = LevelSet.of(i, [int(p, 2) if p else 0 for p in S[i]])
        out, _ = black_box_sampler(f, phi, SamplerConfig(k=len(phi)), Oracle(f))
        assert set(out.texts()) == S[i + 1]


def test_black_box_size_bounds():
    f = gen_rand3sat(12, 40, seed=8)
    S = _prefix_sets(f)
    rng = SplitMix64(1)
    for i in range(f.num_vars - 2):
        phi = LevelSet.of(i, [int(p, 2) if p else 0 for p in S[i]])
        for k in (1, 2, 3):
            cfg = SamplerConfig(k=k, level_bits=2)
            out, counts = black_box_sampler(f, phi, cfg, Oracle(f), rng)
            j = min(k, len(phi))
            assert len(counts) == j
            assert j <= len(out) <= 4 * j
            assert len(set(out.members)) == len(out)
            assert set(out.texts()) <= S[i + 2]


def test_search_tree_examples():
    rec = search_tree_sampler(Formula(1, ((1,), (-1,))), SamplerConfig(k=3), Oracle(Formula(1, ((1,), (-1,)))))
    assert not rec.satisfiable and len(rec.final_set) == 0
    p5 = gen_plateau(5)
    rec = search_tree_sampler(p5, SamplerConfig(k=2), Oracle(p5))
    assert rec.final_set.texts() == ["0111110", "0111111"]
    a = gen_asym_xor_barrier(3, 2)
    rec = search_tree_sampler(a, SamplerConfig(k=5), Oracle(a))
    assert len(rec.final_set) == 5
    assert set(rec.final_set.texts()) == {assignment_to_bits(s) for s in brute_force_solutions(a)}


@pytest.mark.parametrize("lb", [1, 2, 3])
def test_completeness_and_ladder(lb):
    for i in range(25):
        f = gen_rand3sat(6 + i % 6, 3 * (6 + i % 6), seed=100 + i)
        S = _prefix_sets(f)
        for k in (1, 2, 4, 2**f.num_vars):
            cfg = SamplerConfig(k=k, level_bits=lb, seed=i)
            rec = search_tree_sampler(f, cfg, Oracle(f))
            assert rec.satisfiable == bool(S[-1])
            if not S[-1]:
                continue
            levels = [0] + [min(f.num_vars, lb * (t + 1)) for t in range(cfg.num_levels(f.num_vars))]
            for size, lvl in zip(rec.level_sizes, levels):
                assert size >= min(k, len(S[lvl]))
                assert size <= len(S[lvl])
            assert set(rec.final_set.texts()) <= S[-1]
            assert rec.oracle_stats.total_calls <= cfg.call_bound(f.num_vars)
            if k >= 2**f.num_vars:
                assert set(rec.final_set.texts()) == S[-1]


def test_pseudosolution_soundness_per_level():
    f = next(g for g in (gen_rand3sat(14, 56, seed=s) for s in range(50)) if Oracle(g).solve().sat)
    bf = BruteForceOracle(f)
    cfg = SamplerConfig(k=3, seed=5)
    phi = LevelSet(0, (0,))
    rng = SplitMix64(5)
    o = Oracle(f)
    while phi.level < f.num_vars:
        phi, _ = black_box_sampler(f, phi, cfg, o, rng)
        for s in phi:
            assumptions = [v if b else -v for v, b in zip(range(1, s.level + 1), s.prefix)]
            assert bf.solve(assumptions).sat


def test_custom_ordering():
    f = gen_xor_barrier(4)
    order = VariableOrdering((3, 1, 5, 2, 4))
    rec = search_tree_sampler(f, SamplerConfig(k=4, ordering=order), Oracle(f))
    assert rec.final_set.texts() == ["00000", "11111"]
    f = gen_rand3sat(9, 30, seed=1)
    order = VariableOrdering((9, 2, 7, 4, 5, 6, 3, 8, 1))
    rec = search_tree_sampler(f, SamplerConfig(k=512, ordering=order), Oracle(f))
    assert set(rec.final_set.texts()) == _prefix_sets(f, order)[-1]
    batch = draw_samples(f, SamplerConfig(k=3, ordering=order), 12)
    assert all(is_solution(f, a) for a in batch.assignments())


def test_determinism_byte_identical():
    f = gen_rand3sat(16, 60, seed=6)
    cfg = SamplerConfig(k=4, level_bits=2, seed=77)
    a = json.dumps(search_tree_sampler(f, cfg, Oracle(f)).to_json())
    b = json.dumps(search_tree_sampler(f, cfg, Oracle(f)).to_json())
    assert a == b


def test_draw_samples_protocol():
    f = gen_asym_xor_barrier(6, 2)  # Z = 5
    batch = draw_samples(f, SamplerConfig(k=2, seed=1), 1000)
    assert len(batch.samples) == 1000
    assert batch.runs == 500
    assert all(is_solution(f, a) for a in batch.assignments())
    assert batch.run_seeds[3] == derive_seed(1, 3)
    runs = Counter(r for r, _ in batch.samples)
    assert set(runs.values()) == {2}


def test_draw_samples_truncates_to_P():
    f = gen_asym_xor_barrier(6, 2)
    batch = draw_samples(f, SamplerConfig(k=2), 7)
    assert len(batch.samples) == 7 and batch.runs == 4


def test_draw_samples_enumeration_case():
    f = gen_asym_xor_barrier(5, 3)  # Z = 9
    batch = draw_samples(f, SamplerConfig(k=20), 90)
    assert batch.runs == 10
    per_run = {}
    for r, bits in batch.samples:
        per_run.setdefault(r, []).append(bits)
    for bits in per_run.values():
        assert len(bits) == len(set(bits)) == 9
    assert set(Counter(b for _, b in batch.samples).values()) == {10}


def test_draw_samples_unsat():
    batch = draw_samples(Formula(1, ((1,), (-1,))), SamplerConfig(k=5), 10)
    assert not batch.satisfiable and batch.samples == []


def test_draw_samples_jobs_independent():
    f = gen_rand3sat(14, 50, seed=9)
    cfg = SamplerConfig(k=3, seed=4)
    a = draw_samples(f, cfg, 60, jobs=1)
    b = draw_samples(f, cfg, 60, jobs=3)
    assert a.jsonl() == b.jsonl()
    assert a.oracle_calls == b.oracle_calls


def test_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(k=0)
    with pytest.raises(ValueError):
        SamplerConfig(k=1, level_bits=0)
    with pytest.raises(ValueError):
        SamplerConfig(k=1, seed=-1)
    cfg = SamplerConfig(k=3, level_bits=2)
    assert cfg.M == 4 and cfg.num_levels(5) == 3
    assert cfg.call_bound(5) == 1 + 3 * 5 * 3
    with pytest.raises(ValueError):
        draw_samples(OR2, cfg, 0)


def test_single_level_frequency_law():
    # k=1 on (x1|x2): urn "0" holds {01}, urn "1" holds {10, 11}
    phi = LevelSet.of(1, [0, 1])
    cfg = SamplerConfig(k=1)
    o = Oracle(OR2)
    rng = SplitMix64(0)
    counts = Counter()
    trials = 20_000
    for _ in range(trials):
        out, _ = black_box_sampler(OR2, phi, cfg, o, rng)
        counts.update(out.texts())
    p = counts["01"] / trials
    assert abs(p - 0.5) < 4 * math.sqrt(0.25 / trials)
    assert counts["10"] + counts["01"] == trials
