"""Recursive search-tree sampling of pseudosolutions.

A pseudosolution of level ``i`` is an assignment to the first ``i`` variables
of the ordering that extends to a full solution. Internally a level-``i``
prefix is an int whose most significant of ``i`` bits is position 1, so
numeric order is the canonical (lexicographic) order within a level.

One level step picks ``min(k, |phi|)`` parents uniformly without replacement
and replaces them by all of their pseudosolution descendants ``level_bits``
positions further down, each descendant set enumerated exhaustively with the
oracle and blocking clauses.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial

from .cnf import Assignment, Formula, VariableOrdering, assignment_from_bits
from .oracle import OracleStats, make_oracle
from .rng import SplitMix64, derive_seed


class NotAPseudoSolution(ValueError):
    pass


@dataclass(frozen=True)
class PseudoSolution:
    level: int
    bits: int = 0

    @property
    def prefix(self) -> tuple[int, ...]:
        return tuple((self.bits >> (self.level - p)) & 1 for p in range(1, self.level + 1))

    @classmethod
    def from_prefix(cls, prefix) -> "PseudoSolution":
        bits = 0
        for b in prefix:
            bits = (bits << 1) | (1 if b else 0)
        return cls(len(prefix), bits)

    def text(self) -> str:
        return format(self.bits, f"0{self.level}b") if self.level else ""


ROOT = PseudoSolution(0, 0)


@dataclass(frozen=True)
class LevelSet:
    """Duplicate-free pseudosolutions of one level, in canonical order."""

    level: int
    members: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return (PseudoSolution(self.level, b) for b in self.members)

    @classmethod
    def of(cls, level: int, items) -> "LevelSet":
        bits = sorted({s.bits if isinstance(s, PseudoSolution) else int(s) for s in items})
        return cls(level, tuple(bits))

    def texts(self) -> list[str]:
        return [format(b, f"0{self.level}b") if self.level else "" for b in self.members]


@dataclass(frozen=True)
class SamplerConfig:
    k: int
    level_bits: int = 1
    seed: int = 0
    ordering: VariableOrdering | None = None
    record_level_stats: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.level_bits < 1:
            raise ValueError("level_bits must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def M(self) -> int:
        return 2**self.level_bits

    def num_levels(self, n: int) -> int:
        return math.ceil(n / self.level_bits)

    def call_bound(self, n: int) -> int:
        """Upper bound ``1 + ceil(n/l) * (M+1) * k`` on oracle calls per run."""
        return 1 + self.num_levels(n) * (self.M + 1) * self.k

    def order_for(self, f: Formula) -> tuple[int, ...]:
        if self.ordering is None:
            return tuple(range(1, f.num_vars + 1))
        if len(self.ordering) != f.num_vars:
            raise ValueError("ordering length does not match the formula")
        return self.ordering.permutation


@dataclass
class RunRecord:
    satisfiable: bool
    final_set: LevelSet
    level_sizes: list[int] = field(default_factory=list)
    per_level_descendant_counts: list[list[int]] = field(default_factory=list)
    oracle_stats: OracleStats = field(default_factory=OracleStats)
    seed: int = 0

    def to_json(self) -> dict:
        s = self.oracle_stats
        return {
            "satisfiable": self.satisfiable,
            "seed": self.seed,
            "level_sizes": self.level_sizes,
            "descendant_counts": self.per_level_descendant_counts,
            "final_set": self.final_set.texts(),
            "oracle_calls": s.total_calls,
            "sat_answers": s.sat_answers,
            "unsat_answers": s.unsat_answers,
        }


def _memo(oracle, order: tuple[int, ...]) -> dict | None:
    memo = getattr(oracle, "descendant_memo", None)
    if memo is None:
        return None
    return memo.setdefault(order, {})


def _prefix_literals(order, level: int, bits: int) -> list[int]:
    return [
        order[p] if (bits >> (level - 1 - p)) & 1 else -order[p]
        for p in range(level)
    ]


def _enumerate_suffixes(oracle, order, level: int, bits: int, width: int) -> tuple[int, ...]:
    assumptions = _prefix_literals(order, level, bits)
    suffix_vars = order[level : level + width]
    found = []
    blocking = []
    while True:
        result = oracle.solve(assumptions, blocking)
        if not result.sat:
            break
        model = result.model
        suffix = 0
        for v in suffix_vars:
            suffix = (suffix << 1) | model[v - 1]
        found.append(suffix)
        # block only the suffix: the prefix is fixed by the assumptions
        blocking.append(tuple(-v if model[v - 1] else v for v in suffix_vars))
    if not found:
        raise NotAPseudoSolution(f"prefix {format(bits, f'0{level}b') if level else '(empty)'} has no extension")
    return tuple(sorted(found))


def _suffixes(oracle, order, memo, level: int, bits: int, width: int) -> tuple[int, ...]:
    if memo is None:
        return _enumerate_suffixes(oracle, order, level, bits, width)
    key = (level, width, bits)
    hit = memo.get(key)
    if hit is None:
        hit = memo[key] = _enumerate_suffixes(oracle, order, level, bits, width)
    else:
        # replay the metering of the enumeration that produced the memo entry
        oracle.stats.record(sat=len(hit), unsat=1)
    return hit


def _is_satisfiable(oracle, memo) -> bool:
    if memo is None:
        return oracle.solve().sat
    hit = memo.get("sat")
    if hit is None:
        hit = memo["sat"] = oracle.solve().sat
    else:
        oracle.stats.record(sat=int(hit), unsat=int(not hit))
    return hit


def descendants(f: Formula, s: PseudoSolution, level_bits: int, oracle, ordering: VariableOrdering | None = None, memo: bool = True) -> LevelSet:
    """All pseudosolutions ``min(level_bits, n - level)`` positions below ``s``.

    Costs ``|D(s)| + 1`` metered oracle calls.
    """
    order = SamplerConfig(1, level_bits, ordering=ordering).order_for(f)
    if s.level >= f.num_vars:
        raise ValueError("cannot descend below level n")
    width = min(level_bits, f.num_vars - s.level)
    table = _memo(oracle, order) if memo else None
    suffixes = _suffixes(oracle, order, table, s.level, s.bits, width)
    return LevelSet(s.level + width, tuple((s.bits << width) | x for x in suffixes))


def _step(oracle, order, memo, level: int, members: tuple[int, ...], k: int, width: int, rng: SplitMix64):
    j = min(k, len(members))
    if j == len(members):
        chosen = members
        order_of_choice = members
    else:
        order_of_choice = rng.choose(members, j)
        chosen = sorted(order_of_choice)
    sizes = {}
    out = []
    for parent in chosen:
        kids = _suffixes(oracle, order, memo, level, parent, width)
        sizes[parent] = len(kids)
        base = parent << width
        out.extend(base | x for x in kids)
    return tuple(out), [sizes[p] for p in order_of_choice]


def black_box_sampler(f: Formula, phi: LevelSet, cfg: SamplerConfig, oracle, rng: SplitMix64 | None = None):
    """One level step from ``phi``; returns ``(next LevelSet, descendant counts)``.

    The counts are listed in selection order.
    """
    if not phi.members:
        raise ValueError("input level set is empty")
    if phi.level >= f.num_vars:
        raise ValueError("input level set is already at level n")
    order = cfg.order_for(f)
    rng = rng if rng is not None else SplitMix64(cfg.seed)
    width = min(cfg.level_bits, f.num_vars - phi.level)
    members, counts = _step(oracle, order, _memo(oracle, order), phi.level, phi.members, cfg.k, width, rng)
    return LevelSet(phi.level + width, members), counts


def _run(f: Formula, cfg: SamplerConfig, oracle, rng: SplitMix64) -> RunRecord:
    order = cfg.order_for(f)
    memo = _memo(oracle, order)
    stats = oracle.stats
    before = (stats.total_calls, stats.sat_answers, stats.unsat_answers)
    n = f.num_vars
    satisfiable = _is_satisfiable(oracle, memo)
    if not satisfiable:
        final = LevelSet(n, ())
        sizes: list[int] = []
        per_level: list[list[int]] = []
    else:
        level, members = 0, (0,)
        sizes = [1]
        per_level = []
        k, lb = cfg.k, cfg.level_bits
        while level < n:
            width = min(lb, n - level)
            members, counts = _step(oracle, order, memo, level, members, k, width, rng)
            level += width
            sizes.append(len(members))
            if cfg.record_level_stats:
                per_level.append(counts)
        final = LevelSet(n, members)
    delta = OracleStats(
        total_calls=stats.total_calls - before[0],
        sat_answers=stats.sat_answers - before[1],
        unsat_answers=stats.unsat_answers - before[2],
    )
    return RunRecord(satisfiable, final, sizes, per_level, delta, cfg.seed)


def search_tree_sampler(f: Formula, cfg: SamplerConfig, oracle) -> RunRecord:
    """One full run from the empty prefix down to level n."""
    return _run(f, cfg, oracle, SplitMix64(cfg.seed))


@dataclass
class SampleBatch:
    satisfiable: bool
    samples: list[tuple[int, str]]  # (run index, bits in ordering-position order)
    runs: int
    oracle_calls: int
    run_seeds: list[int] = field(default_factory=list)
    ordering: VariableOrdering | None = None
    run_calls: list[int] = field(default_factory=list)

    def assignments(self) -> list[Assignment]:
        return [assignment_from_bits(bits, self.ordering) for _, bits in self.samples]

    def jsonl(self) -> str:
        return "".join(json.dumps({"run": r, "assignment": b}) + "\n" for r, b in self.samples)


def _draw_run(f: Formula, cfg: SamplerConfig, oracle, run_index: int):
    seed = derive_seed(cfg.seed, run_index)
    rng = SplitMix64(seed)
    rec = _run(f, replace(cfg, seed=seed, record_level_stats=False), oracle, rng)
    members = rec.final_set.members
    j = min(cfg.k, len(members))
    picked = members if j == len(members) else rng.choose(members, j)
    n = f.num_vars
    return [format(b, f"0{n}b") for b in picked], rec.oracle_stats.total_calls


def _draw_chunk(f: Formula, cfg: SamplerConfig, oracle_factory, runs: list[int]):
    oracle = oracle_factory(f)
    return [(r, *_draw_run(f, cfg, oracle, r)) for r in runs]


def _chunks(items: list[int], parts: int) -> list[list[int]]:
    size = math.ceil(len(items) / parts) if items else 0
    return [items[i : i + size] for i in range(0, len(items), size)] if size else []


def draw_samples(
    f: Formula,
    cfg: SamplerConfig,
    P: int,
    oracle=None,
    jobs: int = 1,
    oracle_factory=None,
) -> SampleBatch:
    """Pool ``min(k, |final set|)`` draws per independent run until ``P`` samples.

    Run ``r`` uses seed ``derive_seed(cfg.seed, r)``. Every run yields the same
    number of samples (``min(k, Z)``), so the number of runs is fixed after the
    first one and later runs can be spread over ``jobs`` processes without
    changing the output. The last run's draws are truncated to exactly ``P``.
    """
    if P < 1:
        raise ValueError("P must be >= 1")
    oracle_factory = oracle_factory or partial(make_oracle, backend="cdcl")
    if oracle is None:
        oracle = oracle_factory(f)
    first, calls = _draw_run(f, cfg, oracle, 0)
    seeds = [derive_seed(cfg.seed, 0)]
    if not first:
        return SampleBatch(False, [], 1, calls, seeds, cfg.ordering, [calls])
    per_run = len(first)
    total_runs = math.ceil(P / per_run)
    results = [(0, first, calls)]
    rest = list(range(1, total_runs))
    if jobs > 1 and len(rest) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for chunk in pool.map(partial(_draw_chunk, f, cfg, oracle_factory), _chunks(rest, jobs)):
                results.extend(chunk)
    else:
        results.extend((r, *_draw_run(f, cfg, oracle, r)) for r in rest)
    results.sort(key=lambda t: t[0])
    samples = [(r, bits) for r, picked, _ in results for bits in picked][:P]
    seeds = [derive_seed(cfg.seed, r) for r, _, _ in results]
    run_calls = [c for _, _, c in results]
    return SampleBatch(True, samples, total_runs, sum(run_calls), seeds, cfg.ordering, run_calls)
