"""Model counting from level-by-level descendant averages.

Each level step of a sampler run sees ``|D(s)|`` for the parents it expands.
Since ``|S_i| / |S_{i-1}|`` is the mean descendant count over ``S_{i-1}``, the
mean over the (approximately uniform) expanded parents estimates it, and the
model count is the product of these multipliers. All multipliers come out of
one pass of each run.
"""
from __future__ import annotations

import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import partial

from .cnf import Assignment, Formula
from .oracle import CDCLSolver, Oracle, brute_force_count, check_model, make_oracle
from .rng import SplitMix64, derive_seed
from .sampler import RunRecord, SamplerConfig, _run

_MAX_LOG2_FLOAT = 1023.0


@dataclass
class ZEstimate:
    satisfiable: bool
    log2_estimate: float
    estimate: float
    multipliers: list[float] = field(default_factory=list)
    runs_averaged: int = 0
    per_run_log2: list[float] = field(default_factory=list)
    oracle_calls: int = 0
    overflow: bool = False
    # product of the pooled multipliers as an exact rational
    exact: Fraction = Fraction(0)

    @property
    def run_mean_log2(self) -> float:
        """log2 of the mean of the per-run estimates (alternative estimator)."""
        if not self.per_run_log2:
            return -math.inf
        top = max(self.per_run_log2)
        return top + math.log2(sum(2.0 ** (x - top) for x in self.per_run_log2) / len(self.per_run_log2))

    def to_json(self, k: int, level_bits: int) -> dict:
        per_run = self.per_run_log2
        return {
            "satisfiable": self.satisfiable,
            "log2_estimate": self.log2_estimate if self.satisfiable else None,
            "estimate": None if self.overflow else self.estimate,
            "estimate_overflow": self.overflow,
            "multipliers": self.multipliers,
            "per_run_log2": per_run,
            "per_run_log2_min": min(per_run) if per_run else None,
            "per_run_log2_median": statistics.median(per_run) if per_run else None,
            "per_run_log2_max": max(per_run) if per_run else None,
            "run_mean_log2": self.run_mean_log2 if per_run else None,
            "runs": self.runs_averaged,
            "k": k,
            "level_bits": level_bits,
            "oracle_calls": self.oracle_calls,
        }


def _one_run(f: Formula, cfg: SamplerConfig, oracle, r: int) -> RunRecord:
    seed = derive_seed(cfg.seed, r)
    return _run(f, replace(cfg, seed=seed, record_level_stats=True), oracle, SplitMix64(seed))


def _run_chunk(f, cfg, oracle_factory, runs):
    oracle = oracle_factory(f)
    return [(r, _one_run(f, cfg, oracle, r)) for r in runs]


def _log2_fraction(x: Fraction) -> float:
    return math.log2(x.numerator) - math.log2(x.denominator)


def estimate_count(
    f: Formula,
    cfg: SamplerConfig,
    runs: int = 1,
    oracle=None,
    jobs: int = 1,
    oracle_factory=None,
) -> ZEstimate:
    """Estimate the model count from ``runs`` independent sampler runs.

    Per level step, the descendant counts of all runs are pooled before
    averaging; the per-run estimates are reported alongside.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    oracle_factory = oracle_factory or partial(make_oracle, backend="cdcl")
    indices = list(range(runs))
    if jobs > 1 and runs > 1:
        size = math.ceil(runs / jobs)
        chunks = [indices[i : i + size] for i in range(0, runs, size)]
        records = []
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for part in pool.map(partial(_run_chunk, f, cfg, oracle_factory), chunks):
                records.extend(part)
    else:
        oracle = oracle if oracle is not None else oracle_factory(f)
        records = [(r, _one_run(f, cfg, oracle, r)) for r in indices]
    records.sort(key=lambda t: t[0])
    recs = [rec for _, rec in records]
    calls = sum(rec.oracle_stats.total_calls for rec in recs)
    if not recs[0].satisfiable:
        return ZEstimate(False, -math.inf, 0.0, [], runs, [], calls, False, Fraction(0))

    steps = len(recs[0].per_level_descendant_counts)
    exact = Fraction(1)
    multipliers = []
    log2_total = 0.0
    for t in range(steps):
        total = sum(sum(rec.per_level_descendant_counts[t]) for rec in recs)
        count = sum(len(rec.per_level_descendant_counts[t]) for rec in recs)
        m = Fraction(total, count)
        exact *= m
        multipliers.append(float(m))
        log2_total += _log2_fraction(m)
    per_run = []
    for rec in recs:
        per_run.append(
            sum(math.log2(sum(c)) - math.log2(len(c)) for c in rec.per_level_descendant_counts)
        )
    overflow = log2_total >= _MAX_LOG2_FLOAT
    estimate = math.inf if overflow else float(exact)
    return ZEstimate(True, log2_total, estimate, multipliers, runs, per_run, calls, overflow, exact)


def exact_count_bruteforce(f: Formula, cap: int = 25) -> int:
    return brute_force_count(f, cap)


@dataclass
class EnumerationResult:
    count: int | None  # None when the cap was exceeded
    solutions: list[Assignment]
    exceeded: bool
    oracle_calls: int

    def __int__(self) -> int:
        if self.count is None:
            raise ValueError("enumeration exceeded its cap")
        return self.count


def exact_count_enumerate(f: Formula, oracle=None, max_models: int = 100_000) -> EnumerationResult:
    """Enumerate models by solve-and-block until UNSAT or ``max_models + 1`` models.

    With the built-in CDCL oracle the blocking clauses are added permanently to
    a private solver instance (calls are still metered on ``oracle.stats``);
    other oracles get them as query-scoped extra clauses.
    """
    if max_models < 1:
        raise ValueError("max_models must be >= 1")
    oracle = oracle if oracle is not None else Oracle(f)
    stats = oracle.stats
    before = stats.total_calls
    solutions: list[Assignment] = []
    if isinstance(oracle, Oracle):
        solver = CDCLSolver(f, oracle.seed)

        def next_model():
            stats.solver_runs += 1
            model = solver.solve((), (), oracle.conflict_budget)
            if model is not None:
                assert check_model(f, model)
                solver.add_clause(tuple(-(v + 1) if b else v + 1 for v, b in enumerate(model)))
            stats.record(sat=int(model is not None), unsat=int(model is None))
            return model
    else:
        blocking: list[tuple[int, ...]] = []

        def next_model():
            result = oracle.solve((), blocking)
            if result.sat:
                blocking.append(tuple(-(v + 1) if b else v + 1 for v, b in enumerate(result.model)))
            return result.model

    while True:
        model = next_model()
        if model is None:
            break
        solutions.append(model)
        if len(solutions) > max_models:
            solutions.sort()
            return EnumerationResult(None, solutions, True, stats.total_calls - before)
    solutions.sort()
    return EnumerationResult(len(solutions), solutions, False, stats.total_calls - before)
