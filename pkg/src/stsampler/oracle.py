"""Complete SAT oracles used by the sampler.

:class:`CDCLSolver` is a small conflict-driven clause-learning solver (two
watched literals, 1-UIP learning, VSIDS-style activities with phase saving,
Luby restarts). Assumptions are decided before any free decision, and the
extra clauses of a query are dropped again when the query returns, together
with everything learned while answering it. Activities and saved phases are
reset per query, so the SAT/UNSAT answer never depends on earlier queries and
the model is reproducible from the seed and the query sequence.

:class:`Oracle` wraps a solver with call metering; :class:`BruteForceOracle`
and :class:`ExternalOracle` expose the same ``solve`` signature.
"""
from __future__ import annotations

import heapq
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .cnf import Assignment, Clause, Formula, clause_satisfied, is_tautology, serialize_dimacs
from .rng import SplitMix64

TRUE, FALSE, UNDEF = 1, 0, -1


class BudgetExhausted(RuntimeError):
    """The solver hit its conflict budget before deciding the query."""


class BruteForceCapExceeded(ValueError):
    pass


@dataclass
class OracleStats:
    total_calls: int = 0
    sat_answers: int = 0
    unsat_answers: int = 0
    propagations: int = 0
    # solver invocations actually executed; can be below total_calls when the
    # sampler replays memoised descendant sets
    solver_runs: int = 0

    def record(self, sat: int = 0, unsat: int = 0) -> None:
        self.sat_answers += sat
        self.unsat_answers += unsat
        self.total_calls += sat + unsat

    def snapshot(self) -> "OracleStats":
        return OracleStats(**self.as_dict())

    def as_dict(self) -> dict:
        return dict(
            total_calls=self.total_calls,
            sat_answers=self.sat_answers,
            unsat_answers=self.unsat_answers,
            propagations=self.propagations,
            solver_runs=self.solver_runs,
        )


@dataclass(frozen=True)
class OracleQuery:
    formula: Formula
    assumptions: tuple[int, ...] = ()
    extra_clauses: tuple[Clause, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "assumptions", tuple(self.assumptions))
        object.__setattr__(self, "extra_clauses", tuple(tuple(c) for c in self.extra_clauses))
        n = self.formula.num_vars
        for lit in self.assumptions:
            if lit == 0 or abs(lit) > n:
                raise ValueError(f"assumption literal {lit} out of range")
        for clause in self.extra_clauses:
            for lit in clause:
                if lit == 0 or abs(lit) > n:
                    raise ValueError(f"extra clause literal {lit} out of range")


@dataclass(frozen=True)
class OracleResult:
    sat: bool
    model: Assignment | None = None

    def __bool__(self) -> bool:
        return self.sat


UNSAT = OracleResult(False)


def consistent(assumptions: Iterable[int]) -> bool:
    seen = set(assumptions)
    return not any(-lit in seen for lit in seen)


def check_model(formula: Formula, model: Sequence[int], assumptions=(), extra_clauses=()) -> bool:
    """True iff ``model`` satisfies the formula, the assumptions and the extra clauses."""
    if len(model) != formula.num_vars:
        return False
    for lit in assumptions:
        if bool(model[abs(lit) - 1]) != (lit > 0):
            return False
    return all(clause_satisfied(c, model) for c in formula.clauses) and all(
        clause_satisfied(c, model) for c in extra_clauses
    )


def _luby(y: float, x: int) -> float:
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x = x % size
    return y**seq


class CDCLSolver:
    """CDCL search over a fixed clause database.

    Literals are encoded as ``2*v`` (positive) and ``2*v + 1`` (negative) for
    1-based variable ``v``.
    """

    restart_base = 100
    var_decay = 0.95

    def __init__(self, formula: Formula, seed: int = 0):
        self.n = n = formula.num_vars
        self.clauses: list[list[int]] = []
        self.watches: list[list[int]] = [[] for _ in range(2 * n + 2)]
        self.units: list[int] = []
        self.trivially_unsat = False
        self.val = [UNDEF] * (2 * n + 2)
        self.level = [0] * (n + 1)
        self.reason = [-1] * (n + 1)
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.propagations = 0
        # deterministic initial decision order; a nonzero seed permutes ties
        order = list(range(1, n + 1))
        if seed:
            order = SplitMix64(seed).choose(order, n)
        self._tiebreak = [0] * (n + 1)
        for rank, v in enumerate(order):
            self._tiebreak[v] = rank
        self._base_heap = sorted((0.0, self._tiebreak[v], v) for v in range(1, self.n + 1))
        self.base_size = 0
        for clause in formula.clauses:
            self.add_clause(clause)

    @staticmethod
    def _enc(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    def add_clause(self, clause: Iterable[int]) -> None:
        """Add a permanent clause. Only valid between queries."""
        self._attach([self._enc(l) for l in dict.fromkeys(clause)], self.units)
        self.base_size = len(self.clauses)

    def _attach(self, lits: list[int], units: list[int]) -> None:
        if not lits:
            self.trivially_unsat = True
            return
        if len(lits) == 1:
            units.append(lits[0])
            return
        if any((l ^ 1) in lits for l in lits):
            return
        ci = len(self.clauses)
        self.clauses.append(lits)
        self.watches[lits[0]].append(ci)
        self.watches[lits[1]].append(ci)

    # -- trail ---------------------------------------------------------------

    def _assign(self, lit: int, reason: int) -> None:
        self.val[lit] = TRUE
        self.val[lit ^ 1] = FALSE
        v = lit >> 1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _backtrack(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        stop = self.trail_lim[lvl]
        val, phase, heap, act, tb = self.val, self.phase, self.heap, self.act, self._tiebreak
        for lit in self.trail[stop:]:
            val[lit] = UNDEF
            val[lit ^ 1] = UNDEF
            v = lit >> 1
            phase[v] = lit & 1
            heapq.heappush(heap, (-act[v], tb[v], v))
        del self.trail[stop:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def _propagate(self) -> int:
        """Unit propagation; returns a conflicting clause index or -1."""
        val, clauses, watches, trail = self.val, self.clauses, self.watches, self.trail
        props = 0
        while self.qhead < len(trail):
            false_lit = trail[self.qhead] ^ 1
            self.qhead += 1
            props += 1
            ws = watches[false_lit]
            kept = []
            for idx, ci in enumerate(ws):
                c = clauses[ci]
                if c[0] == false_lit:
                    c[0] = c[1]
                    c[1] = false_lit
                first = c[0]
                if val[first] == TRUE:
                    kept.append(ci)
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if val[lk] != FALSE:
                        c[1] = lk
                        c[k] = false_lit
                        watches[lk].append(ci)
                        break
                else:
                    kept.append(ci)
                    if val[first] == FALSE:
                        kept.extend(ws[idx + 1 :])
                        watches[false_lit] = kept
                        self.qhead = len(trail)
                        self.propagations += props
                        return ci
                    self._assign(first, ci)
            watches[false_lit] = kept
        self.propagations += props
        return -1

    def _bump(self, v: int) -> None:
        act = self.act
        act[v] += self.var_inc
        if act[v] > 1e100:
            for u in range(1, self.n + 1):
                act[u] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-act[u], self._tiebreak[u], u) for u in range(1, self.n + 1) if self.val[2 * u] == UNDEF]
            heapq.heapify(self.heap)
        elif self.val[2 * v] == UNDEF:
            heapq.heappush(self.heap, (-act[v], self._tiebreak[v], v))

    def _analyze(self, confl: int) -> tuple[list[int], int]:
        seen = self.seen
        level, reason, trail, clauses = self.level, self.reason, self.trail, self.clauses
        cur = len(self.trail_lim)
        learnt = [0]
        path = 0
        p = -1
        idx = len(trail) - 1
        touched = []
        while True:
            c = clauses[confl]
            for q in c if p < 0 else c[1:]:
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    seen[v] = 1
                    touched.append(v)
                    self._bump(v)
                    if level[v] >= cur:
                        path += 1
                    else:
                        learnt.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            confl = reason[p >> 1]
            seen[p >> 1] = 0
            path -= 1
            if path == 0:
                break
        learnt[0] = p ^ 1
        for v in touched:
            seen[v] = 0
        if len(learnt) == 1:
            return learnt, 0
        best = 1
        for i in range(2, len(learnt)):
            if level[learnt[i] >> 1] > level[learnt[best] >> 1]:
                best = i
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[learnt[1] >> 1]

    def _pick_branch(self) -> int:
        heap, val = self.heap, self.val
        while heap:
            _, _, v = heapq.heappop(heap)
            if val[2 * v] == UNDEF:
                return 2 * v + self.phase[v]
        return -1

    # -- queries -------------------------------------------------------------

    def _reset(self) -> None:
        for lit in self.trail:
            self.val[lit] = UNDEF
            self.val[lit ^ 1] = UNDEF
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        if len(self.clauses) > self.base_size:
            base = self.base_size
            del self.clauses[base:]
            self.watches = [[ci for ci in w if ci < base] for w in self.watches]

    def solve(
        self,
        assumptions: Sequence[int] = (),
        extra_clauses: Sequence[Sequence[int]] = (),
        conflict_budget: int | None = None,
    ) -> Assignment | None:
        """Return a model of clauses + extra_clauses under assumptions, or None."""
        n = self.n
        self.act = [0.0] * (n + 1)
        self.var_inc = 1.0
        self.phase = [1] * (n + 1)  # 1 selects the negative literal: default polarity false
        self.heap = list(self._base_heap)
        self.seen = [0] * (n + 1)
        try:
            return self._search([self._enc(l) for l in assumptions], extra_clauses, conflict_budget)
        finally:
            self._reset()

    def _search(self, assumptions, extra_clauses, budget):
        if self.trivially_unsat:
            return None
        units = list(self.units)
        for clause in extra_clauses:
            lits = [self._enc(l) for l in dict.fromkeys(clause)]
            if not lits:
                return None
            self._attach(lits, units)
        for lit in units:
            if self.val[lit] == FALSE:
                return None
            if self.val[lit] == UNDEF:
                self._assign(lit, -1)
        conflicts = 0
        restart_no = 0
        restart_limit = self.restart_base * _luby(2.0, 0)
        since_restart = 0
        n_assumps = len(assumptions)
        while True:
            confl = self._propagate()
            if confl >= 0:
                conflicts += 1
                since_restart += 1
                if not self.trail_lim:
                    return None
                if budget is not None and conflicts > budget:
                    raise BudgetExhausted(f"conflict budget {budget} exhausted")
                learnt, bj = self._analyze(confl)
                self._backtrack(bj)
                if len(learnt) == 1:
                    self._assign(learnt[0], -1)
                else:
                    ci = len(self.clauses)
                    self.clauses.append(learnt)
                    self.watches[learnt[0]].append(ci)
                    self.watches[learnt[1]].append(ci)
                    self._assign(learnt[0], ci)
                self.var_inc /= self.var_decay
                continue
            if since_restart >= restart_limit:
                restart_no += 1
                restart_limit = self.restart_base * _luby(2.0, restart_no)
                since_restart = 0
                self._backtrack(0)
                continue
            dl = len(self.trail_lim)
            if dl < n_assumps:
                p = assumptions[dl]
                if self.val[p] == FALSE:
                    return None
                self.trail_lim.append(len(self.trail))
                if self.val[p] == UNDEF:
                    self._assign(p, -1)
                continue
            lit = self._pick_branch()
            if lit < 0:
                val = self.val
                return tuple(1 if val[2 * v] == TRUE else 0 for v in range(1, self.n + 1))
            self.trail_lim.append(len(self.trail))
            self._assign(lit, -1)


class Oracle:
    """Metered complete oracle backed by :class:`CDCLSolver`."""

    def __init__(
        self,
        formula: Formula,
        seed: int = 0,
        conflict_budget: int | None = None,
        verify: bool = True,
    ):
        self.formula = formula
        self.seed = seed
        self.conflict_budget = conflict_budget
        self.verify = verify
        self.stats = OracleStats()
        self.solver = CDCLSolver(formula, seed)
        # memo of descendant sets, filled by the sampler (pure function of the
        # formula, so sharing it across runs does not change any output)
        self.descendant_memo: dict = {}

    def solve(self, assumptions: Sequence[int] = (), extra_clauses: Sequence[Clause] = ()) -> OracleResult:
        stats = self.stats
        if not consistent(assumptions):
            stats.record(unsat=1)
            return UNSAT
        stats.solver_runs += 1
        before = self.solver.propagations
        model = self.solver.solve(assumptions, extra_clauses, self.conflict_budget)
        stats.propagations += self.solver.propagations - before
        if model is None:
            stats.record(unsat=1)
            return UNSAT
        if self.verify and not check_model(self.formula, model, assumptions, extra_clauses):
            raise AssertionError("solver returned a model that violates the query")
        stats.record(sat=1)
        return OracleResult(True, model)

    def query(self, q: OracleQuery) -> OracleResult:
        if q.formula is not self.formula and q.formula != self.formula:
            raise ValueError("query formula does not match this oracle")
        return self.solve(q.assumptions, q.extra_clauses)


# -- brute force ---------------------------------------------------------------

BRUTE_FORCE_CAP = 25
_CHUNK_BITS = 16


def _satisfied_rows(clauses: Sequence[Clause], batch: np.ndarray) -> np.ndarray:
    ok = np.ones(len(batch), dtype=bool)
    for clause in clauses:
        sat = np.zeros(len(batch), dtype=bool)
        for lit in clause:
            col = batch[:, abs(lit) - 1]
            sat |= col if lit > 0 else ~col
        ok &= sat
    return ok


def iter_solution_blocks(
    formula: Formula,
    assumptions: Sequence[int] = (),
    extra_clauses: Sequence[Clause] = (),
    cap: int = BRUTE_FORCE_CAP,
):
    """Yield boolean arrays of satisfying assignments, in lexicographic order.

    Lexicographic means variable 1 is the most significant bit. Assumed
    variables are fixed rather than enumerated.
    """
    n = formula.num_vars
    if n > cap:
        raise BruteForceCapExceeded(f"{n} variables exceeds brute-force cap {cap}")
    if not consistent(assumptions):
        return
    fixed = {abs(l) - 1: l > 0 for l in assumptions}
    free = [v for v in range(n) if v not in fixed]
    f = len(free)
    clauses = [c for c in formula.clauses if not is_tautology(c)] + [tuple(c) for c in extra_clauses]
    total = 1 << f
    step = 1 << min(f, _CHUNK_BITS)
    shifts = np.arange(f - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, step):
        idx = np.arange(start, min(start + step, total), dtype=np.int64)
        batch = np.empty((len(idx), n), dtype=bool)
        if f:
            batch[:, free] = ((idx[:, None] >> shifts[None, :]) & 1).astype(bool)
        for v, b in fixed.items():
            batch[:, v] = b
        rows = batch[_satisfied_rows(clauses, batch)]
        if len(rows):
            yield rows


def brute_force_solutions(formula: Formula, cap: int = BRUTE_FORCE_CAP) -> list[Assignment]:
    """All solutions in lexicographic order."""
    out: list[Assignment] = []
    for block in iter_solution_blocks(formula, cap=cap):
        out.extend(tuple(int(x) for x in row) for row in block)
    return out


def brute_force_count(formula: Formula, cap: int = BRUTE_FORCE_CAP) -> int:
    return sum(len(b) for b in iter_solution_blocks(formula, cap=cap))


def brute_force_solve(q: OracleQuery, cap: int = BRUTE_FORCE_CAP) -> OracleResult:
    """Exhaustive-scan oracle; returns the lexicographically first model."""
    for block in iter_solution_blocks(q.formula, q.assumptions, q.extra_clauses, cap):
        return OracleResult(True, tuple(int(x) for x in block[0]))
    return UNSAT


class BruteForceOracle:
    """Metered exhaustive oracle with the :class:`Oracle` interface."""

    def __init__(self, formula: Formula, cap: int = BRUTE_FORCE_CAP):
        if formula.num_vars > cap:
            raise BruteForceCapExceeded(f"{formula.num_vars} variables exceeds brute-force cap {cap}")
        self.formula = formula
        self.cap = cap
        self.stats = OracleStats()
        self.descendant_memo: dict = {}

    def solve(self, assumptions=(), extra_clauses=()) -> OracleResult:
        self.stats.solver_runs += 1
        result = brute_force_solve(OracleQuery(self.formula, assumptions, extra_clauses), self.cap)
        self.stats.record(sat=int(result.sat), unsat=int(not result.sat))
        return result

    def query(self, q: OracleQuery) -> OracleResult:
        return self.solve(q.assumptions, q.extra_clauses)


# -- external process ----------------------------------------------------------


class ExternalOracle:
    """Shell out to a DIMACS solver per query.

    ``command`` is a template with ``{input}`` and optionally ``{output}``
    placeholders, e.g. ``"minisat {input} {output}"``. The model is read from
    the output file if one is named, otherwise from stdout; both MiniSat's
    ``SAT``/``UNSAT`` file format and competition-style ``s``/``v`` lines are
    understood. Exit codes 10/20 are accepted as SAT/UNSAT.
    """

    def __init__(self, formula: Formula, command: str, timeout: float | None = None):
        self.formula = formula
        self.command = command
        self.timeout = timeout
        self.stats = OracleStats()
        self.descendant_memo: dict = {}

    def solve(self, assumptions=(), extra_clauses=()) -> OracleResult:
        f = self.formula
        if not consistent(assumptions):
            self.stats.record(unsat=1)
            return UNSAT
        clauses = f.clauses + tuple((lit,) for lit in assumptions) + tuple(tuple(c) for c in extra_clauses)
        text = serialize_dimacs(Formula(f.num_vars, clauses))
        with tempfile.TemporaryDirectory() as tmp:
            inp = os.path.join(tmp, "query.cnf")
            out = os.path.join(tmp, "result.txt")
            with open(inp, "w") as fh:
                fh.write(text)
            argv = [a.format(input=inp, output=out) for a in shlex.split(self.command)]
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=self.timeout)
            self.stats.solver_runs += 1
            uses_file = "{output}" in self.command
            payload = ""
            if uses_file and os.path.exists(out):
                with open(out) as fh:
                    payload = fh.read()
            else:
                payload = proc.stdout
        sat, model = _parse_solver_output(payload, f.num_vars, proc.returncode)
        if not sat:
            self.stats.record(unsat=1)
            return UNSAT
        if not check_model(f, model, assumptions, extra_clauses):
            raise AssertionError("external solver returned a model that violates the query")
        self.stats.record(sat=1)
        return OracleResult(True, model)

    def query(self, q: OracleQuery) -> OracleResult:
        return self.solve(q.assumptions, q.extra_clauses)


def _parse_solver_output(text: str, n: int, returncode: int) -> tuple[bool, Assignment | None]:
    status = None
    lits: list[int] = []
    for line in text.splitlines():
        tok = line.split()
        if not tok:
            continue
        head = tok[0]
        if head in ("SAT", "SATISFIABLE") or (head == "s" and tok[1:2] == ["SATISFIABLE"]):
            status = True
        elif head in ("UNSAT", "UNSATISFIABLE") or (head == "s" and tok[1:2] == ["UNSATISFIABLE"]):
            status = False
        elif head == "v":
            lits.extend(int(x) for x in tok[1:])
        elif status is True and head.lstrip("-").isdigit():
            lits.extend(int(x) for x in tok)
    if status is None:
        if returncode == 10:
            status = True
        elif returncode == 20:
            status = False
        else:
            raise RuntimeError(f"could not parse solver output (exit code {returncode})")
    if not status:
        return False, None
    values = [0] * n
    for lit in lits:
        if lit != 0 and abs(lit) <= n:
            values[abs(lit) - 1] = 1 if lit > 0 else 0
    return True, tuple(values)


def make_oracle(formula: Formula, backend: str = "cdcl", **kwargs):
    """Oracle factory; one instance per worker."""
    if backend == "cdcl":
        return Oracle(formula, **kwargs)
    if backend == "bruteforce":
        return BruteForceOracle(formula, **kwargs)
    if backend == "external":
        return ExternalOracle(formula, **kwargs)
    raise ValueError(f"unknown oracle backend {backend!r}")
