"""CNF formulas, DIMACS I/O, assignments and the clause-violation energy.

Variables are 1-based as in DIMACS. An assignment is a tuple of 0/1 ints
indexed by ``variable - 1``; its canonical text form lists the bits in the
position order of a :class:`VariableOrdering`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

Clause = tuple[int, ...]
Assignment = tuple[int, ...]


class DimacsError(ValueError):
    """Malformed DIMACS input. ``line`` is the 1-based offending line (0 if none)."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"{message}, line {line}" if line else message)


def normalize_clause(literals: Iterable[int]) -> Clause:
    """Drop repeated literals, keeping first-occurrence order."""
    return tuple(dict.fromkeys(int(lit) for lit in literals))


def is_tautology(clause: Clause) -> bool:
    lits = set(clause)
    return any(-lit in lits for lit in lits)


@dataclass(frozen=True)
class Formula:
    """Immutable CNF formula over variables ``1..num_vars``."""

    num_vars: int
    clauses: tuple[Clause, ...]
    comments: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.num_vars < 0:
            raise ValueError("num_vars must be non-negative")
        clauses = tuple(normalize_clause(c) for c in self.clauses)
        for i, clause in enumerate(clauses):
            if not clause:
                raise ValueError(f"clause {i} is empty")
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range in clause {i}")
        object.__setattr__(self, "clauses", clauses)
        object.__setattr__(self, "comments", tuple(self.comments))

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    @cached_property
    def tautologies(self) -> tuple[int, ...]:
        """Indices of clauses containing both polarities of some variable."""
        return tuple(i for i, c in enumerate(self.clauses) if is_tautology(c))

    def with_comments(self, comments: Sequence[str]) -> "Formula":
        return Formula(self.num_vars, self.clauses, tuple(comments))

    @cached_property
    def literal_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Padded ``(m, w)`` arrays of variable indices (0-based) and signs.

        Padding slots repeat the clause's first literal, which keeps vectorised
        clause evaluation branch-free.
        """
        width = max((len(c) for c in self.clauses), default=1)
        var = np.zeros((len(self.clauses), width), dtype=np.int64)
        pos = np.zeros((len(self.clauses), width), dtype=bool)
        for i, clause in enumerate(self.clauses):
            padded = list(clause) + [clause[0]] * (width - len(clause))
            var[i] = [abs(lit) - 1 for lit in padded]
            pos[i] = [lit > 0 for lit in padded]
        return var, pos


@dataclass(frozen=True)
class VariableOrdering:
    """Bijection from positions ``1..n`` to variable indices.

    ``permutation[p - 1]`` is the variable at position ``p``.
    """

    permutation: tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(v) for v in self.permutation)
        if sorted(perm) != list(range(1, len(perm) + 1)):
            raise ValueError("ordering must be a permutation of 1..n")
        object.__setattr__(self, "permutation", perm)

    @classmethod
    def identity(cls, n: int) -> "VariableOrdering":
        return cls(tuple(range(1, n + 1)))

    def __len__(self) -> int:
        return len(self.permutation)


def parse_dimacs(text: str | Iterable[str]) -> Formula:
    """Parse DIMACS CNF text (a string or an iterable of lines)."""
    lines = text.splitlines() if isinstance(text, str) else (l.rstrip("\n") for l in text)
    comments: list[str] = []
    header: tuple[int, int] | None = None
    clauses: list[Clause] = []
    current: list[int] = []
    lineno = 0
    last_clause_line = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            if header is None:
                comments.append(line[2:] if line.startswith("c ") else line[1:])
            continue
        if line.startswith("%"):
            # SATLIB files end with a "%" trailer
            break
        if line.startswith("p"):
            if header is not None:
                raise DimacsError("duplicate header", lineno)
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError("malformed header", lineno)
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError("malformed header", lineno) from None
            if n < 0 or m < 0:
                raise DimacsError("malformed header", lineno)
            header = (n, m)
            continue
        if header is None:
            raise DimacsError("missing header", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"bad token {tok!r}", lineno) from None
            if lit == 0:
                if not current:
                    raise DimacsError("empty clause", lineno)
                clauses.append(normalize_clause(current))
                current = []
            else:
                if abs(lit) > header[0]:
                    raise DimacsError("literal out of range", lineno)
                current.append(lit)
            last_clause_line = lineno
    if header is None:
        raise DimacsError("missing header", lineno)
    if current:
        clauses.append(normalize_clause(current))
    if len(clauses) != header[1]:
        raise DimacsError(
            f"clause count mismatch: header says {header[1]}, found {len(clauses)}",
            last_clause_line or lineno,
        )
    return Formula(header[0], tuple(clauses), tuple(comments))


def serialize_dimacs(f: Formula) -> str:
    out = [f"c {c}" if c else "c" for c in f.comments]
    out.append(f"p cnf {f.num_vars} {len(f.clauses)}")
    out.extend(" ".join(map(str, clause)) + " 0" for clause in f.clauses)
    return "\n".join(out) + "\n"


def read_dimacs(path) -> Formula:
    with open(path, encoding="utf-8") as fh:
        return parse_dimacs(fh.read())


def write_dimacs(f: Formula, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_dimacs(f))


def _check_length(f: Formula, a: Sequence[int]) -> None:
    if len(a) != f.num_vars:
        raise ValueError(f"assignment has length {len(a)}, formula has {f.num_vars} variables")


def literal_true(lit: int, a: Sequence[int]) -> bool:
    return bool(a[lit - 1]) if lit > 0 else not a[-lit - 1]


def clause_satisfied(clause: Clause, a: Sequence[int]) -> bool:
    return any(literal_true(lit, a) for lit in clause)


def energy(f: Formula, a: Sequence[int]) -> int:
    """Number of clauses of ``f`` violated by ``a``."""
    _check_length(f, a)
    return sum(1 for clause in f.clauses if not clause_satisfied(clause, a))


def is_solution(f: Formula, a: Sequence[int]) -> bool:
    _check_length(f, a)
    return all(clause_satisfied(clause, a) for clause in f.clauses)


def energies(f: Formula, batch: np.ndarray) -> np.ndarray:
    """Vectorised energy of each row of a ``(k, n)`` 0/1 array."""
    batch = np.asarray(batch, dtype=bool)
    if batch.ndim != 2 or batch.shape[1] != f.num_vars:
        raise ValueError("batch must have shape (k, num_vars)")
    if not f.clauses:
        return np.zeros(len(batch), dtype=np.int64)
    var, pos = f.literal_matrix
    lit_vals = batch[:, var] == pos  # (k, m, w)
    return (~lit_vals.any(axis=2)).sum(axis=1)


def assignment_to_bits(a: Sequence[int], ordering: VariableOrdering | None = None) -> str:
    """Canonical text form: bits in ordering-position order."""
    if ordering is None:
        return "".join("1" if v else "0" for v in a)
    return "".join("1" if a[v - 1] else "0" for v in ordering.permutation)


def assignment_from_bits(bits: str, ordering: VariableOrdering | None = None) -> Assignment:
    if ordering is None:
        return tuple(1 if ch == "1" else 0 for ch in bits)
    if len(bits) != len(ordering):
        raise ValueError("bit string length does not match ordering")
    values = [0] * len(bits)
    for ch, v in zip(bits, ordering.permutation):
        values[v - 1] = 1 if ch == "1" else 0
    return tuple(values)
