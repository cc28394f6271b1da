"""Generators for benchmark families with hard sampling landscapes.

Variables are laid out as ``x1, y1..yb, z1..`` so that under the identity
ordering the barrier variable ``x1`` sits at the root of the search tree.
Every generated formula carries a provenance comment ``t <family> <params>``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .cnf import Formula
from .rng import SplitMix64

FAMILIES = ("plateau", "xorbarrier", "asymxorbarrier", "embed", "rand3sat")


@dataclass(frozen=True)
class FamilySpec:
    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")

    def generate(self, host: Formula | None = None) -> Formula:
        p = self.params
        if self.family == "plateau":
            return gen_plateau(p["b"])
        if self.family == "xorbarrier":
            return gen_xor_barrier(p["b"])
        if self.family == "asymxorbarrier":
            return gen_asym_xor_barrier(p["b"], p["l"])
        if self.family == "rand3sat":
            return gen_rand3sat(p["n"], p["m"], p.get("seed", 0))
        if host is None:
            raise ValueError("embed needs a host formula")
        return embed_barrier(host, p["z"], p["b"])


def _positive(name: str, value: int) -> None:
    if value < 1:
        raise ValueError(f"{name} must be >= 1, got {value}")


def _xor_clauses(x: int, ys) -> list[tuple[int, ...]]:
    # (x => y) for every y, then (not x => not y) for every y
    return [(-x, y) for y in ys] + [(x, -y) for y in ys]


def gen_plateau(b: int) -> Formula:
    """``(x1|y1) & .. & (x1|yb) & (-x1|z1) & (-x1|-z1)``; exactly two solutions."""
    _positive("b", b)
    x, z = 1, b + 2
    clauses = [(x, 1 + j) for j in range(1, b + 1)] + [(-x, z), (-x, -z)]
    return Formula(b + 2, tuple(clauses), (f"t plateau b={b}",))


def gen_xor_barrier(b: int) -> Formula:
    """``x1 <=> yj`` for j = 1..b as 2b binary clauses; solutions 0..0 and 1..1."""
    _positive("b", b)
    ys = range(2, b + 2)
    return Formula(b + 1, tuple(_xor_clauses(1, ys)), (f"t xorbarrier b={b}",))


def gen_asym_xor_barrier(b: int, l: int) -> Formula:
    """XOR barrier plus ``(x1 | zi)`` for i = 1..l; 2**l + 1 solutions."""
    _positive("b", b)
    _positive("l", l)
    ys = range(2, b + 2)
    zs = range(b + 2, b + 2 + l)
    clauses = _xor_clauses(1, ys) + [(1, z) for z in zs]
    return Formula(b + 1 + l, tuple(clauses), (f"t asymxorbarrier b={b} l={l}",))


def embed_barrier(f: Formula, z: int, b: int) -> Formula:
    """Tie ``b`` fresh variables to ``z`` with XOR-barrier clauses.

    The fresh variables are forced equal to ``z``, so the solution count is
    unchanged.
    """
    _positive("b", b)
    if not 1 <= z <= f.num_vars:
        raise ValueError(f"variable {z} out of range 1..{f.num_vars}")
    ys = range(f.num_vars + 1, f.num_vars + b + 1)
    return Formula(
        f.num_vars + b,
        f.clauses + tuple(_xor_clauses(z, ys)),
        f.comments + (f"t embed z={z} b={b}",),
    )


def gen_rand3sat(n: int, m: int, seed: int = 0) -> Formula:
    """Fixed-clause-length random 3-SAT; duplicate clauses are allowed."""
    if n < 3:
        raise ValueError("rand3sat needs n >= 3")
    if m < 0:
        raise ValueError("m must be non-negative")
    rng = SplitMix64(seed)
    variables = range(1, n + 1)
    clauses = []
    for _ in range(m):
        vs = rng.choose(variables, 3)
        clauses.append(tuple(v if rng.below(2) else -v for v in vs))
    return Formula(n, tuple(clauses), (f"t rand3sat n={n} m={m} seed={seed}",))


def solution_marginals(solutions, num_vars: int) -> list[int]:
    """Number of solutions with each variable set to 1 (index v-1)."""
    ones = [0] * num_vars
    for sol in solutions:
        for i, bit in enumerate(sol):
            ones[i] += bit
    return ones


def select_balanced_variable(f: Formula, solutions=None, max_models: int = 100_000, oracle=None) -> int:
    """Variable whose solution marginal is closest to 1/2; ties go to the lowest index.

    Solutions are enumerated with the oracle when not supplied.
    """
    if solutions is None:
        from .counter import exact_count_enumerate

        result = exact_count_enumerate(f, oracle, max_models)
        if result.exceeded:
            raise ValueError(f"more than {max_models} solutions; cannot compute exact marginals")
        solutions = result.solutions
    z = len(solutions)
    if z == 0:
        raise ValueError("formula is unsatisfiable")
    ones = solution_marginals(solutions, f.num_vars)
    # |ones/z - 1/2| compared exactly as |2*ones - z|
    return min(range(1, f.num_vars + 1), key=lambda v: (abs(2 * ones[v - 1] - z), v))
