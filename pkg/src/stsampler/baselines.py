"""Markov-chain baselines: fixed-temperature Metropolis and Gibbs with rejection,
and a SampleSAT-like focused-walk hybrid.

The hybrid is a simplified stand-in, not a port of SampleSAT: it mixes
WalkSAT-style focused flips with Metropolis flips and restarts after every
solution it emits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .cnf import Assignment, Formula, is_tautology
from .rng import MASK64

DEFAULT_BURN_IN = 10**7


@dataclass(frozen=True)
class FlatFormula:
    """CSR arrays of a formula's non-tautological clauses and variable occurrences."""

    num_vars: int
    clause_ptr: np.ndarray
    lit_var: np.ndarray
    lit_pos: np.ndarray
    occ_ptr: np.ndarray
    occ_clause: np.ndarray
    occ_pos: np.ndarray

    @classmethod
    def of(cls, f: Formula) -> "FlatFormula":
        clauses = [c for c in f.clauses if not is_tautology(c)]
        ptr = np.zeros(len(clauses) + 1, dtype=np.int64)
        lit_var, lit_pos = [], []
        occ: list[list[tuple[int, int]]] = [[] for _ in range(f.num_vars)]
        for i, clause in enumerate(clauses):
            for lit in clause:
                lit_var.append(abs(lit) - 1)
                lit_pos.append(1 if lit > 0 else 0)
                occ[abs(lit) - 1].append((i, 1 if lit > 0 else 0))
            ptr[i + 1] = len(lit_var)
        occ_ptr = np.zeros(f.num_vars + 1, dtype=np.int64)
        for v, lst in enumerate(occ):
            occ_ptr[v + 1] = occ_ptr[v] + len(lst)
        flat = [x for lst in occ for x in lst]
        return cls(
            f.num_vars,
            ptr,
            np.array(lit_var, dtype=np.int64),
            np.array(lit_pos, dtype=np.int8),
            occ_ptr,
            np.array([c for c, _ in flat], dtype=np.int64),
            np.array([p for _, p in flat], dtype=np.int8),
        )

    @property
    def num_clauses(self) -> int:
        return len(self.clause_ptr) - 1


class ChainState:
    """Assignment plus delta-maintained energy bookkeeping, seeded RNG included."""

    def __init__(self, f: Formula | FlatFormula, assignment=None, seed: int = 0):
        self.flat = f if isinstance(f, FlatFormula) else FlatFormula.of(f)
        fl = self.flat
        m = fl.num_clauses
        self.rng = np.array([seed & MASK64], dtype=np.uint64)
        if assignment is None:
            assignment = [K.rand_below(self.rng, 2) for _ in range(fl.num_vars)]
        self.assign = np.array(assignment, dtype=np.int8)
        if len(self.assign) != fl.num_vars:
            raise ValueError("assignment length does not match the formula")
        self.sat_count = np.zeros(m, dtype=np.int64)
        self.unsat_list = np.zeros(max(m, 1), dtype=np.int64)
        self.unsat_pos = np.zeros(max(m, 1), dtype=np.int64)
        self.n_unsat = np.zeros(1, dtype=np.int64)
        self.energy = int(K.init_counts(self.assign, fl.clause_ptr, fl.lit_var, fl.lit_pos, self.sat_count))
        K.rebuild_unsat(self.sat_count, self.unsat_list, self.unsat_pos, self.n_unsat)
        self.step = 0

    @property
    def assignment(self) -> Assignment:
        return tuple(int(x) for x in self.assign)

    def delta(self, v: int) -> int:
        """Energy change of flipping 1-based variable ``v``."""
        fl = self.flat
        return int(K.flip_delta(v - 1, self.assign, fl.occ_ptr, fl.occ_clause, fl.occ_pos, self.sat_count))

    def flip(self, v: int) -> int:
        fl = self.flat
        d = int(K.apply_flip(v - 1, self.assign, fl.occ_ptr, fl.occ_clause, fl.occ_pos, self.sat_count,
                             self.unsat_list, self.unsat_pos, self.n_unsat))
        self.energy += d
        return d

    def _args(self):
        fl = self.flat
        return (self.assign, fl.occ_ptr, fl.occ_clause, fl.occ_pos, self.sat_count,
                self.unsat_list, self.unsat_pos, self.n_unsat, self.rng)

    def metropolis_step(self, T: float) -> bool:
        moved, d = K.metropolis_step(T, *self._args())
        self.energy += int(d)
        self.step += 1
        return bool(moved)

    def gibbs_step(self, T: float) -> bool:
        moved, d = K.gibbs_step(T, *self._args())
        self.energy += int(d)
        self.step += 1
        return bool(moved)


@dataclass(frozen=True)
class BoltzmannParams:
    temperature: float
    burn_in: int = DEFAULT_BURN_IN
    thinning: int | None = None  # defaults to 10 * n
    max_steps: int | None = None  # defaults to burn_in + 10**8

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        if self.thinning is not None and self.thinning < 1:
            raise ValueError("thinning must be positive")

    def resolved(self, n: int) -> tuple[int, int]:
        thinning = self.thinning if self.thinning is not None else max(1, 10 * n)
        max_steps = self.max_steps if self.max_steps is not None else self.burn_in + 10**8
        return thinning, max_steps


@dataclass
class ChainResult:
    samples: list[Assignment]
    truncated: bool
    steps: int
    accepted: int
    recorded: int
    energy_histogram: list[int]
    recorded_ones: list[int] = field(default_factory=list)
    state_histogram: list[int] | None = None
    restarts: int = 0
    walk_moves: int = 0
    final_state: Assignment = ()

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.steps if self.steps else 0.0

    @property
    def hit_rate(self) -> float:
        """Fraction of recorded states that were solutions."""
        return self.energy_histogram[0] / self.recorded if self.recorded else 0.0

    def diagnostics(self) -> dict:
        return {
            "steps": self.steps,
            "accepted": self.accepted,
            "acceptance_rate": self.acceptance_rate,
            "recorded": self.recorded,
            "hit_rate": self.hit_rate,
            "emitted": len(self.samples),
            "truncated": self.truncated,
            "restarts": self.restarts,
            "walk_moves": self.walk_moves,
            "energy_histogram": self.energy_histogram,
        }


def _boltzmann_chain(kind: int, f: Formula, p: BoltzmannParams, P: int, seed: int, initial, state_histogram: bool) -> ChainResult:
    if P < 1:
        raise ValueError("P must be >= 1")
    st = ChainState(f, initial, seed)
    fl = st.flat
    n = fl.num_vars
    thinning, max_steps = p.resolved(n)
    capacity = min(P, max(0, (max_steps - p.burn_in) // thinning) + 1)
    samples = np.zeros((capacity, n), dtype=np.int8)
    hist = np.zeros(fl.num_clauses + 1, dtype=np.int64)
    ones = np.zeros(n, dtype=np.int64)
    if state_histogram and n > 24:
        raise ValueError("state histogram only supported for n <= 24")
    states = np.zeros(1 << n if state_histogram else 1, dtype=np.int64)
    steps, accepted, recorded, emitted, energy = K.run_chain(
        kind, float(p.temperature), p.burn_in, thinning, max_steps, P,
        st.assign, st.energy, fl.occ_ptr, fl.occ_clause, fl.occ_pos, st.sat_count,
        st.unsat_list, st.unsat_pos, st.n_unsat, st.rng,
        samples, hist, ones, states,
    )
    return ChainResult(
        samples=[tuple(int(x) for x in row) for row in samples[:emitted]],
        truncated=emitted < P,
        steps=int(steps),
        accepted=int(accepted),
        recorded=int(recorded),
        energy_histogram=[int(x) for x in hist],
        recorded_ones=[int(x) for x in ones],
        state_histogram=[int(x) for x in states] if state_histogram else None,
        final_state=st.assignment,
    )


def sa_sample(f: Formula, p: BoltzmannParams, P: int, seed: int = 0, initial=None, state_histogram: bool = False) -> ChainResult:
    """Fixed-temperature Metropolis chain with rejection of non-solutions.

    After ``burn_in`` steps the state is recorded every ``thinning`` steps and
    emitted when it is a solution, until ``P`` solutions or ``max_steps``.
    Rejected proposals count as steps.
    """
    return _boltzmann_chain(0, f, p, P, seed, initial, state_histogram)


def gibbs_sample(f: Formula, p: BoltzmannParams, P: int, seed: int = 0, initial=None, state_histogram: bool = False) -> ChainResult:
    """Random-scan Gibbs sampler of the Boltzmann law, same recording protocol as :func:`sa_sample`."""
    return _boltzmann_chain(1, f, p, P, seed, initial, state_histogram)


def hybrid_sample(
    f: Formula,
    P: int,
    seed: int = 0,
    walk_prob: float = 0.5,
    noise: float = 0.5,
    restart_every: int = 10**5,
    temperature: float = 0.5,
    max_steps: int = 10**9,
    initial=None,
) -> ChainResult:
    """SampleSAT-like sampler: focused random walk mixed with Metropolis moves.

    Each step is a focused move with probability ``walk_prob`` (random
    unsatisfied clause; with probability ``noise`` a random variable of it,
    else its lowest-energy flip, ties to the lowest index), otherwise a
    Metropolis step at ``temperature``. The state restarts uniformly at random
    after every emitted solution and every ``restart_every`` steps.
    """
    if P < 1:
        raise ValueError("P must be >= 1")
    if not (0.0 <= walk_prob <= 1.0 and 0.0 <= noise <= 1.0):
        raise ValueError("walk_prob and noise must lie in [0, 1]")
    if restart_every < 1:
        raise ValueError("restart_every must be positive")
    st = ChainState(f, initial, seed)
    fl = st.flat
    samples = np.zeros((P, fl.num_vars), dtype=np.int8)
    hist = np.zeros(fl.num_clauses + 1, dtype=np.int64)
    steps, walks, accepted, restarts, emitted = K.run_hybrid(
        float(walk_prob), float(noise), float(temperature), restart_every, max_steps, P,
        st.assign, fl.clause_ptr, fl.lit_var, fl.lit_pos, fl.occ_ptr, fl.occ_clause, fl.occ_pos,
        st.sat_count, st.unsat_list, st.unsat_pos, st.n_unsat, st.rng, samples, hist,
    )
    return ChainResult(
        samples=[tuple(int(x) for x in row) for row in samples[:emitted]],
        truncated=emitted < P,
        steps=int(steps),
        accepted=int(accepted),
        recorded=int(steps),
        energy_histogram=[int(x) for x in hist],
        restarts=int(restarts),
        walk_moves=int(walks),
        final_state=st.assignment,
    )


@dataclass
class EnergyProfile:
    b: int
    temperature: float
    log_probabilities: list[float]

    @property
    def probabilities(self) -> list[float]:
        return [math.exp(x) for x in self.log_probabilities]


def xor_barrier_energy_profile(b: int, T: float) -> EnergyProfile:
    """Stationary law of the energy of an XOR barrier of size ``b`` at temperature ``T``.

    ``2*C(b, i)`` assignments have energy ``i``; the partition function is
    ``2 * (1 + exp(-1/T))**b``.
    """
    if b < 1:
        raise ValueError("b must be >= 1")
    if not T > 0:
        raise ValueError("T must be positive")
    log_z = math.log(2.0) + b * math.log1p(math.exp(-1.0 / T))
    logs = [math.log(2 * math.comb(b, i)) - i / T - log_z for i in range(b + 1)]
    return EnergyProfile(b, T, logs)
