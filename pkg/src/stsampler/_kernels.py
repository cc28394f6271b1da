"""Numba kernels for single-flip Markov chains over CNF energies.

State is kept as per-clause counts of true literals so a flip costs time
proportional to the occurrences of the flipped variable. Tautological clauses
are excluded by the caller (they never contribute energy).

Randomness comes from an inline SplitMix64 stream held in a one-element
``uint64`` array; bounded integers use modulo reduction (bias below n/2**64).
"""
import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def next64(state):
    state[0] = state[0] + _GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def rand_below(state, n):
    return np.int64(next64(state) % np.uint64(n))


@njit(cache=True)
def rand_unit(state):
    return np.float64(next64(state) >> _S11) * _INV53


@njit(cache=True)
def init_counts(assign, clause_ptr, lit_var, lit_pos, sat_count):
    """Fill true-literal counts; returns the energy."""
    m = clause_ptr.shape[0] - 1
    e = 0
    for c in range(m):
        s = 0
        for j in range(clause_ptr[c], clause_ptr[c + 1]):
            if assign[lit_var[j]] == lit_pos[j]:
                s += 1
        sat_count[c] = s
        if s == 0:
            e += 1
    return e


@njit(cache=True)
def flip_delta(v, assign, occ_ptr, occ_clause, occ_pos, sat_count):
    """Energy change if variable ``v`` (0-based) were flipped."""
    d = 0
    a = assign[v]
    for j in range(occ_ptr[v], occ_ptr[v + 1]):
        c = occ_clause[j]
        if occ_pos[j] == a:
            if sat_count[c] == 1:
                d += 1
        elif sat_count[c] == 0:
            d -= 1
    return d


@njit(cache=True)
def apply_flip(v, assign, occ_ptr, occ_clause, occ_pos, sat_count, unsat_list, unsat_pos, n_unsat):
    """Flip ``v`` in place, maintaining counts and the unsatisfied-clause list.

    ``n_unsat`` is a one-element array; returns the energy change.
    """
    a = assign[v]
    d = 0
    for j in range(occ_ptr[v], occ_ptr[v + 1]):
        c = occ_clause[j]
        if occ_pos[j] == a:
            sat_count[c] -= 1
            if sat_count[c] == 0:
                d += 1
                unsat_pos[c] = n_unsat[0]
                unsat_list[n_unsat[0]] = c
                n_unsat[0] += 1
        else:
            sat_count[c] += 1
            if sat_count[c] == 1:
                d -= 1
                last = unsat_list[n_unsat[0] - 1]
                p = unsat_pos[c]
                unsat_list[p] = last
                unsat_pos[last] = p
                n_unsat[0] -= 1
    assign[v] = 1 - a
    return d


@njit(cache=True)
def rebuild_unsat(sat_count, unsat_list, unsat_pos, n_unsat):
    n_unsat[0] = 0
    for c in range(sat_count.shape[0]):
        if sat_count[c] == 0:
            unsat_pos[c] = n_unsat[0]
            unsat_list[n_unsat[0]] = c
            n_unsat[0] += 1


@njit(cache=True)
def metropolis_step(T, assign, occ_ptr, occ_clause, occ_pos, sat_count, unsat_list, unsat_pos, n_unsat, rng):
    """One Metropolis single-flip step. Returns (accepted, energy change)."""
    n = assign.shape[0]
    v = rand_below(rng, n)
    d = flip_delta(v, assign, occ_ptr, occ_clause, occ_pos, sat_count)
    if d > 0:
        if rand_unit(rng) >= np.exp(-d / T):
            return False, 0
    apply_flip(v, assign, occ_ptr, occ_clause, occ_pos, sat_count, unsat_list, unsat_pos, n_unsat)
    return True, d


@njit(cache=True)
def gibbs_step(T, assign, occ_ptr, occ_clause, occ_pos, sat_count, unsat_list, unsat_pos, n_unsat, rng):
    """Resample one uniformly chosen variable from its conditional. Returns (changed, energy change)."""
    n = assign.shape[0]
    v = rand_below(rng, n)
    d = flip_delta(v, assign, occ_ptr, occ_clause, occ_pos, sat_count)
    # energy with v=1 minus energy with v=0
    diff = d if assign[v] == 0 else -d
    p_one = 1.0 / (1.0 + np.exp(diff / T))
    new = 1 if rand_unit(rng) < p_one else 0
    if new == assign[v]:
        return False, 0
    apply_flip(v, assign, occ_ptr, occ_clause, occ_pos, sat_count, unsat_list, unsat_pos, n_unsat)
    return True, d


@njit(cache=True)
def _record(assign, energy, hist, ones, state_hist, samples, emitted):
    hist[energy] += 1
    n = assign.shape[0]
    for i in range(n):
        ones[i] += assign[i]
    if state_hist.shape[0] > 1:
        code = 0
        for i in range(n):
            code |= np.int64(assign[i]) << i
        state_hist[code] += 1
    if energy == 0 and emitted < samples.shape[0]:
        for i in range(n):
            samples[emitted, i] = assign[i]
        return emitted + 1
    return emitted


@njit(cache=True)
def run_chain(
    kind, T, burn_in, thinning, max_steps, target,
    assign, energy, occ_ptr, occ_clause, occ_pos, sat_count,
    unsat_list, unsat_pos, n_unsat, rng,
    samples, hist, ones, state_hist,
):
    """Fixed-temperature chain with burn-in, thinning and rejection of non-solutions.

    ``kind`` 0 is Metropolis, 1 is Gibbs. Returns
    (steps, accepted, recorded, emitted, final energy).
    """
    accepted = 0
    recorded = 0
    emitted = 0
    step = 0
    while step < max_steps and emitted < target:
        if kind == 0:
            moved, d = metropolis_step(T, assign, occ_ptr, occ_clause, occ_pos, sat_count, unsat_list, unsat_pos, n_unsat, rng)
        else:
            moved, d = gibbs_step(T, assign, occ_ptr, occ_clause, occ_pos, sat_count, unsat_list, unsat_pos, n_unsat, rng)
        step += 1
        if moved:
            accepted += 1
            energy += d
        if step > burn_in and (step - burn_in) % thinning == 0:
            recorded += 1
            emitted = _record(assign, energy, hist, ones, state_hist, samples, emitted)
    return step, accepted, recorded, emitted, energy


@njit(cache=True)
def _random_restart(assign, rng):
    for i in range(assign.shape[0]):
        assign[i] = np.int8(rand_below(rng, 2))


@njit(cache=True)
def run_hybrid(
    walk_prob, noise, T, restart_every, max_steps, target,
    assign, clause_ptr, lit_var, lit_pos, occ_ptr, occ_clause, occ_pos, sat_count,
    unsat_list, unsat_pos, n_unsat, rng, samples, hist,
):
    """Focused-walk / Metropolis mixture with restarts; emits each solution reached.

    Returns (steps, walk moves, sa accepted, restarts, emitted).
    """
    energy = init_counts(assign, clause_ptr, lit_var, lit_pos, sat_count)
    rebuild_unsat(sat_count, unsat_list, unsat_pos, n_unsat)
    step = 0
    walks = 0
    accepted = 0
    restarts = 0
    emitted = 0
    since_restart = 0
    n = assign.shape[0]
    while emitted < target:
        if energy == 0:
            for i in range(n):
                samples[emitted, i] = assign[i]
            emitted += 1
            if emitted >= target:
                break
            _random_restart(assign, rng)
            energy = init_counts(assign, clause_ptr, lit_var, lit_pos, sat_count)
            rebuild_unsat(sat_count, unsat_list, unsat_pos, n_unsat)
            restarts += 1
            since_restart = 0
            continue
        if step >= max_steps:
            break
        if since_restart >= restart_every:
            _random_restart(assign, rng)
            energy = init_counts(assign, clause_ptr, lit_var, lit_pos, sat_count)
            rebuild_unsat(sat_count, unsat_list, unsat_pos, n_unsat)
            restarts += 1
            since_restart = 0
            continue
        step += 1
        since_restart += 1
        if walk_prob > 0.0 and rand_unit(rng) < walk_prob:
            walks += 1
            c = unsat_list[rand_below(rng, n_unsat[0])]
            lo = clause_ptr[c]
            width = clause_ptr[c + 1] - lo
            if rand_unit(rng) < noise:
                v = lit_var[lo + rand_below(rng, width)]
            else:
                v = lit_var[lo]
                best = flip_delta(v, assign, occ_ptr, occ_clause, occ_pos, sat_count)
                for j in range(lo + 1, lo + width):
                    u = lit_var[j]
                    du = flip_delta(u, assign, occ_ptr, occ_clause, occ_pos, sat_count)
                    if du < best or (du == best and u < v):
                        best = du
                        v = u
            energy += apply_flip(v, assign, occ_ptr, occ_clause, occ_pos, sat_count, unsat_list, unsat_pos, n_unsat)
        else:
            moved, d = metropolis_step(T, assign, occ_ptr, occ_clause, occ_pos, sat_count, unsat_list, unsat_pos, n_unsat, rng)
            if moved:
                accepted += 1
                energy += d
        if energy < hist.shape[0]:
            hist[energy] += 1
    return step, walks, accepted, restarts, emitted
