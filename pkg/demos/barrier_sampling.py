"""
Sampling across an energy barrier
=================================

An XOR barrier has exactly two solutions, all zeros and all ones, and every
single-flip path between them climbs over half the clauses. A Metropolis
chain started in one basin never sees the other one; the search-tree sampler
does not walk, so the barrier costs it nothing.
"""

from collections import Counter

from stsampler.baselines import BoltzmannParams, sa_sample, xor_barrier_energy_profile
from stsampler.instances import gen_xor_barrier
from stsampler.sampler import SamplerConfig, draw_samples

b = 80
f = gen_xor_barrier(b)

# Search-tree sampler with k=2: every run returns both solutions.
batch = draw_samples(f, SamplerConfig(k=2, seed=7), 10_000)
freq = Counter(bits[0] for _, bits in batch.samples)
print(f"search tree: x1=0 {freq['0']}, x1=1 {freq['1']}, oracle calls {batch.oracle_calls}")

# Metropolis at T=0.3 from the all-zero solution.
chain = sa_sample(f, BoltzmannParams(0.3, burn_in=0, max_steps=2_000_000), 10**9, seed=1, initial=(0,) * (b + 1))
print(f"metropolis: {chain.recorded} recorded states, {chain.recorded_ones[0]} with x1=1")

# Why raising the temperature does not help: the stationary mass on
# solutions collapses long before the barrier becomes passable.
prof = xor_barrier_energy_profile(b, 0.75).probabilities
print(f"T=0.75: P(E=0)={prof[0]:.2e}, P(E=40)={prof[40]:.2e}")
