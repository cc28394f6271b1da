"""
Model counts from descendant averages
=====================================

Each level step of a sampler run knows how many children every expanded
parent had. The mean child count estimates |S_i| / |S_{i-1}|, and the
product over levels estimates the number of solutions. We compare against
brute force on small random 3-SAT formulas.
"""

import math

from stsampler.counter import estimate_count, exact_count_bruteforce
from stsampler.instances import gen_asym_xor_barrier, gen_rand3sat
from stsampler.sampler import SamplerConfig

for seed in range(5):
    f = gen_rand3sat(22, 70, seed=seed)
    z = exact_count_bruteforce(f)
    if z == 0:
        continue
    row = []
    for k in (5, 20, 100):
        est = estimate_count(f, SamplerConfig(k=k, seed=1), runs=10)
        row.append(f"k={k}: {est.estimate:9.1f}")
    print(f"seed {seed}: Z={z:6d}  " + "  ".join(row))

est = estimate_count(gen_asym_xor_barrier(20, 8), SamplerConfig(k=100, seed=1), runs=10)
print(f"AsymXORBarrier(20, 8): estimate {est.estimate:.1f} (exact 257), "
      f"log2 {est.log2_estimate:.4f} vs {math.log2(257):.4f}")
