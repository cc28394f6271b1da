"""
Plateaus: focused walk against plain annealing
==============================================

On plateau(b) every assignment with x1=1 has energy 1 and the only way out
is through the corner where all y are 1. Metropolis wanders the plateau at
random; the focused walk keeps picking violated clauses and leaves it far
sooner for moderate b.
"""

from stsampler.baselines import BoltzmannParams, hybrid_sample, sa_sample
from stsampler.instances import gen_plateau

b = 20
f = gen_plateau(b)
start = (1,) + (0,) * b + (0,)
budget = 200_000

for seed in range(3):
    h = hybrid_sample(f, 1, seed=seed, max_steps=budget, initial=start)
    s = sa_sample(f, BoltzmannParams(0.5, burn_in=0, thinning=1, max_steps=budget), 1, seed=seed, initial=start)
    sa_text = "none" if s.truncated else f"{s.steps}"
    print(f"seed {seed}: hybrid first solution after {h.steps} steps, metropolis: {sa_text}")
