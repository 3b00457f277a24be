# %% [markdown]
# # Brute-force check that the batteries bracket the true aggregate
#
# For horizons up to three steps the exact fleet flexibility is the convex
# hull of all sums of device vertices.  Every sufficient battery must lie
# inside it and every necessary battery must contain it.

# %%
from tclflex.verify import random_sandwich

for seed in range(4):
    rep = random_sandwich(n=3, m=3, seed=seed)
    print(f"seed {seed}:", "PASS" if rep.passed else "FAIL")
print("\n".join(random_sandwich(n=2, m=2, seed=0, epsilon=0.0).lines()))
