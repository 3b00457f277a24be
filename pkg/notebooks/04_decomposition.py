# %% [markdown]
# # Splitting a fleet-level profile among devices
#
# Any profile accepted by a sufficient battery can be split into per-device
# profiles that each respect their own device limits: device i gets its
# share `beta_i / beta` of the offset from the total shift, plus its own
# shift.

# %%
import numpy as np

from tclflex.battery import characterize, decompose, derive_fleet, sample_profiles
from tclflex.fleet import FleetSpec, default_ambient, sample_fleet
from tclflex.geometry import flex_polytope

amb = default_ambient()
fleet = sample_fleet(FleetSpec(n=30, epsilon=0.2, seed=5))
res = characterize(fleet, amb, "optimal", "sufficient")
polys = [flex_polytope(d).combined for d in derive_fleet(fleet, amb)]

profiles = sample_profiles(res.battery, 20, seed=0)
ok = 0
for u in profiles:
    parts = decompose(u, res)
    assert np.allclose(parts.sum(axis=0), u, atol=1e-9)
    ok += sum(p.contains_point(x) for p, x in zip(polys, parts))
print(f"{ok} of {20 * len(fleet)} device profiles admissible")
