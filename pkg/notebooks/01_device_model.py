# %% [markdown]
# # One air conditioner as a polytope of power profiles
#
# A TCL switches ON/OFF to keep its temperature in a deadband.  Averaged over
# an hour it behaves like a leaky energy store: the power deviation `u` from
# its set-point power `P0` charges a scalar state `x` that must stay inside
# `[-x_minus, x_plus]`.  The admissible deviation profiles over `m` hours form
# a polytope in facet form.

# %%
import numpy as np

from tclflex.fleet import TclParams, default_ambient, derive_linear_model
from tclflex.geometry import flex_polytope, vertices

amb = default_ambient(24)
dev = derive_linear_model(TclParams(), amb)
print(f"a = {dev.a:.5f}, delta = {dev.delta:.5f} h, x band = +/-{dev.x_plus:.3f} kWh")
print("set-point power P0(k) [kW]:", np.round(dev.p0[:6], 3), "...")

# %% [markdown]
# The 24-hour polytope has 4m facets: upper and lower power, upper and lower
# energy.  For m <= 3 its vertices can be enumerated exactly.

# %%
poly = flex_polytope(dev).combined
print("facets for m=24:", poly.n_facets)
small = flex_polytope(derive_linear_model(TclParams(), default_ambient(2))).combined
print("vertices for m=2:\n", np.round(vertices(small).vertices, 4))

# %% [markdown]
# Zero deviation is always admissible for a device that starts at its
# set-point, while running flat out for the whole day is not.

# %%
print("u = 0 admissible:", poly.contains_point(np.zeros(24)))
print("u = u_plus admissible:", poly.contains_point(dev.u_plus))
