# %% [markdown]
# # Fitting a prototype inside and around a device polytope
#
# Every device polytope is approximated by a scaled and shifted copy of one
# prototype.  The largest inscribed copy and the smallest covering copy are
# each found by a single linear program whose nonnegative matrix `G`
# certifies the containment.  A second, independent route computes support
# values along the facet normals and solves a tiny LP in `(beta, t)`.

# %%
import numpy as np

from tclflex import approx
from tclflex.fleet import AmbientProfile, TclParams, derive_linear_model
from tclflex.geometry import apply_homothet, contains, flex_polytope

amb = AmbientProfile(1.0, [31.0, 33.0, 34.0, 32.0])
device = flex_polytope(derive_linear_model(TclParams(r_th=2.3, c_th=1.8), amb)).combined
proto = flex_polytope(derive_linear_model(TclParams(), amb)).combined

inner, cert = approx.mia(device, proto)
outer, _ = approx.moa(device, proto)
print(f"inner scale {inner.beta:.6f}  outer scale {outer.beta:.6f}")
print("oracle scales:", approx.mia_oracle(device, proto).beta, approx.moa_oracle(device, proto).beta)
print("certificate residuals:", approx.certificate_residuals(cert, device, proto))

# %% [markdown]
# Both homothets behave as promised.

# %%
print("inner copy inside device:", contains(device, apply_homothet(inner, proto)))
print("device inside outer copy:", contains(apply_homothet(outer, proto), device))

# %% [markdown]
# Homothets of one prototype add by adding scales and shifts, which is what
# turns N per-device fits into one fleet-level set.

# %%
from tclflex.geometry import box_polytope, minkowski_brute, minkowski_homothets, same_vertex_set, vertices
from tclflex.geometry import Homothet

square = box_polytope([1, 1], [1, 1])
h1, h2 = Homothet(0.5, [1.0, 0.0]), Homothet(2.0, [0.0, -1.0])
formula = vertices(apply_homothet(minkowski_homothets([h1, h2]), square))
brute = minkowski_brute(vertices(apply_homothet(h1, square)), vertices(apply_homothet(h2, square)))
print("sum of homothets matches brute-force sum:", same_vertex_set(formula, brute))
