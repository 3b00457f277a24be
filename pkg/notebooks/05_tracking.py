# %% [markdown]
# # Following a regulation signal with the switching fleet
#
# The synthetic signal is scaled to fit the sufficient battery and handed to
# a priority-stack controller that switches real ON/OFF devices every four
# seconds.  Then a biased signal pushes the battery's energy state past its
# upper limit and tracking collapses shortly afterwards.

# %%
import numpy as np

from tclflex.battery import characterize
from tclflex.fleet import FleetSpec, RegulationSignal, default_ambient, sample_fleet
from tclflex.sim import comfort_report, scale_signal, synthetic_signal, track

amb = default_ambient()
fleet = sample_fleet(FleetSpec(n=300, epsilon=0.1, seed=0))
b_s = characterize(fleet, amb, "suboptimal", "sufficient").battery
sig = scale_signal(synthetic_signal(seed=0), b_s, 1.0, 12.0, energy=True, margin=0.8)
res = track(fleet, sig, b_s, amb, start_hour=12.0, record_temps=True)
print(f"rms tracking error {100 * res.rms_error:.2f} %, comfort violations {res.violations}")
print("devices outside band + drift:", comfort_report(res, fleet, amb)["violating_devices"])

# %%
bias = float(b_s.e_plus.min())
neg = track(fleet, RegulationSignal(sig.dt_s, sig.r + bias), b_s, amb, start_hour=12.0)
k = neg.energy_crossing()
err = np.abs(neg.u_agg - neg.r_scaled)
print(f"energy limit crossed at t={neg.t_seconds[k]:.0f} s")
print(f"mean |error| before: {err[:k].mean():.1f} kW, after: {err[k:].mean():.1f} kW")
