"""Aggregate flexibility of thermostatically controlled loads as virtual batteries."""
from .battery import (
    CharacterizationResult,
    VirtualBattery,
    baseline_battery,
    characterize,
    decompose,
    gamma,
    optimal_characterize,
    prototype,
    suboptimal_necessary,
    suboptimal_sufficient,
)
from .fleet import AmbientProfile, FleetSpec, RegulationSignal, TclParams, default_ambient, sample_fleet
from .geometry import Homothet, HPolytope
from .sim import scale_signal, synthetic_signal, track

__version__ = "0.1.0"
