"""Brute-force check that sufficient and necessary batteries bracket the exact aggregate."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .battery import KINDS, METHODS, SUFFICIENT, battery_to_polytope, characterize
from .fleet import AmbientProfile, FleetSpec, default_ambient, derive_linear_model, sample_fleet
from .geometry import (
    MAX_ORACLE_DIM,
    VPolytope,
    flex_polytope,
    hull_facets,
    minkowski_brute,
    vertices,
    vpoly_in_hpoly,
)

SANDWICH_TOL = 1e-6
HETEROGENEOUS = ("r_th", "c_th", "delta", "eta", "p_m")


@dataclass
class SandwichReport:
    n: int
    m: int
    checks: dict = field(default_factory=dict)   # (method, kind) -> bool
    spread: float = 0.0                          # largest parameter gap between batteries

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def lines(self) -> list[str]:
        out = [f"{meth:<10} {kind:<10} {'PASS' if ok else 'FAIL'}" for (meth, kind), ok in self.checks.items()]
        out.append(f"largest parameter gap between batteries: {self.spread:.3e}")
        out.append("sandwich: " + ("PASS" if self.passed else "FAIL"))
        return out


def exact_aggregate(fleet, amb: AmbientProfile, m: int) -> VPolytope:
    """Vertex form of the Minkowski sum of the devices' flexibility sets."""
    if m > MAX_ORACLE_DIM:
        raise ValueError(f"oracle limited to m <= {MAX_ORACLE_DIM}")
    total = None
    for p in fleet:
        v = vertices(flex_polytope(derive_linear_model(p, amb, m), m).combined)
        total = v if total is None else minkowski_brute(total, v)
    return total


def sandwich(fleet, amb: AmbientProfile, m: int, tol: float = SANDWICH_TOL) -> SandwichReport:
    if m > MAX_ORACLE_DIM:
        raise ValueError(f"oracle limited to m <= {MAX_ORACLE_DIM}")
    agg_v = exact_aggregate(fleet, amb, m)
    agg_h = hull_facets(agg_v)
    rep = SandwichReport(len(fleet), m)
    params = []
    for method in METHODS:
        for kind in KINDS:
            b = characterize(fleet, amb, method, kind, m).battery
            poly = battery_to_polytope(b)
            if kind == SUFFICIENT:
                ok = vpoly_in_hpoly(vertices(poly), agg_h, tol)
            else:
                ok = vpoly_in_hpoly(agg_v, poly, tol)
            rep.checks[(method, kind)] = ok
            params.append(np.concatenate([[b.a, b.delta, b.x0], b.d_minus, b.d_plus, b.e_minus, b.e_plus]))
    params = np.array(params)
    rep.spread = float(np.abs(params - params[0]).max())
    return rep


def random_sandwich(n: int, m: int, seed: int, epsilon: float = 0.3) -> SandwichReport:
    """Sandwich check on a seeded random fleet under the default hot-day ambient."""
    if m > MAX_ORACLE_DIM:
        raise ValueError(f"oracle limited to m <= {MAX_ORACLE_DIM}")
    fleet = sample_fleet(FleetSpec(n=n, epsilon=epsilon, which_heterogeneous=HETEROGENEOUS, seed=seed))
    return sandwich(fleet, default_ambient(m), m)

