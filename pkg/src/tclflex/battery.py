"""Virtual battery synthesis, decomposition and comparison.

A virtual battery is the set of power profiles ``U`` for which the scalar
state ``X(k) = a X(k-1) + delta U(k)`` stays inside time-varying energy
limits while ``U`` stays inside time-varying power limits.  Sufficient
batteries sit inside the fleet's true aggregate flexibility, necessary ones
contain it.
"""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import approx
from .fleet import AmbientProfile, DerivedTcl, TclParams, derive_linear_model, mean_params
from .geometry import (
    HPolytope,
    Homothet,
    battery_facets,
    chebyshev_center,
    dynamics_matrix,
    flex_polytope,
    lambda_matrix,
    minkowski_homothets,
)

logger = logging.getLogger(__name__)

SUFFICIENT = "sufficient"
NECESSARY = "necessary"
KINDS = (SUFFICIENT, NECESSARY)
METHODS = ("optimal", "suboptimal", "baseline")
BAND_TOL = 1e-9
MEMBER_TOL = 1e-7


class DegenerateBatteryError(ValueError):
    """A synthesized battery whose power or energy band is empty."""


@dataclass(frozen=True)
class VirtualBattery:
    a: float
    delta: float
    x0: float
    d_minus: np.ndarray
    d_plus: np.ndarray
    e_minus: np.ndarray
    e_plus: np.ndarray

    def __post_init__(self):
        for name in ("d_minus", "d_plus", "e_minus", "e_plus"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).ravel().copy())
        m = self.d_minus.size
        if any(getattr(self, n).size != m for n in ("d_plus", "e_minus", "e_plus")):
            raise ValueError("battery limit vectors must share one length")
        if not 0 < self.a < 1:
            raise ValueError(f"battery dissipation factor must be in (0, 1), got {self.a}")

    @property
    def m(self) -> int:
        return self.d_minus.size

    @property
    def c_vector(self) -> np.ndarray:
        c = np.zeros(self.m)
        c[0] = self.a * self.x0
        return c

    def is_nonempty_band(self, tol: float = BAND_TOL) -> bool:
        return bool(np.all(self.d_minus + self.d_plus >= -tol) and np.all(self.e_minus + self.e_plus >= -tol))

    def state(self, u) -> np.ndarray:
        """Energy trajectory ``X(1..m)`` produced by profile ``u``."""
        u = np.asarray(u, dtype=float)
        x = np.empty(u.size)
        prev = self.x0
        for k, uk in enumerate(u):
            prev = self.a * prev + self.delta * uk
            x[k] = prev
        return x

    def contains(self, u, tol: float = MEMBER_TOL) -> bool:
        u = np.asarray(u, dtype=float)
        x = self.state(u)
        return bool(np.all(u <= self.d_plus + tol) and np.all(-u <= self.d_minus + tol)
                    and np.all(x <= self.e_plus + tol) and np.all(-x <= self.e_minus + tol))

    def to_dict(self) -> dict:
        return {
            "a": float(self.a),
            "delta_hours": float(self.delta),
            "x0_kwh": float(self.x0),
            "d_minus_kw": self.d_minus.tolist(),
            "d_plus_kw": self.d_plus.tolist(),
            "e_minus_kwh": self.e_minus.tolist(),
            "e_plus_kwh": self.e_plus.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VirtualBattery":
        return cls(d["a"], d["delta_hours"], d["x0_kwh"], d["d_minus_kw"], d["d_plus_kw"],
                   d["e_minus_kwh"], d["e_plus_kwh"])


def battery_to_polytope(b: VirtualBattery, m: int | None = None) -> HPolytope:
    if m is not None and m != b.m:
        raise ValueError(f"battery horizon is {b.m}, requested {m}")
    return battery_facets(b.a, b.delta, b.x0, b.d_minus, b.d_plus, b.e_minus, b.e_plus)


def device_battery(d: DerivedTcl, m: int | None = None) -> VirtualBattery:
    """One device's own flexibility written as a battery."""
    m = d.m if m is None else m
    return VirtualBattery(d.a, d.delta, d.x0, d.u_minus[:m], d.u_plus[:m],
                          np.full(m, d.x_minus), np.full(m, d.x_plus))


def from_homothet(proto: VirtualBattery, beta: float, t) -> VirtualBattery:
    """Battery parameters of ``beta * proto + t``."""
    t = np.asarray(t, dtype=float)
    lbt = proto.delta * lambda_matrix(proto.a, proto.m) @ t
    return VirtualBattery(
        a=proto.a,
        delta=proto.delta,
        x0=beta * proto.x0,
        d_minus=beta * proto.d_minus - t,
        d_plus=beta * proto.d_plus + t,
        e_minus=beta * proto.e_minus - lbt,
        e_plus=beta * proto.e_plus + lbt,
    )


@dataclass
class CharacterizationResult:
    battery: VirtualBattery
    kind: str
    method: str
    homothets: list[Homothet]
    beta_total: float
    t_total: np.ndarray
    prototype: VirtualBattery | None = None
    excluded: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = self.battery.to_dict()
        d.update(kind=self.kind, method=self.method, beta_total=float(self.beta_total),
                 t_total=np.asarray(self.t_total, dtype=float).tolist(),
                 excluded_devices=list(self.excluded))
        return d

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    def write_homothets(self, path) -> None:
        m = self.battery.m
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["device_index", "beta"] + [f"t_{k + 1}" for k in range(m)])
            for i, hm in enumerate(self.homothets):
                if hm is None:
                    continue
                w.writerow([i, repr(float(hm.beta))] + [repr(float(v)) for v in hm.t])


def read_battery_json(path) -> tuple[VirtualBattery, dict]:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    return VirtualBattery.from_dict(d), d


def read_homothets(path) -> dict[int, Homothet]:
    out = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if row:
                out[int(row[0])] = Homothet(float(row[1]), [float(v) for v in row[2:]])
    return out


# ---------------------------------------------------------------------------
# Prototype and fleet plumbing


def derive_fleet(fleet: Sequence[TclParams], amb: AmbientProfile, m: int | None = None) -> list[DerivedTcl]:
    return [derive_linear_model(p, amb, m) for p in fleet]


def prototype(fleet: Sequence[TclParams], amb: AmbientProfile, m: int | None = None) -> tuple[VirtualBattery, HPolytope]:
    """Battery of the mean device, with dissipation fixed to the mean device ``a``."""
    if not fleet:
        raise ValueError("empty fleet")
    m = len(amb) if m is None else m
    mean_dev = derive_linear_model(mean_params(fleet), amb, m)
    a_bar = float(np.mean([p.a(amb.dt) for p in fleet]))
    batt = VirtualBattery(a_bar, mean_dev.delta, mean_dev.x0, mean_dev.u_minus, mean_dev.u_plus,
                          np.full(m, mean_dev.x_minus), np.full(m, mean_dev.x_plus))
    return batt, battery_to_polytope(batt)


def _map(fn, items, jobs: int):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
    return [fn(it) for it in items]


def _mia_job(args):
    p_i, p_o, lp_method = args
    try:
        return approx.mia(p_i, p_o, lp_method)[0]
    except approx.InscriptionError as exc:
        return exc


def _moa_job(args):
    p_i, p_o, lp_method = args
    return approx.moa(p_i, p_o, lp_method)[0]


def _fan_out(targets, p_o, kind, lp_method, jobs):
    items = [(p, p_o, lp_method) for p in targets]
    if kind == SUFFICIENT:
        out = _map(_mia_job, items, jobs)
        homs, excluded = [], []
        for i, r in enumerate(out):
            if isinstance(r, Exception):
                logger.warning("device %d excluded: %s", i, r)
                excluded.append(i)
                homs.append(None)
            else:
                homs.append(r)
        return homs, excluded
    return _map(_moa_job, items, jobs), []


def _aggregate(homs) -> Homothet:
    used = [h for h in homs if h is not None]
    if not used:
        raise DegenerateBatteryError("no device admits an inner approximation")
    return minkowski_homothets(used)


def _check_kind(kind):
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


# ---------------------------------------------------------------------------
# Characterizations


def optimal_characterize(devices: Sequence[DerivedTcl], proto: VirtualBattery, kind: str,
                         lp_method: str = "auto", jobs: int = 1) -> CharacterizationResult:
    _check_kind(kind)
    m = proto.m
    p_o = battery_to_polytope(proto)
    targets = [flex_polytope(d, m).combined for d in devices]
    homs, excluded = _fan_out(targets, p_o, kind, lp_method, jobs)
    total = _aggregate(homs)
    batt = from_homothet(proto, total.beta, total.t)
    return CharacterizationResult(batt, kind, "optimal", homs, total.beta, total.t, proto, excluded)


def suboptimal_sufficient(devices: Sequence[DerivedTcl], proto: VirtualBattery,
                          lp_method: str = "auto", jobs: int = 1) -> CharacterizationResult:
    m = proto.m
    x_o = battery_to_polytope(proto)
    x_o = HPolytope(x_o.f[2 * m:], x_o.h[2 * m:])
    targets = [flex_polytope(d, m).x_poly for d in devices]
    homs, excluded = _fan_out(targets, x_o, SUFFICIENT, lp_method, jobs)
    lows, ups = [], []
    for d, hm in zip(devices, homs):
        if hm is None:
            continue
        lows.append((d.u_minus[:m] + hm.t) / hm.beta)
        ups.append((d.u_plus[:m] - hm.t) / hm.beta)
    if not lows:
        raise DegenerateBatteryError("no device admits an inner approximation")
    u_low = np.min(lows, axis=0)
    u_up = np.min(ups, axis=0)
    if np.any(u_low + u_up < -BAND_TOL):
        k = int(np.argmin(u_low + u_up))
        raise DegenerateBatteryError(f"suboptimal prototype power band is empty at step {k + 1}")
    new_proto = VirtualBattery(proto.a, proto.delta, proto.x0, u_low, u_up, proto.e_minus, proto.e_plus)
    total = _aggregate(homs)
    batt = from_homothet(new_proto, total.beta, total.t)
    return CharacterizationResult(batt, SUFFICIENT, "suboptimal", homs, total.beta, total.t, new_proto, excluded)


def suboptimal_necessary(devices: Sequence[DerivedTcl], proto: VirtualBattery,
                         lp_method: str = "auto", jobs: int = 1) -> CharacterizationResult:
    m = proto.m
    x_o = battery_to_polytope(proto)
    x_o = HPolytope(x_o.f[2 * m:], x_o.h[2 * m:])
    targets = [flex_polytope(d, m).x_poly for d in devices]
    homs, _ = _fan_out(targets, x_o, NECESSARY, lp_method, jobs)
    total = _aggregate(homs)
    energy = from_homothet(proto, total.beta, total.t)
    batt = VirtualBattery(
        proto.a, proto.delta, energy.x0,
        d_minus=np.sum([d.u_minus[:m] for d in devices], axis=0),
        d_plus=np.sum([d.u_plus[:m] for d in devices], axis=0),
        e_minus=energy.e_minus,
        e_plus=energy.e_plus,
    )
    return CharacterizationResult(batt, NECESSARY, "suboptimal", homs, total.beta, total.t, proto)


def _inf_norm(mat: np.ndarray) -> float:
    return float(np.abs(mat).sum(axis=1).max())


def baseline_battery(devices: Sequence[DerivedTcl], proto: VirtualBattery, kind: str) -> CharacterizationResult:
    """Non-optimized battery built from norm bounds instead of homothet programs.

    Sufficient: every device takes the equal share ``U / N``.  Power limits
    are ``N`` times the tightest device box; the energy band is the largest
    symmetric band that keeps every device inside its own energy limits
    after the dynamics mismatch ``(delta_i/delta) Lambda_i A`` is bounded in
    the infinity norm.

    Necessary: power limits are sums of device boxes; each device's share of
    the battery energy is bounded in the infinity norm by its energy band
    plus its initial-condition offset, and the bounds are summed.
    """
    _check_kind(kind)
    m = proto.m
    n = len(devices)
    a, delta = proto.a, proto.delta
    amat = dynamics_matrix(a, m)
    lam = lambda_matrix(a, m)
    x0 = float(sum(d.x0 for d in devices))
    lc = lam[:, 0] * (a * x0)
    if kind == SUFFICIENT:
        d_minus = n * np.min([d.u_minus[:m] for d in devices], axis=0)
        d_plus = n * np.min([d.u_plus[:m] for d in devices], axis=0)
        bands = []
        for d in devices:
            lam_i = lambda_matrix(d.a, m)
            lc_i = lam_i[:, 0] * (d.a * d.x0)
            room = min(np.min(d.x_plus - lc_i), np.min(d.x_minus + lc_i))
            bands.append(room / _inf_norm((d.delta / delta) * lam_i @ amat))
        e_half = n * min(bands)
        if e_half < -BAND_TOL or np.any(d_minus + d_plus < -BAND_TOL):
            raise DegenerateBatteryError("baseline sufficient battery is empty")
        homs = [Homothet(1.0, np.zeros(m)) for _ in devices]
    else:
        d_minus = np.sum([d.u_minus[:m] for d in devices], axis=0)
        d_plus = np.sum([d.u_plus[:m] for d in devices], axis=0)
        e_half = 0.0
        for d in devices:
            lam_i = lambda_matrix(d.a, m)
            lc_i = lam_i[:, 0] * (d.a * d.x0)
            own = lam[:, 0] * (a * d.x0)
            spread = max(d.x_plus, d.x_minus) + np.abs(lc_i).max()
            e_half += _inf_norm((delta / d.delta) * lam @ dynamics_matrix(d.a, m)) * spread + np.abs(own).max()
        homs = []
    batt = VirtualBattery(a, delta, x0, d_minus, d_plus, e_half - lc, e_half + lc)
    beta_total = float(n) if kind == SUFFICIENT else np.nan
    return CharacterizationResult(batt, kind, "baseline", homs, beta_total, np.zeros(m), None)


def characterize(fleet: Sequence[TclParams], amb: AmbientProfile, method: str, kind: str,
                 m: int | None = None, lp_method: str = "auto", jobs: int = 1) -> CharacterizationResult:
    """Build the requested battery for a fleet of parameter records."""
    _check_kind(kind)
    m = len(amb) if m is None else m
    devices = derive_fleet(fleet, amb, m)
    proto, _ = prototype(fleet, amb, m)
    if method == "optimal":
        return optimal_characterize(devices, proto, kind, lp_method, jobs)
    if method == "suboptimal":
        if kind == SUFFICIENT:
            return suboptimal_sufficient(devices, proto, lp_method, jobs)
        return suboptimal_necessary(devices, proto, lp_method, jobs)
    if method == "baseline":
        return baseline_battery(devices, proto, kind)
    raise ValueError(f"method must be one of {METHODS}, got {method!r}")


# ---------------------------------------------------------------------------
# Use of a characterization


def decompose(u, res: CharacterizationResult) -> np.ndarray:
    """Split an aggregate profile into one admissible profile per device.

    Returns an array of shape (devices, m); excluded devices get zeros.
    """
    if res.kind != SUFFICIENT:
        raise ValueError("only sufficient batteries guarantee a decomposition")
    u = np.asarray(u, dtype=float)
    if not res.battery.contains(u):
        raise ValueError("profile lies outside the sufficient battery")
    out = np.zeros((len(res.homothets), u.size))
    shifted = u - res.t_total
    for i, hm in enumerate(res.homothets):
        if hm is not None:
            out[i] = (hm.beta / res.beta_total) * shifted + hm.t
    return out


def gamma(b1: VirtualBattery, b2: VirtualBattery) -> float:
    """Average relative widening of ``b1``'s power and energy bands over ``b2``'s."""
    if b1.m != b2.m:
        raise ValueError("batteries have different horizons")
    wd = b2.d_minus + b2.d_plus
    we = b2.e_minus + b2.e_plus
    if np.any(wd <= 0) or np.any(we <= 0):
        raise ValueError("reference battery has a zero-width band")
    g_d = np.mean((b1.d_minus + b1.d_plus - wd) / wd)
    g_e = np.mean((b1.e_minus + b1.e_plus - we) / we)
    return float(0.5 * abs(g_d + g_e))


def sample_profiles(b: VirtualBattery, n: int, seed: int = 0, burn_in: int = 100,
                    thin: int | None = None) -> np.ndarray:
    """Coordinate hit-and-run samples from the battery's profile set."""
    p = battery_to_polytope(b)
    rng = np.random.default_rng(seed)
    x, _ = chebyshev_center(p)
    m = p.dim
    thin = m if thin is None else thin
    out = np.empty((n, m))
    slack = p.h - p.f @ x

    def move():
        nonlocal slack
        k = int(rng.integers(m))
        col = p.f[:, k]
        pos, neg = col > 1e-14, col < -1e-14
        hi = np.min(slack[pos] / col[pos]) if pos.any() else np.inf
        lo = np.max(slack[neg] / col[neg]) if neg.any() else -np.inf
        hi, lo = max(hi, 0.0), min(lo, 0.0)
        step = rng.uniform(lo, hi)
        x[k] += step
        slack = slack - col * step

    for _ in range(burn_in):
        move()
    for s in range(n):
        for _ in range(thin):
            move()
        out[s] = x
    return out
