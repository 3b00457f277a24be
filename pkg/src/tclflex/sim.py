"""Closed-loop fleet simulation: priority-stack dispatch and comfort accounting."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .battery import VirtualBattery
from .fleet import AmbientProfile, RegulationSignal, TclParams

CONTROL_DT_S = 4.0
DRIFT_EPS = 1e-9
TRACKING_CSV_HEADER = ("t_seconds", "r_kw", "u_agg_kw", "x_kwh", "violations_cum")


@dataclass(frozen=True)
class FleetArrays:
    """Column view of a fleet for vectorized simulation."""

    r_th: np.ndarray
    c_th: np.ndarray
    theta_r: np.ndarray
    delta: np.ndarray
    eta: np.ndarray
    p_m: np.ndarray

    @classmethod
    def from_params(cls, fleet: Sequence[TclParams]) -> "FleetArrays":
        if not fleet:
            raise ValueError("empty fleet")
        col = lambda name: np.array([getattr(p, name) for p in fleet], dtype=float)  # noqa: E731
        return cls(col("r_th"), col("c_th"), col("theta_r"), col("delta"), col("eta"), col("p_m"))

    @property
    def n(self) -> int:
        return self.r_th.size

    @property
    def b(self) -> np.ndarray:
        return self.r_th * self.eta

    def a(self, dt_s: float) -> np.ndarray:
        return np.exp(-(dt_s / 3600.0) / (self.r_th * self.c_th))

    def p0(self, theta_a: float) -> np.ndarray:
        return (theta_a - self.theta_r) / self.b

    def drift(self, theta_a: np.ndarray, dt_s: float) -> np.ndarray:
        """Largest one-step excursion past the deadband a device can make."""
        theta_a = np.atleast_1d(theta_a)[:, None]
        up = theta_a - self.theta_r - self.delta
        down = self.theta_r - self.delta - theta_a + self.b * self.p_m
        worst = np.maximum(up, down).max(axis=0)
        return (1 - self.a(dt_s)) * np.maximum(worst, 0.0) + DRIFT_EPS


@dataclass
class FleetState:
    theta: np.ndarray
    q: np.ndarray
    k: int = 0

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.q = np.asarray(self.q, dtype=np.int8)
        if self.theta.shape != self.q.shape:
            raise ValueError("theta and q must have equal length")


def initial_state(fa: FleetArrays, theta_a: float, seed: int = 0) -> FleetState:
    """Temperatures uniform in each deadband, ON with the duty-cycle probability."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(fa.theta_r - fa.delta, fa.theta_r + fa.delta)
    duty = np.clip(fa.p0(theta_a) / fa.p_m, 0.0, 1.0)
    q = (rng.random(fa.n) < duty).astype(np.int8)
    return FleetState(theta, q, 0)


def forced_commands(state: FleetState, fa: FleetArrays) -> tuple[np.ndarray, np.ndarray]:
    """Thermostat rule; returns the commands and the mask of devices outside the deadband."""
    hot = state.theta >= fa.theta_r + fa.delta
    cold = state.theta <= fa.theta_r - fa.delta
    q = state.q.copy()
    q[hot] = 1
    q[cold] = 0
    return q, hot | cold


def _fill(order: np.ndarray, powers: np.ndarray, gap: float) -> np.ndarray:
    """Prefix of ``order`` whose switching moves consumption closest to ``gap`` greedily."""
    if gap <= 0 or order.size == 0:
        return order[:0]
    cum = np.cumsum(powers[order])
    k = int(np.searchsorted(cum, gap, side="right"))
    if k < order.size:
        before = gap - (cum[k - 1] if k else 0.0)
        if abs(cum[k] - gap) < before:
            k += 1
    return order[:k]


def priority_stack(state: FleetState, fa: FleetArrays, target_power: float) -> np.ndarray:
    """ON/OFF commands steering fleet consumption toward ``target_power`` (kW)."""
    if target_power < 0:
        raise ValueError("target power must be nonnegative")
    q, forced = forced_commands(state, fa)
    power = float(np.dot(q, fa.p_m))
    pi = (state.theta - (fa.theta_r - fa.delta)) / (2 * fa.delta)
    idx = np.arange(fa.n)
    if power < target_power:
        cand = idx[(q == 0) & ~forced]
        # warmest first, ties by index
        order = cand[np.lexsort((cand, -pi[cand]))]
        q[_fill(order, fa.p_m, target_power - power)] = 1
    elif power > target_power:
        cand = idx[(q == 1) & ~forced]
        order = cand[np.lexsort((cand, pi[cand]))]
        q[_fill(order, fa.p_m, power - target_power)] = 0
    return q


def advance(state: FleetState, q: np.ndarray, fa: FleetArrays, theta_a: float, dt_s: float) -> FleetState:
    a = fa.a(dt_s)
    theta = a * state.theta + (1 - a) * (theta_a - fa.b * q * fa.p_m)
    return FleetState(theta, q, state.k + 1)


def _excursions(temps: np.ndarray, fa: FleetArrays, allowance: np.ndarray) -> np.ndarray:
    """Per-sample distance beyond the deadband after the drift allowance (0 when compliant)."""
    hi = temps - (fa.theta_r + fa.delta + allowance)
    lo = (fa.theta_r - fa.delta - allowance) - temps
    return np.maximum(np.maximum(hi, lo), 0.0)


@dataclass
class TrackingResult:
    t_seconds: np.ndarray
    r_scaled: np.ndarray
    u_agg: np.ndarray
    x_state: np.ndarray
    consumption: np.ndarray
    baseline: np.ndarray
    violations_cum: np.ndarray
    temps: np.ndarray | None
    rms_error: float
    violations: int
    a_step: float
    delta_step: float
    x0: float
    e_plus: np.ndarray
    e_minus: np.ndarray

    def __post_init__(self):
        n = self.t_seconds.size
        for name in ("r_scaled", "u_agg", "x_state", "consumption", "baseline", "violations_cum",
                     "e_plus", "e_minus"):
            if getattr(self, name).size != n:
                raise ValueError(f"series {name} has wrong length")

    def energy_crossing(self) -> int | None:
        """First step whose energy state leaves the battery's energy band."""
        out = np.flatnonzero((self.x_state > self.e_plus) | (-self.x_state > self.e_minus))
        return int(out[0]) if out.size else None

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACKING_CSV_HEADER)
            for row in zip(self.t_seconds, self.r_scaled, self.u_agg, self.x_state, self.violations_cum):
                w.writerow([repr(float(v)) for v in row[:4]] + [int(row[4])])

    def write_temps(self, path) -> None:
        if self.temps is None:
            raise ValueError("temperature traces were not recorded")
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t_seconds"] + [f"theta_{i}" for i in range(self.temps.shape[1])])
            for t, row in zip(self.t_seconds, self.temps):
                w.writerow([repr(float(t))] + [f"{v:.6f}" for v in row])


def _hold(values: np.ndarray, t_s: np.ndarray, dt_hours: float, start_hour: float) -> np.ndarray:
    idx = np.floor((start_hour + t_s / 3600.0) / dt_hours + 1e-12).astype(int)
    if idx.max() >= values.size:
        raise ValueError("simulation runs past the battery horizon")
    return values[idx]


def step_battery(b: VirtualBattery, dt_hours: float, dt_s: float) -> tuple[float, float]:
    """Battery recursion coefficients on a finer control step."""
    a_s = b.a ** ((dt_s / 3600.0) / dt_hours)
    return a_s, (1 - a_s) * b.delta / (1 - b.a)


def battery_state(u: np.ndarray, a_s: float, d_s: float, x0: float = 0.0) -> np.ndarray:
    x = np.empty(u.size)
    prev = x0
    for k, uk in enumerate(u):
        prev = a_s * prev + d_s * uk
        x[k] = prev
    return x


def scale_signal(raw: RegulationSignal, b: VirtualBattery, dt_hours: float = 1.0, start_hour: float = 0.0,
                 energy: bool = False, margin: float = 1.0) -> RegulationSignal:
    """Largest symmetric gain that keeps the signal inside the battery's power limits.

    With ``energy=True`` the gain is also capped so that the battery state
    driven by the scaled signal stays within the energy limits.  ``margin``
    multiplies the final gain.
    """
    r = raw.r
    if r.size == 0:
        raise ValueError("empty regulation signal")
    if not np.any(r):
        return raw
    t = raw.t_seconds
    d_plus = _hold(b.d_plus, t, dt_hours, start_hour)
    d_minus = _hold(b.d_minus, t, dt_hours, start_hour)
    gains = []
    if r.max() > 0:
        gains.append(d_plus.min() / r.max())
    if r.min() < 0:
        gains.append(d_minus.min() / -r.min())
    c = min(gains)
    if energy:
        a_s, d_s = step_battery(b, dt_hours, raw.dt_s)
        x_unit = battery_state(r, a_s, d_s, 0.0)
        free = battery_state(np.zeros_like(r), a_s, d_s, b.x0)
        e_plus = _hold(b.e_plus, t, dt_hours, start_hour) - free
        e_minus = _hold(b.e_minus, t, dt_hours, start_hour) + free
        with np.errstate(divide="ignore"):
            caps = np.concatenate([
                np.where(x_unit > 0, e_plus / np.where(x_unit > 0, x_unit, 1.0), np.inf),
                np.where(x_unit < 0, e_minus / np.where(x_unit < 0, -x_unit, 1.0), np.inf),
            ])
        c = min(c, float(caps.min()))
    return RegulationSignal(raw.dt_s, max(c, 0.0) * margin * r)


def synthetic_signal(duration_s: float = 7200.0, dt_s: float = CONTROL_DT_S, seed: int = 0,
                     tau_s: float = 300.0, smooth_s: float = 40.0) -> RegulationSignal:
    """Zero-mean, unit-peak, mean-reverting random walk smoothed by a moving average."""
    rng = np.random.default_rng(seed)
    n = int(round(duration_s / dt_s))
    rho = np.exp(-dt_s / tau_s)
    w = rng.standard_normal(n)
    x = np.empty(n)
    prev = 0.0
    for k in range(n):
        prev = rho * prev + np.sqrt(1 - rho * rho) * w[k]
        x[k] = prev
    width = max(1, int(round(smooth_s / dt_s)))
    x = np.convolve(x, np.ones(width) / width, mode="same")
    x -= x.mean()
    return RegulationSignal(dt_s, x / np.abs(x).max())


def _simulate(fa: FleetArrays, amb: AmbientProfile, n_steps: int, dt_s: float, start_hour: float,
              seed: int, controller, record_temps: bool):
    t = np.arange(1, n_steps + 1) * dt_s
    theta_a = amb.at_seconds(t - dt_s, start_hour)
    allowance = fa.drift(amb.theta_a, dt_s)
    state = initial_state(fa, float(theta_a[0]), seed)
    consumption = np.empty(n_steps)
    baseline = np.empty(n_steps)
    viol = np.zeros(n_steps, dtype=np.int64)
    temps = np.empty((n_steps, fa.n)) if record_temps else None
    for k in range(n_steps):
        th_a = float(theta_a[k])
        base = float(np.sum(fa.p0(th_a)))
        q = controller(state, k, base)
        consumption[k] = float(np.dot(q, fa.p_m))
        baseline[k] = base
        state = advance(state, q, fa, th_a, dt_s)
        viol[k] = int(np.count_nonzero(_excursions(state.theta, fa, allowance) > 0))
        if temps is not None:
            temps[k] = state.theta
    return t, consumption, baseline, np.cumsum(viol), temps


def track(fleet: Sequence[TclParams], signal: RegulationSignal, b_s: VirtualBattery, amb: AmbientProfile,
          start_hour: float = 0.0, seed: int = 0, record_temps: bool = False) -> TrackingResult:
    """Dispatch the fleet to follow ``baseline + r`` and record the outcome."""
    fa = FleetArrays.from_params(fleet)
    r = signal.r

    def controller(state, k, base):
        return priority_stack(state, fa, max(base + r[k], 0.0))

    t, cons, base, vcum, temps = _simulate(fa, amb, r.size, signal.dt_s, start_hour, seed,
                                           controller, record_temps)
    u = cons - base
    a_s, d_s = step_battery(b_s, amb.dt, signal.dt_s)
    x = battery_state(u, a_s, d_s, b_s.x0)
    floor = float(fa.p_m.max())
    rms = float(np.sqrt(np.mean((u - r) ** 2)) / max(np.sqrt(np.mean(r ** 2)), floor))
    # limits apply to the step just taken, so hold them at the start of each interval
    e_plus = _hold(b_s.e_plus, t - signal.dt_s, amb.dt, start_hour)
    e_minus = _hold(b_s.e_minus, t - signal.dt_s, amb.dt, start_hour)
    return TrackingResult(t, r.copy(), u, x, cons, base, vcum, temps, rms, int(vcum[-1]),
                          a_s, d_s, b_s.x0, e_plus, e_minus)


def thermostat_run(fleet: Sequence[TclParams], amb: AmbientProfile, duration_s: float,
                   dt_s: float = CONTROL_DT_S, start_hour: float = 0.0, seed: int = 0,
                   force_on: bool = False) -> TrackingResult:
    """Free-running thermostats, or every device held ON when ``force_on``."""
    fa = FleetArrays.from_params(fleet)
    n_steps = int(round(duration_s / dt_s))

    def controller(state, k, base):
        if force_on:
            return np.ones(fa.n, dtype=np.int8)
        return forced_commands(state, fa)[0]

    t, cons, base, vcum, temps = _simulate(fa, amb, n_steps, dt_s, start_hour, seed, controller, True)
    u = cons - base
    zero = np.zeros(n_steps)
    return TrackingResult(t, zero, u, zero.copy(), cons, base, vcum, temps,
                          float(np.sqrt(np.mean(u ** 2)) / float(fa.p_m.max())), int(vcum[-1]),
                          1.0, 0.0, 0.0, np.full(n_steps, np.inf), np.full(n_steps, np.inf))


def comfort_report(result: TrackingResult, fleet: Sequence[TclParams], amb: AmbientProfile,
                   dt_s: float | None = None) -> dict:
    """Per-device worst excursion past deadband plus one-step drift allowance."""
    if result.temps is None:
        raise ValueError("comfort report needs recorded temperature traces")
    fa = FleetArrays.from_params(fleet)
    if dt_s is None:
        dt_s = float(result.t_seconds[1] - result.t_seconds[0]) if result.t_seconds.size > 1 else CONTROL_DT_S
    allowance = fa.drift(amb.theta_a, dt_s)
    exc = _excursions(result.temps, fa, allowance)
    per_device = exc.max(axis=0)
    return {
        "max_excursion": per_device,
        "violating_devices": int(np.count_nonzero(per_device > 0)),
        "violation_samples": int(np.count_nonzero(exc > 0)),
        "worst": float(per_device.max()),
    }
