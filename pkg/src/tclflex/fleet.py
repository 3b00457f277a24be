"""TCL parameters, device models, fleet sampling and file ingestion."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

PARAM_NAMES = ("r_th", "c_th", "theta_r", "delta", "eta", "theta_0", "p_m")
FLEET_HEADER = ("r_th", "c_th", "theta_r", "delta", "eta", "theta_0", "p_m")
AMBIENT_HEADER = ("t_hours", "theta_a")
SIGNAL_HEADER = ("t_seconds", "r_kw")


class InfeasibleDeviceError(ValueError):
    """Device parameters that do not describe a usable cooling TCL."""


class FileFormatError(ValueError):
    """A fleet, ambient or signal file that does not match its schema."""


@dataclass(frozen=True)
class TclParams:
    """Physical parameters of one air conditioner.

    Units: ``r_th`` degC/kW, ``c_th`` kWh/degC, temperatures in degC,
    ``delta`` is the half deadband in degC, ``p_m`` the rated power in kW.
    """

    r_th: float = 2.0
    c_th: float = 2.0
    theta_r: float = 22.5
    delta: float = 0.25
    eta: float = 2.5
    theta_0: float = 22.5
    p_m: float = 5.6

    def __post_init__(self):
        for name in PARAM_NAMES:
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        for name in ("r_th", "c_th", "delta", "eta", "p_m"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def b(self) -> float:
        return self.r_th * self.eta

    def a(self, dt: float) -> float:
        return math.exp(-dt / (self.r_th * self.c_th))

    def as_row(self) -> list[float]:
        return [getattr(self, n) for n in FLEET_HEADER]


DEFAULT_PARAMS = TclParams()


@dataclass(frozen=True)
class AmbientProfile:
    dt: float                 # hours per planning step
    theta_a: np.ndarray       # degC, one value per step

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("ambient dt must be positive")
        theta = np.asarray(self.theta_a, dtype=float)
        if theta.ndim != 1 or theta.size == 0 or not np.all(np.isfinite(theta)):
            raise ValueError("theta_a must be a non-empty finite vector")
        object.__setattr__(self, "theta_a", theta)

    def __len__(self):
        return self.theta_a.size

    def at_seconds(self, t_s: np.ndarray, start_hour: float = 0.0) -> np.ndarray:
        """Zero-order hold of the profile onto a time grid in seconds."""
        idx = np.floor((start_hour + np.asarray(t_s) / 3600.0) / self.dt + 1e-12).astype(int)
        return self.theta_a[np.clip(idx, 0, self.theta_a.size - 1)]


def default_ambient(m: int = 24, dt: float = 1.0) -> AmbientProfile:
    """Hot-day sinusoid 30 +/- 4 degC peaking at 15:00."""
    t = np.arange(m) * dt
    return AmbientProfile(dt, 30.0 + 4.0 * np.sin(2 * np.pi * (t - 9.0) / 24.0))


@dataclass(frozen=True)
class RegulationSignal:
    dt_s: float
    r: np.ndarray

    def __post_init__(self):
        if not self.dt_s > 0:
            raise ValueError("signal dt_s must be positive")
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float))

    def __len__(self):
        return self.r.size

    @property
    def t_seconds(self) -> np.ndarray:
        return np.arange(self.r.size) * self.dt_s


@dataclass(frozen=True)
class DerivedTcl:
    """Linear energy model ``x(k) = a x(k-1) + delta u(k)`` of one device."""

    a: float
    b: float
    delta: float
    p0: np.ndarray
    u_minus: np.ndarray
    u_plus: np.ndarray
    x_minus: float
    x_plus: float
    x0: float
    p_m: float
    dt: float

    @property
    def m(self) -> int:
        return self.p0.size


def derive_linear_model(p: TclParams, amb: AmbientProfile, m: int | None = None) -> DerivedTcl:
    m = len(amb) if m is None else m
    if m < 1 or m > len(amb):
        raise ValueError(f"horizon m={m} needs 1 <= m <= {len(amb)} ambient samples")
    theta_a = amb.theta_a[:m]
    if np.any(theta_a <= p.theta_r):
        raise InfeasibleDeviceError(
            f"ambient {theta_a.min():.3f} degC not above set-point {p.theta_r} degC (cooling only)")
    a = p.a(amb.dt)
    b = p.b
    p0 = (theta_a - p.theta_r) / b
    u_plus = p.p_m - p0
    if np.any(u_plus < 0):
        raise InfeasibleDeviceError(
            f"rated power {p.p_m} kW below nominal power {p0.max():.3f} kW")
    x_band = p.c_th * p.delta / p.eta
    return DerivedTcl(
        a=a,
        b=b,
        delta=(1 - a) * p.r_th * p.c_th,
        p0=p0,
        u_minus=p0.copy(),
        u_plus=u_plus,
        x_minus=x_band,
        x_plus=x_band,
        x0=p.c_th * (p.theta_r - p.theta_0) / p.eta,
        p_m=p.p_m,
        dt=amb.dt,
    )


def step_switching(theta_prev, q, p: TclParams, theta_a, dt: float):
    """One step of the ON/OFF temperature model (works elementwise)."""
    a = p.a(dt)
    return a * theta_prev + (1 - a) * (theta_a - p.b * q * p.p_m)


def thermostat(theta_prev: float, q_prev: int, p: TclParams) -> int:
    if theta_prev >= p.theta_r + p.delta:
        return 1
    if theta_prev <= p.theta_r - p.delta:
        return 0
    return q_prev


@dataclass(frozen=True)
class FleetSpec:
    n: int = 1000
    mean_params: TclParams = DEFAULT_PARAMS
    epsilon: float = 0.1
    which_heterogeneous: tuple[str, ...] = ("r_th", "c_th")
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("fleet size must be >= 1")
        if not 0 <= self.epsilon < 1:
            raise ValueError(f"heterogeneity epsilon must be in [0, 1), got {self.epsilon}")
        unknown = set(self.which_heterogeneous) - set(PARAM_NAMES)
        if unknown:
            raise ValueError(f"unknown parameter names {sorted(unknown)}")


def sample_fleet(spec: FleetSpec) -> list[TclParams]:
    rng = np.random.default_rng(spec.seed)
    mu = spec.mean_params
    cols = {}
    # Fixed draw order keeps fleets reproducible regardless of set ordering.
    for name in PARAM_NAMES:
        v = getattr(mu, name)
        if name in spec.which_heterogeneous:
            cols[name] = rng.uniform((1 - spec.epsilon) * v, (1 + spec.epsilon) * v, spec.n)
        else:
            cols[name] = np.full(spec.n, v)
    return [TclParams(**{k: float(cols[k][i]) for k in PARAM_NAMES}) for i in range(spec.n)]


def mean_params(fleet: Sequence[TclParams]) -> TclParams:
    if not fleet:
        raise ValueError("empty fleet")
    return TclParams(**{k: float(np.mean([getattr(p, k) for p in fleet])) for k in PARAM_NAMES})


# ---------------------------------------------------------------------------
# CSV files


def _read_rows(path, header: Sequence[str], what: str) -> list[list[float]]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            got = [h.strip() for h in next(reader)]
        except StopIteration:
            raise FileFormatError(f"{path}: empty {what} file (no header)") from None
        if got != list(header):
            raise FileFormatError(f"{path}: header {got} does not match {list(header)}")
        rows = []
        for i, row in enumerate(reader):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise FileFormatError(
                    f"{path}: row {i} has {len(row)} columns, expected {len(header)}")
            vals = []
            for col, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise FileFormatError(f"{path}: row {i}, column {col!r}: bad number {cell!r}") from None
                if not math.isfinite(v):
                    raise FileFormatError(f"{path}: row {i}, column {col!r}: non-finite value")
                vals.append(v)
            rows.append(vals)
    return rows


def load_fleet(path) -> list[TclParams]:
    rows = _read_rows(path, FLEET_HEADER, "fleet")
    if not rows:
        raise FileFormatError(f"{path}: empty fleet")
    fleet = []
    for i, row in enumerate(rows):
        try:
            fleet.append(TclParams(**dict(zip(FLEET_HEADER, row))))
        except ValueError as exc:
            raise FileFormatError(f"{path}: row {i}: {exc}") from None
    return fleet


def save_fleet(fleet: Iterable[TclParams], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FLEET_HEADER)
        for p in fleet:
            w.writerow([repr(v) for v in p.as_row()])


def _uniform_step(t: np.ndarray, what: str, path) -> float:
    if t.size < 2:
        raise FileFormatError(f"{path}: {what} needs at least two samples to infer the step")
    d = np.diff(t)
    if np.any(d <= 0) or np.ptp(d) > 1e-9 * max(1.0, d.mean()):
        raise FileFormatError(f"{path}: {what} time column must be uniformly increasing")
    return float(d.mean())


def load_ambient(path) -> AmbientProfile:
    rows = np.array(_read_rows(path, AMBIENT_HEADER, "ambient"), dtype=float)
    if rows.size == 0:
        raise FileFormatError(f"{path}: empty ambient profile")
    return AmbientProfile(_uniform_step(rows[:, 0], "ambient", path), rows[:, 1])


def save_ambient(amb: AmbientProfile, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AMBIENT_HEADER)
        for k, th in enumerate(amb.theta_a):
            w.writerow([repr(k * amb.dt), repr(float(th))])


def load_signal(path) -> RegulationSignal:
    rows = np.array(_read_rows(path, SIGNAL_HEADER, "signal"), dtype=float)
    if rows.size == 0:
        raise FileFormatError(f"{path}: empty regulation signal")
    return RegulationSignal(_uniform_step(rows[:, 0], "signal", path), rows[:, 1])


def save_signal(sig: RegulationSignal, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SIGNAL_HEADER)
        for t, r in zip(sig.t_seconds, sig.r):
            w.writerow([repr(float(t)), repr(float(r))])
