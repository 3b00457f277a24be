"""Command-line front end: ``tclflex <subcommand> [flags]``.

Exit codes: 0 success, 1 input/output problem, 2 numerical or degenerate result
(argparse usage errors also exit with 2).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import lp
from .approx import InscriptionError
from .battery import (
    KINDS,
    METHODS,
    DegenerateBatteryError,
    characterize,
    gamma,
    read_battery_json,
)
from .fleet import (
    DEFAULT_PARAMS,
    PARAM_NAMES,
    FileFormatError,
    FleetSpec,
    InfeasibleDeviceError,
    default_ambient,
    load_ambient,
    load_fleet,
    load_signal,
    sample_fleet,
    save_fleet,
    save_signal,
)
from .sim import comfort_report, scale_signal, synthetic_signal, track
from .verify import random_sandwich

EXIT_OK, EXIT_IO, EXIT_NUMERIC = 0, 1, 2

log = logging.getLogger("tclflex")


def _epsilon(text: str) -> float:
    v = float(text)
    if not 0 <= v < 1:
        raise argparse.ArgumentTypeError(f"epsilon must be in [0, 1), got {v}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {v}")
    return v


def _ambient(args):
    if args.ambient:
        return load_ambient(args.ambient)
    return default_ambient(args.m or 24, args.dt_hours)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_fleet_gen(args) -> int:
    which = tuple(w for w in args.heterogeneous.split(",") if w)
    spec = FleetSpec(n=args.n, mean_params=DEFAULT_PARAMS, epsilon=args.epsilon,
                     which_heterogeneous=which, seed=args.seed)
    fleet = sample_fleet(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_fleet(fleet, out)
    print(f"wrote {len(fleet)} devices to {out} (epsilon={args.epsilon}, seed={args.seed})")
    return EXIT_OK


def cmd_signal_gen(args) -> int:
    sig = synthetic_signal(args.duration, args.dt_seconds, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_signal(sig, out)
    print(f"wrote {len(sig)} samples to {out}")
    return EXIT_OK


def cmd_characterize(args) -> int:
    fleet = load_fleet(args.fleet)
    amb = _ambient(args)
    res = characterize(fleet, amb, args.method, args.kind, args.m, jobs=args.jobs)
    out = _out_dir(args)
    stem = f"{args.method}_{args.kind}"
    doc = res.to_dict()
    doc["invocation"] = {"fleet": str(args.fleet), "ambient": str(args.ambient) if args.ambient else None,
                         "m": res.battery.m, "dt_hours": amb.dt}
    (out / f"{stem}.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    if res.homothets:
        res.write_homothets(out / f"{stem}_homothets.csv")
    print(f"{args.method} {args.kind} battery for {len(fleet)} devices, m={res.battery.m}")
    print(f"  beta_total={res.beta_total:.6g}  excluded={len(res.excluded)}")
    print(f"  power band   [{-res.battery.d_minus.max():.3f}, {res.battery.d_plus.max():.3f}] kW (widest)")
    print(f"  energy band  [{-res.battery.e_minus.max():.3f}, {res.battery.e_plus.max():.3f}] kWh (widest)")
    print(f"  wrote {out / (stem + '.json')}")
    return EXIT_OK


def cmd_compare(args) -> int:
    b1, _ = read_battery_json(args.battery_a)
    b2, _ = read_battery_json(args.battery_b)
    g = gamma(b1, b2)
    print(f"gamma({args.battery_a}, {args.battery_b}) = {100 * g:.4f} %")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "a_d_minus_kw", "a_d_plus_kw", "a_e_minus_kwh", "a_e_plus_kwh",
                        "b_d_minus_kw", "b_d_plus_kw", "b_e_minus_kwh", "b_e_plus_kwh"])
            for k in range(b1.m):
                w.writerow([k + 1] + [repr(float(v)) for v in (
                    b1.d_minus[k], b1.d_plus[k], b1.e_minus[k], b1.e_plus[k],
                    b2.d_minus[k], b2.d_plus[k], b2.e_minus[k], b2.e_plus[k])])
    return EXIT_OK


def cmd_track(args) -> int:
    fleet = load_fleet(args.fleet)
    amb = _ambient(args)
    battery, _ = read_battery_json(args.battery)
    raw = load_signal(args.signal) if args.signal else synthetic_signal(seed=args.seed)
    sig = scale_signal(raw, battery, amb.dt, args.start_hour, energy=args.energy_scale,
                       margin=args.margin) if args.scale else raw
    res = track(fleet, sig, battery, amb, start_hour=args.start_hour, seed=args.seed,
                record_temps=args.temps)
    out = _out_dir(args)
    res.write_csv(out / "tracking.csv")
    if args.temps:
        res.write_temps(out / "temperatures.csv")
        rep = comfort_report(res, fleet, amb)
        print(f"  devices outside deadband + drift: {rep['violating_devices']}")
    crossing = res.energy_crossing()
    print(f"tracked {len(sig)} steps of {sig.dt_s:g} s with {len(fleet)} devices")
    print(f"  normalized rms error: {100 * res.rms_error:.3f} %")
    print(f"  comfort violations:   {res.violations}")
    if crossing is None:
        print("  energy state stayed inside the battery's energy band")
    else:
        log.warning("energy state leaves the battery's energy band at t=%g s", res.t_seconds[crossing])
        print(f"  energy limit violated from t={res.t_seconds[crossing]:g} s")
    print(f"  wrote {out / 'tracking.csv'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    rep = random_sandwich(args.n, args.m, args.seed, args.epsilon)
    print(f"sandwich check: n={args.n} m={args.m} seed={args.seed} epsilon={args.epsilon}")
    for line in rep.lines():
        print("  " + line)
    return EXIT_OK if rep.passed else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tclflex", description="TCL fleet flexibility as virtual batteries")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def horizon(sp):
        sp.add_argument("--ambient", help="ambient CSV (t_hours,theta_a); default: hot-day sinusoid")
        sp.add_argument("--m", type=_positive_int, default=None, help="planning horizon in steps")
        sp.add_argument("--dt-hours", type=float, default=1.0, help="planning step for the default ambient")

    s = sub.add_parser("fleet-gen", help="sample a heterogeneous fleet")
    s.add_argument("--n", type=_positive_int, default=1000)
    s.add_argument("--epsilon", type=_epsilon, default=0.1)
    s.add_argument("--heterogeneous", default="r_th,c_th",
                   help=f"comma list drawn from {','.join(PARAM_NAMES)}")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="fleet.csv")
    s.set_defaults(func=cmd_fleet_gen)

    s = sub.add_parser("signal-gen", help="write a synthetic regulation signal")
    s.add_argument("--duration", type=float, default=7200.0, help="seconds")
    s.add_argument("--dt-seconds", type=float, default=4.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="signal.csv")
    s.set_defaults(func=cmd_signal_gen)

    s = sub.add_parser("characterize", help="build a virtual battery for a fleet")
    s.add_argument("--fleet", required=True)
    horizon(s)
    s.add_argument("--method", choices=METHODS, default="optimal")
    s.add_argument("--kind", choices=KINDS, default="sufficient")
    s.add_argument("--jobs", type=_positive_int, default=1)
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_characterize)

    s = sub.add_parser("compare", help="gamma metric between two battery files")
    s.add_argument("battery_a")
    s.add_argument("battery_b", help="reference battery")
    s.add_argument("--out", help="per-step band CSV")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("track", help="closed-loop regulation tracking")
    s.add_argument("--fleet", required=True)
    s.add_argument("--battery", required=True, help="sufficient battery JSON")
    s.add_argument("--signal", help="signal CSV (t_seconds,r_kw); default: synthetic")
    horizon(s)
    s.add_argument("--start-hour", type=float, default=12.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--no-scale", dest="scale", action="store_false", help="use the signal as given")
    s.add_argument("--power-only", dest="energy_scale", action="store_false",
                   help="fit the signal to the power limits only, ignoring the energy limits")
    s.add_argument("--margin", type=float, default=0.8, help="gain multiplier after fitting")
    s.add_argument("--temps", action="store_true", help="write per-device temperature traces")
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_track)

    s = sub.add_parser("verify", help="brute-force sandwich check on a small random fleet")
    s.add_argument("--n", type=_positive_int, default=3)
    s.add_argument("--m", type=_positive_int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--epsilon", type=_epsilon, default=0.3)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, FileFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DegenerateBatteryError, InscriptionError, InfeasibleDeviceError, lp.LpError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
