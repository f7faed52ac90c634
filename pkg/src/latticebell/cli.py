"""Command-line driver emitting bit-stable CSV/JSON plot data.

Subcommands: chsh, scaling, map, interaction, simulate.
Exit codes: 0 success, 2 argument error, 3 capacity error,
4 strict-check failure, 5 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
import time

import numpy as np

from . import __version__, bell, optimize, protocol
from .bell import (
    MeasurementSettings,
    TuraCoefficients,
    closed_form_correlator,
    parity_correlator,
)
from .fock import CapacityError
from .optimize import CHSH_OPT_PHI, CHSH_OPT_THETA, GaConfig, SweepGrid

EXIT_OK = 0
EXIT_ARGS = 2
EXIT_CAPACITY = 3
EXIT_STRICT = 4
EXIT_IO = 5


def _fmt(x) -> str:
    """Floats serialized with 12 significant digits for stable files."""
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_record(path, experiment, inputs, outputs, seed, started):
    record = {
        "experiment": experiment,
        "inputs": inputs,
        "outputs": outputs,
        "version": __version__,
        "seed": seed,
        "wall_time_s": round(time.time() - started, 3),
    }
    with open(path, "w") as handle:
        json.dump(record, handle, indent=2, sort_keys=True)
        handle.write("\n")


class StrictCheckError(RuntimeError):
    pass


def _strict(condition: bool, message: str, enabled: bool):
    if enabled and not condition:
        raise StrictCheckError(message)


# ---------------------------------------------------------------- commands

def cmd_chsh(args, out_dir, seed) -> None:
    started = time.time()
    steps = args.omega_steps
    omegas = np.linspace(0.0, math.pi, steps)

    def bell_at(omega: float) -> float:
        phases_t = omega / 2
        phases_f = -3 * omega / 2
        evaluator = _two_well_evaluator(args.postselect)
        return bell.chsh_value(phases_t, phases_t, phases_f, phases_f, evaluator)

    rows = []
    for omega in omegas:
        value = bell_at(float(omega))
        rows.append((float(omega), value, abs(value) > 2.0))
    best_idx = int(np.argmax([abs(r[1]) for r in rows]))
    refined, neg = optimize.coordinate_descent(
        lambda x: -abs(bell_at(float(x[0]))),
        np.array([rows[best_idx][0]]),
        span=max(math.pi / max(steps - 1, 1), 0.05),
    )
    best_omega, best_value = float(refined[0]), -neg
    _write_csv(out_dir / "chsh.csv", ["omega", "bell_value", "violation"], rows)
    expected = 2 * math.sqrt(2) if args.postselect else 1 + math.sqrt(2)
    _strict(abs(best_value - expected) < 1e-4, "chsh optimum off expected value", args.strict)
    _write_record(
        out_dir / "chsh.json",
        "chsh",
        {"postselect": args.postselect, "omega_steps": steps},
        {"max_abs_bell": best_value, "omega_at_max": best_omega},
        seed,
        started,
    )
    print(f"max |B_2| = {best_value:.6f} at omega = {best_omega:.6f}")


def _two_well_evaluator(postselect: bool):
    def evaluator(phases):
        return parity_correlator(2, phases, chi=0.0, postselect=postselect)

    return evaluator


def cmd_scaling(args, out_dir, seed) -> None:
    started = time.time()
    ga = GaConfig(seed=seed)
    summaries, fit = optimize.scaling_scan(
        args.n_min, args.n_max, mode=args.mode, evaluator=None, ga_config=ga
    )
    rows = []
    for s in summaries:
        rows.append(
            (
                s.n,
                s.bell_value,
                s.classical_bound,
                s.xi,
                s.mode,
                ";".join(_fmt(v) for v in s.settings.theta),
                ";".join(_fmt(v) for v in s.settings.phi),
                seed,
            )
        )
    _write_csv(
        out_dir / "scaling.csv",
        ["N", "min_bell", "classical_bound", "xi", "mode", "theta_opt", "phi_opt", "seed"],
        rows,
    )
    _strict(all(s.violation for s in summaries), "non-violating optimum in scan", args.strict)
    _write_record(
        out_dir / "scaling.json",
        "scaling",
        {"n_min": args.n_min, "n_max": args.n_max, "mode": args.mode},
        {"fit": fit, "xi": {str(s.n): s.xi for s in summaries}},
        seed,
        started,
    )
    print(f"fit: xi ~ {fit['c']:.4f} / N^{fit['p']:.4f} (residual {fit['residual']:.2e})")


def cmd_map(args, out_dir, seed) -> None:
    started = time.time()
    grid = SweepGrid(steps=args.grid_steps)
    result = optimize.violation_map(args.n, grid)
    rows = []
    for i, theta in enumerate(result["theta"]):
        for j, phi in enumerate(result["phi"]):
            rows.append(
                (
                    float(theta),
                    float(phi),
                    float(result["bell_value"][i, j]),
                    float(result["xi"][i, j]),
                    bool(result["violation"][i, j]),
                )
            )
    _write_csv(out_dir / "map.csv", ["theta", "phi", "bell_value", "xi", "violation"], rows)
    _strict(result["area_fraction"] > 0, "no violating region on the map", args.strict)
    _write_record(
        out_dir / "map.json",
        "map",
        {"n": args.n, "grid_steps": args.grid_steps},
        {"area_fraction": result["area_fraction"],
         "classical_bound": result["classical_bound"]},
        seed,
        started,
    )
    print(f"violating area fraction = {result['area_fraction']:.4f}")


def cmd_interaction(args, out_dir, seed) -> None:
    started = time.time()
    chis = np.linspace(0.0, args.chi_max, args.steps)
    records = optimize.interaction_scan(args.n, [float(c) for c in chis],
                                        ga_config=GaConfig(seed=seed))
    rows = []
    for rec in records:
        if args.n == 2:
            reference = (4 - rec["chi"] ** 2) / math.sqrt(2)
            rows.append((rec["chi"], rec["bell_magnitude"], reference,
                         abs(rec["bell_magnitude"] - reference)))
        else:
            rows.append((rec["chi"], rec["bell_magnitude"], "", ""))
    _write_csv(
        out_dir / "chi.csv",
        ["chi", "bell_magnitude", "analytic_reference", "abs_error"],
        rows,
    )
    slope = optimize.interaction_slope(args.n, ga_config=GaConfig(seed=seed))
    _strict(abs(slope) < 1e-4, "first-order interaction slope too large", args.strict)
    _write_record(
        out_dir / "chi.json",
        "interaction",
        {"n": args.n, "chi_max": args.chi_max, "steps": args.steps},
        {"slope_at_zero": slope},
        seed,
        started,
    )
    print(f"d|B|/dchi at chi=0: {slope:.3e}")


def cmd_simulate(args, out_dir, seed) -> None:
    started = time.time()
    n = args.n
    theta = args.theta
    phi = args.phi
    if len(theta) != n or len(phi) != n:
        raise argparse.ArgumentTypeError("theta and phi must list one phase per well")
    run = protocol.run_protocol(
        n, theta, chi=args.chi, postselect=args.postselect,
        dimension_cap=args.dimension_cap,
    )
    p_plus, p_minus = protocol.parity_distribution(run.basis, run.final_state)
    amplitudes = [
        {
            "index": i,
            "occupation": "".join(str(c) for c in occ),
            "re": float(amp.real),
            "im": float(amp.imag),
        }
        for i, (occ, amp) in enumerate(zip(run.basis.states, run.final_state))
        if abs(amp) > 1e-14
    ]
    settings = MeasurementSettings(tuple(theta), tuple(phi))

    def evaluator(phases):
        return parity_correlator(n, phases, chi=args.chi, postselect=args.postselect)

    corr = bell.correlation_set(n, settings, evaluator)
    coeffs = TuraCoefficients.for_parties(n)
    value = bell.bell_value(coeffs, corr)
    outputs = {
        "amplitudes": amplitudes,
        "parity_distribution": {"plus": p_plus, "minus": p_minus},
        "postselect_probability": run.postselect_probability,
        "correlations": {
            "s0": corr.s0, "s1": corr.s1,
            "s00": corr.s00, "s01": corr.s01, "s11": corr.s11,
        },
        "bell_value": value,
        "classical_bound": coeffs.classical_bound,
    }
    if n == 2 and args.chi == 0.0 and not args.postselect:
        events = protocol.two_well_event_probabilities(theta[0], theta[1])
        outputs["event_probabilities"] = {"|".join(k): v for k, v in events.items()}
    _write_record(
        out_dir / "simulate.json",
        "simulate",
        {"n": n, "theta": list(theta), "phi": list(phi),
         "chi": args.chi, "postselect": args.postselect},
        outputs,
        seed,
        started,
    )
    print(f"bell_value = {value:.6f} (classical bound {coeffs.classical_bound})")


# ---------------------------------------------------------------- plumbing

_CONFIG_KEYS = {
    "chsh": {"postselect", "omega_steps"},
    "scaling": {"n_min", "n_max", "mode"},
    "map": {"n", "grid_steps"},
    "interaction": {"n", "chi_max", "steps"},
    "simulate": {"n", "theta", "phi", "chi", "postselect"},
    "ga": {"population", "generations", "mutation_sigma", "sigma_decay",
           "crossover_rate", "elite_count", "tournament_size", "seed"},
    "global": {"seed", "dimension_cap", "strict", "out"},
}


def load_config(path: str) -> dict:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise OSError(f"cannot read config file {path}")
    result: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in _CONFIG_KEYS:
            raise ValueError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _CONFIG_KEYS[section]:
                raise ValueError(f"unknown key {key!r} in section [{section}]")
        result[section] = dict(parser[section])
    return result


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latticebell",
        description="Exact simulator and analysis toolkit for the lattice "
        "Bell-nonlocality protocol.",
    )
    parser.add_argument("--config", help="flat key = value config file with per-command sections")
    parser.add_argument("--out", default=".", help="output directory (default: current)")
    parser.add_argument("--seed", type=int, default=2024, help="optimizer seed (default: 2024)")
    parser.add_argument("--strict", action="store_true",
                        help="exit nonzero when a tolerance check fails")
    parser.add_argument("--dimension-cap", type=int, default=20000,
                        help="largest allowed basis dimension (default: 20000)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chsh", help="two-well CHSH sweep over the omega family")
    p.add_argument("--postselect", action="store_true",
                   help="project onto one atom per well (default: full state)")
    p.add_argument("--omega-steps", type=int, default=181)
    p.set_defaults(func=cmd_chsh)

    p = sub.add_parser("scaling", help="optimized violation versus party number")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=30)
    p.add_argument("--mode", choices=["free_phases", "global_phases"], default="free_phases")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("map", help="(theta, phi) violation map with global phases")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--grid-steps", type=int, default=256)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("interaction", help="Bell magnitude versus interaction strength")
    p.add_argument("--n", type=int, choices=[2, 3], default=2)
    p.add_argument("--chi-max", type=float, default=0.2)
    p.add_argument("--steps", type=int, default=21)
    p.set_defaults(func=cmd_interaction)

    p = sub.add_parser("simulate", help="single protocol run with full diagnostics")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--theta", type=float, nargs="+", default=[0.0, 0.0])
    p.add_argument("--phi", type=float, nargs="+", default=[0.0, 0.0])
    p.add_argument("--chi", type=float, default=0.0)
    p.add_argument("--postselect", action="store_true")
    p.set_defaults(func=cmd_simulate)
    return parser


def _apply_config(args, config: dict) -> None:
    merged = dict(config.get("global", {}))
    merged.update(config.get(args.command, {}))
    for key, raw in merged.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            continue
        current = getattr(args, attr)
        if isinstance(current, bool):
            setattr(args, attr, raw.strip().lower() in ("1", "true", "yes", "on"))
        elif isinstance(current, int):
            setattr(args, attr, int(raw))
        elif isinstance(current, float):
            setattr(args, attr, float(raw))
        elif isinstance(current, list):
            setattr(args, attr, [float(v) for v in raw.replace(",", " ").split()])
        else:
            setattr(args, attr, raw)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            _apply_config(args, load_config(args.config))
        from pathlib import Path

        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        args.func(args, out_dir, args.seed)
    except StrictCheckError as exc:
        print(f"strict check failed: {exc}", file=sys.stderr)
        return EXIT_STRICT
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (argparse.ArgumentTypeError, ValueError) as exc:
        print(f"argument error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
