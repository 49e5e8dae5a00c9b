"""Command-line front end: presets, JSON configs, CSV results and a run manifest.

    python -m iqmimo --preset fig1 --trials 20 --seed 7 --out fig1.csv
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .montecarlo import RECEIVERS, ScenarioConfig, run_sweep

log = logging.getLogger("iqmimo")

CSV_COLUMNS = ("scenario", "receiver", "sweep_var", "sweep_value", "n", "k", "l", "rho_ul_db",
               "rho_tr_db", "trials", "mc_sum_rate", "mc_stderr", "asy_sum_rate", "seed")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

_FIG1_N = (16, 32, 48, 64, 80, 96, 128, 160)

PRESETS = {
    "fig1": dict(name="fig1", n_uts=10, n_cells=7, rho_ul_db=15.0, rho_tr_db=10.0, iqi_mode="both",
                 eps=(0.15, 0.2), theta_deg=(1.0, 2.0), contamination=True,
                 sweep_var="n", sweep_values=_FIG1_N),
    "fig2": dict(name="fig2", n_uts=10, n_cells=7, rho_ul_db=15.0, rho_tr_db=10.0,
                 iqi_mode=("bs_only", "ut_only", "both"), eps=(0.15, 0.2), theta_deg=(1.0, 2.0),
                 contamination=False, receivers=("iqa_wlmmse", "iqu_mmse", "mmse_no_iqi"),
                 sweep_var="n", sweep_values=_FIG1_N),
    "fig3": dict(name="fig3", n_antennas=100, n_uts=10, n_cells=7, rho_ul_db=15.0, rho_tr_db=10.0,
                 iqi_mode="both", eps=0.0, theta_deg=2.0, contamination=True,
                 receivers=("iqa_wlmmse", "iqu_mmse", "mmse_no_iqi"),
                 sweep_var="eps", sweep_values=(0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3)),
    "fig4": dict(name="fig4", n_antennas=100, n_uts=10, n_cells=7, rho_ul_db=15.0, rho_tr_db=10.0,
                 iqi_mode="both", eps=0.02, theta_deg=0.0, contamination=True,
                 receivers=("iqa_wlmmse", "iqu_mmse", "mmse_no_iqi"),
                 sweep_var="theta", sweep_values=(0.0, 2.0, 4.0, 6.0, 8.0, 10.0)),
}


def preset(name):
    """ScenarioConfig of one of the four figure designs."""
    try:
        return ScenarioConfig(**PRESETS[name])
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def _floats(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}")
    return tuple(int(v) for v in vals)


def _names(text):
    return tuple(x.strip() for x in text.split(",") if x.strip())


def build_parser():
    p = argparse.ArgumentParser(prog="iqmimo", description="Sum-rate sweeps for uplink massive MIMO with I/Q imbalance.")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a figure design")
    p.add_argument("--config", type=Path, help="JSON config (or a previous run manifest)")
    p.add_argument("--trials", type=int, help="channel realizations per point")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", type=Path, default=Path("results.csv"), help="CSV path (manifest goes next to it)")
    p.add_argument("--receivers", type=_names, help=f"comma list from {','.join(RECEIVERS)}")
    sweep = p.add_mutually_exclusive_group()
    sweep.add_argument("--n-list", type=_ints, help="sweep the antenna count")
    sweep.add_argument("--eps-list", type=_floats, help="sweep a common amplitude mismatch")
    sweep.add_argument("--theta-list", type=_floats, help="sweep a common phase mismatch (degrees)")
    p.add_argument("--no-asymptotics", action="store_true", help="skip the large-system predictions")
    p.add_argument("--threads", type=int, default=1, help="worker threads for the trial loop")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(path):
    data = json.loads(Path(path).read_text())
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    return data


def resolve_config(args):
    """Preset, then config file, then flags; later sources win."""
    base = dict(PRESETS[args.preset]) if args.preset else {}
    if args.config is not None:
        base.update(load_config(args.config))
    if args.trials is not None:
        base["trials"] = args.trials
    if args.seed is not None:
        base["seed"] = args.seed
    if args.receivers:
        base["receivers"] = args.receivers
    if args.n_list:
        base.update(sweep_var="n", sweep_values=args.n_list)
    elif args.eps_list:
        base.update(sweep_var="eps", sweep_values=args.eps_list)
    elif args.theta_list:
        base.update(sweep_var="theta", sweep_values=args.theta_list)
    if "sweep_values" not in base:
        base["sweep_values"] = (base.get("n_antennas", ScenarioConfig.n_antennas),)
    return ScenarioConfig.from_dict(base)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def rows_to_csv(rows):
    rows = sorted(rows, key=lambda r: (r.sweep_value, r.receiver, r.scenario))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def manifest(config, rows, elapsed):
    return {
        "tool": "iqmimo",
        "version": __version__,
        "config": config.to_dict(),
        "seed": config.seed,
        "started_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "wall_clock_s": round(elapsed, 3),
        "points": [{"scenario": r.scenario, "receiver": r.receiver, "sweep_value": r.sweep_value,
                    "single_trial": r.single_trial, "diagnostics": r.diagnostics} for r in rows],
    }


def _summary(rows):
    lines = [f"{'scenario':<16}{'receiver':<18}{'value':>8}{'mc':>10}{'stderr':>9}{'asy':>10}"]
    for r in sorted(rows, key=lambda r: (r.sweep_value, r.receiver, r.scenario)):
        lines.append(f"{r.scenario:<16}{r.receiver:<18}{r.sweep_value:>8.4g}{r.mc_sum_rate:>10.3f}"
                     f"{r.mc_stderr:>9.3f}{r.asy_sum_rate:>10.3f}")
    return "\n".join(lines)


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if not args.preset and args.config is None and not args.n_list:
        parser.print_usage(sys.stderr)
        print("iqmimo: error: give --preset, --config or --n-list", file=sys.stderr)
        return EXIT_USAGE
    if args.threads < 1:
        print("iqmimo: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = resolve_config(args)
    except (ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"iqmimo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    try:
        with np.errstate(invalid="raise", divide="raise", over="raise"):
            rows = run_sweep(config, asymptotics=not args.no_asymptotics, threads=args.threads)
    except (RuntimeError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"iqmimo: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    elapsed = time.perf_counter() - t0
    out = args.out
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(rows_to_csv(rows))
    man = out.with_suffix(".manifest.json")
    man.write_text(json.dumps(manifest(config, rows, elapsed), indent=2, default=float) + "\n")
    print(_summary(rows))
    print(f"wrote {out} and {man} in {elapsed:.1f} s")
    return EXIT_OK


def main():
    sys.exit(run())


__all__ = ["PRESETS", "CSV_COLUMNS", "preset", "build_parser", "resolve_config", "rows_to_csv",
           "manifest", "run", "main"]
