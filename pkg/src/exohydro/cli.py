"""Command-line front end.

Subcommands synthesize reference profiles, compute the motor-demand
metric grid, solve for balance offsets, run bench simulations, and run
the valve-switching experiments.  Every command writes plot-ready CSV or
JSON plus a manifest recording exactly how it was invoked; reruns with
the same manifest produce byte-identical files.

Exit codes: 0 success, 2 invalid input, 3 simulation fault,
4 infeasible optimization.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .analysis import design_table, rms_reduction_ratios
from .config import BenchConfig, load_config
from .hydraulics import HydraulicFault
from .optimizer import offset_problem, optimal_offset
from .profiles import TASKS, default_scenario
from .sim.scenarios import SCENARIOS, compare_energy, run_scenario
from .sim.sweeps import switch_moving, switch_sweep_fixed, switch_sweep_variable

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FAULT = 3
EXIT_INFEASIBLE = 4

SWEEP_MODES = ("fixed", "variable", "moving", "moving-bypass")


def _parse_overrides(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ValueError(f"override must look like key=value, got {pair!r}")
        out[key] = value
    return out


def _manifest(args: argparse.Namespace) -> dict:
    return {
        "tool": f"exohydro {__version__}",
        "command": args.command,
        "config": args.config or "",
        "out": str(args.out),
        "format": args.format,
        "seed": args.seed,
        "overrides": _parse_overrides(args.override),
    }


def _write_rows(out: Path, name: str, rows: list[dict], fmt: str,
                manifest: dict, extra: dict | None = None) -> None:
    """Table emission: CSV + sidecar manifest, or one JSON document."""
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path = out / f"{name}.csv"
        cols = list(rows[0]) if rows else []
        with path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            w.writerows([{k: _cell(v) for k, v in r.items()} for r in rows])
        side = {"manifest": manifest}
        if extra:
            side.update(extra)
        (out / f"{name}_summary.json").write_text(
            json.dumps(side, sort_keys=True, separators=(",", ":")) + "\n")
    else:
        doc = {"rows": rows, "manifest": manifest}
        if extra:
            doc.update(extra)
        (out / f"{name}.json").write_text(
            json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")


def _cell(v) -> str:
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def _load(args: argparse.Namespace) -> BenchConfig:
    return load_config(args.config, _parse_overrides(args.override))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_profiles(args: argparse.Namespace) -> int:
    scen = default_scenario(args.task)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    masks = scen.contact_masks()
    for leg in (0, 1):
        path = out / f"{args.task}_leg{leg + 1}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s", "f_n_per_kg", "contact"])
            for t, f, c in zip(scen.times, scen.legs[leg], masks[leg]):
                w.writerow([f"{t:.10g}", f"{f:.10g}", int(c)])
    (out / f"{args.task}_profile_manifest.json").write_text(
        json.dumps({"manifest": _manifest(args), "task": args.task,
                    "period_s": scen.period, "dt_s": scen.dt},
                   sort_keys=True, separators=(",", ":")) + "\n")
    print(f"wrote {args.task} leg profiles to {out}")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    table = design_table()
    ratios = rms_reduction_ratios(table)
    _write_rows(Path(args.out), "analyze_metrics", table, args.format,
                _manifest(args), {"rms_reduction_ratios": ratios})
    for task, ratio in sorted(ratios.items()):
        print(f"{task}: rms A/D = {ratio:.3g}")
    return EXIT_OK


def cmd_optimize(args: argparse.Namespace) -> int:
    scen = default_scenario(args.task)
    res = optimal_offset(offset_problem(scen, args.variant))
    row = res.as_dict()
    row["task"] = args.task
    row["variant"] = args.variant
    _write_rows(Path(args.out), f"offset_{args.task}_{args.variant}", [row],
                args.format, _manifest(args))
    print(f"{args.task}/{args.variant}: offset {res.f_stat:.3f} N/kg, "
          f"residual rms {res.f_dyn_rms:.3f} N/kg"
          + ("" if res.feasible else "  [crest-factor cap not met]"))
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    result = run_scenario(args.scenario, cfg)
    result.meta["cli"] = _manifest(args)
    paths = result.save(args.out, args.scenario, args.format)
    print(f"{args.scenario}: " + ", ".join(
        f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
        for k, v in sorted(result.summary.items())))
    print("wrote " + ", ".join(p.name for p in paths))
    return EXIT_OK


def cmd_compare_energy(args: argparse.Namespace) -> int:
    cfg = _load(args)
    results = compare_energy(cfg)
    rows = []
    for variant, res in results.items():
        rows.append({"variant": variant,
                     "i_rms_a": res.summary["i_rms_a"],
                     "p_joule_w": res.summary["p_joule_w"],
                     "p_mech_w": res.summary["p_mech_w"],
                     "p_elec_w": res.summary["p_elec_w"],
                     "closure_frac": res.summary["closure_frac"]})
    order = sorted(rows, key=lambda r: -r["p_elec_w"])
    ranking = ">".join(r["variant"] for r in order)
    _write_rows(Path(args.out), "energy_variants", rows, args.format,
                _manifest(args), {"power_ordering": ranking})
    for r in rows:
        print(f"variant {r['variant']}: {r['p_elec_w']:.2f} W electrical "
              f"({r['i_rms_a']:.2f} A rms)")
    print(f"ordering: {ranking}")
    return EXIT_OK


def cmd_sweep_valves(args: argparse.Namespace) -> int:
    cfg = _load(args)
    if args.mode == "fixed":
        result = switch_sweep_fixed(cfg)
        rows = [{"speed_deg_s": s, "overshoot_frac": o, "rise_s": r}
                for s, o, r in zip(result.summary["speeds_deg_s"],
                                   result.summary["overshoot_frac"],
                                   result.summary["rise_s"])]
    elif args.mode == "variable":
        result = switch_sweep_variable(cfg)
        rows = [{"speed_deg_s": "variable",
                 "overshoot_frac": result.summary["overshoot_frac"][0],
                 "rise_s": result.summary["rise_s"][0]}]
    else:
        result = switch_moving(cfg, bypass=args.mode == "moving-bypass")
        rows = [{"speed_m_s": s, "spike_pa": p}
                for s, p in zip(result.summary["speeds_m_s"],
                                result.summary["spike_pa"])]
    name = f"sweep_{args.mode.replace('-', '_')}"
    result.meta["cli"] = _manifest(args)
    result.save(args.out, name, args.format)
    _write_rows(Path(args.out), f"{name}_table", rows, args.format,
                _manifest(args))
    for r in rows:
        print(", ".join(f"{k}={_cell(v)}" for k, v in r.items()))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exohydro",
        description="Reconfigurable hydrostatic-actuation design toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", default=None, help="YAML bench config")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--seed", type=int, default=0,
                       help="recorded in the manifest; all runs are "
                            "deterministic")
        p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE", help="config override "
                       "(dotted key), repeatable")

    p = sub.add_parser("profiles", help="write per-leg reference profiles")
    p.add_argument("task", choices=TASKS)
    common(p)
    p.set_defaults(fn=cmd_profiles)

    p = sub.add_parser("analyze", help="motor-demand metric grid")
    common(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("optimize", help="solve for the balance offset")
    p.add_argument("task", choices=TASKS)
    p.add_argument("--variant", choices=("B", "D"), default="D")
    common(p)
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("simulate", help="run a bench scenario")
    p.add_argument("scenario", choices=SCENARIOS)
    common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("compare-energy", help="actuation-variant power table")
    common(p)
    p.set_defaults(fn=cmd_compare_energy)

    p = sub.add_parser("sweep-valves", help="switching-transient sweeps")
    p.add_argument("--mode", choices=SWEEP_MODES, default="fixed")
    common(p)
    p.set_defaults(fn=cmd_sweep_valves)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses its own codes; normalize
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except HydraulicFault as exc:
        print(f"simulation fault: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
