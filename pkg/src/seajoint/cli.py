"""Batch command line: ``seajoint {simulate,sweep,reduce-motor,validate}``.

Exit status: 0 success, 2 configuration error, 3 run failure (divergence,
singular configuration, operating range), 4 validation failure, 64 usage.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Optional, Sequence

from .config import ExperimentConfig, config_digest, parse_config, to_nested
from .errors import ConfigError, IngestionError, SeaJointError
from .plant import IDENTIFIED_VELOCITY_POLE, reduce_motor_model
from .simulator import gain_sweep, plot_trace_svg, run_simulation, write_sweep_csv, write_trace_csv
from .validation import run_validation_suite

EXIT_OK, EXIT_CONFIG, EXIT_RUN, EXIT_VALIDATION, EXIT_USAGE = 0, 2, 3, 4, 64
MANIFEST_NAME = "manifest.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def tool_version() -> str:
    try:
        return version("seajoint")
    except PackageNotFoundError:  # pragma: no cover - running from a source tree
        return "0+unknown"


def _common(p: argparse.ArgumentParser, out_default: Optional[str]) -> None:
    p.add_argument("--config", help="TOML or JSON config file (a manifest.json also works)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override one dotted key, e.g. --set gains.c=20 (repeatable)")
    p.add_argument("--out", default=out_default, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="reserved; every computation is deterministic")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seajoint", description="SEA hip joint simulation and controller experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {tool_version()}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="run one closed-loop scenario, write trace.csv and metrics")
    _common(p, "seajoint-out")
    p.add_argument("--plot", action="store_true", help="also write trace.svg (needs matplotlib)")

    p = sub.add_parser("sweep", help="vary one gain, one run per value")
    _common(p, "seajoint-out")
    p.add_argument("--axis", choices=("c", "rho", "k1", "k2"), help="gain to sweep (default sweep.axis)")
    p.add_argument("--values", help="comma-separated gain values (default sweep.values)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    p = sub.add_parser("reduce-motor", help="first-order reduction of the motor/ball-screw drive")
    _common(p, None)
    p.add_argument("--rate", type=float, default=None,
                   help="closed-loop rate (1/s) for the neglected-term ratio (default gains.c)")

    p = sub.add_parser("validate", help="run the invariant suite; one line per check")
    _common(p, None)
    p.add_argument("--quick", action="store_true", help="skip the 8 s closed-loop checks")
    return parser


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(out: Path, command: str, cfg: ExperimentConfig, args, started: float, status: str,
                   outputs: Sequence[str], extra: Optional[dict] = None) -> Path:
    manifest = {
        "tool": "seajoint",
        "version": tool_version(),
        "command": command,
        "status": status,
        "wall_time_s": round(time.perf_counter() - started, 6),
        "config_path": args.config,
        "config_digest": config_digest(args.config),
        "overrides": list(args.overrides),
        "outputs": list(outputs),
        "config": to_nested(cfg),
    }
    if extra:
        manifest.update(extra)
    path = out / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, allow_nan=True) + "\n", encoding="utf-8", newline="\n")
    return path


def _metrics_json(metrics) -> dict:
    return {"values": metrics.as_dict(), "windows": {k: list(v) for k, v in metrics.windows.items()}}


def cmd_simulate(args, cfg: ExperimentConfig, started: float) -> int:
    out = _out_dir(args.out)
    result = run_simulation(cfg.sim)
    write_trace_csv(out / "trace.csv", result.trace)
    outputs = ["trace.csv"]
    if result.metrics is not None:
        (out / "metrics.json").write_text(json.dumps(_metrics_json(result.metrics), indent=2) + "\n",
                                          encoding="utf-8", newline="\n")
        outputs.append("metrics.json")
    if args.plot and len(result.trace):
        plot_trace_svg(out / "trace.svg", result.trace)
        outputs.append("trace.svg")
    error = None if result.ok else str(result.error)
    write_manifest(out, "simulate", cfg, args, started, result.status, outputs, {"error": error})
    if not result.ok:
        print(f"run failed ({result.status}): {error}", file=sys.stderr)
        return EXIT_RUN
    for name, value in result.metrics.as_dict().items():
        print(f"{name} = {value:.6g}")
    print(f"wrote {out}")
    return EXIT_OK


def _parse_values(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError("--values", f"expected comma-separated numbers, got {text!r}") from None


def cmd_sweep(args, cfg: ExperimentConfig, started: float) -> int:
    axis = args.axis or cfg.sweep_axis
    values = _parse_values(args.values) if args.values else list(cfg.sweep_values)
    if args.jobs < 1:
        raise ConfigError("--jobs", f"must be >= 1, got {args.jobs}")
    rows = gain_sweep(cfg.sim, axis, values, jobs=args.jobs)
    out = _out_dir(args.out)
    write_sweep_csv(out / "sweep.csv", axis, rows)
    failed = sum(r.status != "ok" for r in rows)
    write_manifest(out, "sweep", cfg, args, started, "ok", ["sweep.csv"],
                   {"sweep": {"axis": axis, "values": values, "failed_runs": failed}})
    for r in rows:
        summary = (" ".join(f"{k}={v:.4g}" for k, v in r.metrics.as_dict().items())
                   if r.metrics else r.error)
        print(f"{axis}={r.value:g} {r.status} {summary}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_reduce_motor(args, cfg: ExperimentConfig, started: float) -> int:
    red = reduce_motor_model(cfg.motor)
    rate = cfg.sim.gains.c if args.rate is None else args.rate
    report = {
        "A2": red.A2, "A1": red.A1, "A0": red.A0,
        "c_v": red.c_v,
        "reference_c_v": IDENTIFIED_VELOCITY_POLE,
        "deviation": red.pole_deviation(),
        "electrical_time_constant_s": red.electrical_time_constant,
        "neglect_rate": rate,
        "neglect_ratio": red.neglect_ratio(rate),
        "prefactor": red.prefactor,
        "J_eq": red.J_eq,
    }
    print(f"c_v = {red.c_v:.6g} 1/s")
    print(f"deviation from {IDENTIFIED_VELOCITY_POLE} = {report['deviation']:+.4%}")
    print(f"A2 = {red.A2:.6g}  A1 = {red.A1:.6g}  A0 = {red.A0:.6g}")
    print(f"neglected v0'' term at s = {rate:g} 1/s: {report['neglect_ratio']:.4%} of the v0' term")
    if args.out:
        out = _out_dir(args.out)
        (out / "reduction.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8", newline="\n")
        write_manifest(out, "reduce-motor", cfg, args, started, "ok", ["reduction.json"])
    return EXIT_OK


def cmd_validate(args, cfg: ExperimentConfig, started: float) -> int:
    sim = cfg.sim
    report = run_validation_suite(geom=sim.geometry, dt_plant=sim.dt_plant, params=sim.params,
                                  full=not args.quick)
    for line in report.lines():
        print(line)
    if args.out:
        out = _out_dir(args.out)
        (out / "validation.txt").write_text("\n".join(report.lines()) + "\n", encoding="utf-8", newline="\n")
        write_manifest(out, "validate", cfg, args, started, "ok" if report.ok else "failed", ["validation.txt"])
    return EXIT_OK if report.ok else EXIT_VALIDATION


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "reduce-motor": cmd_reduce_motor,
    "validate": cmd_validate,
}


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr, end="")
        return EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    started = time.perf_counter()
    try:
        cfg = parse_config(args.config, args.overrides)
        return COMMANDS[args.command](args, cfg, started)
    except (ConfigError, IngestionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SeaJointError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN


def main(argv: Optional[Sequence[str]] = None) -> int:
    return dispatch(argv)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
