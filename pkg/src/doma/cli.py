"""Batch front end: ``doma run`` and ``doma compare``.

Both commands write ``report.json``, ``results.csv`` and ``manifest.json``
into ``--out``.  Failures print a JSON error document on stderr and exit with
2 (configuration) or 3 (runtime).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .mac_core import DegenerateChannelError, Scheme
from .outage import (SWEEP_AXES, OutageReport, apply_axis, reports_to_csv, reports_to_json,
                     run_scenario, sweep)
from .scenario import ConfigError, ScenarioConfig, config_to_json, load_config, validate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, **details):
        super().__init__(message)
        self.code, self.kind, self.details = code, kind, details


def parse_scheme(name: str) -> Scheme:
    key = name.strip().lower().replace("_", "").replace("-", "")
    for scheme in Scheme:
        if key == scheme.value.replace("_", ""):
            return scheme
    choices = ", ".join(s.value for s in Scheme)
    raise argparse.ArgumentTypeError(f"unknown scheme {name!r} (choose from {choices})")


def parse_scheme_spec(text: str) -> tuple[Scheme, list[tuple[str, str]]]:
    """``NAME[:axis=value,...]``, e.g. ``doma:delta=0.25,M=8``."""
    name, _, rest = text.partition(":")
    overrides = []
    for item in filter(None, rest.split(",")):
        axis, eq, value = item.partition("=")
        if not eq or axis not in SWEEP_AXES:
            raise argparse.ArgumentTypeError(
                f"bad override {item!r} in {text!r}; use AXIS=VALUE with AXIS in {SWEEP_AXES}")
        overrides.append((axis, value))
    return parse_scheme(name), overrides


def parse_sweep(text: str) -> tuple[str, list[str]]:
    axis, eq, values = text.partition("=")
    if not eq or axis not in SWEEP_AXES:
        raise argparse.ArgumentTypeError(
            f"bad sweep {text!r}; use AXIS=v1,v2,... with AXIS in {', '.join(SWEEP_AXES)}")
    items = [v for v in values.split(",") if v]
    if not items:
        raise argparse.ArgumentTypeError(f"sweep {text!r} lists no values")
    return axis, items


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="doma", description="D-OMA outage-capacity simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="JSON scenario file")
    common.add_argument("--out", required=True, type=Path, help="output directory")
    common.add_argument("--sweep", type=parse_sweep, metavar="AXIS=v1,v2,...")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--trials", type=int, help="override the config trial count")
    common.add_argument("--workers", type=int, default=1,
                        help="worker processes (results do not depend on this)")

    run = sub.add_parser("run", parents=[common], help="simulate one scheme")
    run.add_argument("--scheme", required=True, type=parse_scheme)

    compare = sub.add_parser("compare", parents=[common], help="overlay several schemes")
    compare.add_argument("--scheme", dest="schemes", action="append", default=[],
                         type=parse_scheme_spec, metavar="NAME[:AXIS=V,...]",
                         help="repeat for each scheme (at least two)")
    return parser


def _load(args) -> tuple[ScenarioConfig, bytes]:
    path: Path = args.config
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CliError(EXIT_CONFIG, "io_error", f"cannot read config {path}: {exc.strerror}",
                       path=str(path))
    try:
        config = load_config(path)
        changes = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.trials is not None:
            changes["trials"] = args.trials
        config = validate(config.replace(**changes))
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, "config_error", str(exc), path=str(path),
                       violations=exc.violations)
    return config, raw


def _simulate(config, scheme, overrides, sweep_spec, workers) -> list[OutageReport]:
    try:
        for axis, value in overrides:
            config = apply_axis(config, axis, value)
        if sweep_spec is None:
            return [run_scenario(config, scheme, workers=workers)]
        axis, values = sweep_spec
        return sweep(config, axis, values, scheme, workers=workers)
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, "config_error", str(exc), violations=exc.violations)
    except DegenerateChannelError as exc:
        raise CliError(EXIT_RUNTIME, "degenerate_channel", str(exc), trial=exc.trial)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, "config_error", str(exc))


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _write_outputs(out: Path, reports, manifest: dict) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {"report": out / "report.json", "csv": out / "results.csv",
                 "manifest": out / "manifest.json"}
        paths["report"].write_text(reports_to_json(reports), encoding="utf-8")
        paths["csv"].write_text(reports_to_csv(reports), encoding="utf-8")
        manifest["outputs"] = {k: str(v) for k, v in paths.items()}
        manifest["finished"] = _now()
        paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_RUNTIME, "io_error", f"cannot write outputs to {out}: {exc}",
                       path=str(out))


def execute(args) -> None:
    started = _now()
    config, raw = _load(args)
    if args.command == "run":
        runs = [(args.scheme, [])]
    else:
        runs = args.schemes
    reports: list[OutageReport] = []
    for scheme, overrides in runs:
        reports.extend(_simulate(config, scheme, overrides, args.sweep, args.workers))
    manifest = {
        "tool_version": __version__,
        "command": args.command,
        "config_path": str(args.config),
        "config_file_digest": hashlib.sha256(raw).hexdigest(),
        "config_digest": hashlib.sha256(config_to_json(config).encode()).hexdigest(),
        "config": config.to_dict(),
        "schemes": [{"scheme": s.value, "overrides": dict(o)} for s, o in runs],
        "sweep": None if args.sweep is None else {"axis": args.sweep[0], "values": args.sweep[1]},
        "started": started,
    }
    _write_outputs(args.out, reports, manifest)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "compare" and len(args.schemes) < 2:
        parser.error("compare needs at least two --scheme options")
    try:
        execute(args)
    except CliError as exc:
        doc = {"error": exc.kind, "message": str(exc), "exit_code": exc.code, **exc.details}
        print(json.dumps(doc, sort_keys=True), file=sys.stderr)
        return exc.code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
