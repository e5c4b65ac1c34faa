"""qrelevance command line: run, validate and list scenarios.

Exit codes: 0 success, 2 config error, 3 numerical-guard failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..master import SolverError
from .config import ConfigError, validate_config
from .runner import OUT_ENV, run_scenario
from .scenarios import BUILTINS, list_scenarios

EXIT_OK, EXIT_CONFIG, EXIT_GUARD = 0, 2, 3


def _load(ref: str):
    """A built-in name or a path to a TOML file."""
    if ref in BUILTINS:
        return validate_config(BUILTINS[ref])
    path = Path(ref)
    if not path.is_file():
        raise ConfigError([f"{ref!r} is neither a file nor a built-in scenario "
                           f"({', '.join(BUILTINS)})"])
    return validate_config(path.read_text(encoding="utf-8"))


def _cmd_run(args) -> int:
    cfg = _load(args.config)
    try:
        manifest = run_scenario(cfg, out_dir=args.out, seed=args.seed)
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    for c in manifest.checks:
        tag = "ok" if c.passed else ("GUARD FAILED" if c.guard else "failed")
        print(f"  {c.name:<28} {tag:<12} value={c.value!r}")
    for name in manifest.outputs:
        print(f"wrote {name}")
    return EXIT_OK if manifest.ok else EXIT_GUARD


def _cmd_validate(args) -> int:
    cfg = _load(args.config)
    print(f"{cfg.name}: ok (space {cfg.space}, solver {cfg.solver.kind}, digest {cfg.digest[:12]})")
    return EXIT_OK


def _cmd_list(args) -> int:
    for name, desc in list_scenarios():
        print(f"{name:<26} {desc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qrelevance", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    run = sub.add_parser("run", help="run a scenario file or built-in")
    run.add_argument("config", help="path to a TOML scenario or a built-in name")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--out", default=None,
                     help=f"output directory (default: ${OUT_ENV}, then the config's [output] dir)")
    run.set_defaults(func=_cmd_run)
    val = sub.add_parser("validate", help="check a scenario and report every problem")
    val.add_argument("config")
    val.set_defaults(func=_cmd_validate)
    sub.add_parser("list", help="list built-in scenarios").set_defaults(func=_cmd_list)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
