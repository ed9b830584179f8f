"""
Command-line entry point: ``chiralwg <kind> [--config PATH] [--set key=value ...]
[--<key> value ...] [--out DIR] [--seed N]``.

Values given on the command line are parsed as JSON when possible (``1.5``,
``[0, 0.25]``, ``true``) and as plain strings otherwise.  Later sources win:
config file, then ``--set``, then per-key flags, then ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ScenarioError
from .scenario import KINDS, SCHEMAS, parse_scenario, run_scenario, validate

ERROR_FILE = "error.json"


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _assignment(text: str) -> tuple[str, object]:
    key, sep, val = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key.strip(), _value(val)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chiralwg", description="Chiral waveguide QED simulations.")
    sub = parser.add_subparsers(dest="kind", required=True, metavar="kind")
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} scenario")
        p.add_argument("--config", type=Path, help="JSON scenario file")
        p.add_argument("--set", dest="overrides", action="append", type=_assignment, default=[],
                       metavar="KEY=VALUE", help="override one parameter")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--seed", type=int, help="random seed (unsigned 64-bit)")
        group = p.add_argument_group("parameters")
        for key in SCHEMAS[kind]:
            if key == "seed":
                continue
            group.add_argument(f"--{key}", dest=f"param:{key}", metavar="VALUE", default=None)
    return parser


def _scenario_from_args(args):
    doc = {}
    if args.config is not None:
        doc = parse_scenario(args.config, args.kind).to_dict()
        doc.pop("kind")
    for key, val in args.overrides:
        doc[key] = val
    for name, val in vars(args).items():
        if name.startswith("param:") and val is not None:
            doc[name[len("param:"):]] = _value(val)
    if args.seed is not None:
        doc["seed"] = args.seed
    return validate(doc, args.kind)


def _fail(out: Path, exc: BaseException, code: int) -> int:
    err = {"error": type(exc).__name__, "message": str(exc)}
    text = json.dumps(err, sort_keys=True)
    print(text, file=sys.stderr)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / ERROR_FILE).write_text(text + "\n", encoding="utf-8")
    except OSError:
        pass
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out
    try:
        scenario = _scenario_from_args(args)
    except ScenarioError as exc:
        return _fail(out, exc, 2)
    try:
        summary, _ = run_scenario(scenario, out)
    except Exception as exc:  # noqa: BLE001 - every failure becomes a structured error
        return _fail(out, exc, 1)
    stale = out / ERROR_FILE
    if stale.exists():
        stale.unlink()
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
