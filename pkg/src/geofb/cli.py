"""Command line front end.

Exit codes: 0 when every certification passes, 2 when one fails, 1 for
usage or configuration errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .experiments import (
    BUILTINS,
    list_builtins,
    load_config,
    render_table,
    run_builtin,
    run_config,
    write_artifacts,
)
from .export import dumps_json, read_trace_csv
from .funcs import ConfigurationError
from .rates import certify_general_descent

EXIT_OK, EXIT_CONFIG, EXIT_CERT = 0, 1, 2
DEFAULT_OUT = "geofb-out"


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise ConfigurationError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = _parse_value(val)
    return out


def cmd_list(args) -> int:
    for name, summary, grid in list_builtins():
        extra = f"  [{grid[0]} in {{{', '.join(f'{v:g}' for v in grid[1])}}}]" if grid else ""
        print(f"{name:<28}{summary}{extra}")
    return EXIT_OK


def _out_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get("GEOFB_OUT", DEFAULT_OUT))


def cmd_run(args) -> int:
    overrides = parse_overrides(args.set)
    out = _out_dir(args)
    target = args.target
    # configs carry their own seed; built-ins default to 0
    seed = 0 if args.seed is None else args.seed
    runs = []
    if target == "all":
        if overrides:
            raise ConfigurationError("--set cannot be combined with 'all'")
        for name in BUILTINS:
            runs.append((run_builtin(name, seed), ("csv", "json", "svg")))
    elif target in BUILTINS:
        runs.append((run_builtin(target, seed, overrides), ("csv", "json", "svg")))
    elif target.endswith(".json") or Path(target).is_file():
        cfg = load_config(target)
        res = run_config(cfg, seed=args.seed, overrides=overrides)
        runs.append((res, tuple(cfg.get("outputs", ("csv", "json", "svg")))))
    else:
        raise ConfigurationError(f"unknown experiment or config {target!r}")

    code = EXIT_OK
    for res, outputs in runs:
        d = write_artifacts(res, out, outputs)
        status = "PASS" if res.passed else "FAIL"
        fv = res.report["first_violation"]
        tail = "" if res.passed else f"  failed={','.join(res.report['failed'])} first_violation={fv}"
        print(f"{status} {res.name} -> {d}{tail}")
        if not res.passed:
            code = EXIT_CERT
    return code


def _load_prediction(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read prediction {path}: {exc}") from None
    try:
        return {k: float(d[k]) for k in ("a", "b", "c", "p")}
    except (KeyError, TypeError, ValueError):
        raise ConfigurationError(f"{path}: prediction needs numeric a, b, c and p") from None


def certify_files(trace_path, prediction_path) -> dict:
    """General-descent certification of an exported trace; returns the report dict."""
    try:
        cols = read_trace_csv(trace_path)
    except (OSError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from None
    pred = _load_prediction(prediction_path)
    if min(pred["a"], pred["b"], pred["c"]) <= 0:
        raise ConfigurationError("a, b and c must be positive")
    rep, hyp = certify_general_descent(cols["gap"], cols["step"], cols["resid"], **pred)
    out = rep.to_dict()
    out["hypotheses"] = hyp
    out["kappa"] = pred["a"] / (pred["b"] ** 2 * pred["c"] ** 2)
    return out


def cmd_certify(args) -> int:
    out = certify_files(args.trace, args.prediction)
    text = dumps_json(out)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK if out["pass"] else EXIT_CERT


def cmd_table(args) -> int:
    sys.stdout.write(render_table())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="geofb", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list built-in experiments").set_defaults(func=cmd_list)

    r = sub.add_parser("run", help="run a built-in, 'all', or a JSON config")
    r.add_argument("target")
    r.add_argument("--out", help="output directory (default $GEOFB_OUT or ./geofb-out)")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--set", action="append", metavar="KEY=VALUE", default=[])
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("certify", help="certify an exported trace against (a, b, c, p)")
    c.add_argument("--trace", required=True)
    c.add_argument("--prediction", required=True)
    c.add_argument("--report", help="also write the verdict to this file")
    c.set_defaults(func=cmd_certify)

    sub.add_parser("table", help="print the regime table").set_defaults(func=cmd_table)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except (ValueError, TypeError) as exc:
        # ConfigurationError, DomainError and bad override values all land here
        print(f"geofb: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
