"""Batch front end: config ingestion, experiment orchestration, reports.

Exit codes: 0 success (warnings allowed), 2 config/schema violation with
the offending field path, 3 numerical failure with the failing module's
diagnostic.  A run writes `report.json` plus per-experiment CSV artifacts
into the output directory; identical config and seed give byte-identical
CSV files.
"""

import argparse
import hashlib
import json
import os
import sys
import time
import traceback

import jsonschema
import numpy as np

from . import __version__
from .experiments import EXPERIMENTS, SCHEMA_VERSION, RunContext, catalog, \
    run_experiment


class ConfigError(Exception):
    def __init__(self, path, message):
        super().__init__("%s: %s" % (path, message))
        self.path = path


def _error_path(err, prefix="$"):
    parts = [prefix]
    for p in err.absolute_path:
        parts.append("[%d]" % p if isinstance(p, int) else ".%s" % p)
    return "".join(parts)


def _validate_run_config(cfg):
    """Normalize to a list of single-experiment configs or raise ConfigError."""
    if not isinstance(cfg, dict):
        raise ConfigError("$", "config root must be a JSON object")
    if "schema_version" in cfg and cfg["schema_version"] != SCHEMA_VERSION:
        raise ConfigError("$.schema_version",
                          "unsupported value %r (current: %d)"
                          % (cfg["schema_version"], SCHEMA_VERSION))
    if "experiments" in cfg:
        runs = cfg["experiments"]
        if "experiment" in cfg:
            raise ConfigError("$", "give either 'experiment' or "
                              "'experiments', not both")
        if not isinstance(runs, list) or not runs:
            raise ConfigError("$.experiments", "must be a non-empty array")
        prefixes = ["$.experiments[%d]" % i for i in range(len(runs))]
        extra = set(cfg) - {"experiments", "schema_version", "seed"}
        if extra:
            raise ConfigError("$.%s" % sorted(extra)[0], "unknown key")
    else:
        runs = [{k: v for k, v in cfg.items() if k != "schema_version"}]
        prefixes = ["$"]
    out = []
    for sub, prefix in zip(runs, prefixes):
        if not isinstance(sub, dict):
            raise ConfigError(prefix, "experiment entry must be an object")
        name = sub.get("experiment")
        if name is None:
            raise ConfigError(prefix + ".experiment", "required key missing")
        if name not in EXPERIMENTS:
            raise ConfigError(
                prefix + ".experiment",
                "unknown experiment %r; see `displab list-experiments`"
                % (name,))
        schema = EXPERIMENTS[name].config_schema()
        validator = jsonschema.Draft202012Validator(schema)
        errors = sorted(validator.iter_errors(sub), key=lambda e: list(e.path))
        if errors:
            err = errors[0]
            raise ConfigError(_error_path(err, prefix), err.message)
        out.append(sub)
    return out


def _blame_module(exc):
    # deepest package frame below the orchestration layer, for diagnostics
    module = "displab.experiments"
    for frame, _ in traceback.walk_tb(exc.__traceback__):
        name = frame.f_globals.get("__name__", "")
        if name.startswith("displab.") and name not in (
                "displab.cli", "displab.experiments"):
            module = name
    return module


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if v != v:
            return "nan"
        if v in (float("inf"), float("-inf")):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _cmd_list(args):
    cat = catalog()
    if args.json:
        print(json.dumps({"schema_version": SCHEMA_VERSION,
                          "experiments": _jsonable(cat)}, indent=2))
        return 0
    width = max(len(c["name"]) for c in cat)
    print("%-*s  %-9s  %s" % (width, "name", "criterion", "summary"))
    for c in cat:
        print("%-*s  %-9d  %s" % (width, c["name"], c["criterion"],
                                  c["summary"]))
        print("%-*s  %-9s  keys: %s" % (width, "", "",
                                        ", ".join(c["config_keys"])))
    return 0


def _cmd_run(args):
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = fh.read()
        cfg = json.loads(raw)
    except OSError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print("config error: malformed JSON (%s)" % exc, file=sys.stderr)
        return 2
    try:
        runs = _validate_run_config(cfg)
    except ConfigError as exc:
        print("config error at %s" % exc, file=sys.stderr)
        return 2

    os.makedirs(args.out, exist_ok=True)
    top_seed = args.seed if args.seed is not None else cfg.get("seed")
    started = time.time()
    reports = []
    all_warnings = []
    for i, sub in enumerate(runs):
        name = sub["experiment"]
        prefix = "%s-" % name if len(runs) == 1 \
            else "%02d-%s-" % (i, name)
        seed = args.seed if args.seed is not None else sub.get("seed",
                                                               top_seed)
        ctx = RunContext(out_dir=args.out, seed=seed, threads=args.threads,
                         prefix=prefix)
        t0 = time.time()
        try:
            result = run_experiment(name, sub, ctx)
        except (ValueError, ArithmeticError, RuntimeError,
                np.linalg.LinAlgError) as exc:
            module = _blame_module(exc)
            print("numerical failure in %s (%s): %s"
                  % (name, module, exc), file=sys.stderr)
            return 3
        checks = result.get("checks", [])
        failed = [c["name"] for c in checks if not c["passed"]]
        for f in failed:
            ctx.warn("check failed: %s" % f)
        all_warnings.extend("%s: %s" % (name, w) for w in ctx.warnings)
        reports.append({
            "experiment": name,
            "label": sub.get("label"),
            "criterion": EXPERIMENTS[name].criterion,
            "seed": seed,
            "wall_time_s": time.time() - t0,
            "config": {k: v for k, v in sub.items() if k != "experiment"},
            "tolerances": result.get("tolerances", {}),
            "artifacts": ctx.artifacts,
            "warnings": ctx.warnings,
            "all_checks_passed": not failed,
            "results": result,
        })

    report = {
        "schema_version": SCHEMA_VERSION,
        "generator": {"name": "displab", "version": __version__},
        "config_sha256": hashlib.sha256(raw.encode("utf-8")).hexdigest(),
        "config": cfg,
        "seed": top_seed,
        "threads": args.threads,
        "wall_time_s": time.time() - started,
        "runs": reports,
        "warnings": all_warnings,
        "ok": all(r["all_checks_passed"] for r in reports),
    }
    report_path = os.path.join(args.out, "report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(report), fh, indent=2)
        fh.write("\n")

    for r in reports:
        status = "ok" if r["all_checks_passed"] else "CHECK FAILED"
        print("%s: %s (%d checks, %.1fs)" % (r["experiment"], status,
                                             len(r["results"].get("checks",
                                                                  [])),
                                             r["wall_time_s"]))
    for w in all_warnings:
        print("warning: %s" % w)
    print("report: %s" % report_path)
    return 0


def _u64(text):
    v = int(text)
    if not (0 <= v < 2 ** 64):
        raise argparse.ArgumentTypeError("seed must fit in a u64")
    return v


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="displab",
        description="dispersive-estimate laboratory batch runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute experiments from a JSON "
                           "config")
    run_p.add_argument("config", help="path to the JSON config")
    run_p.add_argument("--out", default="displab-out",
                       help="output directory (default: displab-out)")
    run_p.add_argument("--seed", type=_u64, default=None,
                       help="override every stochastic seed")
    run_p.add_argument("--threads", type=int, default=1,
                       help="worker threads for independent sweep cells")
    run_p.set_defaults(func=_cmd_run)

    list_p = sub.add_parser("list-experiments",
                            help="print the experiment catalog")
    list_p.add_argument("--json", action="store_true",
                        help="machine-readable catalog")
    list_p.set_defaults(func=_cmd_list)

    args = parser.parse_args(argv)
    if args.command == "run" and args.threads < 1:
        parser.error("--threads must be at least 1")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
