"""Command-line entry point: ``illab <command> [options]``.

Exit status: 0 when every check passes, 2 for config errors, 3 for numeric
or verification failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ConfigError, NumericError
from .geometry import classify
from .green import CIMap, gap_report, independent_pair, limit_products
from .limits import limit_ideal
from .scenarios import (SCHEMA_VERSION, Tolerances, builtin_scenarios, find_scenario, list_scenarios,
                        load_config_file, run, verify_all)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("illab")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="illab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("classify", "classify a family by its limit directions"),
        ("limit-ideal", "compute and certify the limit ideal"),
        ("green-gap", "log-gap statistics of the limit complete-intersection map"),
        ("run", "full pipeline with expected-vs-computed comparison"),
        ("verify-all", "run every scenario"),
        ("list-scenarios", "print the scenario catalog"),
    ]:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="YAML scenario file (default: built-in catalog)")
        sp.add_argument("--scenario", help="scenario name")
        sp.add_argument("--json", dest="json_out", help="also write the JSON report to this file")
        sp.add_argument("--csv", dest="csv_out", help="write per-sample gaps as CSV (green-gap, run)")
        sp.add_argument("--precision", choices=["double", "extended"], help="override the scenario precision")
        sp.add_argument("--timings", action="store_true", help="include wall-clock timings in reports")
        sp.add_argument("-v", "--verbose", action="store_true")
        for tol in Tolerances.names():
            sp.add_argument(f"--tol-{tol}", type=float, dest=f"tol_{tol}", metavar="X")
    return p


def _tolerances(args) -> Tolerances:
    overrides = {k: getattr(args, f"tol_{k}") for k in Tolerances.names() if getattr(args, f"tol_{k}") is not None}
    for k, v in overrides.items():
        if not v > 0:
            raise ConfigError(f"--tol-{k} must be positive")
    return Tolerances(**overrides)


def _scenarios(args):
    return load_config_file(args.config) if args.config else builtin_scenarios()


def _pick(args):
    scenarios = _scenarios(args)
    if args.scenario:
        return find_scenario(args.scenario, scenarios)
    if args.config and len(scenarios) == 1:
        return scenarios[0]
    raise ConfigError("choose a scenario with --scenario NAME")


def _emit(payload, args) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, default=_default)
    print(text)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _cmd_classify(args) -> int:
    sc = _pick(args)
    tol = _tolerances(args)
    cls = classify(sc.family(), sc.schedule(), tol.chordal, args.precision or sc.precision)
    ok = cls.tag != "NonConvergent" and cls.tag == sc.expected.get("classification", cls.tag)
    _emit({"schema_version": SCHEMA_VERSION, "scenario": sc.name, "classification": cls.to_json()}, args)
    return EXIT_OK if ok else EXIT_NUMERIC


def _cmd_limit(args) -> int:
    sc = _pick(args)
    tol = _tolerances(args)
    res = limit_ideal(sc.family(), sc.schedule(), args.precision or sc.precision, tol.gap, tol.extrap, tol.cutoff)
    payload = {"schema_version": SCHEMA_VERSION, "scenario": sc.name, **res.to_json()}
    _emit(payload, args)
    return EXIT_OK if res.certified else EXIT_NUMERIC


def _cmd_green(args) -> int:
    sc = _pick(args)
    tol = _tolerances(args)
    cls = classify(sc.family(), sc.schedule(), tol.chordal, args.precision or sc.precision)
    if cls.directions is None:
        raise NumericError("limit directions do not converge")
    limits = limit_products(dict(cls.directions.entries))
    pair = independent_pair(limits)
    if pair is None:
        _emit({"schema_version": SCHEMA_VERSION, "scenario": sc.name, "independent_pair": None,
               "f_limits": [f.to_text() for f in limits]}, args)
        return EXIT_NUMERIC
    gap = gap_report(CIMap(pair, None, None, limits[pair[0] - 1], limits[pair[1] - 1]))
    if args.csv_out:
        gap.write_csv(args.csv_out)
    _emit({"schema_version": SCHEMA_VERSION, "scenario": sc.name, "independent_pair": list(pair),
           "gap": gap.to_json()}, args)
    return EXIT_OK if gap.certified_bounded else EXIT_NUMERIC


def _cmd_run(args) -> int:
    sc = _pick(args)
    report = run(sc, _tolerances(args), args.precision, args.timings)
    if args.csv_out and report.gap is not None:
        report.gap.write_csv(args.csv_out)
    _emit(report.to_json(), args)
    return EXIT_OK if report.passed else EXIT_NUMERIC


def _cmd_verify_all(args) -> int:
    scenarios = _scenarios(args)
    if args.scenario:
        scenarios = [find_scenario(args.scenario, scenarios)]
    reports = verify_all(scenarios, _tolerances(args), args.precision)
    for r in reports:
        d = r.to_json()
        failed = [c["field"] for c in d["comparisons"] if not c["pass"]]
        if "error" in d:
            failed.append(d["error"]["type"])
        print(f"{'PASS' if r.passed else 'FAIL'} {d['scenario']}" + (f"  ({', '.join(failed)})" if failed else ""),
              file=sys.stderr)
    payload = {"schema_version": SCHEMA_VERSION, "passed": all(r.passed for r in reports),
               "reports": [r.to_json() for r in reports]}
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(payload, indent=2, sort_keys=True, default=_default) + "\n")
    return EXIT_OK if payload["passed"] else EXIT_NUMERIC


def _cmd_list(args) -> int:
    _emit({"schema_version": SCHEMA_VERSION, "scenarios": list_scenarios(_scenarios(args))}, args)
    return EXIT_OK


COMMANDS = {"classify": _cmd_classify, "limit-ideal": _cmd_limit, "green-gap": _cmd_green, "run": _cmd_run,
            "verify-all": _cmd_verify_all, "list-scenarios": _cmd_list}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
