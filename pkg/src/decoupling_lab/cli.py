"""Command-line front end.

Exit codes: 0 when everything passed/held, 1 when something failed, 2 when
no failure occurred but at least one verdict stayed inconclusive.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from .errors import DecouplingLabError
from .problems import parse_problem
from .sampling import SampleScheme
from .verdicts import FAILS, HOLDS, INCONCLUSIVE, _jsonable


def _vector(text: str) -> np.ndarray:
    return np.array([float(t) for t in text.replace(",", " ").split()])


def _dump_json(payload, path):
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True)
    if path == "-" or path is None:
        print(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _statuses(payload) -> list:
    found = []

    def walk(obj):
        if isinstance(obj, dict):
            if obj.get("status") in (HOLDS, FAILS, INCONCLUSIVE):
                found.append(obj["status"])
            for v in obj.values():
                walk(v)
        elif isinstance(obj, (list, tuple)):
            for v in obj:
                walk(v)

    walk(payload)
    return found


def _exit_code(payload, failed: bool = False) -> int:
    st = _statuses(_jsonable(payload))
    if failed or FAILS in st:
        return 1
    if INCONCLUSIVE in st:
        return 2
    return 0


def _scheme_from_args(prob, args) -> SampleScheme:
    scheme = prob.scheme(getattr(args, "scheme", None))
    over = {}
    if getattr(args, "levels", None) is not None:
        over["levels"] = args.levels
    if getattr(args, "eta0", None) is not None:
        over["eta0"] = args.eta0
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    return scheme.with_(**over) if over else scheme


def _add_common(p, with_region=True):
    p.add_argument("--problem", required=True, help="problem-definition file")
    p.add_argument("--scheme", default=None, help="scheme section name (default: first)")
    p.add_argument("--levels", type=int, default=None)
    p.add_argument("--eta0", type=float, default=None)
    p.add_argument("--report", default="-", help="JSON report path ('-' for stdout)")
    if with_region:
        p.add_argument("--region", required=True, help="region section name")


def cmd_decouple(args) -> int:
    from .decoupling import full_report

    prob = parse_problem(args.problem)
    f1 = prob.function(args.f1)
    f2 = prob.function(args.f2)
    U = prob.region(args.region)
    scheme = _scheme_from_args(prob, args)
    rep = full_report(f1, f2, U, scheme, diverge_threshold=args.diverge_threshold)
    payload = rep.to_json()
    _dump_json(payload, args.report)
    if args.trace:
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            names = sorted(k for k, v in rep.traces.items() if v)
            w.writerow(["level", "eta"] + names)
            for j in range(scheme.levels):
                row = [j, scheme.eta(j)]
                for name in names:
                    t = rep.traces[name]
                    row.append(t[j] if j < len(t) else "")
                w.writerow(row)
    return _exit_code(payload)


def cmd_certify(args) -> int:
    from . import semicontinuity

    prob = parse_problem(args.problem)
    scheme = _scheme_from_args(prob, args)
    if args.set:
        f = prob.function(args.f1)
        omega = prob.set_oracle(args.set)
        if args.near:
            cert = semicontinuity.certify_relative_near(f, omega, _vector(args.near),
                                                        args.property, scheme)
        else:
            cert = semicontinuity.certify_relative(f, omega, prob.region(args.region),
                                                   args.property, scheme)
    else:
        f1 = prob.function(args.f1)
        f2 = prob.function(args.f2)
        if args.near:
            cert = semicontinuity.certify_near(f1, f2, _vector(args.near), args.property, scheme)
        else:
            cert = semicontinuity.certify(f1, f2, prob.region(args.region), args.property, scheme)
    payload = cert.to_json()
    _dump_json(payload, args.report)
    return _exit_code(payload)


def cmd_subdiff(args) -> int:
    from .subdifferential import SubgradientQuery, is_subgradient

    prob = parse_problem(args.problem)
    f = prob.function(args.fn)
    v = is_subgradient(SubgradientQuery(f, _vector(args.point), _vector(args.xstar)),
                       tol=args.tol)
    payload = v.to_json()
    _dump_json(payload, args.report)
    return _exit_code(payload)


def cmd_ekeland(args) -> int:
    from .ekeland import penalized_search

    prob = parse_problem(args.problem)
    f1 = prob.function(args.f1)
    f2 = prob.function(args.f2)
    scheme = _scheme_from_args(prob, args)
    out = penalized_search(f1, f2, _vector(args.xbar), args.eps, args.delta, args.eta, scheme)
    payload = {
        "gamma": out["gamma"], "xhat1": out["xhat1"], "xhat2": out["xhat2"],
        "slope": out["slope"], "slope_bound": out["slope_bound"],
        "conditions": out["conditions"],
        "slope_bound_check": out["slope_bound_check"].to_json(),
    }
    _dump_json(payload, args.report)
    return _exit_code(payload)


def cmd_multiplier(args) -> int:
    from .multiplier import multiplier_search

    prob = parse_problem(args.problem)
    scheme = _scheme_from_args(prob, args)
    out = multiplier_search(prob.function(args.f1), prob.function(args.f2), _vector(args.xbar),
                            eps=args.eps, scheme=scheme, delta=args.delta, eta=args.eta)
    _dump_json(out, args.report)
    return 0 if out.get("found") else 1


def cmd_sumrule(args) -> int:
    from .multiplier import sum_rule_verify

    prob = parse_problem(args.problem)
    scheme = _scheme_from_args(prob, args)
    out = sum_rule_verify(prob.function(args.f1), prob.function(args.f2), _vector(args.xbar),
                          _vector(args.xstar), args.eps, scheme)
    _dump_json(out, args.report)
    return 0 if out.get("found") else 1


def cmd_intersect(args) -> int:
    from .multiplier import intersection_rule_verify

    prob = parse_problem(args.problem)
    scheme = _scheme_from_args(prob, args)
    out = intersection_rule_verify(prob.set_oracle(args.set1), prob.set_oracle(args.set2),
                                   _vector(args.xbar), _vector(args.xstar), args.eps, scheme)
    _dump_json(out, args.report)
    return 0 if out.get("found") else 1


def cmd_chain(args) -> int:
    from .multiplier import chain_rule_verify

    prob = parse_problem(args.problem)
    scheme = _scheme_from_args(prob, args)
    v = chain_rule_verify(prob.function(args.fn), prob.maps[args.map], _vector(args.xbar),
                          _vector(args.xstar), args.eps, scheme)
    payload = v.to_json()
    _dump_json(payload, args.report)
    return _exit_code(payload)


def cmd_control(args) -> int:
    from .sparse_control import approx_stationarity_check, sharp_stationarity_check, solve_sparse_oc

    prob = parse_problem(args.problem)
    name = args.instance or next(iter(prob.controls))
    oc = prob.controls[name]
    if args.action == "solve":
        sol = solve_sparse_oc(oc)
        sharp = sharp_stationarity_check(oc, sol["xopt"])
        payload = {"xopt": sol["xopt"], "objective": sol["objective"],
                   "support": sol["support"], "sharp_stationarity": sharp.to_json()}
        _dump_json(payload, args.report)
        return _exit_code(payload)
    x = _vector(args.x)
    sharp = sharp_stationarity_check(oc, x)
    payload = {"sharp_stationarity": sharp.to_json()}
    _dump_json(payload, args.report)
    return _exit_code(payload)


def cmd_gallery(args) -> int:
    from .gallery import run_gallery

    out = run_gallery(args.filter, seed=args.seed or 0)
    for case in out["cases"]:
        mark = "PASS" if case["pass"] else "FAIL"
        print(f'{case["id"]:6s} {mark} {case["seconds"]:7.2f}s  {case["source"]}')
        if args.verbose or not case["pass"]:
            for r in case["rows"]:
                sub = "ok " if r["pass"] else "BAD"
                print(f'    {sub} {r["quantity"]}: expected {r["expected"]}, got {r["got"]}')
    if args.json:
        _dump_json(out, args.json)
    if not out["cases"]:
        return 0
    return 0 if out["all_pass"] else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="declab",
                                 description="decoupled infima, semicontinuity certificates, "
                                             "penalized searches, fuzzy rules, sparse control")
    ap.add_argument("--seed", type=int, default=None, help="override the sampling seed")
    ap.add_argument("--tol", type=float, default=1e-9, help="global comparison tolerance")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decouple", help="compute the decoupling quantities of a pair")
    _add_common(p)
    p.add_argument("--f1", required=True)
    p.add_argument("--f2", required=True)
    p.add_argument("--trace", default=None, help="CSV trace output path")
    p.add_argument("--diverge-threshold", type=float, default=1e6)
    p.set_defaults(func=cmd_decouple)

    p = sub.add_parser("certify", help="certify a lower-semicontinuity property")
    _add_common(p, with_region=False)
    p.add_argument("--region", default=None)
    p.add_argument("--f1", required=True)
    p.add_argument("--f2", default=None)
    p.add_argument("--set", default=None, help="set name for the relative variants")
    p.add_argument("--property", required=True,
                   choices=["uniform", "quasiuniform", "firm_uniform", "firm_quasiuniform"])
    p.add_argument("--near", default=None, help="certify near this point instead of on a region")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("subdiff", help="test subgradient membership by difference quotients")
    p.add_argument("--problem", required=True)
    p.add_argument("--fn", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--xstar", required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--report", default="-")
    p.set_defaults(func=cmd_subdiff)

    p = sub.add_parser("ekeland", help="run the decoupled penalized search")
    _add_common(p, with_region=False)
    p.add_argument("--f1", required=True)
    p.add_argument("--f2", required=True)
    p.add_argument("--xbar", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.set_defaults(func=cmd_ekeland)

    p = sub.add_parser("multiplier", help="search for a fuzzy multiplier witness")
    _add_common(p, with_region=False)
    p.add_argument("--f1", required=True)
    p.add_argument("--f2", required=True)
    p.add_argument("--xbar", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.set_defaults(func=cmd_multiplier)

    p = sub.add_parser("sumrule", help="verify the fuzzy sum rule at a subgradient")
    _add_common(p, with_region=False)
    p.add_argument("--f1", required=True)
    p.add_argument("--f2", required=True)
    p.add_argument("--xbar", required=True)
    p.add_argument("--xstar", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(func=cmd_sumrule)

    p = sub.add_parser("intersect", help="verify the fuzzy intersection rule")
    _add_common(p, with_region=False)
    p.add_argument("--set1", required=True)
    p.add_argument("--set2", required=True)
    p.add_argument("--xbar", required=True)
    p.add_argument("--xstar", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(func=cmd_intersect)

    p = sub.add_parser("chain", help="verify the fuzzy chain rule through a smooth map")
    _add_common(p, with_region=False)
    p.add_argument("--fn", required=True)
    p.add_argument("--map", required=True)
    p.add_argument("--xbar", required=True)
    p.add_argument("--xstar", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("control", help="solve or check a sparse-control instance")
    p.add_argument("action", choices=["solve", "check"])
    p.add_argument("--problem", required=True)
    p.add_argument("--instance", default=None)
    p.add_argument("--x", default=None, help="candidate control vector (for 'check')")
    p.add_argument("--report", default="-")
    p.set_defaults(func=cmd_control)

    p = sub.add_parser("gallery", help="run the reproduction gallery")
    p.add_argument("--filter", default=None, help="case id or glob pattern")
    p.add_argument("--json", default=None, help="write the summary JSON here")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_gallery)

    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except DecouplingLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
