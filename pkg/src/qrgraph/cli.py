"""Command-line interface: load/validate/compute/report over all modules.

Exit codes: 0 ok, 2 validation failure, 3 resource cap exceeded, 64 usage.
Reports are JSON with a schema_version, input digests, and a seed; repeated
runs with the same seed are byte-identical except for the wall-time field.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .certificates import Certificate, _jsonable
from .covering import load_map, map_to_json
from .dilatation import (
    bdd_verify,
    bld_verify,
    bqs_gauge,
    dilatation_profile,
    inverse_dilatation_profile,
    lq_verify,
)
from .embedding import composition_bound_check, embed, fiber_scale_check
from .generators import (
    gen_cycle,
    gen_cycle_cover,
    gen_grid,
    gen_polar_grid,
    gen_pullback_space,
    gen_winding,
)
from .measures import (
    change_of_variables_check,
    condition_N_check,
    condition_N_inverse_check,
    jacobians,
    pullback_measure,
)
from .modulus import CurveFamily, modulus
from .pullback import bld_bdd_transfer_check, factorize, verify_projection
from .spaces import Curve, ValidationError, load_space, space_from_json, space_to_json

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(EXIT_USAGE)


def _digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _report(args, inputs: list[str], results, certificates: list[Certificate], t0: float) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": args.command,
        "inputs": {os.path.basename(p): _digest(p) for p in inputs},
        "seed": getattr(args, "seed", 0),
        "results": _jsonable(results),
        "certificates": [c.to_json() for c in certificates],
        "wall_time_s": time.time() - t0,
    }


def _write_report(args, report: dict, name: str = "report.json") -> None:
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, name)
    with open(path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(path)


def _write_csv(args, name: str, header: list[str], rows: list[list]) -> None:
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, name)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(x) if isinstance(x, float) else str(x) for x in row) + "\n")
    print(path)


def _load_any(path: str):
    with open(path) as fh:
        obj = json.load(fh)
    if isinstance(obj, dict) and "pairs" in obj:
        return "map", load_map(path)
    return "space", space_from_json(obj)


def cmd_validate(args) -> int:
    t0 = time.time()
    try:
        kind, loaded = _load_any(args.file)
    except ValidationError as exc:
        print(f"invalid: {'; '.join(exc.findings)}", file=sys.stderr)
        return EXIT_VALIDATION
    findings = loaded.validate()
    report = _report(args, [args.file], {"kind": kind, "findings": findings}, [], t0)
    _write_report(args, report, "validate.json")
    if findings:
        print("; ".join(findings), file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_gen(args) -> int:
    t0 = time.time()
    os.makedirs(args.out, exist_ok=True)
    written = []
    if args.kind == "cycle":
        sp = gen_cycle(args.n)
        written.append(_dump_space(args.out, "space.json", sp))
    elif args.kind == "grid":
        sp = gen_grid(args.w, args.h)
        written.append(_dump_space(args.out, "space.json", sp))
    elif args.kind == "polar_grid":
        sp = gen_polar_grid(args.levels, args.sectors, args.r0, args.r1)
        written.append(_dump_space(args.out, "space.json", sp))
    elif args.kind == "winding":
        vm = gen_winding(args.k, args.levels, args.sectors)
        written += _dump_map(args.out, vm)
    elif args.kind == "cycle_cover":
        vm = gen_cycle_cover(args.n, args.m)
        written += _dump_map(args.out, vm)
    elif args.kind == "pullback_space":
        vm = load_map(args.map)
        sp = gen_pullback_space(vm, cap=args.exact_cap)
        written.append(_dump_space(args.out, "space.json", sp))
    report = _report(args, [], {"written": [os.path.basename(w) for w in written]}, [], t0)
    _write_report(args, report, "gen.json")
    return EXIT_OK


def _dump_space(out: str, name: str, sp) -> str:
    path = os.path.join(out, name)
    with open(path, "w") as fh:
        json.dump(space_to_json(sp), fh, sort_keys=True)
        fh.write("\n")
    print(path)
    return path


def _dump_map(out: str, vm) -> list[str]:
    s = _dump_space(out, "source.json", vm.source)
    t = _dump_space(out, "target.json", vm.target)
    path = os.path.join(out, "map.json")
    with open(path, "w") as fh:
        json.dump(map_to_json(vm, "source.json", "target.json"), fh, sort_keys=True)
        fh.write("\n")
    print(path)
    return [s, t, path]


def cmd_pullback(args) -> int:
    t0 = time.time()
    vm = load_map(args.map)
    try:
        fact = factorize(vm, metric=args.metric, cap=args.exact_cap)
    except ValueError as exc:
        if "too large" in str(exc):
            print(f"{exc}", file=sys.stderr)
            return EXIT_RESOURCE
        raise
    cert = verify_projection(fact)
    transfer = bld_bdd_transfer_check(fact, seed=args.seed)
    mat = fact.pullback_space.dist
    ids = fact.pullback_space.ids
    _write_csv(args, "pullback_matrix.csv", ["id", *ids],
               [[ids[i], *[float(x) for x in mat[i]]] for i in range(len(ids))])
    results = {
        "metric": fact.metric_choice,
        "exact": fact.bracket.exact,
        "vertices": len(ids),
    }
    _write_report(args, _report(args, [args.map], results, [cert, transfer], t0))
    return EXIT_OK if cert.passed else EXIT_VALIDATION


def cmd_measure(args) -> int:
    t0 = time.time()
    vm = load_map(args.map)
    pm = pullback_measure(vm)
    jf = jacobians(vm)
    rows = [[vm.source.ids[k], float(pm.values[k]), float(jf.jac[k]), float(jf.jac_inv[k])]
            for k in range(vm.source.n)]
    _write_csv(args, "jacobians.csv", ["vertex", "pullback_mass", "jacobian", "jacobian_inv"], rows)
    rng = np.random.default_rng(args.seed)
    rho = rng.random(vm.source.n)
    certs = [
        change_of_variables_check(vm, rho),
        condition_N_check(vm),
        condition_N_inverse_check(vm),
    ]
    results = {"total_pullback_mass": pm.total()}
    _write_report(args, _report(args, [args.map], results, certs, t0))
    return EXIT_OK if all(c.passed for c in certs) else EXIT_VALIDATION


def _family_from_json(space, obj) -> CurveFamily:
    if isinstance(obj, dict) and "connect" in obj:
        spec = obj["connect"]
        return CurveFamily.connecting(space, spec["E"], spec["F"], spec.get("within"))
    curves = obj["curves"] if isinstance(obj, dict) else obj
    return CurveFamily.explicit(space, [Curve.from_ids(space, c) for c in curves])


def cmd_modulus(args) -> int:
    t0 = time.time()
    space = load_space(args.space)
    with open(args.family) as fh:
        fam = _family_from_json(space, json.load(fh))
    weight = None
    if args.weight is not None:
        with open(args.weight) as fh:
            weight = {str(k): float(v) for k, v in json.load(fh).items()}
    res = modulus(fam, p=args.p, weight=weight, tol=args.tol, max_iter=args.max_iter)
    rows = [[f"{space.ids[i]}-{space.ids[j]}", float(res.density.values[e])]
            for e, (i, j, _ln) in enumerate(space.edges)]
    _write_csv(args, "density.csv", ["edge", "rho"], rows)
    results = {
        "value": res.value, "gap": res.gap, "p": res.p,
        "iterations": res.iterations, "exact": res.exact, "flags": list(res.flags),
    }
    _write_report(args, _report(args, [args.space, args.family], results, [], t0))
    return EXIT_OK


def cmd_verify(args) -> int:
    t0 = time.time()
    vm = load_map(args.map)
    prop = args.property
    if prop == "bld":
        cert = bld_verify(vm, bound=args.constant, seed=args.seed)
    elif prop == "bdd":
        cert = bdd_verify(vm, bound=args.constant, seed=args.seed)
    elif prop == "lq":
        cert = lq_verify(vm, bound=args.constant)
    elif prop == "metric-qr":
        rows = {}
        worst = 1.0
        for x in range(vm.source.n):
            prof = dilatation_profile(vm, x, radius_cap=args.radius_cap)
            rows[vm.source.ids[x]] = {"H": prof.h_sup, "h": prof.h_inf, "cap": prof.cap}
            worst = max(worst, prof.h_sup)
        passed = args.constant is None or worst <= args.constant + 1e-9
        cert = Certificate("metric_qr", passed and math.isfinite(worst),
                           constant=worst, details={"profiles": rows})
    elif prop == "inverse-qr":
        rows = {}
        worst = 1.0
        for x in range(vm.source.n):
            prof = inverse_dilatation_profile(vm, x, scale_cap=args.radius_cap)
            rows[vm.source.ids[x]] = {"H": prof.h_sup, "h": prof.h_inf, "cap": prof.cap,
                                      "flags": list(prof.flags)}
            worst = max(worst, prof.h_sup)
        passed = args.constant is None or worst <= args.constant + 1e-9
        cert = Certificate("inverse_metric_qr", passed and math.isfinite(worst),
                           constant=worst, details={"profiles": rows})
    else:  # bqs
        gauge = bqs_gauge(vm, seed=args.seed)
        cert = Certificate("bqs_gauge", True, details={"gauge": gauge.pairs(),
                                                       "seed": gauge.seed})
    _write_report(args, _report(args, [args.map], {"property": prop}, [cert], t0))
    return EXIT_OK if cert.passed else EXIT_VALIDATION


def cmd_embed(args) -> int:
    t0 = time.time()
    vm = load_map(args.map)
    try:
        res = embed(vm, cap=args.exact_cap)
    except ValueError as exc:
        if "too large" in str(exc):
            print(f"{exc}", file=sys.stderr)
            return EXIT_RESOURCE
        raise
    rows = [[v, res.image[v], *[float(c) for c in res.coords[v]]] for v in sorted(res.coords)]
    width = max((len(r) - 2 for r in rows), default=0)
    _write_csv(args, "coordinates.csv", ["vertex", "image", *[f"c{k}" for k in range(width)]], rows)
    certs = []
    if res.plan is not None:
        certs = [fiber_scale_check(res.plan), composition_bound_check(res)]
        plan_obj = {
            "N": res.plan.n_mult,
            "c_d": res.plan.c_d,
            "radii": _jsonable(res.plan.rk),
            "nets": _jsonable(res.plan.nets),
            "classes": _jsonable(res.plan.classes),
            "labels": _jsonable(res.plan.labels),
        }
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "plan.json"), "w") as fh:
            json.dump(plan_obj, fh, sort_keys=True, indent=2)
        print(os.path.join(args.out, "plan.json"))
    results = {
        "injective": res.injective,
        "lower": res.lower,
        "upper": res.upper,
        "phi_lipschitz": res.phi_lipschitz,
        "fiber_pairs": len(res.fiber_report),
        "twelve_rule": all(r["twelve_rule"] for r in res.fiber_report),
    }
    _write_report(args, _report(args, [args.map], results, certs, t0))
    return EXIT_OK if res.injective else EXIT_VALIDATION


def main(argv=None) -> int:
    parser = _Parser(prog="qrgraph",
                     description="pullback metrics, discrete modulus and "
                                 "quasiregularity certificates on finite graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=0,
                       help="reserved; computation is sequential and deterministic")
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--exact-cap", type=int, default=256,
                       help="vertex cap for the exact pullback solver")
        p.add_argument("--radius-cap", type=float, default=None)

    p = sub.add_parser("validate", help="validate a space or map JSON file")
    p.add_argument("file")
    common(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("gen", help="generate canonical spaces and maps")
    p.add_argument("--kind", required=True,
                   choices=["cycle", "grid", "polar_grid", "winding", "cycle_cover",
                            "pullback_space"])
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--w", type=int, default=4)
    p.add_argument("--h", type=int, default=4)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--sectors", type=int, default=8)
    p.add_argument("--r0", type=float, default=1.0)
    p.add_argument("--r1", type=float, default=math.e)
    p.add_argument("--map", default=None, help="input map for pullback_space")
    common(p)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("pullback", help="pullback metric and factorization report")
    p.add_argument("--map", required=True)
    p.add_argument("--metric", choices=["exact", "lower"], default="exact")
    common(p)
    p.set_defaults(fn=cmd_pullback)

    p = sub.add_parser("measure", help="pullback measure, Jacobians, conditions N")
    p.add_argument("--map", required=True)
    common(p)
    p.set_defaults(fn=cmd_measure)

    p = sub.add_parser("modulus", help="discrete p-modulus of a curve family")
    p.add_argument("--space", required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--weight", default=None,
                   help="JSON file of vertex weights (e.g. a K_O/K_I field) "
                        "for the weighted modulus")
    common(p)
    p.set_defaults(fn=cmd_modulus)

    p = sub.add_parser("verify", help="dilatation/BLD/BDD/LQ/BQS certificates")
    p.add_argument("--map", required=True)
    p.add_argument("--property", required=True,
                   choices=["bld", "bdd", "lq", "metric-qr", "inverse-qr", "bqs"])
    p.add_argument("--constant", type=float, default=None)
    common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("embed", help="bi-Lipschitz embedding pipeline")
    p.add_argument("--map", required=True)
    common(p)
    p.set_defaults(fn=cmd_embed)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except ValidationError as exc:
        print("; ".join(exc.findings), file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
