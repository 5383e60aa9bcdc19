"""Command-line interface.

Exit codes: 0 success, 1 condition not satisfied, 2 malformed input,
3 search budget exhausted, 4 integrator failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .exp_poly import ExpPoly, gradient_q, hamiltonian, parse
from .first_integrals import bryant_gfi_difference, gfi_report_to_dict, verify_gfi
from .ode_flow import (
    build_rhs,
    case5_closed_form,
    case5_parameters,
    full_flow_check,
    integrate,
    integrate_case5_s,
    reparametrize_t,
    singular_start_case5,
    t_of_s,
    trajectory_csv,
)
from .solutions import bryant_n1, explicit_case5, smoothness_check
from .superpotential import (
    ansatz_from_dict,
    ansatz_to_dict,
    bryant_n1_ansatz,
    case5_ansatz,
    check,
    search,
    search_result_to_dict,
)
from .surd import parse_rational
from .weight_config import (
    ConfigError,
    builtin_catalog,
    config_hash,
    config_to_dict,
    load_config,
    negative_controls,
    validate,
)

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_BUDGET, EXIT_INTEGRATOR = 0, 1, 2, 3, 4


@dataclass
class RunManifest:
    command: str
    config_hash: str | None
    parameters: dict
    tool_version: str = __version__
    wall_time: float = 0.0
    results: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


class _InputError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=str)


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _write_manifest(manifest: RunManifest, out: str | None, started: float):
    manifest.wall_time = round(time.perf_counter() - started, 6)
    if out:
        with open(out + ".manifest.json", "w", encoding="utf-8") as fh:
            fh.write(manifest.to_json() + "\n")
    else:
        sys.stderr.write(manifest.to_json() + "\n")


def _load_cfg(source: str):
    try:
        return load_config(source)
    except FileNotFoundError:
        raise _InputError(f"no such configuration file or catalog entry: {source}") from None
    except ConfigError as exc:
        raise _InputError(str(exc)) from None


def _load_ansatz(source: str, cfg):
    if source == "case5":
        return case5_ansatz(cfg, 1)
    if source == "case5-":
        return case5_ansatz(cfg, -1)
    if source == "bryant-n1":
        return bryant_n1_ansatz(cfg)
    try:
        with open(source, encoding="utf-8") as fh:
            data = json.load(fh)
        return ansatz_from_dict(data, cfg.r + 1)
    except FileNotFoundError:
        raise _InputError(f"no such ansatz file: {source}") from None
    except (json.JSONDecodeError, ValueError, KeyError, TypeError, ZeroDivisionError) as exc:
        raise _InputError(f"invalid ansatz: {exc}") from None


def _fmt(x):
    if isinstance(x, Fraction):
        return str(x)
    return str(x)


# ----------------------------------------------------------------------------
# Commands


def cmd_verify(args) -> int:
    started = time.perf_counter()
    cfg = _load_cfg(args.config)
    ansatz = _load_ansatz(args.ansatz, cfg)
    rep = check(cfg, ansatz)
    nonzero = {",".join(map(str, b)): _fmt(v) for b, v in rep.residuals.items() if v != 0}
    result = {
        "satisfied": rep.satisfied,
        "violated_b": [[str(x) for x in b] for b in rep.violated_b],
        "nonzero_residuals": nonzero,
        "numeric": rep.numeric,
        "max_abs_residual": rep.max_abs_residual,
        "ansatz": ansatz_to_dict(ansatz),
    }
    _emit(_dump(result), args.out)
    manifest = RunManifest("verify", config_hash(cfg), {"ansatz": args.ansatz}, results={"satisfied": rep.satisfied})
    _write_manifest(manifest, args.out, started)
    return EXIT_OK if rep.satisfied else EXIT_FAIL


def _threads(args) -> int:
    env = os.environ.get("COHOMFLOW_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise _InputError("COHOMFLOW_THREADS must be an integer") from None
    return max(1, args.threads)


def cmd_classify(args) -> int:
    started = time.perf_counter()
    cfg = _load_cfg(args.config)
    if not 1 <= args.lattice_bound <= 4:
        raise _InputError("--lattice-bound must lie in [1, 4]")
    if not 0 <= args.max_extra <= 4:
        raise _InputError("--max-extra must lie in [0, 4]")
    poly = {"auto": None, "constant": False, "polynomial": True}[args.coefficients]
    threads = _threads(args)
    try:
        res = search(cfg, args.lattice_bound, args.max_extra, polynomial=poly, threads=threads,
                     budget=args.budget, time_budget=args.time_budget)
    except ValueError as exc:
        raise _InputError(str(exc)) from None
    data = search_result_to_dict(res)
    data["config"] = config_to_dict(cfg)
    data["measure"] = asdict(validate(cfg))
    _emit(_dump(data), args.out)
    params = {"lattice_bound": args.lattice_bound, "max_extra": args.max_extra, "coefficients": args.coefficients,
              "budget": args.budget}
    manifest = RunManifest("classify", config_hash(cfg), params, results={"found": len(res.found), "partial": res.partial})
    _write_manifest(manifest, args.out, started)
    return EXIT_BUDGET if res.partial else EXIT_OK


def _case5_t_closed(s, lam, E, A, u0=0.0):
    """Closed-form (q1, q2, q3, u) at the given s values."""
    s = np.asarray(s, dtype=float)
    c = 2 * lam / E
    alpha = lam * lam / E * s / (s + c)
    return np.column_stack([np.log(alpha / (-2 * A)), np.log(s), np.log(s + c), u0 - E * s / lam])


def _integrate_case5(args, cfg, manifest) -> tuple[str, bool]:
    lam, E, A = case5_parameters(cfg)
    if args.coordinate == "s":
        traj = integrate_case5_s(cfg, args.s0, args.s_max, args.tol)
        exact = case5_closed_form(traj.t, lam, E)
        dev = np.abs(traj.y - exact) / np.abs(exact)
        manifest.results["max_rel_deviation"] = float(np.max(dev))
        tt = reparametrize_t(traj, cfg)
        s_vals = traj.t
    else:
        st = singular_start_case5(cfg, args.s0)
        rhs = build_rhs(cfg, case5_ansatz(cfg))
        tt = integrate(rhs, st.q, (t_of_s(args.s0, lam, E), t_of_s(args.s_max, lam, E)), tol=args.tol)
        sol = explicit_case5(E)
        sol.lam = lam
        s_vals = np.array([sol.s(float(t)) for t in tt.t])
        got = np.column_stack([np.exp(tt.y[:, 1]), np.exp(tt.y[:, 2]), tt.y[:, 3]])
        exact = case5_closed_form(s_vals, lam, E)
        manifest.results["max_rel_deviation"] = float(np.max(np.abs(got - exact) / np.abs(exact)))
    ansatz = case5_ansatz(cfg)
    _attach_reconstructed_H(cfg, ansatz, tt)
    closed = _case5_t_closed(s_vals, lam, E, A) if args.check_closed_form else None
    return trajectory_csv(tt, cfg.r, closed), tt.truncated


def _attach_reconstructed_H(cfg, ansatz, traj):
    """H(q, grad f(q)) along a subsystem trajectory."""
    m = cfg.r + 1
    H = hamiltonian(cfg).compile()
    grads = [g.compile() for g in gradient_q(ansatz.to_exppoly(m))]
    zeros = np.zeros(m)
    vals = []
    for q in traj.y[:, :m]:
        p = np.array([g(zeros, q) for g in grads])
        vals.append(H(p, q))
    traj.H = np.array(vals)


def _integrate_bryant_n1(args, cfg, manifest):
    if cfg.r != 1 or cfg.weights:
        raise _InputError("bryant-n1 needs r = 1 with no weights")
    sol = bryant_n1(args.a, float(cfg.E), float(cfg.lam), t_max=args.t_max, tol=args.tol)
    res = sol.residual()
    manifest.results["max_second_order_residual"] = float(np.max(np.abs(res)))
    from .ode_flow import Trajectory

    keep = sol.h > 0
    q = np.column_stack([2 * np.log(sol.h[keep]), sol.u[keep]])
    traj = Trajectory(sol.t[keep], q, "t", sol.truncated)
    ansatz = bryant_n1_ansatz(cfg, Fraction(args.a).limit_denominator(10 ** 9))
    _attach_reconstructed_H(cfg, ansatz, traj)
    return trajectory_csv(traj, cfg.r), sol.truncated


def _integrate_ansatz(args, cfg, manifest):
    if not args.ansatz:
        raise _InputError("--solution ansatz needs --ansatz")
    ansatz = _load_ansatz(args.ansatz, cfg)
    if not args.start:
        raise _InputError("--solution ansatz needs --start")
    try:
        start = [float(x) for x in args.start.split(",")]
    except ValueError:
        raise _InputError("--start must be comma-separated numbers") from None
    if len(start) != cfg.r + 1 or not all(math.isfinite(x) for x in start):
        raise _InputError(f"--start needs {cfg.r + 1} finite values")
    if args.full_flow:
        traj = full_flow_check(cfg, ansatz, start, (0.0, args.t_max), tol=args.tol)
        manifest.results["max_abs_H"] = float(np.max(np.abs(traj.H)))
        manifest.results["max_graph_defect"] = float(np.max(traj.graph_defect))
        traj.y = traj.y[:, : cfg.r + 1]
    else:
        try:
            rhs = build_rhs(cfg, ansatz)
        except ValueError as exc:
            raise _InputError(str(exc)) from None
        traj = integrate(rhs, start, (0.0, args.t_max), tol=args.tol)
        _attach_reconstructed_H(cfg, ansatz, traj)
        manifest.results["max_abs_H"] = float(np.max(np.abs(traj.H)))
    return trajectory_csv(traj, cfg.r), traj.truncated


def cmd_integrate(args) -> int:
    started = time.perf_counter()
    cfg = _load_cfg(args.config)
    if not (1e-13 <= args.tol <= 1e-6):
        raise _InputError("--tol must lie in [1e-13, 1e-6]")
    params = {k: getattr(args, k) for k in ("solution", "s0", "s_max", "tol", "coordinate", "a", "t_max", "start",
                                             "full_flow", "check_closed_form")}
    manifest = RunManifest("integrate", config_hash(cfg), params)
    try:
        if args.solution == "case5":
            text, truncated = _integrate_case5(args, cfg, manifest)
        elif args.solution == "bryant-n1":
            text, truncated = _integrate_bryant_n1(args, cfg, manifest)
        else:
            text, truncated = _integrate_ansatz(args, cfg, manifest)
    except ValueError as exc:
        raise _InputError(str(exc)) from None
    manifest.results["truncated"] = truncated
    _emit(text, args.out)
    _write_manifest(manifest, args.out, started)
    return EXIT_INTEGRATOR if truncated else EXIT_OK


def cmd_check_gfi(args) -> int:
    started = time.perf_counter()
    cfg = _load_cfg(args.config)
    if args.F == "bryant-difference":
        F = bryant_gfi_difference(cfg)
    else:
        try:
            with open(args.F, encoding="utf-8") as fh:
                text = fh.read().strip()
        except FileNotFoundError:
            raise _InputError(f"no such file: {args.F}") from None
        try:
            F = parse(text, cfg.r + 1, cfg)
        except Exception as exc:  # sympy raises a zoo of exception types
            raise _InputError(f"cannot parse F: {exc}") from None
    rep = verify_gfi(cfg, F)
    _emit(_dump(gfi_report_to_dict(rep)), args.out)
    _write_manifest(RunManifest("check-gfi", config_hash(cfg), {"F": args.F}, results={"is_gfi": rep.is_gfi}),
                    args.out, started)
    return EXIT_OK if rep.is_gfi else EXIT_FAIL


def cmd_smoothness(args) -> int:
    started = time.perf_counter()
    try:
        E = float(parse_rational(args.E))
        A = float(parse_rational(args.A))
    except (ValueError, ZeroDivisionError) as exc:
        raise _InputError(str(exc)) from None
    try:
        sol = explicit_case5(E, A)
    except ValueError as exc:
        raise _InputError(str(exc)) from None
    rep = smoothness_check(sol)
    data = rep.to_dict()
    data["solution"] = {"name": sol.name, "E": args.E, "A": args.A, "lambda": 4, "metadata": sol.metadata}
    _emit(_dump(data), args.out)
    _write_manifest(RunManifest("smoothness", None, {"solution": args.solution, "E": args.E, "A": args.A},
                                results={"passed": rep.passed}), args.out, started)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_catalog(args) -> int:
    started = time.perf_counter()
    items = []
    for group, cfgs in (("catalog", builtin_catalog()), ("negative_control", negative_controls())):
        for cfg in cfgs:
            d = config_to_dict(cfg)
            d["group"] = group
            d["notes"] = cfg.notes
            d["measure"] = asdict(validate(cfg))
            d["hash"] = config_hash(cfg)
            items.append(d)
    _emit(_dump(items), args.out)
    _write_manifest(RunManifest("catalog", None, {}, results={"entries": len(items)}), args.out, started)
    return EXIT_OK


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cohomflow", description="Superpotentials for cohomogeneity one Ricci solitons.")
    p.add_argument("--version", action="version", version=f"cohomflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="check the superpotential condition for an ansatz")
    v.add_argument("config", help="configuration JSON path or catalog name")
    v.add_argument("ansatz", help="ansatz JSON path, or one of case5, case5-, bryant-n1")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("classify", help="search for superpotentials")
    c.add_argument("config")
    c.add_argument("--lattice-bound", type=int, default=3)
    c.add_argument("--max-extra", type=int, default=4)
    c.add_argument("--threads", type=int, default=1)
    c.add_argument("--coefficients", choices=["auto", "constant", "polynomial"], default="auto")
    c.add_argument("--budget", type=int, default=200_000)
    c.add_argument("--time-budget", type=float)
    c.add_argument("--out")
    c.set_defaults(func=cmd_classify)

    i = sub.add_parser("integrate", help="integrate a first-order subsystem and write CSV")
    i.add_argument("config")
    i.add_argument("--solution", choices=["case5", "bryant-n1", "ansatz"], default="case5")
    i.add_argument("--ansatz")
    i.add_argument("--start", help="comma-separated initial q (for --solution ansatz)")
    i.add_argument("--s0", type=float, default=1e-6)
    i.add_argument("--s-max", type=float, default=10.0)
    i.add_argument("--tol", type=float, default=1e-10)
    i.add_argument("--coordinate", choices=["s", "t"], default="s")
    i.add_argument("--a", type=float, default=1.0)
    i.add_argument("--t-max", type=float, default=10.0)
    i.add_argument("--full-flow", action="store_true")
    i.add_argument("--check-closed-form", action="store_true")
    i.add_argument("--out")
    i.set_defaults(func=cmd_integrate)

    g = sub.add_parser("check-gfi", help="test whether F is a generalised first integral")
    g.add_argument("config")
    g.add_argument("F", help="file holding F in text form, or bryant-difference")
    g.add_argument("--out")
    g.set_defaults(func=cmd_check_gfi)

    s = sub.add_parser("smoothness", help="smoothness conditions at the singular orbit")
    s.add_argument("--solution", choices=["case5"], default="case5")
    s.add_argument("--E", default="8")
    s.add_argument("--A", default="-1/2")
    s.add_argument("--out")
    s.set_defaults(func=cmd_smoothness)

    k = sub.add_parser("catalog", help="list built-in configurations")
    k.add_argument("--out")
    k.set_defaults(func=cmd_catalog)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SCHEMA if exc.code else EXIT_OK
    try:
        return args.func(args)
    except _InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
