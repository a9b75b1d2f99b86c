"""Command-line driver.

Exit codes: 0 success or check passed, 1 check ran and failed, 2 the
command could not run (bad flags, malformed input, unknown model).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import models as catalog
from .certificate import DEFAULT_ETA_MIN, SamplingGrid
from .certify import (
    certify_convergence,
    certify_k_contraction,
    certify_nob,
    certify_subspace_1contraction,
    certify_subspace_2contraction,
)
from .compound import add_compound, mult_compound
from .decompose import (
    ReducibilityError,
    check_reducibility,
    lti_blocks,
    lti_invariant_pair,
    pair_from_first_integral,
    serial_reduce,
    validate_pair,
)
from .io import InputError, read_edges, read_matrix, read_pair, read_vector, write_matrix
from .measures import measure, measure_of_second_compound
from .model import DomainError
from .simulate import IntegrationError, IntegratorSettings, detect_period, integrate

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2)


def _parse_value(raw: str):
    try:
        return float(raw)
    except ValueError:
        return raw


def _model_params(args) -> dict:
    params = {}
    for item in args.param or []:
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = _parse_value(v.strip())
    if getattr(args, "graph", None):
        params["graph"] = read_edges(args.graph)
    if getattr(args, "matrix", None):
        params["matrix"] = read_matrix(args.matrix).tolist()
    return params


def _build(args):
    params = _model_params(args)
    try:
        return catalog.build(args.model, params), params
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def _grid(args) -> SamplingGrid:
    window = None
    if getattr(args, "t_window", None):
        parts = [float(v) for v in args.t_window.split(",")]
        if len(parts) != 2:
            raise UsageError("--t-window expects 't0,t1'")
        window = (parts[0], parts[1])
    return SamplingGrid(points_per_axis=args.grid_points, n_random=args.random, seed=args.seed,
                        t_window=window)


def _known_pair(args, params):
    if getattr(args, "pair", None):
        return read_pair(args.pair)
    pair = catalog.known_pair(args.model, params)
    if pair is None:
        raise UsageError(f"model {args.model!r} has no built-in splitting; pass --pair")
    return pair


def _certificate_output(cert, args) -> int:
    data = cert.to_dict()
    _emit(_dump(data), args.out)
    return EXIT_OK if cert.passed else EXIT_FAILED


# subcommands -----------------------------------------------------------------

def cmd_compound(args) -> int:
    a = read_matrix(args.input)
    if args.kind == "additive":
        if a.shape[0] != a.shape[1]:
            raise UsageError("additive compound needs a square matrix")
        c = add_compound(a, args.k)
    else:
        c = mult_compound(a, args.k)
    if c.dtype != object:
        c = c + 0.0  # drop signed zeros from the output
    text = write_matrix(c, fmt=args.format)
    _emit(text.rstrip("\n"), args.out)
    return EXIT_OK


def cmd_measure(args) -> int:
    a = read_matrix(args.input)
    value = measure_of_second_compound(a, args.norm) if args.of_second_compound else measure(a, args.norm)
    _emit(repr(float(value)), args.out)
    return EXIT_OK


def cmd_certify(args) -> int:
    model, _ = _build(args)
    grid = _grid(args)
    certs = []
    if args.subspace_v:
        if args.k != 2:
            raise UsageError("--subspace-v is a 2-contraction check; use --k 2")
        certs.append(certify_subspace_2contraction(model, read_matrix(args.subspace_v), args.norm,
                                                   grid, args.eta_min))
    if args.subspace_u:
        certs.append(certify_subspace_1contraction(model, read_matrix(args.subspace_u), args.norm,
                                                   grid, args.eta_min))
    if not certs:
        certs.append(certify_k_contraction(model, args.k, args.norm, grid, args.eta_min))
    if len(certs) == 1:
        return _certificate_output(certs[0], args)
    _emit(_dump([c.to_dict() for c in certs]), args.out)
    return EXIT_OK if all(c.passed for c in certs) else EXIT_FAILED


def _describe_reduction(model, pair, params) -> dict:
    desc = {
        "upstream": {"state": "y1 = V^T x", "dim": pair.q_dim, "field": "y1' = V^T f(t, V y1)"},
        "downstream": {"state": "y2 = U^T x", "dim": pair.p_dim,
                       "field": "y2' = U^T f(t, U y2 + V y1)", "input": "V y1"},
    }
    if "matrix" in params or model.name.startswith("lti"):
        A = model.jacobian(0.0, np.zeros(model.n))
        blocks = lti_blocks(A, pair)
        desc["upstream"]["matrix"] = blocks["upstream"].tolist()
        desc["downstream"]["matrix"] = blocks["downstream"].tolist()
        desc["downstream"]["input_matrix"] = blocks["input"].tolist()
    return desc


def cmd_decompose(args) -> int:
    model, params = _build(args)
    if args.first_integral:
        pair = pair_from_first_integral(read_vector(args.first_integral))
    elif args.lti:
        pair = lti_invariant_pair(read_matrix(args.lti))
    else:
        pair = _known_pair(args, params)
    ok, residuals = validate_pair(pair)
    report = {"model": model.name, "pair": pair.to_dict(), "pair_residuals": residuals, "pair_valid": ok}
    if not ok:
        _emit(_dump(report), args.out)
        return EXIT_FAILED
    cert = check_reducibility(model, pair, _grid(args))
    report["reducibility"] = cert.to_dict()
    if cert.passed:
        serial_reduce(model, pair, certificate=cert)
        report["reduced"] = _describe_reduction(model, pair, params)
    _emit(_dump(report), args.out)
    return EXIT_OK if cert.passed else EXIT_FAILED


def _pipeline(args, fn) -> int:
    model, params = _build(args)
    pair = _known_pair(args, params)
    ok, residuals = validate_pair(pair)
    if not ok:
        _emit(_dump({"model": model.name, "pair_valid": False, "pair_residuals": residuals}), args.out)
        return EXIT_FAILED
    try:
        cert = fn(model, pair.U, pair.V, args.norm, _grid(args), args.eta_min)
    except ReducibilityError as exc:
        _emit(_dump({"model": model.name, "pair_valid": True, "reducibility_failed": str(exc)}), args.out)
        return EXIT_FAILED
    cert.details["pair_residuals"] = residuals
    return _certificate_output(cert, args)


def cmd_nob_check(args) -> int:
    return _pipeline(args, certify_nob)


def cmd_converge_check(args) -> int:
    return _pipeline(args, certify_convergence)


def _parse_x0(text: str) -> list:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--x0 expects comma-separated numbers, got {text!r}") from None


def cmd_simulate(args) -> int:
    model, _ = _build(args)
    settings = IntegratorSettings(rtol=args.rtol, atol=args.atol)
    traj = integrate(model, _parse_x0(args.x0), args.t0, args.t_end, settings)
    if args.out:
        traj.to_csv(args.out)
    report = detect_period(traj, model=model)
    payload = {"model": model.name, "x0": traj.x0, "t_end": traj.t_end, "steps": int(traj.times.size),
               "events": traj.events, "report": report.to_dict()}
    text = _dump(payload)
    if args.report:
        Path(args.report).write_text(text + "\n")
    if not args.out or args.report:
        print(text)
    return EXIT_OK


def cmd_models(args) -> int:
    if args.action != "list":
        raise UsageError("usage: models list")
    for entry in catalog.list_models():
        params = ", ".join(f"{k}={v}" for k, v in entry["parameters"].items())
        pair = " [splitting]" if entry["has_pair"] else ""
        print(f"{entry['name']:<24} {params or '-'}{pair}\n    {entry['description']}")
    return EXIT_OK


def cmd_demo(args) -> int:
    if args.name == "duffing-figure":
        model = catalog.build("duffing")
        traj = integrate(model, [0.0, 0.0], 0.0, args.t_end or 500.0)
        t, x = traj.resample(args.points)
        lines = ["t,x1,x2"] + [f"{ti!r},{a!r},{b!r}" for ti, (a, b) in zip(t.tolist(), x.tolist())]
        _emit("\n".join(lines), args.out)
        return EXIT_OK
    model = catalog.build("sin-clock")
    cert = certify_k_contraction(model, 2, "inf")
    traj = integrate(model, [0.0, 0.0], 0.0, args.t_end or 60.0)
    report = detect_period(traj, model=model)
    tail = traj(np.linspace(traj.t_end * 2 / 3, traj.t_end, 256))
    payload = {
        "two_contraction_bound": cert.bound,
        "two_contracting": cert.passed,
        "report": report.to_dict(),
        "x2_tail_max": float(np.abs(tail[:, 1]).max()),
        "expected_period": 2 * math.pi,
    }
    _emit(_dump(payload), args.out)
    return EXIT_OK if report.periodic else EXIT_FAILED


# parser ----------------------------------------------------------------------

def _add_model_args(p, required=True):
    p.add_argument("--model", required=required, help="catalog model name (see 'models list')")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="model parameter, repeatable")
    p.add_argument("--graph", help="edge-list CSV (from,to,weight), 1-based agents")
    p.add_argument("--matrix", help="matrix JSON/CSV for the lti model")


def _add_grid_args(p):
    p.add_argument("--grid-points", type=int, default=9, help="grid points per axis")
    p.add_argument("--random", type=int, default=1000, help="uniform random samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-window", help="time window 't0,t1' for time-varying models")


def _add_norm_args(p):
    p.add_argument("--norm", default="inf", choices=["1", "2", "inf"])
    p.add_argument("--eta-min", type=float, default=DEFAULT_ETA_MIN)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kcontract", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compound", help="multiplicative or additive compound of a matrix")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--kind", choices=["additive", "multiplicative"], default="additive")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compound)

    p = sub.add_parser("measure", help="matrix measure mu_p")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--norm", default="inf", choices=["1", "2", "inf"])
    p.add_argument("--of-second-compound", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("certify", help="sampled k-contraction certificate")
    _add_model_args(p)
    p.add_argument("--k", type=int, default=2, choices=[1, 2])
    _add_norm_args(p)
    p.add_argument("--subspace-v", help="V (n x q) for restricted 2-contraction")
    p.add_argument("--subspace-u", help="U (n x p) for restricted 1-contraction")
    _add_grid_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("decompose", help="check a splitting and emit the cascade form")
    _add_model_args(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--first-integral", help="vector c of a linear first integral c^T x")
    g.add_argument("--lti", help="matrix A; splitting from an eigenvector of A")
    g.add_argument("--pair", help="pair JSON {U, V}")
    _add_grid_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_decompose)

    for name, fn, text in [
        ("nob-check", cmd_nob_check, "splitting + reducibility + restricted 2-contraction"),
        ("converge-check", cmd_converge_check, "adds restricted 1-contraction on U"),
    ]:
        p = sub.add_parser(name, help=text)
        _add_model_args(p)
        p.add_argument("--pair", help="pair JSON {U, V}; defaults to the model's built-in splitting")
        _add_norm_args(p)
        _add_grid_args(p)
        p.add_argument("--out")
        p.set_defaults(func=fn)

    p = sub.add_parser("simulate", help="integrate a model and report its asymptotics")
    _add_model_args(p)
    p.add_argument("--x0", required=True, help="initial state, e.g. '0,0'")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t-end", type=float, default=100.0)
    p.add_argument("--rtol", type=float, default=IntegratorSettings.rtol)
    p.add_argument("--atol", type=float, default=IntegratorSettings.atol)
    p.add_argument("--out", help="trajectory CSV (t,x1..xn)")
    p.add_argument("--report", help="report JSON path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("models", help="catalog of built-in models")
    p.add_argument("action", choices=["list"])
    p.set_defaults(func=cmd_models)

    p = sub.add_parser("demo", help="reproduce the worked examples")
    p.add_argument("name", choices=["duffing-figure", "sin-clock-period"])
    p.add_argument("--t-end", type=float, help="horizon (500 for duffing-figure, 60 for sin-clock-period)")
    p.add_argument("--points", type=int, default=20001)
    p.add_argument("--out")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, InputError, DomainError, IntegrationError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
