"""Command line entry point.

Operations on a single input read a JSON file and print a JSON report; the
resulting frame, matrix or tuple goes to --out when given.  Subcommands
that map to an experiment kind run a seeded batch instead when no input
file is given (parameters from --config or flags).

Exit status: 0 on success, 1 when an asserted invariant fails, 2 on bad
input or configuration.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..errors import CStarFramesError, ConfigError, FormatError
from ..frames import certify_frame, closest_parseval, equal_inner_normalize, gram_diagonal, naimark_complement
from ..cstar import cstar_norm
from ..module import flat_spectral_norm
from ..opscale import operator_scale, tuple_certify
from ..paulsen import cfm_flow, imp_check, modular_paulsen_solve, projection_construct
from . import generate, io
from .experiments import ExperimentConfig, run_experiment
from .probes import bt_search, jl_trial

log = logging.getLogger("cstarframes")

EXPERIMENT_OF = {
    "paulsen": "paulsen",
    "project": "project",
    "imp-check": "imp",
    "scale": "scale",
    "naimark": "naimark",
    "bt-search": "bt",
    "jl-trial": "jl",
    "cfm": "cfm",
}


def _emit(report: dict):
    print(json.dumps(report, indent=2, default=str))


def _save(args, doc: dict):
    if args.out:
        Path(args.out).write_text(json.dumps(doc) + "\n")


def _cert_dict(c):
    return dict(lower=c.lower, upper=c.upper, parseval_eps=c.parseval_eps,
                equal_inner_eps=c.equal_inner_eps, is_frame=c.is_frame)


# single-input operations; each returns (report, ok)


def cmd_certify(args):
    return {"certificate": _cert_dict(certify_frame(io.load_frame(args.input), args.tol))}, True


def cmd_parsevalize(args):
    G = closest_parseval(io.load_frame(args.input), args.tol)
    _save(args, io.encode_frame(G))
    return {"certificate": _cert_dict(certify_frame(G, args.tol))}, True


def cmd_equalize(args):
    G = equal_inner_normalize(io.load_frame(args.input), args.tol)
    _save(args, io.encode_frame(G))
    return {"certificate": _cert_dict(certify_frame(G, args.tol))}, True


def cmd_paulsen(args):
    F = io.load_frame(args.input)
    res = modular_paulsen_solve(F, tol=args.tol, max_iter=args.max_iter, inner_solver=args.inner_solver)
    _save(args, io.encode_frame(res.output))
    return dict(achieved_dist_sq=res.achieved_dist_sq, iterations=res.iterations,
                final_parseval_eps=res.final_parseval_eps, final_equal_inner_eps=res.final_equal_inner_eps,
                converged=res.converged), True


def cmd_project(args):
    P = io.load_matrix(args.input)
    rep = projection_construct(P, tol=args.tol, max_iter=args.max_iter, inner_solver=args.inner_solver)
    _save(args, io.encode_matrix(rep.Q))
    ok = not (rep.converged and rep.hypothesis_ok) or rep.bound_ok
    return dict(rank=rep.rank, epsilon_in=rep.epsilon_in, projection_dist_sq=rep.projection_dist_sq,
                solver_dist_sq=rep.solver_dist_sq, bound_ok=rep.bound_ok, converged=rep.converged,
                hypothesis_ok=rep.hypothesis_ok, idempotence_error=rep.idempotence_error,
                selfadjoint_error=rep.selfadjoint_error, max_diagonal_error=rep.max_diagonal_error), ok


def cmd_imp_check(args):
    chk = imp_check(io.load_frame(args.input), io.load_frame(args.other), args.tol)
    return dict(vars(chk)), chk.bound_ok or not chk.hypothesis_ok


def cmd_scale(args):
    U = io.load_tuple(args.input)
    res = operator_scale(U, tol=args.tol, max_iter=args.max_iter)
    _save(args, io.encode_tuple(res.scaled))
    cert = tuple_certify(res.scaled, args.tol)
    exact = max(res.left_deviations + res.right_deviations, default=0.0) <= 1e-10
    return dict(converged=res.converged, iterations=res.iterations, input_eps=res.residual_trace[0],
                final_eps=res.residual_trace[-1], is_doubly_stochastic=cert.is_doubly_stochastic,
                max_half_step_deviation=max(res.left_deviations + res.right_deviations, default=0.0)), exact


def cmd_naimark(args):
    F = io.load_frame(args.input)
    C = naimark_complement(F, args.tol)
    _save(args, io.encode_frame(C))
    cert = certify_frame(C, args.tol)
    err = max(cstar_norm(a + b - 1.0) for a, b in zip(gram_diagonal(F), gram_diagonal(C)))
    return dict(complement_dim=C.d, parseval_eps=cert.parseval_eps, sum_error=err), \
        cert.parseval_eps <= 1e-8 and err <= 1e-8


def cmd_bt_search(args):
    M = io.load_matrix(args.input)
    res = bt_search(M, args.min_card, args.tol)
    return dict(sigma=[j + 1 for j in res.sigma], A=res.A, mode=res.mode,
                norm_sq=flat_spectral_norm(M) ** 2), True


def cmd_jl_trial(args):
    r = jl_trial(args.signature, args.N, args.points, args.eps, args.m, args.seed, args.tol)
    return dict(success=r.success, max_distortion=r.max_distortion, violations=r.violations), True


def cmd_cfm(args):
    F = io.load_frame(args.input)
    G, tr = cfm_flow(F, args.step, max_iter=args.max_iter, tol=args.tol)
    _save(args, io.encode_frame(G))
    dev = max(tr.unit_norm_deviation)
    return dict(iterations=tr.iterations, initial_residual=tr.residuals[0], final_residual=tr.residuals[-1],
                max_unit_norm_deviation=dev), dev <= 1e-8


def cmd_random(args):
    seed = args.seed
    if args.what == "frame":
        doc = io.encode_frame(generate.gaussian_frame(args.signature, args.d, args.n, seed))
    elif args.what == "parseval":
        doc = io.encode_frame(generate.random_parseval_frame(args.signature, args.d, args.n, seed))
    elif args.what == "projection":
        P, _ = generate.near_equal_projection(args.signature, args.d, args.n, args.eps, seed)
        doc = io.encode_matrix(P)
    elif args.what == "unit-columns":
        doc = io.encode_matrix(generate.unit_column_matrix(args.signature, args.d, seed))
    else:
        doc = io.encode_tuple(generate.random_tuple(args.signature, args.k, args.m, args.n, seed))
    if args.out:
        Path(args.out).write_text(json.dumps(doc) + "\n")
    else:
        print(json.dumps(doc))
    return None, True


COMMANDS = {
    "certify": cmd_certify,
    "parsevalize": cmd_parsevalize,
    "equalize": cmd_equalize,
    "paulsen": cmd_paulsen,
    "project": cmd_project,
    "imp-check": cmd_imp_check,
    "scale": cmd_scale,
    "naimark": cmd_naimark,
    "bt-search": cmd_bt_search,
    "jl-trial": cmd_jl_trial,
    "cfm": cmd_cfm,
    "random": cmd_random,
}


def _global_flags(p, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--tol", type=float, default=d(1e-8), help="numerical tolerance (default 1e-8)")
    p.add_argument("--seed", type=int, default=d(0), help="unsigned 64-bit seed (default 0)")
    p.add_argument("--max-iter", type=int, default=d(500), help="iteration cap (default 500)")
    p.add_argument("--out", default=d(None), help="output path")
    p.add_argument("--config", default=d(None), help="experiment config (JSON)")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))


def _batch_flags(p):
    g = p.add_argument_group("batch mode")
    g.add_argument("--signature", type=int, nargs="+", default=[1])
    g.add_argument("-d", type=int, default=2)
    g.add_argument("-n", type=int, default=3)
    g.add_argument("-k", type=int, default=2)
    g.add_argument("-m", type=int, default=2)
    g.add_argument("--eps", type=float, default=0.1)
    g.add_argument("--trials", type=int, default=100)
    g.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cstarframes", description="Frames over finite-dimensional C*-algebras.")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help, nargs="?"):
        p = sub.add_parser(name, parents=[common], help=help)
        if nargs:
            p.add_argument("input", nargs=nargs, help="input JSON file")
        if name in EXPERIMENT_OF:
            _batch_flags(p)
        return p

    add("certify", "frame bounds and nearly-ness epsilons", nargs=None).add_argument("input")
    add("parsevalize", "closest Parseval frame", nargs=None).add_argument("input")
    add("equalize", "equal inner product normalization", nargs=None).add_argument("input")
    for name in ("paulsen", "project"):
        add(name, f"{name} heuristic (batch mode without input)").add_argument(
            "--inner-solver", choices=("alternate", "opscale"), default="alternate")
    add("imp-check", "compare distances of two Parseval frames and their analysis images").add_argument(
        "other", nargs="?", help="second frame")
    add("scale", "alternating operator scaling of a matrix tuple")
    add("naimark", "Naimark complement of a Parseval frame")
    add("bt-search", "restricted invertibility witness search").add_argument("--min-card", type=int, default=1)
    p = add("jl-trial", "one modular Johnson-Lindenstrauss trial (batch mode with --trials)", nargs=None)
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--points", type=int, default=4)
    p.set_defaults(input=None, batch=False)
    p.add_argument("--batch", action="store_true", help="run a seeded batch instead of one trial")
    add("cfm", "discrete frame-potential flow over C^d").add_argument("--step", type=float, default=None)
    p = sub.add_parser("random", parents=[common], help="seeded random inputs")
    p.add_argument("what", choices=("frame", "parseval", "projection", "unit-columns", "tuple"))
    _batch_flags(p)
    return parser


def _batch_config(args, kind) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        if cfg.kind != kind:
            raise ConfigError(f"config kind {cfg.kind!r} does not match subcommand ({kind!r})")
        return cfg
    fields = dict(kind=kind, signature=list(args.signature), d=args.d, n=args.n, k=args.k, m=args.m,
                  eps=args.eps, trials=args.trials, seed=args.seed, tol=args.tol, max_iter=args.max_iter,
                  output=args.out, workers=args.workers)
    if kind == "jl":
        fields.update(d=args.N, n=args.points)
    if kind == "bt":
        fields.update(k=args.min_card)
    if kind == "cfm":
        fields.update(signature=[1], step=args.step)
    return ExperimentConfig(**fields).validate()


def _run_batch(args, kind) -> int:
    rec = run_experiment(_batch_config(args, kind))
    if not rec.config.output:
        sys.stdout.write(rec.csv_text())
    print(json.dumps(rec.aggregates(), default=str), file=sys.stderr)
    for v in rec.violations:
        log.warning("trial %s: %s", v["trial"], v["message"])
    return 1 if rec.violations else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        kind = EXPERIMENT_OF.get(args.command)
        batch = kind is not None and (
            args.config is not None
            or (args.command == "jl-trial" and args.batch)
            or (args.command not in ("jl-trial",) and args.input is None)
        )
        if batch:
            return _run_batch(args, kind)
        if args.command == "imp-check" and args.other is None:
            raise FormatError("imp-check needs two frame files")
        if args.command == "cfm" and args.step is None:
            raise ConfigError("cfm needs --step")
        report, ok = COMMANDS[args.command](args)
        if report is not None:
            _emit(report)
        return 0 if ok else 1
    except (FormatError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CStarFramesError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
