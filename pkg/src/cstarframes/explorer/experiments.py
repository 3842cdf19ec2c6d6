"""Seeded experiment pipelines with CSV and JSON reports.

Trial i draws everything from streams keyed by (seed, i), so rows do not
depend on scheduling.  Each kind has a fixed column list (see COLUMNS).
Kinds in PROBE_KINDS gather evidence only and never record violations.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..cstar import AlgebraSignature, cstar_norm
from ..errors import ConfigError, CStarFramesError
from ..frames import certify_frame, closest_parseval, gram_diagonal, naimark_complement
from ..module import flat_spectral_norm
from ..opscale import operator_scale
from ..paulsen import cfm_flow, imp_check, modular_paulsen_solve, projection_construct
from . import generate
from .probes import bt_search, jl_trial
from .rng import stream

KINDS = ("paulsen", "project", "imp", "scale", "naimark", "bt", "jl", "cfm")
PROBE_KINDS = ("paulsen", "bt", "jl")

COLUMNS = {
    "paulsen": ["trial", "d", "n", "input_eps", "achieved_dist_sq", "yardstick", "within_yardstick",
                "final_parseval_eps", "final_equal_inner_eps", "iterations", "converged"],
    "project": ["trial", "d", "n", "input_eps", "projection_dist_sq", "solver_dist_sq", "bound_ok",
                "idempotence_error", "selfadjoint_error", "max_diagonal_error", "iterations", "converged",
                "hypothesis_ok"],
    "imp": ["trial", "d", "n", "dist_sq", "image_dist_sq", "ratio", "bound_ok", "hypothesis_ok"],
    "scale": ["trial", "m", "n", "k", "input_eps", "final_eps", "max_left_deviation", "max_right_deviation",
              "reproduction_error", "iterations", "converged"],
    "naimark": ["trial", "d", "n", "complement_dim", "below_d", "parseval_eps", "sum_error"],
    "bt": ["trial", "d", "min_card", "norm_sq", "card", "A", "mode", "sigma"],
    "jl": ["trial", "N", "points", "m", "eps", "success", "max_distortion", "violations"],
    "cfm": ["trial", "d", "n", "step", "initial_residual", "final_residual", "max_unit_norm_deviation",
            "monotone", "iterations"],
}


@dataclass
class ExperimentConfig:
    kind: str
    signature: list = field(default_factory=lambda: [1])
    d: int = 2
    n: int = 3
    k: int = 2
    m: int = 2
    eps: float = 0.1
    trials: int = 100
    seed: int = 0
    tol: float = 1e-8
    max_iter: int = 500
    output: str | None = None
    workers: int = 1
    step: float | None = None

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        try:
            AlgebraSignature.of(self.signature)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad signature {self.signature!r}: {exc}") from None
        for name in ("d", "n", "k", "m", "trials", "max_iter", "workers"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.kind in ("paulsen", "project", "jl") and not 0.0 < self.eps < 1.0:
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        if self.kind in ("paulsen", "imp", "naimark") and self.n < self.d:
            raise ConfigError(f"{self.kind} needs n >= d")
        if self.kind == "naimark" and self.n == self.d:
            raise ConfigError("naimark needs n > d")
        if self.kind == "project" and self.n >= self.d:
            raise ConfigError("project needs rank n < d")
        if self.kind == "jl" and (self.m > self.d or self.n < 2):
            raise ConfigError("jl uses N = d, points = n >= 2 and needs m <= d")
        if self.kind == "bt" and (not AlgebraSignature.of(self.signature).commutative or self.k > self.d):
            raise ConfigError("bt needs a commutative signature and min_card k <= d")
        if self.kind == "cfm":
            if tuple(self.signature) != (1,):
                raise ConfigError("cfm runs over signature [1] only")
            if self.step is not None and not 0.0 < self.step < 1.0 / (2 * self.n):
                raise ConfigError(f"step must lie in (0, 1/(2n)), got {self.step}")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "kind" not in data:
            raise ConfigError("config needs a 'kind'")
        return cls(**data).validate()

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ExperimentRecord:
    config: ExperimentConfig
    rows: list
    violations: list
    wall_times: list

    @property
    def columns(self) -> list:
        return COLUMNS[self.config.kind]

    def aggregates(self) -> dict:
        out = {"trials": len(self.rows), "violations": len(self.violations)}
        for col in self.columns:
            vals = [r[col] for r in self.rows if col in r]
            if vals and all(isinstance(v, bool) for v in vals):
                out[f"{col}_fraction"] = sum(vals) / len(vals)
            elif vals and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals) and col != "trial":
                arr = np.array(vals, dtype=float)
                out[f"{col}_mean"] = float(arr.mean())
                out[f"{col}_max"] = float(arr.max())
        out["wall_time_total"] = float(sum(self.wall_times))
        return out

    def summary(self) -> dict:
        return {"config": self.config.to_dict(), "aggregates": self.aggregates(), "violations": self.violations}

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(r.get(c, "")) for c in self.columns])
        return buf.getvalue()

    def write(self, path) -> tuple:
        path = Path(path)
        csv_path = path.with_suffix(".csv")
        json_path = path.with_suffix(".json")
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        csv_path.write_text(self.csv_text(), encoding="utf-8")
        json_path.write_text(json.dumps(self.summary(), indent=2, default=_json_default) + "\n", encoding="utf-8")
        return csv_path, json_path


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    raise TypeError(type(v))


# trials; each returns (row, list of violation messages)


def _key(cfg, i):
    return (cfg.seed, i)


def _trial_paulsen(cfg, i):
    key = _key(cfg, i)
    F, eps = generate.near_equal_parseval_frame(cfg.signature, cfg.d, cfg.n, cfg.eps, key)
    res = modular_paulsen_solve(F, tol=cfg.tol, max_iter=cfg.max_iter)
    yard = 20.0 * eps * cfg.d**2
    row = dict(input_eps=eps, achieved_dist_sq=res.achieved_dist_sq, yardstick=yard,
               within_yardstick=res.converged and res.achieved_dist_sq <= yard,
               final_parseval_eps=res.final_parseval_eps, final_equal_inner_eps=res.final_equal_inner_eps,
               iterations=res.iterations, converged=res.converged)
    return row, []


def _trial_project(cfg, i):
    P, eps = generate.near_equal_projection(cfg.signature, cfg.d, cfg.n, cfg.eps, _key(cfg, i))
    rep = projection_construct(P, tol=cfg.tol, max_iter=cfg.max_iter)
    row = dict(input_eps=eps, projection_dist_sq=rep.projection_dist_sq, solver_dist_sq=rep.solver_dist_sq,
               bound_ok=rep.bound_ok, idempotence_error=rep.idempotence_error,
               selfadjoint_error=rep.selfadjoint_error, max_diagonal_error=rep.max_diagonal_error,
               iterations=rep.solver.iterations, converged=rep.converged, hypothesis_ok=rep.hypothesis_ok)
    bad = []
    if rep.converged and rep.hypothesis_ok:
        if rep.idempotence_error > 1e-8 or rep.selfadjoint_error > 1e-8:
            bad.append("output is not a projection")
        if rep.max_diagonal_error > 1e-6:
            bad.append(f"diagonal error {rep.max_diagonal_error:.3g}")
        if not rep.bound_ok:
            bad.append("projection distance exceeds 4x solver distance")
    return row, bad


def _trial_imp(cfg, i):
    key = _key(cfg, i)
    F = generate.random_parseval_frame(cfg.signature, cfg.d, cfg.n, key)
    delta = 10.0 ** stream(key, 3).uniform(-2.0, -0.3)
    G = closest_parseval(generate.perturb_frame(F, delta, key))
    chk = imp_check(F, G, cfg.tol)
    row = dict(dist_sq=chk.dist_sq, image_dist_sq=chk.image_dist_sq, ratio=chk.ratio,
               bound_ok=chk.bound_ok, hypothesis_ok=chk.hypothesis_ok)
    bad = [] if chk.bound_ok or not chk.hypothesis_ok else [f"image distance ratio {chk.ratio:.6g} > 4"]
    return row, bad


def _trial_scale(cfg, i):
    U = generate.random_tuple(cfg.signature, cfg.k, cfg.m, cfg.n, _key(cfg, i))
    res = operator_scale(U, tol=cfg.tol, max_iter=cfg.max_iter)
    repro = max(flat_spectral_norm(res.L @ u @ res.R - v) for u, v in zip(U.matrices, res.scaled.matrices))
    ld = max(res.left_deviations, default=0.0)
    rd = max(res.right_deviations, default=0.0)
    row = dict(input_eps=res.residual_trace[0], final_eps=res.residual_trace[-1], max_left_deviation=ld,
               max_right_deviation=rd, reproduction_error=repro, iterations=res.iterations,
               converged=res.converged)
    bad = []
    if ld > 1e-10 or rd > 1e-10:
        bad.append(f"half-step marginal deviation {max(ld, rd):.3g}")
    if repro > 1e-9:
        bad.append(f"L U R reproduction error {repro:.3g}")
    return row, bad


def _trial_naimark(cfg, i):
    F = generate.random_parseval_frame(cfg.signature, cfg.d, cfg.n, _key(cfg, i))
    C = naimark_complement(F, cfg.tol)
    peps = certify_frame(C).parseval_eps
    err = max(cstar_norm(a + b - 1.0) for a, b in zip(gram_diagonal(F), gram_diagonal(C)))
    row = dict(complement_dim=C.d, below_d=C.d < cfg.d, parseval_eps=peps, sum_error=err)
    bad = []
    if peps > 1e-8:
        bad.append(f"complement parseval_eps {peps:.3g}")
    if err > 1e-8:
        bad.append(f"inner product sum error {err:.3g}")
    return row, bad


def _trial_bt(cfg, i):
    M = generate.unit_column_matrix(cfg.signature, cfg.d, _key(cfg, i))
    res = bt_search(M, cfg.k, cfg.tol)
    row = dict(min_card=cfg.k, norm_sq=flat_spectral_norm(M) ** 2, card=len(res.sigma), A=res.A,
               mode=res.mode, sigma=" ".join(str(j + 1) for j in res.sigma))
    return row, []


def _trial_jl(cfg, i):
    r = jl_trial(cfg.signature, cfg.d, cfg.n, cfg.eps, cfg.m, _key(cfg, i))
    row = dict(N=cfg.d, points=cfg.n, eps=cfg.eps, success=r.success, max_distortion=r.max_distortion,
               violations=r.violations)
    return row, []


def _trial_cfm(cfg, i):
    step = cfg.step if cfg.step is not None else 0.2 / cfg.n
    F = generate.unit_norm_tight_start(cfg.d, cfg.n, cfg.eps, _key(cfg, i))
    _, tr = cfm_flow(F, step, max_iter=cfg.max_iter, tol=cfg.tol)
    head = tr.residuals[:101]
    dev = max(tr.unit_norm_deviation)
    row = dict(step=step, initial_residual=tr.residuals[0], final_residual=tr.residuals[-1],
               max_unit_norm_deviation=dev,
               monotone=all(b <= a + 1e-12 for a, b in zip(head, head[1:])), iterations=tr.iterations)
    bad = [] if dev <= 1e-8 else [f"unit norm deviation {dev:.3g}"]
    return row, bad


_TRIALS = {
    "paulsen": _trial_paulsen,
    "project": _trial_project,
    "imp": _trial_imp,
    "scale": _trial_scale,
    "naimark": _trial_naimark,
    "bt": _trial_bt,
    "jl": _trial_jl,
    "cfm": _trial_cfm,
}


def run_trial(cfg: ExperimentConfig, i: int):
    """(row, violations, wall time) for trial i."""
    t0 = time.perf_counter()
    base = {"trial": i}
    for name in ("d", "n", "m", "k"):
        if name in COLUMNS[cfg.kind]:
            base[name] = getattr(cfg, name)
    try:
        row, bad = _TRIALS[cfg.kind](cfg, i)
    except CStarFramesError as exc:
        row, bad = {}, [f"{type(exc).__name__}: {exc}"]
    base.update(row)
    if cfg.kind in PROBE_KINDS:
        bad = []
    return base, [{"trial": i, "message": m} for m in bad], time.perf_counter() - t0


def _run_one(args):
    cfg, i = args
    return run_trial(cfg, i)


def run_experiment(cfg: ExperimentConfig) -> ExperimentRecord:
    cfg.validate()
    jobs = [(cfg, i) for i in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    rows, violations, times = [], [], []
    for row, bad, wall in results:
        rows.append(row)
        violations.extend(bad)
        times.append(wall)
    rec = ExperimentRecord(config=cfg, rows=rows, violations=violations, wall_times=times)
    if cfg.output:
        rec.write(cfg.output)
    return rec
