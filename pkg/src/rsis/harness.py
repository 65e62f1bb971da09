"""Experiment driver: repeated inference runs, checkpointed summaries, CSV.

Seeding scheme: per-run stream = split(master_seed, "run", run_id);
per-particle stream = split(run_seed, "particle", index); replay
substreams are split further inside the engine.  Results are therefore
reproducible per (seed, run, particle) independent of scheduling.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import AllWeightsZero
from .estimators import EstimatorKind, NAIVE_IC, ars, collapsed_weight, finalize_weight
from .engine import DEFAULT_SCOPE_CAP, run_trace
from .models import (
    GmmParams,
    GumParams,
    build_gmm,
    build_gum,
    gmm_true_posterior_mean,
    gum_true_posterior_mean,
)
from .rng import RngStream
from .trace import ExecutionMode

__all__ = [
    "ExperimentConfig",
    "ExperimentRow",
    "CSV_COLUMNS",
    "AGGREGATE_COLUMNS",
    "default_checkpoints",
    "ess",
    "run_inference",
    "run_experiment",
    "aggregate_runs",
    "write_rows",
    "read_rows",
    "write_aggregates",
]

CSV_COLUMNS = [
    "model", "estimator", "proposal_preset", "run_id", "checkpoint_particles",
    "posterior_mean_est", "abs_error", "ess", "zero_weight_fraction",
    "seed", "wall_ms",
]

AGGREGATE_COLUMNS = [
    "model", "estimator", "proposal_preset", "checkpoint_particles", "runs",
    "abs_error_median", "abs_error_q10", "abs_error_q90",
    "ess_median", "ess_q10", "ess_q90",
]


@dataclass
class ExperimentConfig:
    model: str = "gum"                       # "gum" | "gmm"
    estimator: EstimatorKind = NAIVE_IC
    proposal_preset: str = "fixed"           # GMM only; GUM ignores it
    particles: int = 10_000
    runs: int = 1
    master_seed: int = 0
    scope_cap: int = DEFAULT_SCOPE_CAP
    checkpoints: Optional[list[int]] = None  # default: log-spaced grid
    gum_params: GumParams = field(default_factory=GumParams)
    gmm_params: GmmParams = field(default_factory=GmmParams)
    out_path: str = ""

    def resolved_checkpoints(self) -> list[int]:
        cps = self.checkpoints or default_checkpoints(self.particles)
        if sorted(cps) != list(cps) or cps[-1] > self.particles or cps[0] < 1:
            raise ValueError(f"bad checkpoint grid {cps} for {self.particles} particles")
        return cps


@dataclass
class ExperimentRow:
    model: str
    estimator: str
    proposal_preset: str
    run_id: int
    checkpoint_particles: int
    posterior_mean_est: float
    abs_error: float
    ess: float
    zero_weight_fraction: float
    seed: int
    wall_ms: float


def default_checkpoints(particles: int) -> list[int]:
    """Log-spaced grid {100, 316, 1000, ...} up to the particle budget."""
    if particles < 100:
        return [particles]
    pts = []
    e = 2.0
    while True:
        c = round(10.0 ** e)
        if c >= particles:
            break
        pts.append(c)
        e += 0.5
    pts.append(particles)
    return pts


def ess(weights: Iterable[float]) -> float:
    """Effective sample size (sum w)^2 / sum w^2."""
    w = np.asarray(list(weights), dtype=float)
    sq = float((w * w).sum())
    if sq == 0.0:
        raise AllWeightsZero("all particle weights are zero")
    s = float(w.sum())
    return s * s / sq


def _build(cfg: ExperimentConfig):
    if cfg.model == "gum":
        return build_gum(cfg.gum_params), gum_true_posterior_mean(cfg.gum_params)
    if cfg.model == "gmm":
        return (build_gmm(cfg.gmm_params, cfg.proposal_preset),
                gmm_true_posterior_mean(cfg.gmm_params))
    raise ValueError(f"unknown model {cfg.model!r}")


def run_inference(cfg: ExperimentConfig, run_id: int,
                  collect_particles: bool = False):
    """One inference run; returns checkpoint rows (and particles if asked)."""
    program, truth = _build(cfg)
    run_stream = RngStream(cfg.master_seed).split("run", run_id)
    est = cfg.estimator
    oracle = est.kind == "collapsed_oracle"
    checkpoints = cfg.resolved_checkpoints()
    next_cp = 0
    preset = cfg.proposal_preset if cfg.model == "gmm" else "fixed"

    sum_w = 0.0
    sum_wx = 0.0
    sum_w2 = 0.0
    zeros = 0
    rows: list[ExperimentRow] = []
    particles: list[tuple[float, float]] = []
    t0 = time.perf_counter()

    for i in range(cfg.particles):
        prng = run_stream.split("particle", i)
        trace = run_trace(program, ExecutionMode.PROPOSAL, prng, est, cfg.scope_cap)
        if oracle:
            w = collapsed_weight(program, trace)
        else:
            _, w = finalize_weight(trace.ledger)
        x = trace.result
        sum_w += w
        sum_wx += w * x
        sum_w2 += w * w
        if w == 0.0:
            zeros += 1
        if collect_particles:
            particles.append((w, x))
        if next_cp < len(checkpoints) and i + 1 == checkpoints[next_cp]:
            n = i + 1
            est_mean = sum_wx / sum_w if sum_w > 0.0 else math.nan
            cp_ess = sum_w * sum_w / sum_w2 if sum_w2 > 0.0 else 0.0
            rows.append(ExperimentRow(
                model=cfg.model,
                estimator=est.label(),
                proposal_preset=preset,
                run_id=run_id,
                checkpoint_particles=n,
                posterior_mean_est=est_mean,
                abs_error=abs(est_mean - truth),
                ess=cp_ess,
                zero_weight_fraction=zeros / n,
                seed=run_stream.seed,
                wall_ms=(time.perf_counter() - t0) * 1e3,
            ))
            next_cp += 1

    if collect_particles:
        return rows, particles
    return rows


def run_experiment(cfg: ExperimentConfig) -> list[ExperimentRow]:
    """All runs of one configuration, ordered by (run_id, checkpoint)."""
    rows: list[ExperimentRow] = []
    for run_id in range(cfg.runs):
        rows.extend(run_inference(cfg, run_id))
    return rows


def aggregate_runs(rows: list[ExperimentRow]) -> list[dict]:
    """Median and [10%, 90%] bands per (model, estimator, preset, checkpoint).

    Quantiles use linear interpolation between order statistics (NumPy's
    default), pinned so aggregate files are byte-stable.
    """
    groups: dict[tuple, list[ExperimentRow]] = {}
    for r in rows:
        key = (r.model, r.estimator, r.proposal_preset, r.checkpoint_particles)
        groups.setdefault(key, []).append(r)
    out = []
    for key in sorted(groups):
        rs = groups[key]
        err = np.array([r.abs_error for r in rs])
        es = np.array([r.ess for r in rs])
        out.append({
            "model": key[0],
            "estimator": key[1],
            "proposal_preset": key[2],
            "checkpoint_particles": key[3],
            "runs": len(rs),
            "abs_error_median": float(np.quantile(err, 0.5)),
            "abs_error_q10": float(np.quantile(err, 0.1)),
            "abs_error_q90": float(np.quantile(err, 0.9)),
            "ess_median": float(np.quantile(es, 0.5)),
            "ess_q10": float(np.quantile(es, 0.1)),
            "ess_q90": float(np.quantile(es, 0.9)),
        })
    return out


def _fmt(v) -> str:
    # shortest-roundtrip float formatting for cross-tool bit-exact reads
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(path: str, rows: list[ExperimentRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])


def read_rows(path: str) -> list[ExperimentRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        for rec in reader:
            rows.append(ExperimentRow(
                model=rec["model"],
                estimator=rec["estimator"],
                proposal_preset=rec["proposal_preset"],
                run_id=int(rec["run_id"]),
                checkpoint_particles=int(rec["checkpoint_particles"]),
                posterior_mean_est=float(rec["posterior_mean_est"]),
                abs_error=float(rec["abs_error"]),
                ess=float(rec["ess"]),
                zero_weight_fraction=float(rec["zero_weight_fraction"]),
                seed=int(rec["seed"]),
                wall_ms=float(rec["wall_ms"]),
            ))
    return rows


def write_aggregates(path: str, aggregates: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(AGGREGATE_COLUMNS)
        for a in aggregates:
            w.writerow([_fmt(a[c]) for c in AGGREGATE_COLUMNS])
