"""Command-line driver.

Subcommands::

    run             full experiment -> CSV (schema: ExperimentRow)
    aggregate       raw CSV -> median/quantile-band CSV
    truth           print the analytic ground-truth posterior mean
    check-variance  S diagnostic for a model scope and proposal
    theorem2-check  conditional-mean fixture report on GUM

``--config FILE`` reads flat ``key = value`` lines (keys are the long
flag names with dashes or underscores, ``#`` comments allowed); explicit
flags override file values.  The master seed falls back to the
``PPL_ARS_SEED`` environment variable when ``--seed`` is absent.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import estimators as est_mod
from .dists import Normal
from .errors import RsisError
from .estimators import (
    BIASED,
    COLLAPSED_ORACLE,
    NAIVE_IC,
    ars,
    biased_deviation_factor,
    compute_s_pq,
    conditional_mean_check,
    fixture_collapsed_weight,
    np_log_pdf,
)
from .harness import (
    ExperimentConfig,
    aggregate_runs,
    read_rows,
    run_experiment,
    write_aggregates,
    write_rows,
)
from .models import (
    GmmParams,
    GumParams,
    build_gmm,
    gmm_envelope_constant,
    gmm_true_posterior_mean,
    gum_scope_fixture,
    gum_true_posterior_mean,
)
from .rng import RngStream

__all__ = ["cli_main"]


def _read_config_file(path: str) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = line.split("=", 1)
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _estimator_from_args(args) -> "est_mod.EstimatorKind":
    name = args.estimator
    if name == "ic":
        return NAIVE_IC
    if name == "biased":
        return BIASED
    if name == "oracle":
        return COLLAPSED_ORACLE
    if name == "ars":
        return ars(m_rep=args.ars_m, n=args.ars_n)
    raise ValueError(f"unknown estimator {name!r}")


def _master_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("PPL_ARS_SEED")
    return int(env) if env else 0


def _gum_params(args) -> GumParams:
    return GumParams(mu0=args.mu0, sigma0=args.sigma0,
                     sigma=args.sigma, y_obs=args.y_obs)


def _gmm_params(args) -> GmmParams:
    return GmmParams(sigma_lik=args.sigma_lik, y_obs=args.y_obs)


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["gum", "gmm"], default="gum")
    p.add_argument("--mu0", type=float, default=0.0)
    p.add_argument("--sigma0", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=math.sqrt(2.0) / 2.0)
    p.add_argument("--sigma-lik", type=float, default=math.sqrt(2.0) / 2.0)
    p.add_argument("--y-obs", type=float, default=0.0)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="rsis",
        description="Importance sampling experiments on programs with "
                    "rejection sampling loops",
    )
    parser.add_argument("--config", help="flat key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment and write CSV")
    _add_model_flags(run_p)
    run_p.add_argument("--estimator", choices=["ic", "biased", "ars", "oracle"],
                       default="ars")
    run_p.add_argument("--ars-m", type=int, default=10)
    run_p.add_argument("--ars-n", type=int, default=10)
    run_p.add_argument("--proposal-preset", choices=["fixed", "perfect", "perfect-u2"],
                       default="fixed")
    run_p.add_argument("--particles", type=int, default=10_000)
    run_p.add_argument("--runs", type=int, default=1)
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--scope-cap", type=int, default=1_000_000)
    run_p.add_argument("--checkpoints", default=None,
                       help="comma-separated particle counts (default log grid)")
    run_p.add_argument("--out", required=True)
    run_p.add_argument("--aggregate-out", default=None,
                       help="also write the aggregated CSV here")

    agg_p = sub.add_parser("aggregate", help="aggregate a raw results CSV")
    agg_p.add_argument("--csv", required=True)
    agg_p.add_argument("--out", required=True)

    truth_p = sub.add_parser("truth", help="print the analytic posterior mean")
    _add_model_flags(truth_p)

    cv_p = sub.add_parser("check-variance",
                          help="S diagnostic for a scope and proposal")
    _add_model_flags(cv_p)
    cv_p.add_argument("--scope", default="branch_hi",
                      help="gum: branch_hi|branch_lo; gmm: mix")
    cv_p.add_argument("--proposal", default="fixed",
                      help="fixed|prior|perfect or 'normal:MEAN,STD'")
    cv_p.add_argument("--method", choices=["quadrature", "monte-carlo"],
                      default="quadrature")
    cv_p.add_argument("--mc-samples", type=int, default=10_000_000)
    cv_p.add_argument("--seed", type=int, default=None)

    t2_p = sub.add_parser("theorem2-check",
                          help="conditional-mean fixture report on GUM")
    _add_model_flags(t2_p)
    t2_p.add_argument("--mu", type=float, default=0.5,
                      help="fixed accepted mean value")
    t2_p.add_argument("--branch", choices=["hi", "lo"], default="hi")
    t2_p.add_argument("--replications", type=int, default=100_000)
    t2_p.add_argument("--ars-m", type=int, default=10)
    t2_p.add_argument("--ars-n", type=int, default=10)
    t2_p.add_argument("--seed", type=int, default=None)

    return parser, [run_p, agg_p, truth_p, cv_p, t2_p]


def _cmd_run(args) -> int:
    cfg = ExperimentConfig(
        model=args.model,
        estimator=_estimator_from_args(args),
        proposal_preset=args.proposal_preset,
        particles=args.particles,
        runs=args.runs,
        master_seed=_master_seed(args),
        scope_cap=args.scope_cap,
        checkpoints=[int(c) for c in args.checkpoints.split(",")]
        if args.checkpoints else None,
        gum_params=_gum_params(args),
        gmm_params=_gmm_params(args),
        out_path=args.out,
    )
    rows = run_experiment(cfg)
    write_rows(args.out, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    if args.aggregate_out:
        write_aggregates(args.aggregate_out, aggregate_runs(rows))
        print(f"wrote aggregates to {args.aggregate_out}")
    return 0


def _cmd_aggregate(args) -> int:
    rows = read_rows(args.csv)
    if not rows:
        print("no rows in input CSV", file=sys.stderr)
        return 1
    write_aggregates(args.out, aggregate_runs(rows))
    print(f"wrote aggregates to {args.out}")
    return 0


def _cmd_truth(args) -> int:
    if args.model == "gum":
        value = gum_true_posterior_mean(_gum_params(args))
    else:
        value = gmm_true_posterior_mean(_gmm_params(args))
    print(value)
    return 0


def _variance_fixture(args):
    if args.model == "gum":
        p = _gum_params(args)
        prior_z = Normal(p.mu0, p.sigma0)
        hi = args.scope != "branch_lo"
        if hi:
            accept = lambda z: (np.asarray(z) > p.mu0).astype(float)
        else:
            accept = lambda z: (np.asarray(z) <= p.mu0).astype(float)
        default_prop = Normal(-2.0, 2.0) if hi else prior_z
    else:
        p = _gmm_params(args)
        prior_z = Normal(p.mu0_base, p.sigma0_base)
        target = Normal(p.mu1, p.sigma1)
        log_env = math.log(gmm_envelope_constant(p))

        def accept(z):
            return np.exp(np_log_pdf(target, np.asarray(z, float))
                          - np_log_pdf(prior_z, np.asarray(z, float)) - log_env)

        default_prop = Normal(-2.0, 2.0)

    spec = args.proposal
    if spec == "fixed":
        proposal_z = default_prop
    elif spec == "prior":
        proposal_z = prior_z
    elif spec == "perfect" and args.model == "gmm":
        proposal_z = Normal(p.mu1, p.sigma1)
    elif spec.startswith("normal:"):
        mean, std = (float(v) for v in spec.split(":", 1)[1].split(","))
        proposal_z = Normal(mean, std)
    else:
        raise ValueError(f"unknown proposal spec {spec!r}")
    return prior_z, proposal_z, accept


def _cmd_check_variance(args) -> int:
    prior_z, proposal_z, accept = _variance_fixture(args)
    method = "monte_carlo" if args.method == "monte-carlo" else "quadrature"
    result = compute_s_pq(
        prior_z, proposal_z, accept, method=method,
        mc_samples=args.mc_samples,
        rng=RngStream(_master_seed(args)).split("s_pq"),
    )
    print(f"S = {result.value:.8g} (method={result.method}, "
          f"stderr={result.stderr:.3g})")
    if result.infinite_variance_regime:
        print("INFINITE-VARIANCE REGIME (S >= 1): naive weights have "
              "unbounded variance")
    else:
        print("finite-variance regime (S < 1)")
    return 0


def _cmd_theorem2_check(args) -> int:
    p = _gum_params(args)
    fixture = gum_scope_fixture(p, mu=args.mu, branch=args.branch)
    w_c = fixture_collapsed_weight(fixture)
    rng = RngStream(_master_seed(args)).split("theorem2")
    print(f"collapsed weight w_C = {w_c:.8g} "
          f"(branch={args.branch}, mu={args.mu}, y={p.y_obs})")
    kinds = [
        ("ic", NAIVE_IC),
        (f"ars(M={args.ars_m},N={args.ars_n})", ars(args.ars_m, args.ars_n)),
        ("biased", BIASED),
    ]
    for name, est in kinds:
        mean, se = conditional_mean_check(est, fixture, args.replications,
                                          rng.split(name))
        dev = (mean - w_c) / se if se > 0 else 0.0
        line = f"{name:>18}: mean={mean:.8g}  stderr={se:.3g}"
        if se > 0:
            line += f"  ({dev:+.2f} sigma from w_C)"
        else:
            factor = mean / w_c
            line += (f"  deviation factor {factor:.6g} "
                     f"(= p(A|x)/q(A|x,y) = {biased_deviation_factor(fixture):.6g})"
                     if est.kind == "biased" else "")
        print(line)
    return 0


def cli_main(argv: list[str] | None = None) -> int:
    parser, subparsers = _build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)

    # apply config-file values as defaults before the real parse; defaults
    # must land on the subparsers, which do the actual argument parsing
    pre, _ = parser.parse_known_args(argv)
    if pre.config:
        try:
            values = _read_config_file(pre.config)
        except (OSError, ValueError) as exc:
            print(f"error reading config: {exc}", file=sys.stderr)
            return 2
        for sp in subparsers:
            known = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in values.items() if k in known})

    args = parser.parse_args(argv)
    # config-file values arrive as strings; re-coerce the typed ones
    for name in ("particles", "runs", "seed", "scope_cap", "ars_m", "ars_n",
                 "replications", "mc_samples"):
        if hasattr(args, name) and isinstance(getattr(args, name), str):
            setattr(args, name, int(getattr(args, name)))
    for name in ("mu0", "sigma0", "sigma", "sigma_lik", "y_obs", "mu"):
        if hasattr(args, name) and isinstance(getattr(args, name), str):
            setattr(args, name, float(getattr(args, name)))

    commands = {
        "run": _cmd_run,
        "aggregate": _cmd_aggregate,
        "truth": _cmd_truth,
        "check-variance": _cmd_check_variance,
        "theorem2-check": _cmd_theorem2_check,
    }
    try:
        return commands[args.command](args)
    except RsisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(cli_main())
