"""Importance sampling for generative programs with rejection sampling loops.

A small trace-based runtime: model programs call ``sample``/``observe``
against an interpreter handle and delimit user-written rejection loops
as scopes.  Particle weights can then be assembled four ways: keeping
every loop iteration's density ratio (naive), keeping only the accepted
iteration (biased), keeping the accepted iteration times an unbiased
acceptance-probability correction estimated by replaying the scope, or
using a model-supplied closed-form collapsed weight as an oracle.
"""

from .dists import Dist, Normal, TruncatedNormal, Uniform, normal_cdf, normal_icdf
from .engine import Interpreter, run_trace
from .errors import (
    AllWeightsZero,
    DuplicateAddress,
    EnvelopeInfinite,
    ObserveInsideScope,
    OracleUnavailable,
    ProposalSupportViolation,
    QuadratureNonconvergent,
    RsisError,
    ScopeIterationCapExceeded,
)
from .estimators import (
    BIASED,
    COLLAPSED_ORACLE,
    NAIVE_IC,
    EstimatorKind,
    WeightLedger,
    ars,
    collapsed_weight,
    compute_s_pq,
    conditional_mean_check,
    finalize_weight,
)
from .harness import (
    ExperimentConfig,
    ExperimentRow,
    aggregate_runs,
    ess,
    run_experiment,
    run_inference,
)
from .models import (
    GmmParams,
    GumParams,
    build_gmm,
    build_gum,
    gmm_envelope_constant,
    gmm_true_posterior_mean,
    gum_true_posterior_mean,
)
from .rng import RngStream
from .trace import ExecutionMode, ModelProgram, ScopeStats, TraceRecord

__version__ = "0.1.0"
