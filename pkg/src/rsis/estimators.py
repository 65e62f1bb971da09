"""Weight assembly and estimator diagnostics.

The ledger collects log-space multiplicative factors tagged by origin;
an estimator kind decides which factors a rejection scope contributes:

* ``NAIVE_IC`` keeps the density ratio of every loop iteration,
* ``BIASED`` keeps only the accepted iteration's ratio,
* ``ars(m, n)`` keeps the accepted ratio and multiplies in the
  acceptance-probability correction K*T_bar/N estimated by replays,
* ``COLLAPSED_ORACLE`` defers to the model's closed-form conditionals.

Also here: the infinite-variance diagnostic S = E_q[(p/q)^2 (1 - a)]
(naive weights have infinite variance when S >= 1 on a positive-measure
set) and the conditional-mean check that all unbiased estimators agree
with the collapsed weight given the accepted trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtri

from .dists import Dist, Normal, TruncatedNormal, Uniform
from .errors import OracleUnavailable, QuadratureNonconvergent
from .rng import RngStream
from .trace import TraceRecord

__all__ = [
    "PRIOR_RATIO",
    "LOOP_RATIO",
    "CORRECTION",
    "LIKELIHOOD",
    "WeightLedger",
    "EstimatorKind",
    "NAIVE_IC",
    "BIASED",
    "COLLAPSED_ORACLE",
    "ars",
    "finalize_weight",
    "collapsed_weight",
    "SPqEstimate",
    "compute_s_pq",
    "ScopeFixture",
    "fixture_collapsed_weight",
    "biased_deviation_factor",
    "conditional_mean_check",
]

_NEG_INF = float("-inf")

PRIOR_RATIO = "prior_ratio"
LOOP_RATIO = "loop_ratio"
CORRECTION = "correction"
LIKELIHOOD = "likelihood"


class WeightLedger:
    """Ordered list of (tag, log_value, address-or-scope) factors."""

    __slots__ = ("factors",)

    def __init__(self):
        self.factors: list[tuple[str, float, object]] = []

    def append(self, tag: str, log_value: float, ref) -> None:
        self.factors.append((tag, log_value, ref))

    def log_total(self) -> float:
        total = 0.0
        for _, lv, _ in self.factors:
            if lv == _NEG_INF:
                return _NEG_INF
            total += lv
        return total

    def by_tag(self, tag: str) -> list[tuple[str, float, object]]:
        return [f for f in self.factors if f[0] == tag]

    def __eq__(self, other):
        return isinstance(other, WeightLedger) and self.factors == other.factors

    def __repr__(self):
        return f"WeightLedger({self.factors!r})"


@dataclass(frozen=True)
class EstimatorKind:
    """NAIVE_IC | BIASED | ARS(m_rep, n) | COLLAPSED_ORACLE."""

    kind: str
    m_rep: int = 1
    n: int = 10

    def __post_init__(self):
        if self.kind not in ("naive_ic", "biased", "ars", "collapsed_oracle"):
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.m_rep < 1 or self.n < 1:
            raise ValueError("ARS replication counts must be >= 1")

    @property
    def keeps_rejected_iterations(self) -> bool:
        return self.kind == "naive_ic"

    @property
    def needs_correction(self) -> bool:
        return self.kind == "ars"

    def label(self) -> str:
        if self.kind == "ars":
            return f"ars-m{self.m_rep}-n{self.n}"
        return {"naive_ic": "ic", "biased": "biased",
                "collapsed_oracle": "oracle"}[self.kind]


NAIVE_IC = EstimatorKind("naive_ic")
BIASED = EstimatorKind("biased")
COLLAPSED_ORACLE = EstimatorKind("collapsed_oracle")


def ars(m_rep: int = 1, n: int = 10) -> EstimatorKind:
    """Corrected estimator with M prior replications and N proposal replays."""
    return EstimatorKind("ars", m_rep=m_rep, n=n)


def finalize_weight(ledger: WeightLedger) -> tuple[float, float]:
    """Sum the ledger; returns (log_weight, weight), -inf mapping to 0."""
    log_w = ledger.log_total()
    return log_w, (0.0 if log_w == _NEG_INF else math.exp(log_w))


def collapsed_weight(program, trace: TraceRecord) -> float:
    """Exact collapsed weight of a trace, via the model's conditionals."""
    if program.collapsed_weight is None:
        raise OracleUnavailable(
            f"model {program.name or '<anonymous>'} has no collapsed-weight oracle"
        )
    return program.collapsed_weight(trace)


# ---------------------------------------------------------------------------
# vectorized density helpers (NumPy twins of the scalar Dist methods)
# ---------------------------------------------------------------------------

def np_log_pdf(d: Dist, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if isinstance(d, Normal):
        z = (x - d.mean) / d.std
        return -0.5 * z * z - math.log(d.std) - 0.5 * math.log(2 * math.pi)
    if isinstance(d, Uniform):
        out = np.full_like(x, _NEG_INF)
        inside = (x >= d.low) & (x <= d.high)
        out[inside] = -math.log(d.high - d.low)
        return out
    if isinstance(d, TruncatedNormal):
        z = (x - d.mean) / d.std
        out = (-0.5 * z * z - math.log(d.std) - 0.5 * math.log(2 * math.pi)
               - math.log(d.truncation_mass))
        return np.where((x > d.low) & (x < d.high), out, _NEG_INF)
    raise TypeError(f"unsupported distribution {type(d).__name__}")


def np_sample(d: Dist, size: int, gen: np.random.Generator) -> np.ndarray:
    if isinstance(d, Normal):
        return gen.normal(d.mean, d.std, size)
    if isinstance(d, Uniform):
        return gen.uniform(d.low, d.high, size)
    if isinstance(d, TruncatedNormal):
        lo = 0.0 if d.low == _NEG_INF else 0.5 * math.erfc(-(d.low - d.mean) / (d.std * math.sqrt(2)))
        u = lo + gen.random(size) * d.truncation_mass
        return d.mean + d.std * ndtri(u)
    raise TypeError(f"unsupported distribution {type(d).__name__}")


# ---------------------------------------------------------------------------
# Infinite-variance diagnostic
# ---------------------------------------------------------------------------

@dataclass
class SPqEstimate:
    value: float
    stderr: float  # quadrature error bound, or Monte Carlo standard error
    method: str

    @property
    def infinite_variance_regime(self) -> bool:
        return self.value >= 1.0


def _locate_jumps(f: Callable, lo: float, hi: float, n_grid: int = 4096) -> list[float]:
    """Bisect discontinuities of a piecewise-constant acceptance function."""
    grid = np.linspace(lo, hi, n_grid + 1)
    vals = np.asarray(f(grid), dtype=float)
    cuts = []
    for i in np.flatnonzero(np.abs(np.diff(vals)) > 0.25):
        a, b = grid[i], grid[i + 1]
        fa = float(f(np.array([a]))[0])
        for _ in range(80):
            m = 0.5 * (a + b)
            if abs(float(f(np.array([m]))[0]) - fa) > 0.25:
                b = m
            else:
                a = m
        cuts.append(0.5 * (a + b))
    return cuts


def compute_s_pq(
    prior_z: Dist,
    proposal_z: Dist,
    accept_prob: Callable[[np.ndarray], np.ndarray],
    method: str = "quadrature",
    mc_samples: int = 10_000_000,
    rng: Optional[RngStream] = None,
    tol: float = 1e-8,
) -> SPqEstimate:
    """Estimate S = E_{z~q}[(p(z)/q(z))^2 (1 - accept_prob(z))].

    ``accept_prob`` is the acceptance probability given z, vectorized;
    for a deterministic condition it is the 0/1 indicator.  S >= 1 flags
    the infinite-variance regime of the naive estimator.
    """

    def integrand(z: np.ndarray) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        log_ratio = 2.0 * np_log_pdf(prior_z, z) - np_log_pdf(proposal_z, z)
        rej = 1.0 - np.asarray(accept_prob(z), dtype=float)
        return np.exp(log_ratio) * rej

    if method == "quadrature":
        lo, hi = proposal_z.support()
        mid = 0.5 * (proposal_z.mean + getattr(prior_z, "mean", proposal_z.mean)) \
            if hasattr(proposal_z, "mean") else 0.0
        if not math.isfinite(lo) or not math.isfinite(hi):
            # truncate at +-12 proposal standard deviations around its mean
            std = getattr(proposal_z, "std", 1.0)
            center = getattr(proposal_z, "mean", mid)
            lo = max(lo, center - 12.0 * std)
            hi = min(hi, center + 12.0 * std)
        cuts = sorted([lo, *_locate_jumps(lambda z: 1.0 - np.asarray(accept_prob(z), float), lo, hi), hi])
        total, err = 0.0, 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            v, e = quad(lambda z: float(integrand(z)[0]), a, b,
                        epsabs=tol, epsrel=1e-10, limit=400)
            total += v
            err += e
        if not math.isfinite(total) or err > max(1e-6, 1e-6 * abs(total)):
            raise QuadratureNonconvergent(
                f"S_pq quadrature error {err:.3g} at estimate {total:.6g}"
            )
        return SPqEstimate(total, err, "quadrature")

    if method == "monte_carlo":
        if rng is None:
            raise ValueError("monte_carlo method needs an RngStream")
        gen = rng.generator
        n_left, chunk = int(mc_samples), 2_000_000
        s_sum, sq_sum, n_tot = 0.0, 0.0, 0
        while n_left > 0:
            m = min(chunk, n_left)
            z = np_sample(proposal_z, m, gen)
            log_ratio = np_log_pdf(prior_z, z) - np_log_pdf(proposal_z, z)
            v = np.exp(2.0 * log_ratio) * (1.0 - np.asarray(accept_prob(z), dtype=float))
            s_sum += float(v.sum())
            sq_sum += float((v * v).sum())
            n_tot += m
            n_left -= m
        mean = s_sum / n_tot
        var = max(sq_sum / n_tot - mean * mean, 0.0)
        return SPqEstimate(mean, math.sqrt(var / n_tot), "monte_carlo")

    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Conditional-mean check (all unbiased estimators agree with the collapsed
# weight given the accepted trace; the biased one misses a known factor)
# ---------------------------------------------------------------------------

@dataclass
class ScopeFixture:
    """A rejection scope frozen at fixed (x, z, y) for conditional checks.

    ``extra_log_weight`` carries every weight factor outside the scope:
    the outer proposal ratio log p(x)/q(x|y) plus the log-likelihood.
    The acceptance probabilities are the analytic values of p(A|x) and
    q(A|x, y), supplied by the model builder.
    """

    prior_z: Dist
    proposal_z: Dist
    condition: Callable[[np.ndarray], np.ndarray]
    z_value: float
    extra_log_weight: float
    accept_prob_prior: float
    accept_prob_proposal: float

    def accepted_log_ratio(self) -> float:
        return self.prior_z.log_pdf(self.z_value) - self.proposal_z.log_pdf(self.z_value)


def fixture_collapsed_weight(f: ScopeFixture) -> float:
    """w_C: truncated-conditional ratio times the factors outside the scope."""
    log_w = (f.extra_log_weight + f.accepted_log_ratio()
             + math.log(f.accept_prob_proposal) - math.log(f.accept_prob_prior))
    return math.exp(log_w)


def biased_deviation_factor(f: ScopeFixture) -> float:
    """E[biased | x,y,z] / w_C = p(A|x) / q(A|x,y)."""
    return f.accept_prob_prior / f.accept_prob_proposal


def _simulate_trial_counts(f: ScopeFixture, size: int,
                           gen: np.random.Generator,
                           max_rounds: int = 1_000_000) -> np.ndarray:
    """Trials-to-first-acceptance under the prior, one count per slot."""
    t = np.zeros(size, dtype=np.int64)
    alive = np.arange(size)
    for _ in range(max_rounds):
        if alive.size == 0:
            return t
        z = np_sample(f.prior_z, alive.size, gen)
        acc = np.asarray(f.condition(z), dtype=bool)
        t[alive] += 1
        alive = alive[~acc]
    raise RuntimeError("trial-count simulation did not terminate")


def conditional_mean_check(
    est: EstimatorKind,
    fixture: ScopeFixture,
    replications: int,
    rng: RngStream,
) -> tuple[float, float]:
    """Monte Carlo (mean, stderr) of a weight conditioned on fixed (x, y, z).

    Only the loop/correction randomness is resampled; the accepted value
    and everything outside the scope stay frozen.
    """
    gen = rng.generator
    base_log = fixture.extra_log_weight + fixture.accepted_log_ratio()

    if est.kind == "collapsed_oracle":
        return fixture_collapsed_weight(fixture), 0.0

    if est.kind == "biased":
        return math.exp(base_log), 0.0

    if est.kind == "ars":
        z = np_sample(fixture.proposal_z, (replications, est.n), gen)
        k = np.asarray(fixture.condition(z), dtype=bool).sum(axis=1)
        trials = _simulate_trial_counts(fixture, replications * est.m_rep, gen)
        t_bar = trials.reshape(replications, est.m_rep).mean(axis=1)
        w = math.exp(base_log) * (k * t_bar / est.n)
        return float(w.mean()), float(w.std(ddof=1) / math.sqrt(replications))

    if est.kind == "naive_ic":
        log_w = np.full(replications, base_log)
        alive = np.arange(replications)
        while alive.size:
            z = np_sample(fixture.proposal_z, alive.size, gen)
            acc = np.asarray(fixture.condition(z), dtype=bool)
            rej = ~acc
            log_w[alive[rej]] += (np_log_pdf(fixture.prior_z, z[rej])
                                  - np_log_pdf(fixture.proposal_z, z[rej]))
            alive = alive[rej]
        w = np.exp(log_w)
        return float(w.mean()), float(w.std(ddof=1) / math.sqrt(replications))

    raise ValueError(f"unsupported estimator kind {est.kind!r}")
