"""Benchmark generative programs with analytic ground truth.

Two models, each writing part of its prior as an explicit rejection
sampling loop:

* Gaussian unknown mean (GUM): the N(mu0, sigma0) prior on the mean is
  split into two truncated halves by a coin flip, each half drawn by
  hard rejection from the full normal.  The posterior mean is conjugate
  and exact, and the loop conditionals are truncated normals, so the
  collapsed weight is available in closed form.

* Two-component Gaussian mixture (GMM): component one is drawn by
  textbook soft rejection from a wider base normal with the analytic
  envelope constant; component two accepts immediately.  The posterior
  mean is an exact mixture of conjugate posteriors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dists import Dist, Normal, TruncatedNormal, Uniform, normal_cdf
from .errors import EnvelopeInfinite, OracleUnavailable
from .estimators import ScopeFixture
from .trace import ModelProgram, TraceRecord

__all__ = [
    "GumParams",
    "GmmParams",
    "GMM_PRESETS",
    "build_gum",
    "build_gmm",
    "gum_true_posterior_mean",
    "gmm_true_posterior_mean",
    "gmm_envelope_constant",
    "gum_scope_fixture",
]

_INF = float("inf")


@dataclass
class GumParams:
    mu0: float = 0.0
    sigma0: float = 1.0
    sigma: float = math.sqrt(2.0) / 2.0
    y_obs: float = 0.0


@dataclass
class GmmParams:
    pi1: float = 0.5
    mu1: float = -1.0
    sigma1: float = 1.0
    mu2: float = 2.0
    sigma2: float = 1.0
    mu0_base: float = 1.0
    sigma0_base: float = 2.0
    sigma_lik: float = math.sqrt(2.0) / 2.0
    y_obs: float = 0.0


def gum_true_posterior_mean(p: GumParams) -> float:
    """Conjugate-normal posterior mean for a single observation."""
    v0 = p.sigma0 * p.sigma0
    v = p.sigma * p.sigma
    return (v0 * p.y_obs + v * p.mu0) / (v0 + v)


# Default inference-time proposal for the upper-branch mean site;
# deliberately far from the posterior.  All other sites use the prior.
GUM_DEFAULT_PROPOSALS = {"mu_hi": Normal(-2.0, 2.0)}


def build_gum(p: GumParams, proposal_map: dict | None = None) -> ModelProgram:
    """GUM program: coin-picked half-plane, each drawn by hard rejection."""
    prior_mu = Normal(p.mu0, p.sigma0)
    coin = Uniform(0.0, 1.0)
    mu0 = p.mu0
    if proposal_map is None:
        proposal_map = dict(GUM_DEFAULT_PROPOSALS)

    def hi_body(h):
        mu = h.sample("mu_hi", prior_mu)
        return mu > mu0, mu

    def lo_body(h):
        mu = h.sample("mu_lo", prior_mu)
        return mu <= mu0, mu

    def entry(h):
        u = h.sample("u", coin)
        if u > 0.5:
            mu = h.rejection_scope("branch_hi", hi_body)
        else:
            mu = h.rejection_scope("branch_lo", lo_body)
        h.observe("y", Normal(mu, p.sigma), p.y_obs)
        return mu

    def collapsed(trace: TraceRecord) -> float:
        u = trace.choices[(("u", 0, 0),)].value
        hi = u > 0.5
        site = "mu_hi" if hi else "mu_lo"
        low, high = (mu0, _INF) if hi else (-_INF, mu0)
        mu = trace.result
        prior_t = TruncatedNormal(p.mu0, p.sigma0, low, high)
        log_w = prior_t.log_pdf(mu)
        prop = proposal_map.get(site)
        if prop is not None:
            if not isinstance(prop, Normal):
                raise OracleUnavailable(
                    "collapsed GUM weight needs a Normal proposal at the mean site"
                )
            prop_t = TruncatedNormal(prop.mean, prop.std, low, high)
            log_w -= prop_t.log_pdf(mu)
        else:
            log_w -= prior_t.log_pdf(mu)
        log_w += Normal(mu, p.sigma).log_pdf(p.y_obs)
        return math.exp(log_w)

    return ModelProgram(entry, proposal_map, collapsed, name="gum")


def gum_scope_fixture(
    p: GumParams,
    mu: float,
    branch: str = "hi",
    proposal_map: dict | None = None,
) -> ScopeFixture:
    """Freeze one GUM branch at an accepted mean for conditional checks."""
    if proposal_map is None:
        proposal_map = dict(GUM_DEFAULT_PROPOSALS)
    hi = branch == "hi"
    site = "mu_hi" if hi else "mu_lo"
    prior_mu = Normal(p.mu0, p.sigma0)
    prop = proposal_map.get(site, prior_mu)
    if hi:
        condition = lambda z: np.asarray(z) > p.mu0
        p_acc = 1.0 - normal_cdf(0.0)  # symmetric split of the prior
        q_acc = 1.0 - normal_cdf((p.mu0 - prop.mean) / prop.std)
    else:
        condition = lambda z: np.asarray(z) <= p.mu0
        p_acc = normal_cdf(0.0)
        q_acc = normal_cdf((p.mu0 - prop.mean) / prop.std)
    # the branch coin keeps its prior proposal, so only the likelihood
    # sits outside the scope
    extra = Normal(mu, p.sigma).log_pdf(p.y_obs)
    return ScopeFixture(
        prior_z=prior_mu,
        proposal_z=prop,
        condition=condition,
        z_value=mu,
        extra_log_weight=extra,
        accept_prob_prior=p_acc,
        accept_prob_proposal=q_acc,
    )


def gmm_envelope_constant(p: GmmParams) -> float:
    """Maximum of N(x; mu1, sigma1) / N(x; mu0, sigma0) over x."""
    s1, s0 = p.sigma1, p.sigma0_base
    if s1 > s0 or (s1 == s0 and p.mu1 != p.mu0_base):
        raise EnvelopeInfinite(
            f"density ratio unbounded for sigma1={s1}, sigma0={s0}"
        )
    if s1 == s0:
        return 1.0
    v1, v0 = s1 * s1, s0 * s0
    x_star = (p.mu0_base * v1 - p.mu1 * v0) / (v1 - v0)
    target = Normal(p.mu1, s1)
    base = Normal(p.mu0_base, s0)
    return math.exp(target.log_pdf(x_star) - base.log_pdf(x_star))


GMM_PRESETS = ("fixed", "perfect", "perfect-u2")


def build_gmm(p: GmmParams, preset: str = "fixed") -> ModelProgram:
    """GMM program: soft-rejection branch plus an immediate-accept branch.

    Proposal presets for inference:

    * ``fixed``      — N(-2, 2) at the base-draw site, rest prior;
    * ``perfect``    — component-one density N(mu1, sigma1) at the base
      site (what an ideally trained proposal would learn), rest prior;
    * ``perfect-u2`` — additionally proposes the acceptance variate u2
      from N(-0.5, 0.5) renormalized to (0, 1), reducing rejection.
    """
    env = gmm_envelope_constant(p)
    log_env = math.log(env)
    base = Normal(p.mu0_base, p.sigma0_base)
    target = Normal(p.mu1, p.sigma1)
    comp2 = Normal(p.mu2, p.sigma2)
    unit = Uniform(0.0, 1.0)
    pi1 = p.pi1

    def accept_ratio(mu: float) -> float:
        return math.exp(target.log_pdf(mu) - base.log_pdf(mu) - log_env)

    def entry(h):
        u = h.sample("u", unit)

        def body(hh):
            if u < pi1:
                mu = hh.sample("mu_base", base)
                u2 = hh.sample("u2", unit)
                return u2 < accept_ratio(mu), mu
            mu = hh.sample("mu_comp2", comp2)
            return True, mu

        mu = h.rejection_scope("mix", body)
        h.observe("y", Normal(mu, p.sigma_lik), p.y_obs)
        return mu

    if preset == "fixed":
        proposal_map = {"mu_base": Normal(-2.0, 2.0)}
    elif preset == "perfect":
        proposal_map = {"mu_base": Normal(p.mu1, p.sigma1)}
    elif preset == "perfect-u2":
        proposal_map = {
            "mu_base": Normal(p.mu1, p.sigma1),
            "u2": TruncatedNormal(-0.5, 0.5, 0.0, 1.0),
        }
    else:
        raise ValueError(f"unknown GMM proposal preset {preset!r}")

    program = ModelProgram(entry, proposal_map, None, name="gmm")
    program.accept_ratio = accept_ratio  # exposed for tests/diagnostics
    return program


def gmm_true_posterior_mean(p: GmmParams) -> float:
    """Exact posterior mean: responsibility-weighted conjugate means."""
    v_lik = p.sigma_lik * p.sigma_lik
    comps = [(p.pi1, p.mu1, p.sigma1), (1.0 - p.pi1, p.mu2, p.sigma2)]
    log_resp = []
    means = []
    for pi, mu, s in comps:
        v = s * s
        marg = Normal(mu, math.sqrt(v + v_lik))
        log_resp.append(math.log(pi) + marg.log_pdf(p.y_obs))
        means.append((v * p.y_obs + v_lik * mu) / (v + v_lik))
    m = max(log_resp)
    resp = [math.exp(lr - m) for lr in log_resp]
    total = sum(resp)
    return sum(r * mi for r, mi in zip(resp, means)) / total
