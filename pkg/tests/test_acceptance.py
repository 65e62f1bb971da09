"""End-to-end acceptance gates, one per headline claim.

Each test prints a single ``[ACCEPTANCE] <name>: PASS|FAIL`` line (visible
with ``pytest -s`` or on failure) and asserts the same condition.  The
heavyweight inference sweeps are shared across tests via session fixtures.
"""

import math

import numpy as np
import pytest
from scipy.stats import kstest

from rsis.dists import Normal, normal_cdf
from rsis.engine import Interpreter, run_trace
from rsis.errors import (
    DuplicateAddress,
    ObserveInsideScope,
    ScopeIterationCapExceeded,
)
from rsis.estimators import (
    BIASED,
    CORRECTION,
    NAIVE_IC,
    ars,
    biased_deviation_factor,
    compute_s_pq,
    conditional_mean_check,
    finalize_weight,
    fixture_collapsed_weight,
)
from rsis.harness import ExperimentConfig, run_experiment
from rsis.models import (
    GmmParams,
    GumParams,
    build_gmm,
    build_gum,
    gmm_envelope_constant,
    gum_scope_fixture,
)
from rsis.rng import RngStream
from rsis.trace import ExecutionMode, ModelProgram

PRIOR = ExecutionMode.PRIOR_ONLY
PROPOSAL = ExecutionMode.PROPOSAL


def report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"[ACCEPTANCE] {name}: {status}{suffix}")
    assert ok, f"{name}: {detail}"


def final_checkpoint(rows):
    last = max(r.checkpoint_particles for r in rows)
    return [r for r in rows if r.checkpoint_particles == last]


def sweep(model: str, estimator, preset: str = "fixed", seed: int = 2024):
    cfg = ExperimentConfig(
        model=model, estimator=estimator, proposal_preset=preset,
        particles=10_000, runs=100, master_seed=seed,
        checkpoints=[100, 316, 1000, 3162, 10_000],
    )
    return run_experiment(cfg)


@pytest.fixture(scope="module")
def gum_ars_rows():
    return sweep("gum", ars(10, 10))


@pytest.fixture(scope="module")
def gum_ic_rows():
    return sweep("gum", NAIVE_IC)


@pytest.fixture(scope="module")
def gmm_ars_rows():
    return sweep("gmm", ars(10, 10), preset="perfect")


@pytest.fixture(scope="module")
def gmm_biased_rows():
    return sweep("gmm", BIASED, preset="perfect")


class TestConditionalMeanEquivalence:
    """Every estimator's conditional mean collapses to the same weight."""

    def test_ars_and_naive_match_collapsed_weight(self):
        fixture = gum_scope_fixture(GumParams(), mu=0.5, branch="hi")
        w_c = fixture_collapsed_weight(fixture)
        reps = 100_000
        rng = RngStream(11)
        worst = 0.0
        ok = True
        kinds = [NAIVE_IC] + [ars(m, n) for m in (1, 10) for n in (10, 100)]
        for i, est in enumerate(kinds):
            mean, se = conditional_mean_check(est, fixture, reps, rng.split(i))
            dev = abs(mean - w_c) / se
            worst = max(worst, dev)
            ok = ok and dev < 4.0
        report("conditional-mean equivalence (ic + 4 ars variants)", ok,
               f"worst deviation {worst:.2f} sigma over {reps} reps")

    def test_biased_deviation_factor_exact(self):
        fixture = gum_scope_fixture(GumParams(), mu=0.5, branch="hi")
        w_c = fixture_collapsed_weight(fixture)
        mean, se = conditional_mean_check(BIASED, fixture, 10, RngStream(0))
        assert se == 0.0
        expected = 0.5 / (1.0 - normal_cdf(1.0))  # p(A|x)/q(A|x,y)
        factor = mean / w_c
        rel = abs(factor - expected) / expected
        ok = rel < 0.01 and abs(biased_deviation_factor(fixture) - expected) < 1e-12
        report("biased deviation = acceptance-probability ratio", ok,
               f"factor {factor:.6f} vs {expected:.6f}, rel err {rel:.2e}")


class TestReplaySubEstimators:
    """Trial-count and acceptance-rate replays are unbiased."""

    def test_prior_trial_count_mean(self):
        m = build_gum(GumParams())
        reps = 10_000
        root = RngStream(21)
        t_bars = np.empty(reps)
        for i in range(reps):
            h = Interpreter(m, PROPOSAL, root.split("r", i), ars(1, 1))
            def body(hh):
                mu = hh.sample("mu_hi", Normal(0, 1))
                return mu > 0.0, mu
            (t,) = h.estimate_inv_p_accept(body, 1, 100_000, ("branch_hi", 0))
            t_bars[i] = t
        se = t_bars.std(ddof=1) / math.sqrt(reps)
        dev = abs(t_bars.mean() - 2.0) / se
        report("prior trial-count mean = 1/p(A) = 2", dev < 4.0,
               f"mean {t_bars.mean():.4f}, {dev:.2f} sigma, {reps} reps")

    def test_proposal_acceptance_rate_mean(self):
        m = build_gum(GumParams())
        expected = 1.0 - normal_cdf(1.0)
        reps, n = 10_000, 10
        root = RngStream(22)
        rates = np.empty(reps)
        for i in range(reps):
            h = Interpreter(m, PROPOSAL, root.split("r", i), ars(1, n))
            def body(hh):
                mu = hh.sample("mu_hi", Normal(0, 1))
                return mu > 0.0, mu
            k, nn = h.estimate_q_accept(body, n, ("branch_hi", 0))
            rates[i] = k / nn
        se = rates.std(ddof=1) / math.sqrt(reps)
        dev = abs(rates.mean() - expected) / se
        report("proposal acceptance-rate mean = 1 - Phi(1)", dev < 4.0,
               f"mean {rates.mean():.5f} vs {expected:.5f}, {dev:.2f} sigma")


class TestVarianceDiagnostic:
    """Quadrature and Monte Carlo routes to S agree; the prior case is exact."""

    def test_prior_proposal_exact_half(self):
        prior = Normal(0, 1)
        accept = lambda z: (np.asarray(z) > 0.0).astype(float)
        rq = compute_s_pq(prior, prior, accept)
        rmc = compute_s_pq(prior, prior, accept, method="monte_carlo",
                           mc_samples=10_000_000, rng=RngStream(31).split("mc"))
        ok = abs(rq.value - 0.5) < 1e-7 and abs(rmc.value - rq.value) < 4 * rmc.stderr
        report("S diagnostic, prior proposal (S = 0.5 exactly)", ok,
               f"quad {rq.value:.8f}, mc {rmc.value:.8f} +- {rmc.stderr:.2g}")

    def test_shifted_proposal_dual_route(self):
        prior = Normal(0, 1)
        prop = Normal(-2, 2)
        accept = lambda z: (np.asarray(z) > 0.0).astype(float)
        rq = compute_s_pq(prior, prop, accept)
        rmc = compute_s_pq(prior, prop, accept, method="monte_carlo",
                           mc_samples=10_000_000, rng=RngStream(32).split("mc"))
        dev = abs(rq.value - rmc.value) / rmc.stderr
        report("S diagnostic, shifted proposal, quadrature vs 1e7 MC",
               dev < 4.0,
               f"quad {rq.value:.8f}, mc {rmc.value:.8f}, {dev:.2f} sigma")


class TestGumConvergence:
    """100 runs x 1e4 particles on the two-branch model (ground truth 0)."""

    def test_ars_error_small(self, gum_ars_rows):
        errs = [r.abs_error for r in final_checkpoint(gum_ars_rows)]
        med = float(np.median(errs))
        report("gum: ars median |error| < 0.05 at 1e4 particles", med < 0.05,
               f"median {med:.4f} over {len(errs)} runs")

    def test_ess_advantage(self, gum_ars_rows, gum_ic_rows):
        ess_ars = float(np.median([r.ess for r in final_checkpoint(gum_ars_rows)]))
        ess_ic = float(np.median([r.ess for r in final_checkpoint(gum_ic_rows)]))
        ratio = ess_ars / ess_ic
        report("gum: median ESS(ars) > 3x median ESS(ic)", ratio > 3.0,
               f"{ess_ars:.0f} vs {ess_ic:.0f}, ratio {ratio:.2f}")

    def test_estimate_band_containment(self, gum_ars_rows, gum_ic_rows):
        # signed posterior-mean estimates: the 10-90% band of the corrected
        # estimator must sit strictly inside the naive estimator's band
        a = np.array([r.posterior_mean_est for r in final_checkpoint(gum_ars_rows)])
        b = np.array([r.posterior_mean_est for r in final_checkpoint(gum_ic_rows)])
        a10, a90 = np.quantile(a, [0.1, 0.9])
        b10, b90 = np.quantile(b, [0.1, 0.9])
        ok = b10 < a10 and a90 < b90
        report("gum: ars estimate band strictly inside ic band", ok,
               f"ars [{a10:+.4f}, {a90:+.4f}] vs ic [{b10:+.4f}, {b90:+.4f}]")


class TestGmmBiasExposure:
    """Dropping the correction shifts the mixture posterior mean."""

    def test_ars_converges(self, gmm_ars_rows):
        errs = [r.abs_error for r in final_checkpoint(gmm_ars_rows)]
        med = float(np.median(errs))
        report("gmm: ars median |error| < 0.05 at 1e4 particles", med < 0.05,
               f"median {med:.4f} over {len(errs)} runs")

    def test_biased_error_dominates(self, gmm_ars_rows, gmm_biased_rows):
        med_a = float(np.median([r.abs_error for r in final_checkpoint(gmm_ars_rows)]))
        med_b = float(np.median([r.abs_error for r in final_checkpoint(gmm_biased_rows)]))
        ok = med_b > 3.0 * med_a
        report("gmm: biased median |error| > 3x ars", ok,
               f"biased {med_b:.4f} vs ars {med_a:.4f}")

    def test_naive_behavior_documented(self):
        # the naive estimator's weight variance here is unbounded, so we
        # record its error rather than gate on it (10 runs for speed)
        cfg = ExperimentConfig(model="gmm", estimator=NAIVE_IC,
                               proposal_preset="perfect", particles=10_000,
                               runs=10, master_seed=7, checkpoints=[10_000])
        errs = [r.abs_error for r in run_experiment(cfg)]
        print(f"[ACCEPTANCE] gmm: naive-ic median |error| at 1e4 particles = "
              f"{float(np.median(errs)):.4f} (documented, no gate)")


class TestEngineInvariants:
    def test_error_fixtures(self):
        def dup(h):
            h.sample("x", Normal(0, 1))
            h.sample("x", Normal(0, 1))

        def obs_in_scope(h):
            def body(hh):
                hh.observe("y", Normal(0, 1), 0.0)
                return True, None
            h.rejection_scope("s", body)

        def never(h):
            def body(hh):
                hh.sample("z", Normal(0, 1))
                return False, None
            h.rejection_scope("s", body, cap=10)

        ok = True
        for entry, exc in [(dup, DuplicateAddress),
                           (obs_in_scope, ObserveInsideScope),
                           (never, ScopeIterationCapExceeded)]:
            try:
                run_trace(ModelProgram(entry), PRIOR, RngStream(0))
                ok = False
            except exc:
                pass
        report("engine: misuse errors raised by dedicated fixtures", ok)

    def test_replays_do_not_mutate_ledger(self):
        m = build_gum(GumParams())
        ok = True
        for seed in range(100):
            tb = run_trace(m, PROPOSAL, RngStream(seed), BIASED)
            ta = run_trace(m, PROPOSAL, RngStream(seed), ars(5, 20))
            non_corr = [f for f in ta.ledger.factors if f[0] != CORRECTION]
            ok = ok and non_corr == tb.ledger.factors and ta.result == tb.result
        report("engine: replay executions leave particle ledgers unchanged", ok)

    def test_ars_equals_biased_times_correction(self):
        m = build_gum(GumParams())
        ok = True
        for seed in range(1000):
            tb = run_trace(m, PROPOSAL, RngStream(seed), BIASED)
            ta = run_trace(m, PROPOSAL, RngStream(seed), ars(2, 5))
            (_, log_corr, _), = ta.ledger.by_tag(CORRECTION)
            if log_corr == float("-inf"):
                ok = ok and finalize_weight(ta.ledger)[1] == 0.0
            else:
                ok = ok and math.isclose(
                    ta.ledger.log_total(), tb.ledger.log_total() + log_corr,
                    rel_tol=1e-12, abs_tol=1e-12)
        report("engine: ars weight = biased weight x correction (1e3 traces)", ok)


class TestSoftRejection:
    def test_accepted_marginal_matches_target_component(self):
        p = GmmParams()
        m = build_gmm(p)
        root = RngStream(97)
        n_target = 1_000_000
        vals = np.empty(n_target)
        got = 0
        i = 0
        while got < n_target:
            t = run_trace(m, PRIOR, root.split("p", i))
            i += 1
            if t.choices[(("u", 0, 0),)].value < p.pi1:
                vals[got] = t.result
                got += 1
        stat = kstest(vals, "norm", args=(p.mu1, p.sigma1)).statistic
        report("gmm: accepted branch-1 marginal KS vs N(-1,1) < 0.002",
               stat < 0.002, f"KS statistic {stat:.5f} at 1e6 samples")

    def test_envelope_matches_grid_search(self):
        p = GmmParams()
        xs = np.arange(-50.0, 50.0, 1e-4)
        log_ratio = (
            (-0.5 * ((xs - p.mu1) / p.sigma1) ** 2 - math.log(p.sigma1))
            - (-0.5 * ((xs - p.mu0_base) / p.sigma0_base) ** 2
               - math.log(p.sigma0_base))
        )
        grid = float(np.exp(log_ratio).max())
        closed = gmm_envelope_constant(p)
        report("gmm: envelope constant matches grid search to 1e-6",
               abs(closed - grid) < 1e-6, f"{closed:.8f} vs {grid:.8f}")


class TestVarianceStabilization:
    """With the correction, empirical weight variance stabilizes in the
    particle budget; the naive estimator's keeps growing when S >= 1."""

    @staticmethod
    def _weight_var(est, proposal_map, n, seed):
        m = build_gum(GumParams(), proposal_map=proposal_map)
        root = RngStream(seed)
        ws = np.empty(n)
        for i in range(n):
            t = run_trace(m, PROPOSAL, root.split("p", i), est)
            _, ws[i] = finalize_weight(t.ledger)
        return float(ws.var())

    def test_ars_variance_stabilizes(self):
        prop = {"mu_hi": Normal(-2.0, 2.0)}
        v_small = self._weight_var(ars(10, 10), prop, 10_000, 301)
        v_large = self._weight_var(ars(10, 10), prop, 100_000, 302)
        ratio = v_large / v_small
        report("ars weight variance stable from 1e4 to 1e5 particles",
               0.5 < ratio < 2.0, f"ratio {ratio:.3f}")

    def test_naive_variance_grows_in_heavy_tail_regime(self):
        # proposal N(-2, 0.75) puts S >= 1: running variance keeps jumping
        prop = {"mu_hi": Normal(-2.0, 0.75)}
        v_small = self._weight_var(NAIVE_IC, prop, 10_000, 303)
        v_large = self._weight_var(NAIVE_IC, prop, 100_000, 303)
        ratio = v_large / v_small
        report("naive weight variance grows when S >= 1 (frozen seed)",
               ratio > 2.0, f"ratio {ratio:.1f}")
