"""Walkthrough: three ways to weight a particle that contains a rejection loop.

The model draws a coin, then rejection-samples a branch mean from a
truncated half of its prior, and finally observes noisy data.  Under a
shifted proposal on the upper branch, the three weighting schemes differ
only in how they treat the rejected loop iterations:

  * naive  - keep a density-ratio factor for every iteration (unbiased,
             but the factor count is itself random and heavy-tailed);
  * biased - keep only the accepted iteration's factor (cheap, wrong mean);
  * corrected ("ars") - keep the accepted factor and multiply by a
             replay-based estimate of q(A|x,y)/p(A|x).

Run:  python3 demos/01_weight_estimators_gum.py
"""

import numpy as np

from rsis import (
    BIASED,
    NAIVE_IC,
    ExecutionMode,
    GumParams,
    RngStream,
    ars,
    build_gum,
    finalize_weight,
    gum_true_posterior_mean,
    run_trace,
)


def posterior_mean(estimator, n=20_000, seed=1):
    model = build_gum(GumParams())
    root = RngStream(seed).split("run", 0)
    num = den = 0.0
    for i in range(n):
        trace = run_trace(model, ExecutionMode.PROPOSAL,
                          root.split("particle", i), estimator)
        _, w = finalize_weight(trace.ledger)
        num += w * trace.result
        den += w
    return num / den


def main():
    truth = gum_true_posterior_mean(GumParams())
    print(f"analytic posterior mean: {truth}")
    print(f"{'estimator':>14} {'estimate':>10} {'|error|':>9}")
    for name, est in [("naive", NAIVE_IC),
                      ("biased", BIASED),
                      ("corrected", ars(10, 10))]:
        m = posterior_mean(est)
        print(f"{name:>14} {m:>10.4f} {abs(m - truth):>9.4f}")
    print()
    print("The biased scheme lands visibly off-center: dropping rejected")
    print("iterations silently reweights the two branches. The correction")
    print("restores the naive scheme's mean at a fraction of its variance.")


if __name__ == "__main__":
    main()
