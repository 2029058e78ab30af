"""Walkthrough: verifying a published coefficient against confidential data.

An original study published an effect estimate for x2; a custodian holding a
fresh confidential dataset checks whether that effect replicates, releasing
only a Laplace-noised count of in-region subset estimates plus its posterior.
"""

import numpy as np

from dprep import (
    ADConfig,
    BudgetLedger,
    build_fixed_region,
    build_inflated_region,
    delta_star,
    ad_verify,
    parse_formula,
)
from dprep.tabular import Dataset


def simulate_confidential_data(n, seed, x2_effect=0.9):
    rng = np.random.default_rng(seed)
    x1 = rng.uniform(0, 10, n)
    x2 = rng.normal(5, 1, n)
    x3 = (rng.uniform(size=n) < 0.5).astype(float)
    y = 2 * x1 + x2_effect * x2 + 3 * x3 + rng.normal(0, 3, n)
    return Dataset({"x1": x1, "x2": x2, "x3": x3, "y": y})


def main():
    # the published study: estimate 0.971 with standard error 0.031 from
    # 10,000 records; the custodian's new data has a true effect of 0.9
    gamma_o, sigma_o, n0 = 0.971, 0.031, 10_000
    data = simulate_confidential_data(50_000, seed=7)
    model = parse_formula("y ~ x1 + x2 + x3")
    ledger = BudgetLedger(cap=2.0)

    print("=== sign test: is the x2 effect still positive? ===")
    region = build_fixed_region(0.0, float("inf"))
    config = ADConfig(M=50, epsilon=1.0, seed=2021)
    report, _ = ad_verify(data, model, "x2", region, config, ledger)
    post = report["posterior"]
    print(f"noisy count:            {report['released']['s_noisy']:.3f} of M=50")
    print(f"theta_hat (r >= 0.5):   {post['theta_hat']:.3f}")
    print(f"posterior r quantiles:  { {k: round(v, 3) for k, v in post['r_quantiles'].items()} }")
    print("verdict: theta_hat near 1 -> the positive effect replicates\n")

    print("=== band test with an uncertainty-matched (inflated) region ===")
    n_subset = data.n_rows // 50
    inflated = build_inflated_region(gamma_o, sigma_o, alpha=1.96, n0=n0, n=n_subset)
    dstar = delta_star(gamma_o, sigma_o, alpha=1.96, n0=n0, n=n_subset)
    print(f"published band 0.971 +/- 1.96*0.031 widened to subset scale: "
          f"[{inflated.lower:.3f}, {inflated.upper:.3f}]")
    print(f"edge-coverage reference delta* = {dstar:.3f}; "
          f"default degree of certainty = 0.9 * delta* = {0.9 * dstar:.3f}")
    report2, _ = ad_verify(data, model, "x2", inflated,
                           ADConfig(M=50, epsilon=1.0, seed=2022), ledger)
    print(f"noisy count:          {report2['released']['s_noisy']:.3f}")
    print(f"theta_hat:            {report2['posterior']['theta_hat']:.3f} "
          f"at delta = {report2['config']['delta']:.3f}")
    print(f"\nbudget spent so far: epsilon = {ledger.spent}")


if __name__ == "__main__":
    main()
