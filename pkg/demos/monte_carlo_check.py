"""Estimate the discounted cost of the optimal policy by simulation.

Simulates the controlled reserve under the optimal band policy and feedback
retention, compares the Monte Carlo mean against the closed-form V, and shows
that perturbing a band edge under common random numbers never beats the
optimum beyond noise.

Run:  python demos/monte_carlo_check.py   (roughly a minute)
"""

from __future__ import annotations

import dataclasses

from mutualband import SimConfig, V_eval, compare_policies, estimate_cost, solve, validate_params

PARAMS = {
    "mu": 1.0,
    "sigma": 1.0,
    "r": 0.5,
    "c_plus": 1.1,
    "c_minus": 0.9,
    "k_plus": 0.235,
    "k_minus": 0.1,
}


def main() -> None:
    p = validate_params(PARAMS)
    pol, vf = solve(p)
    x0 = 0.5 * (pol.A + pol.B)
    v_ref, _, _ = V_eval(x0, vf)

    cfg = SimConfig(
        params=p,
        policy=pol,
        x_init=x0,
        dt=1e-3,
        horizon=20.0,
        n_paths=40_000,
        seed=7,
    )
    res = estimate_cost(cfg)
    gap = abs(res.mean_cost - v_ref)
    print(f"start x = {x0:.4f}")
    print(f"closed-form V(x)   {v_ref:.6f}")
    print(f"MC mean (n={cfg.n_paths})  {res.mean_cost:.6f}  (SE {res.std_error:.6f})")
    print(f"|mean - V| = {gap:.6f} = {gap / res.std_error:.2f} SE")
    print(f"interventions per path: {res.n_calls:.3f} calls, {res.n_refunds:.3f} refunds")
    print()

    perturbed = [
        dataclasses.replace(pol, b=1.2 * pol.b),
        dataclasses.replace(pol, B=0.8 * pol.B),
        dataclasses.replace(pol, A=1.2 * pol.A),
    ]
    rows = compare_policies(cfg, perturbed)
    print(f"{'policy':<12} {'mean cost':>12} {'delta vs base':>14} {'pooled SE':>10}")
    for row in rows:
        print(f"{row['label']:<12} {row['mean_cost']:12.6f} "
              f"{row['delta_vs_base']:14.6f} {row['pooled_se']:10.6f}")
    print()
    print("deltas are >= 0 up to noise: the unperturbed bands cost least.")


if __name__ == "__main__":
    main()
