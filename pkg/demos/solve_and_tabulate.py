"""Solve the canonical parameter set and tabulate the policy and value function.

Run:  python demos/solve_and_tabulate.py
"""

from __future__ import annotations

import numpy as np

from mutualband import V_eval, feedback_u, solve, validate_params

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
    pol, vf = solve(validate_params(PARAMS))
    print(f"regime          {pol.regime.value}")
    print(f"call band       a = {pol.a:.6f}, A = {pol.A:.6f}")
    print(f"refund band     B = {pol.B:.6f}, b = {pol.b:.6f}")
    print(f"shift S*        {vf.S_star:.6f}")
    print(f"saturation x0   {pol.x0:.6f}  (u* = 1 beyond this point)")
    print(f"threshold K+bar {vf.aux.K_plus_bar:.6f}  (k_plus = {PARAMS['k_plus']})")
    print()
    print(f"{'x':>8}  {'V(x)':>12}  {'V_prime':>10}  {'u*(x)':>8}")
    for x in np.linspace(0.0, pol.b, 13):
        v, vp, _ = V_eval(float(x), vf)
        u = feedback_u(float(x), vf)
        print(f"{x:8.4f}  {v:12.6f}  {vp:10.6f}  {u:8.4f}")


if __name__ == "__main__":
    main()
