"""Sweep the fixed call cost through the regime threshold.

Below K+bar the optimal policy calls capital at 0 (BandFull); at and above it
the origin absorbs (DividendOnly).  The sweep shows the single transition and
how the BandFull value at 0 fades to the absorbing value as k_plus approaches
the threshold from below.

Run:  python demos/regime_threshold.py
"""

from __future__ import annotations

import numpy as np

from mutualband import V_eval, solve, solve_auxiliary, validate_params

BASE = {
    "mu": 1.0,
    "sigma": 1.0,
    "r": 0.5,
    "c_plus": 1.1,
    "c_minus": 0.9,
    "k_plus": 1.0,
    "k_minus": 0.1,
}


def main() -> None:
    aux = solve_auxiliary(validate_params(BASE))
    k_bar = aux.K_plus_bar
    print(f"threshold K+bar = {k_bar:.12f}")
    print()
    print(f"{'k_plus':>10}  {'k/K+bar':>8}  {'regime':<12}  {'V(0)':>12}  {'A':>10}")
    previous = None
    for frac in np.linspace(0.5, 2.0, 16):
        k = float(frac) * k_bar
        pol, vf = solve(validate_params({**BASE, "k_plus": k}))
        regime = pol.regime.value
        v0, _, _ = V_eval(0.0, vf)
        mark = "  <- transition" if previous and regime != previous else ""
        print(f"{k:10.6f}  {frac:8.3f}  {regime:<12}  {v0:12.8f}  {pol.A:10.6f}{mark}")
        previous = regime


if __name__ == "__main__":
    main()
