"""Cross-check the closed form against the finite-difference QVI solver.

The discrete solver knows nothing about the band structure: it runs policy
iteration on an upwind scheme over (continue with best retention, jump, or
absorb) and the band emerges from the discrete decisions.  The demo compares
values and recovered edges at two mesh widths to show the convergence order.

Run:  python demos/fd_crosscheck.py   (roughly half a minute)
"""

from __future__ import annotations

from mutualband import compare_to_analytic, solve, solve_qvi_fd, validate_params
from mutualband.fd_oracle import detect_edges

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
    x_max = 3.0 * vf.aux.b_bar
    print(f"analytic bands: A = {pol.A:.6f}, B = {pol.B:.6f}, b = {pol.b:.6f}")
    print()
    errors = []
    for h in (2e-3, 1e-3):
        grid = solve_qvi_fd(p, x_max=x_max, h=h)
        regime, A_fd, B_fd, b_fd = detect_edges(grid)
        cmp = compare_to_analytic(grid, vf)
        errors.append(cmp.sup_error)
        print(f"h = {h:g}:")
        print(f"  sweeps {grid.iterations}, sup |V_fd - V| = {cmp.sup_error:.3e}")
        print(f"  recovered {regime} edges A = {A_fd:.4f}, B = {B_fd:.4f}, b = {b_fd:.4f}")
        print(f"  edge errors: {abs(A_fd - pol.A):.1e}, {abs(B_fd - pol.B):.1e}, {abs(b_fd - pol.b):.1e}")
    print()
    print(f"error ratio under mesh halving: {errors[0] / errors[1]:.2f}")


if __name__ == "__main__":
    main()
