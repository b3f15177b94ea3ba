"""Dividend-only auxiliary problem: the marginal-value curve H and its bands.

The construction runs entirely off one scalar curve.  H is the derivative of
the auxiliary (refund-only) value shape,

    H(x) = -gamma x^(gamma-1)                                     0 < x <= x0~
    H(x) = -a1 rho1 e^(rho1 (x-x0~)) + a2 rho2 e^(-rho2 (x-x0~))  x >= x0~

with (a1, a2) the unique solution of the 2x2 linear system matching H and H'
at the seam x0~ (smooth pasting).  H is negative everywhere, strictly
increasing up to a unique interior maximum x_bar > x0~ and strictly
decreasing to -infinity afterwards.

For a multiplier M in (0, M_max], M_max = -c_minus / H(x_bar), the level
M H(x) = -c_minus is crossed exactly twice, at B~_M < x_bar < b~_M, and

    I(M) = integral of (M H + c_minus) over [B~_M, b~_M]

is continuous and strictly decreasing from +infinity (M -> 0) to 0
(M = M_max).  The refund band multiplier M* solves I(M*) = k_minus; the
refund band of the auxiliary problem is (B_bar, b_bar) = (B~_M*, b~_M*).

The auxiliary value derivative and value are then

    H*(x) = M* H(x)  for x <= b_bar,   -c_minus  for x >= b_bar,
    v(x)  = integral of H* from 0 to x   (closed form via the antiderivative
            of H: -x^gamma on [0, x0~], -a1 e^(rho1 d) - a2 e^(-rho2 d) after).

Finally A_bar in (0, B_bar) solves H*(A_bar) = -c_plus, and

    K+bar = integral of (-c_plus - H*) over [0, A_bar] = -c_plus A_bar - v(A_bar)

is the fixed-call-cost threshold separating the two policy regimes.  The
integrand behaves like x^(gamma-1) at 0, so K+bar is finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConvergenceFailure, OutOfRange, SingularSystem
from .model import DerivedConstants, ModelParams, derive_constants, validate_params
from .roots import X_FLOOR, bisect_root, grow_bracket_right, shrink_bracket_left

# Relative slack when deciding whether M sits at the top of its range, where
# the two level crossings collide at x_bar.
_M_TOP_RTOL = 1e-14


@dataclass(frozen=True)
class AuxSolution:
    """Solved auxiliary problem; immutable after solve_auxiliary.

    The fields after H_x_bar are None only on the intermediate objects built
    while solving; solve_auxiliary always returns them filled.
    """

    params: ModelParams
    constants: DerivedConstants
    a1: float
    a2: float
    x_bar: float
    H_x_bar: float
    M_star: float | None = None
    B_bar: float | None = None
    b_bar: float | None = None
    A_bar: float | None = None
    K_plus_bar: float | None = None


def smooth_paste_coeffs(c: DerivedConstants) -> tuple[float, float]:
    """Coefficients (a1, a2) matching H and H' across the seam x0~.

    Solves
        -a1 rho1   + a2 rho2   = -gamma x0~^(gamma-1)
        -a1 rho1^2 - a2 rho2^2 = -gamma (gamma-1) x0~^(gamma-2)
    and returns the unique solution, with a1 > 0 > a2.
    """
    g, r1, r2, xt0 = c.gamma, c.rho1, c.rho2, c.x_tilde0
    lhs = np.array([[-r1, r2], [-r1 * r1, -r2 * r2]])
    rhs = np.array([-g * xt0 ** (g - 1.0), -g * (g - 1.0) * xt0 ** (g - 2.0)])
    det = lhs[0, 0] * lhs[1, 1] - lhs[0, 1] * lhs[1, 0]
    if not math.isfinite(det) or det == 0.0:
        raise SingularSystem(f"pasting system is singular: det = {det}")
    a1, a2 = np.linalg.solve(lhs, rhs)
    return float(a1), float(a2)


def _pow_left(x: np.ndarray, expo: float) -> np.ndarray:
    """x**expo evaluated as exp(expo * log x) with the 1e-300 floor near 0.

    Positive exponents return exactly 0 at x <= 0; negative exponents keep
    the floored (huge but finite) value so singular limits stay usable.
    """
    xs = np.asarray(x, dtype=float)
    out = np.exp(np.minimum(expo * np.log(np.maximum(xs, X_FLOOR)), 700.0))
    if expo > 0.0:
        out = np.where(xs > 0.0, out, 0.0)
    return out


def _H_scalar(x: float, s: AuxSolution) -> float:
    """Scalar H(x) for the root-finding loops."""
    c = s.constants
    if x <= c.x_tilde0:
        return -c.gamma * math.exp((c.gamma - 1.0) * math.log(max(x, X_FLOOR)))
    d = x - c.x_tilde0
    e1 = math.exp(min(c.rho1 * d, 700.0))
    e2 = math.exp(-c.rho2 * d)
    return -s.a1 * c.rho1 * e1 + s.a2 * c.rho2 * e2


def H_eval(x, s: AuxSolution):
    """H(x) on x > 0; scalar or ndarray."""
    c = s.constants
    xs = np.asarray(x, dtype=float)
    d = np.clip(xs - c.x_tilde0, 0.0, None)
    right = -s.a1 * c.rho1 * np.exp(np.minimum(c.rho1 * d, 700.0)) \
        + s.a2 * c.rho2 * np.exp(-c.rho2 * d)
    left = -c.gamma * _pow_left(xs, c.gamma - 1.0)
    out = np.where(xs <= c.x_tilde0, left, right)
    return float(out) if np.isscalar(x) or out.ndim == 0 else out


def H_prime_eval(x, s: AuxSolution):
    """H'(x); continuous across x0~ by construction of (a1, a2)."""
    c = s.constants
    xs = np.asarray(x, dtype=float)
    d = np.clip(xs - c.x_tilde0, 0.0, None)
    right = -s.a1 * c.rho1 ** 2 * np.exp(np.minimum(c.rho1 * d, 700.0)) \
        - s.a2 * c.rho2 ** 2 * np.exp(-c.rho2 * d)
    left = -c.gamma * (c.gamma - 1.0) * _pow_left(xs, c.gamma - 2.0)
    out = np.where(xs <= c.x_tilde0, left, right)
    return float(out) if np.isscalar(x) or out.ndim == 0 else out


def H_antideriv_eval(x, s: AuxSolution):
    """Antiderivative of H that vanishes at 0.

    Value is -x^gamma for x in [0, x0~] and -a1 e^(rho1 d) - a2 e^(-rho2 d)
    for x >= x0~ (d = x - x0~); the two branches agree at the seam because
    a1 + a2 = x0~^gamma.
    """
    c = s.constants
    xs = np.asarray(x, dtype=float)
    d = np.clip(xs - c.x_tilde0, 0.0, None)
    right = -s.a1 * np.exp(np.minimum(c.rho1 * d, 700.0)) - s.a2 * np.exp(-c.rho2 * d)
    left = -_pow_left(xs, c.gamma)
    out = np.where(xs <= c.x_tilde0, left, right)
    return float(out) if np.isscalar(x) or out.ndim == 0 else out


def argmax_H(s: AuxSolution) -> float:
    """Unique maximiser of H, from H'(x) = 0 on the exponential branch:

        e^((rho1+rho2)(x - x0~)) = -a2 rho2^2 / (a1 rho1^2) > 1.
    """
    c = s.constants
    ratio = -s.a2 * c.rho2 ** 2 / (s.a1 * c.rho1 ** 2)
    if not ratio > 1.0:
        raise ConvergenceFailure(f"H' has no interior zero: ratio = {ratio}")
    return c.x_tilde0 + math.log(ratio) / (c.rho1 + c.rho2)


def paste_solution(p: ModelParams) -> AuxSolution:
    """Intermediate solution: constants, pasting coefficients, and x_bar."""
    p = validate_params(p)
    c = derive_constants(p)
    a1, a2 = smooth_paste_coeffs(c)
    s = AuxSolution(params=p, constants=c, a1=a1, a2=a2, x_bar=math.nan, H_x_bar=math.nan)
    x_bar = argmax_H(s)
    s = replace(s, x_bar=x_bar)
    return replace(s, H_x_bar=_H_scalar(x_bar, s))


def band_for_multiplier(M: float, s: AuxSolution) -> tuple[float, float]:
    """The two crossings (B~_M, b~_M) of M H(x) = -c_minus, B~ <= x_bar <= b~.

    Requires 0 < M <= M_max = -c_minus / H(x_bar); at the top of the range
    the crossings collide at x_bar.
    """
    c_minus = s.params.c_minus
    M_max = -c_minus / s.H_x_bar
    if not (0.0 < M <= M_max * (1.0 + _M_TOP_RTOL)):
        raise OutOfRange(f"M = {M} outside (0, {M_max}]")
    if M >= M_max * (1.0 - _M_TOP_RTOL):
        return s.x_bar, s.x_bar

    def f(x: float) -> float:
        return M * _H_scalar(x, s) + c_minus

    lo, hi = shrink_bracket_left(f, s.x_bar)
    B_t = bisect_root(f, lo, hi, ftol=1e-10)
    lo, hi = grow_bracket_right(f, s.x_bar, s.x_bar + 1.0)
    b_t = bisect_root(f, lo, hi, ftol=1e-10)
    return B_t, b_t


def area_I(M: float, s: AuxSolution) -> float:
    """I(M): the area between M H and the -c_minus level across the band.

    Closed form via the antiderivative; strictly decreasing in M, diverging
    as M -> 0 and vanishing at M_max.
    """
    B_t, b_t = band_for_multiplier(M, s)
    dA = H_antideriv_eval(b_t, s) - H_antideriv_eval(B_t, s)
    return M * dA + s.params.c_minus * (b_t - B_t)


def solve_M_star(p: ModelParams, s: AuxSolution) -> AuxSolution:
    """Solve I(M*) = k_minus by bisection and attach (M_star, B_bar, b_bar).

    The upper bracket endpoint is M_max, where I = 0 < k_minus; the lower
    endpoint walks down geometrically until I exceeds k_minus.
    """
    k_minus = p.k_minus
    M_max = -p.c_minus / s.H_x_bar

    def f(M: float) -> float:
        return area_I(M, s) - k_minus

    lo, hi = shrink_bracket_left(f, M_max)
    ftol = 1e-10 * max(1.0, k_minus)
    M_star = bisect_root(f, lo, hi, ftol=ftol)
    if abs(area_I(M_star, s) - k_minus) > 1e-9 * max(1.0, k_minus):
        raise ConvergenceFailure(f"I(M*) missed k_minus by {f(M_star):.3e}")
    B_bar, b_bar = band_for_multiplier(M_star, s)
    return replace(s, M_star=M_star, B_bar=B_bar, b_bar=b_bar)


def H_star_eval(x, s: AuxSolution):
    """H*(x) = M* H(x) capped at the refund slope: -c_minus from b_bar on."""
    xs = np.asarray(x, dtype=float)
    inner = s.M_star * np.asarray(H_eval(np.minimum(xs, s.b_bar), s))
    out = np.where(xs >= s.b_bar, -s.params.c_minus, inner)
    return float(out) if np.isscalar(x) or out.ndim == 0 else out


def v_eval(x, s: AuxSolution):
    """v(x) = integral of H* from 0 to x, for x >= 0 (scalar or ndarray).

    Piecewise closed form: M* times the antiderivative of H up to b_bar
    (the antiderivative vanishes at 0 up to the 1e-300 floor), then linear
    with slope -c_minus.
    """
    xs = np.asarray(x, dtype=float)
    inner = s.M_star * np.asarray(H_antideriv_eval(np.minimum(xs, s.b_bar), s))
    v_b = s.M_star * H_antideriv_eval(s.b_bar, s)
    out = np.where(xs >= s.b_bar, v_b - s.params.c_minus * (xs - s.b_bar), inner)
    return float(out) if np.isscalar(x) or out.ndim == 0 else out


def compute_A_bar_and_threshold(p: ModelParams, s: AuxSolution) -> tuple[float, float]:
    """A_bar solving H*(A_bar) = -c_plus, and the regime threshold K+bar.

    H* increases from -infinity to H*(x_bar) >= -c_minus > -c_plus on
    (0, x_bar], so the crossing exists and is unique; it sits left of B_bar
    because -c_plus < -c_minus.
    """

    def f(x: float) -> float:
        return s.M_star * _H_scalar(x, s) + p.c_plus

    lo, hi = shrink_bracket_left(f, s.x_bar)
    A_bar = bisect_root(f, lo, hi, ftol=1e-10)
    if abs(f(A_bar)) > 1e-9:
        raise ConvergenceFailure(f"H*(A_bar) missed -c_plus by {f(A_bar):.3e}")
    K_plus_bar = -p.c_plus * A_bar - v_eval(A_bar, s)
    if not K_plus_bar > 0.0:
        raise ConvergenceFailure(f"threshold K+bar = {K_plus_bar} is not positive")
    return A_bar, K_plus_bar


def solve_auxiliary(p: ModelParams) -> AuxSolution:
    """Full auxiliary solve: pasting, M*, refund band, A_bar, K+bar."""
    s = paste_solution(p)
    s = solve_M_star(s.params, s)
    A_bar, K_plus_bar = compute_A_bar_and_threshold(s.params, s)
    return replace(s, A_bar=A_bar, K_plus_bar=K_plus_bar)
