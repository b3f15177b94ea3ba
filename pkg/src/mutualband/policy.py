"""Optimal band policy and value function on top of the auxiliary solve.

The shift-and-truncate step: with the auxiliary objects (H*, v, A_bar, K+bar)
in hand, define

    J(S) = integral of (-c_plus - H*(y)) over [S, A_bar],  S in [0, A_bar],

which decreases from J(0) = K+bar to J(A_bar) = 0.  When k_plus < K+bar the
shift S* solves J(S*) = k_plus and the optimal policy is a full band

    a = 0 < A < B < b,   A = A_bar - S*, B = B_bar - S*, b = b_bar - S*:

call the reserve up to A whenever it hits 0, refund down to B whenever it
reaches b, and retain u(x) = min((x + S*) / x0~, 1) in between.  The value
function is the shifted auxiliary value V(x) = v(x + S*); the shift is
exactly what makes the call tight: V(0) = k_plus + c_plus A + V(A).

When k_plus >= K+bar fixed call costs swallow the benefit of any call and
the dividend-only policy is optimal: never inject, refund from b_bar to
B_bar, absorb (ruin) at 0, V = v.  At equality both descriptions coincide
(S* = 0 makes the band policy with A = A_bar equally optimal); this module
reports DividendOnly there.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import auxiliary as aux
from .errors import ConvergenceFailure, DomainError
from .model import (
    DerivedConstants,
    ModelParams,
    constants_to_dict,
    validate_params,
)
from .roots import bisect_root


class Regime(enum.Enum):
    BAND_FULL = "BandFull"
    DIVIDEND_ONLY = "DividendOnly"


@dataclass(frozen=True)
class BandPolicy:
    """Band policy parameters.

    regime BAND_FULL: call from the lower trigger a = 0 up to A, refund from
    b down to B.  regime DIVIDEND_ONLY: A = S_star = 0, the reserve is
    absorbed at 0, refunds are unchanged.  x0 = x0~ - S_star marks where the
    retained fraction saturates at 1 (it can be negative when S_star > x0~,
    meaning full retention everywhere).
    """

    regime: Regime
    a: float
    A: float
    B: float
    b: float
    S_star: float
    x0: float

    def to_dict(self) -> dict:
        return {
            "regime": self.regime.value,
            "a": self.a,
            "A": self.A,
            "B": self.B,
            "b": self.b,
            "S_star": self.S_star,
            "x0": self.x0,
        }

    @staticmethod
    def from_dict(d: dict) -> "BandPolicy":
        return BandPolicy(
            regime=Regime(d["regime"]),
            a=float(d["a"]),
            A=float(d["A"]),
            B=float(d["B"]),
            b=float(d["b"]),
            S_star=float(d["S_star"]),
            x0=float(d["x0"]),
        )


@dataclass(frozen=True)
class ValueFunction:
    """Value function V(x) = v(x + S_star) with its provenance."""

    aux: aux.AuxSolution
    policy: BandPolicy
    S_star: float

    @property
    def params(self) -> ModelParams:
        return self.aux.params

    @property
    def constants(self) -> DerivedConstants:
        return self.aux.constants

    @property
    def x_inflection(self) -> float:
        """Where V'' changes sign: x* = x_bar - S_star."""
        return self.aux.x_bar - self.S_star

    @property
    def jump_target(self) -> float:
        """Argmin of the call inf-convolution: where V' = -c_plus."""
        return self.aux.A_bar - self.S_star


def curvilinear_J(S: float, s: aux.AuxSolution) -> float:
    """J(S) = -c_plus (A_bar - S) - (v(A_bar) - v(S)) on [0, A_bar]."""
    if not (0.0 <= S <= s.A_bar):
        raise DomainError(f"S = {S} outside [0, {s.A_bar}]")
    return -s.params.c_plus * (s.A_bar - S) - (aux.v_eval(s.A_bar, s) - aux.v_eval(S, s))


def solve_S_star(p: ModelParams, s: aux.AuxSolution) -> float | None:
    """Shift S* with J(S*) = k_plus, or None when k_plus >= K+bar.

    J is continuous and strictly decreasing (its integrand -c_plus - H* is
    positive on (0, A_bar)), so a sign-changing bracket is [0, A_bar].
    """
    if p.k_plus >= s.K_plus_bar:
        return None

    def f(S: float) -> float:
        return curvilinear_J(S, s) - p.k_plus

    ftol = 1e-10 * max(1.0, p.k_plus)
    S_star = bisect_root(f, 0.0, s.A_bar, ftol=ftol)
    if abs(f(S_star)) > 1e-9 * max(1.0, p.k_plus):
        raise ConvergenceFailure(f"J(S*) missed k_plus by {f(S_star):.3e}")
    return S_star


def build_policy(p: ModelParams, s: aux.AuxSolution) -> tuple[BandPolicy, ValueFunction]:
    """Assemble the optimal policy and value function from a solved auxiliary."""
    S_star = solve_S_star(p, s)
    if S_star is None:
        policy = BandPolicy(
            regime=Regime.DIVIDEND_ONLY,
            a=0.0,
            A=0.0,
            B=s.B_bar,
            b=s.b_bar,
            S_star=0.0,
            x0=s.constants.x_tilde0,
        )
        return policy, ValueFunction(aux=s, policy=policy, S_star=0.0)
    policy = BandPolicy(
        regime=Regime.BAND_FULL,
        a=0.0,
        A=s.A_bar - S_star,
        B=s.B_bar - S_star,
        b=s.b_bar - S_star,
        S_star=S_star,
        x0=s.constants.x_tilde0 - S_star,
    )
    return policy, ValueFunction(aux=s, policy=policy, S_star=S_star)


def solve(p: ModelParams | dict) -> tuple[BandPolicy, ValueFunction]:
    """One-call pipeline: validate, solve the auxiliary problem, build the policy."""
    params = validate_params(p)
    s = aux.solve_auxiliary(params)
    return build_policy(params, s)


def V_eval(x, vf: ValueFunction):
    """(V, V', V'') at x >= 0; scalar or ndarray.

    V'' is reported one-sided from the left at the tail kink b (the right
    limit there is 0); V' and V are continuous everywhere, and V'' is
    continuous at x0 by smooth pasting.  At x = 0 in the dividend-only
    regime V' and V'' diverge; the floored power evaluation returns the
    correctly signed huge values rather than NaN.
    """
    s = vf.aux
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0.0):
        raise DomainError("V is defined on x >= 0")
    y = xs + vf.S_star
    V = np.asarray(aux.v_eval(y, s))
    Vp = np.asarray(aux.H_star_eval(y, s))
    inner = s.M_star * np.asarray(aux.H_prime_eval(np.minimum(y, s.b_bar), s))
    Vpp = np.where(y <= s.b_bar, inner, 0.0)
    if np.isscalar(x) or xs.ndim == 0:
        return float(V), float(Vp), float(Vpp)
    return V, Vp, Vpp


def feedback_u(x, vf: ValueFunction):
    """Optimal retained fraction u(x) = min((x + S*) / x0~, 1) on x >= 0."""
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0.0):
        raise DomainError("the feedback control is defined on x >= 0")
    out = np.minimum((xs + vf.S_star) / vf.constants.x_tilde0, 1.0)
    return float(out) if np.isscalar(x) or out.ndim == 0 else out


def export_classical_constants(vf: ValueFunction) -> tuple[float, float, float, float]:
    """(C1, C2, C3, C4) of the two-piece closed form

        V(x) = -C1 (x + C2)^gamma                        on (0, x0]
        V(x) = C3 e^(rho1 (x - x0)) + C4 e^(-rho2 (x - x0))  on [x0, b],

    namely C1 = M*, C2 = S*, C3 = -M* a1, C4 = -M* a2.  C4 = beta C3 and
    lambda C3 = C1 hold by the pasting identities.
    """
    s = vf.aux
    return s.M_star, vf.S_star, -s.M_star * s.a1, -s.M_star * s.a2


def policy_to_dict(vf: ValueFunction) -> dict:
    """JSON-ready policy record; round-trips through json at full precision."""
    d = vf.policy.to_dict()
    d["M_star"] = vf.aux.M_star
    d["K_plus_bar"] = vf.aux.K_plus_bar
    d["constants"] = constants_to_dict(vf.constants)
    C1, C2, C3, C4 = export_classical_constants(vf)
    d["classical_constants"] = {"C1": C1, "C2": C2, "C3": C3, "C4": C4}
    return d


def V_at_points(vf: ValueFunction, xs: np.ndarray) -> np.ndarray:
    """Convenience: V values only, vectorised."""
    V, _, _ = V_eval(np.asarray(xs, dtype=float), vf)
    return np.asarray(V)


def value_scale(vf: ValueFunction) -> float:
    """max |V| over the continuation range [0, b]; |V| peaks at b."""
    V0, _, _ = V_eval(0.0, vf)
    Vb, _, _ = V_eval(vf.policy.b, vf)
    return max(abs(V0), abs(Vb))
