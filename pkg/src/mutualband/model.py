"""Model primitives: parameters, derived constants, and the intervention cost.

The reserve of a mutual insurance pool follows a controlled diffusion

    dX(t) = u(t) mu dt + u(t) sigma dW(t)        between interventions,

where u(t) in [0, 1] is the retained fraction of the business (1 - u is
ceded proportionally) and impulses xi_i move the reserve at intervention
times: calls for funds (xi > 0) cost K+ + c+ xi with c+ > 1 (each unit
called costs more than a unit), refunds (xi < 0) cost K- - c- |xi| with
0 < c- < 1 (each unit returned is a benefit of c- per unit, net of the
fixed administration charge K-).  The pool is ruined when the reserve
becomes negative, and the objective is to minimise the expected discounted
intervention cost at rate r up to ruin.

Closed-form constants derived from (mu, sigma, r) drive the whole
construction:

    gamma  = 2 r sigma^2 / (2 r sigma^2 + mu^2)          in (0, 1)
    rho1,2 = (sqrt(mu^2 + 2 r sigma^2) -+ mu) / sigma^2  0 < rho1 < rho2
    x0~    = sigma^2 (1 - gamma) / mu                    power/exponential seam
    beta   = (rho1 mu / 2r - 1) / (rho2 mu / 2r + 1)     in (-1, 0)
    lambda = -(1 + beta) x0~^(-gamma)                    < 0

rho1 and rho2 are the roots of the full-retention quadratic
sigma^2 z^2 / 2 + mu z - r = 0 (up to sign), so rho1 rho2 = 2r / sigma^2
and rho2 - rho1 = 2 mu / sigma^2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

from .errors import ParamOutOfRange, ZeroJump

PARAM_KEYS = ("mu", "sigma", "r", "c_plus", "c_minus", "k_plus", "k_minus")


@dataclass(frozen=True)
class ModelParams:
    """Validated model parameters.

    mu, sigma : drift and volatility of the fully retained surplus
    r         : discount rate
    c_plus    : proportional cost per unit called in (> 1)
    c_minus   : proportional benefit per unit refunded (in (0, 1))
    k_plus    : fixed cost per call (> 0)
    k_minus   : fixed cost per refund (> 0)
    """

    mu: float
    sigma: float
    r: float
    c_plus: float
    c_minus: float
    k_plus: float
    k_minus: float


@dataclass(frozen=True)
class DerivedConstants:
    """Constants of the (mu, sigma, r) triple used throughout the solution."""

    gamma: float
    rho1: float
    rho2: float
    beta: float
    lambda_const: float
    x_tilde0: float


def validate_params(raw: Mapping[str, float] | ModelParams) -> ModelParams:
    """Check ranges and finiteness; return an immutable ModelParams.

    Raises ParamOutOfRange naming the violated constraint.
    """
    if isinstance(raw, ModelParams):
        data = {k: getattr(raw, k) for k in PARAM_KEYS}
    else:
        unknown = set(raw) - set(PARAM_KEYS)
        if unknown:
            raise ParamOutOfRange(f"unknown parameter keys: {sorted(unknown)}")
        missing = set(PARAM_KEYS) - set(raw)
        if missing:
            raise ParamOutOfRange(f"missing parameter keys: {sorted(missing)}")
        data = {k: float(raw[k]) for k in PARAM_KEYS}

    for key, value in data.items():
        if not math.isfinite(value):
            raise ParamOutOfRange(f"{key} = {value} is not finite")
    if data["mu"] <= 0.0:
        raise ParamOutOfRange(f"mu = {data['mu']} violates mu > 0")
    if data["sigma"] <= 0.0:
        raise ParamOutOfRange(f"sigma = {data['sigma']} violates sigma > 0")
    if data["r"] <= 0.0:
        raise ParamOutOfRange(f"r = {data['r']} violates r > 0")
    if data["c_plus"] <= 1.0:
        raise ParamOutOfRange(f"c_plus = {data['c_plus']} violates c_plus > 1")
    if not (0.0 < data["c_minus"] < 1.0):
        raise ParamOutOfRange(f"c_minus = {data['c_minus']} violates 0 < c_minus < 1")
    if data["k_plus"] <= 0.0:
        raise ParamOutOfRange(f"k_plus = {data['k_plus']} violates k_plus > 0")
    if data["k_minus"] <= 0.0:
        raise ParamOutOfRange(f"k_minus = {data['k_minus']} violates k_minus > 0")
    return ModelParams(**data)


def load_params(path: str) -> ModelParams:
    """Read a JSON parameter file with keys mu, sigma, r, c_plus, c_minus, k_plus, k_minus."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ParamOutOfRange(f"parameter file {path!r} must contain a JSON object")
    return validate_params(raw)


def params_to_dict(p: ModelParams) -> dict[str, float]:
    return {k: getattr(p, k) for k in PARAM_KEYS}


def derive_constants(p: ModelParams) -> DerivedConstants:
    """Compute the closed-form constants of the (mu, sigma, r) triple."""
    s2 = p.sigma * p.sigma
    two_r_s2 = 2.0 * p.r * s2
    gamma = two_r_s2 / (two_r_s2 + p.mu * p.mu)
    disc = math.sqrt(p.mu * p.mu + two_r_s2)
    rho2 = (disc + p.mu) / s2
    # sqrt(mu^2 + 2 r sigma^2) - mu cancels badly when 2 r sigma^2 << mu^2;
    # the root product rho1 rho2 = 2r / sigma^2 gives rho1 without subtraction.
    rho1 = 2.0 * p.r / (s2 * rho2)
    beta = (rho1 * p.mu / (2.0 * p.r) - 1.0) / (rho2 * p.mu / (2.0 * p.r) + 1.0)
    x_tilde0 = s2 * (1.0 - gamma) / p.mu
    lambda_const = -(1.0 + beta) * x_tilde0 ** (-gamma)
    return DerivedConstants(
        gamma=gamma,
        rho1=rho1,
        rho2=rho2,
        beta=beta,
        lambda_const=lambda_const,
        x_tilde0=x_tilde0,
    )


def constants_to_dict(c: DerivedConstants) -> dict[str, float]:
    return {
        "gamma": c.gamma,
        "rho1": c.rho1,
        "rho2": c.rho2,
        "beta": c.beta,
        "lambda_const": c.lambda_const,
        "x_tilde0": c.x_tilde0,
    }


def cost_g(xi: float, p: ModelParams) -> float:
    """Cost of a single impulse xi != 0.

    g(xi) = k_plus + c_plus * xi   for calls (xi > 0),
    g(xi) = k_minus - c_minus * |xi|  for refunds (xi < 0); refunds large
    enough make g negative, which is what drives the dividend harvest.
    """
    if xi == 0.0:
        raise ZeroJump("g(0) is undefined: interventions must move the reserve")
    if xi > 0.0:
        return p.k_plus + p.c_plus * xi
    return p.k_minus + p.c_minus * xi
