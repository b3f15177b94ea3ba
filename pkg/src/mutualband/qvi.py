"""Quasi-variational-inequality certificate for a solved policy.

The value function solves, for x > 0,

    (i)   min over u in [0,1] of  L^u V(x) - r V(x)  >=  0,
    (ii)  M V(x) - V(x)  >=  0,
    (iii) at every x at least one of the two is tight,

with L^u = (u^2 sigma^2 / 2) d2/dx2 + u mu d/dx and M the inf-convolution

    M V(x) = inf over xi != 0, x + xi >= 0 of  g(xi) + V(x + xi).

This module evaluates both inequalities on a grid and reports the worst
normalised violations, together with the value-matching and smooth-fit
identities at the band edges.  Everything here treats the solver output as
an untrusted candidate: only V, V', V'' evaluations are used, never the
internal construction.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import params_to_dict
from .policy import Regime, ValueFunction, V_eval, policy_to_dict, value_scale

# Points this close to a kink of V'' (the saturation point x0 and the
# refund trigger b) are nudged off it before evaluation.
KINK_RADIUS = 1e-9


def pde_residual(x, vf: ValueFunction, u: float):
    """L^u V - r V at x for one fixed retained fraction u; scalar or ndarray."""
    p = vf.params
    V, Vp, Vpp = V_eval(x, vf)
    return 0.5 * u * u * p.sigma ** 2 * Vpp + u * p.mu * Vp - p.r * V


def _min_residual_arrays(xs: np.ndarray, vf: ValueFunction):
    """Vectorised (min over u of L^u V - r V, argmin u) on an array of x."""
    p = vf.params
    V, Vp, Vpp = V_eval(xs, vf)
    V, Vp, Vpp = np.asarray(V), np.asarray(Vp), np.asarray(Vpp)

    q0 = -p.r * V
    q1 = 0.5 * p.sigma ** 2 * Vpp + p.mu * Vp - p.r * V
    # Interior stationary point of the quadratic in u; only a minimiser
    # when V'' > 0, and only admissible inside (0, 1).
    safe = np.where(Vpp > 0.0, Vpp, 1.0)
    u_int = -p.mu * Vp / (p.sigma ** 2 * safe)
    valid = (Vpp > 0.0) & (u_int > 0.0) & (u_int < 1.0)
    u_int = np.where(valid, u_int, 0.0)
    q_int = 0.5 * u_int ** 2 * p.sigma ** 2 * Vpp + u_int * p.mu * Vp - p.r * V
    q_int = np.where(valid, q_int, np.inf)

    cand_q = np.stack([q_int, q0, q1])
    cand_u = np.stack([u_int, np.zeros_like(q0), np.ones_like(q1)])
    k = np.argmin(cand_q, axis=0)
    q_min = np.take_along_axis(cand_q, k[None], 0)[0]
    u_min = np.take_along_axis(cand_u, k[None], 0)[0]
    return q_min, u_min, V


def min_residual(x, vf: ValueFunction) -> tuple[float, float]:
    """(min over u in [0,1] of L^u V - r V, minimising u) at a scalar x >= 0."""
    q, u, _ = _min_residual_arrays(np.asarray([float(x)]), vf)
    return float(q[0]), float(u[0])


def M_operator(x, vf: ValueFunction):
    """Inf-convolution (M V, call side, refund side) at x; scalar or ndarray.

    The call side jumps to T = A_bar - S_star while x < T (where
    V' = -c_plus) and degenerates to its xi -> 0+ limit k_plus + V(x) past
    it; the refund side jumps down to B while x > B and degenerates to
    k_minus + V(x) below it.  No refund is feasible at x = 0, so the refund
    side is +inf there.
    """
    p = vf.params
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0.0):
        raise DomainError("M V is defined on x >= 0")
    T = vf.jump_target
    B = vf.policy.B
    V = np.asarray(V_eval(xs, vf)[0])
    VT = V_eval(T, vf)[0]
    VB = V_eval(B, vf)[0]
    m_call = np.where(xs < T, p.k_plus + p.c_plus * (T - xs) + VT, p.k_plus + V)
    m_refund = np.where(
        xs > B, p.k_minus - p.c_minus * (xs - B) + VB, p.k_minus + V
    )
    m_refund = np.where(xs > 0.0, m_refund, np.inf)
    mv = np.minimum(m_call, m_refund)
    if np.isscalar(x) or xs.ndim == 0:
        return float(mv), float(m_call), float(m_refund)
    return mv, m_call, m_refund


def M_operator_grid(x, vf: ValueFunction, n_xi: int = 4001, target_hi: float | None = None) -> float:
    """Brute-force M V(x) minimised over a grid of jump targets.

    Independent of the structural shortcut in `M_operator`; the grid
    minimum can only overshoot the true infimum, so it bounds it from
    above and equals it to one grid step of resolution.
    """
    p = vf.params
    x = float(x)
    hi = 3.0 * vf.policy.b if target_hi is None else target_hi
    targets = np.linspace(0.0, hi, n_xi)
    xi = targets - x
    keep = xi != 0.0
    cost = np.where(xi > 0.0, p.k_plus + p.c_plus * xi, p.k_minus + p.c_minus * xi)
    V = np.asarray(V_eval(targets, vf)[0])
    return float(np.min((cost + V)[keep]))


def boundary_identities(vf: ValueFunction) -> dict[str, float]:
    """Residuals of the value-matching and smooth-fit identities.

    Value matches are normalised by the value scale; slope identities are
    raw (their natural scale is c_plus, c_minus ~ 1).
    """
    p = vf.params
    pol = vf.policy
    vs = max(1.0, value_scale(vf))
    V0 = V_eval(0.0, vf)[0]
    Vb, Vpb, _ = V_eval(pol.b, vf)
    VB, VpB, _ = V_eval(pol.B, vf)
    out = {
        "refund_value_match": (Vb - VB - (p.k_minus - p.c_minus * (pol.b - pol.B))) / vs,
        "refund_smooth_fit_B": VpB + p.c_minus,
        "refund_smooth_fit_b": Vpb + p.c_minus,
    }
    if pol.regime is Regime.BAND_FULL:
        VA, VpA, _ = V_eval(pol.A, vf)
        out["call_value_match"] = (V0 - (p.k_plus + p.c_plus * pol.A + VA)) / vs
        out["call_smooth_fit"] = VpA + p.c_plus
    else:
        out["absorption_value"] = V0 / vs
        VpT = V_eval(vf.jump_target, vf)[1]
        out["call_threshold_slope"] = VpT + p.c_plus
    return out


@dataclass(frozen=True)
class QviReport:
    """Grid certificate for one solved policy.

    Normalisations: the PDE residual at x is divided by max(1, |r V(x)|)
    and the jump slack M V - V by max(1, |V(x)|); `tightness` is the
    product of their clipped nonnegative parts, which complementarity
    drives to zero everywhere.
    """

    regime: str
    n_grid: int
    tol: float
    x: np.ndarray
    V: np.ndarray
    residual: np.ndarray
    u_min: np.ndarray
    slack: np.ndarray
    tightness: np.ndarray
    pde_min: float
    pde_max_continuation: float
    slack_min: float
    tightness_max: float
    boundary: dict[str, float]
    boundary_max: float
    passed: bool


def qvi_report(vf: ValueFunction, n_grid: int = 2000, tol: float = 1e-6) -> QviReport:
    """Evaluate the QVI on n_grid points over (0, 2b] and grade against tol."""
    pol = vf.policy
    xs = np.linspace(0.0, 2.0 * pol.b, n_grid + 1)[1:]
    for kink in (pol.x0, pol.b):
        xs = np.where(np.abs(xs - kink) < KINK_RADIUS, kink + 2.0 * KINK_RADIUS, xs)

    q, u_min, V = _min_residual_arrays(xs, vf)
    residual = q / np.maximum(1.0, np.abs(vf.params.r * V))
    mv, _, _ = M_operator(xs, vf)
    slack = (np.asarray(mv) - V) / np.maximum(1.0, np.abs(V))
    tightness = np.clip(residual, 0.0, None) * np.clip(slack, 0.0, None)

    cont = xs < pol.b
    boundary = boundary_identities(vf)
    boundary_max = max(abs(val) for val in boundary.values())
    pde_min = float(np.min(residual))
    pde_max_continuation = float(np.max(np.abs(residual[cont])))
    slack_min = float(np.min(slack))
    tightness_max = float(np.max(tightness))
    passed = (
        pde_min >= -tol
        and pde_max_continuation <= tol
        and slack_min >= -tol
        and tightness_max <= tol
        and boundary_max <= tol
    )
    return QviReport(
        regime=pol.regime.value,
        n_grid=n_grid,
        tol=tol,
        x=xs,
        V=V,
        residual=residual,
        u_min=u_min,
        slack=slack,
        tightness=tightness,
        pde_min=pde_min,
        pde_max_continuation=pde_max_continuation,
        slack_min=slack_min,
        tightness_max=tightness_max,
        boundary=boundary,
        boundary_max=boundary_max,
        passed=passed,
    )


def report_to_dict(rep: QviReport, vf: ValueFunction | None = None) -> dict:
    """JSON-ready summary (no per-point arrays)."""
    out = {
        "regime": rep.regime,
        "n_grid": rep.n_grid,
        "tol": rep.tol,
        "pde_min": rep.pde_min,
        "pde_max_continuation": rep.pde_max_continuation,
        "slack_min": rep.slack_min,
        "tightness_max": rep.tightness_max,
        "boundary": dict(rep.boundary),
        "boundary_max": rep.boundary_max,
        "passed": rep.passed,
    }
    if vf is not None:
        out["params"] = params_to_dict(vf.params)
        out["policy"] = policy_to_dict(vf)
    return out


def write_report_json(rep: QviReport, path: str, vf: ValueFunction | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(report_to_dict(rep, vf), fh, indent=2)
        fh.write("\n")


def write_report_csv(rep: QviReport, path: str) -> None:
    """Per-point rows: x, V, normalised residual and slack, minimising u."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "V", "pde_residual", "jump_slack", "u_min", "tightness"])
        for i in range(rep.x.size):
            w.writerow([
                repr(float(rep.x[i])),
                repr(float(rep.V[i])),
                repr(float(rep.residual[i])),
                repr(float(rep.slack[i])),
                repr(float(rep.u_min[i])),
                repr(float(rep.tightness[i])),
            ])
