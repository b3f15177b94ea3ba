"""Optimal band policies for proportionally reinsured reserves.

A mutual insurer's reserve follows a controlled diffusion: the retained
fraction u in [0, 1] scales both drift and volatility, and discrete capital
calls (cost k_plus + c_plus * xi) and refunds (cost k_minus + c_minus * |xi|)
move the reserve instantaneously.  The goal is to minimise expected
discounted intervention cost.

The optimal policy is a band (a = 0, A; B, b): call up to A when the reserve
hits 0, refund down to B when it reaches b, retain u(x) = min((x + S*) / x0~, 1)
in between.  When fixed call costs exceed a threshold K+bar the call side
shuts off and ruin is absorbed instead (dividend-only regime).

`solve` produces the policy and value function; `qvi` certifies them against
the variational inequalities; `fd_oracle` recomputes the solution by an
independent finite-difference scheme; `simulate` estimates realised costs by
Monte Carlo.
"""

from .errors import (
    ConvergenceFailure,
    DomainError,
    InadmissiblePolicy,
    InvalidConfig,
    MutualBandError,
    NonConvergence,
    OutOfRange,
    ParamOutOfRange,
    SingularSystem,
    ZeroJump,
)
from .model import (
    DerivedConstants,
    ModelParams,
    cost_g,
    derive_constants,
    load_params,
    validate_params,
)
from .auxiliary import AuxSolution, solve_auxiliary
from .policy import (
    BandPolicy,
    Regime,
    ValueFunction,
    V_eval,
    export_classical_constants,
    feedback_u,
    policy_to_dict,
    solve,
)
from .qvi import QviReport, qvi_report
from .fd_oracle import FdComparison, GridSolution, compare_to_analytic, solve_qvi_fd
from .simulate import SimConfig, SimResult, compare_policies, estimate_cost, simulate_path

__version__ = "0.1.0"

__all__ = [
    "AuxSolution",
    "BandPolicy",
    "ConvergenceFailure",
    "DerivedConstants",
    "DomainError",
    "FdComparison",
    "GridSolution",
    "InadmissiblePolicy",
    "InvalidConfig",
    "ModelParams",
    "MutualBandError",
    "NonConvergence",
    "OutOfRange",
    "ParamOutOfRange",
    "QviReport",
    "Regime",
    "SimConfig",
    "SimResult",
    "SingularSystem",
    "V_eval",
    "ValueFunction",
    "ZeroJump",
    "__version__",
    "compare_policies",
    "compare_to_analytic",
    "cost_g",
    "derive_constants",
    "estimate_cost",
    "export_classical_constants",
    "feedback_u",
    "load_params",
    "policy_to_dict",
    "qvi_report",
    "simulate_path",
    "solve",
    "solve_auxiliary",
    "solve_qvi_fd",
    "validate_params",
]
