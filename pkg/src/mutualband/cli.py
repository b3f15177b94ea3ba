"""Command-line front end.

Subcommands: solve (band policy JSON), table (value-function CSV), verify
(QVI residual check), simulate (Monte Carlo estimate), fd (grid
crosscheck), sweep (regime transition scan over the fixed call cost).
Every subcommand reads model parameters from a positional JSON file and
can record a run manifest for reproduction.

Exit codes: 0 success (and verification passed), 1 verification failed,
2 usage or parameter error, 3 numerical failure.  Structures go to JSON,
curves to CSV; floats are serialized in round-trip form.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np

from . import __version__
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
from .model import load_params
from .policy import V_eval, feedback_u, policy_to_dict, solve
from .qvi import qvi_report, report_to_dict
from .fd_oracle import compare_to_analytic, solve_qvi_fd, write_grid_csv
from .simulate import SimConfig, estimate_cost, result_to_dict, write_result_json

_USAGE_ERRORS = (
    ParamOutOfRange,
    InvalidConfig,
    InadmissiblePolicy,
    DomainError,
    OutOfRange,
    ZeroJump,
    FileNotFoundError,
    json.JSONDecodeError,
)
_NUMERIC_ERRORS = (ConvergenceFailure, NonConvergence, SingularSystem)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("params", help="path to a model-parameter JSON file")
    common.add_argument("--manifest", help="write a run manifest JSON to this path")

    ap = argparse.ArgumentParser(
        prog="mutualband",
        description="Optimal band policies for proportionally controlled reserves.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("solve", parents=[common], help="solve and write the band policy")
    p.add_argument("--out", default="policy.json", help="output path (default policy.json)")

    p = sub.add_parser("table", parents=[common], help="tabulate V, V', V'', u over x")
    p.add_argument("--from", dest="x_from", type=float, required=True)
    p.add_argument("--to", dest="x_to", type=float, required=True)
    p.add_argument("--step", dest="x_step", type=float, required=True)
    p.add_argument("--out", default="table.csv", help="output path (default table.csv)")

    p = sub.add_parser("verify", parents=[common], help="check the QVI on a grid")
    p.add_argument("--grid", type=int, default=2000, help="grid points (default 2000)")
    p.add_argument("--tol", type=float, default=1e-6, help="residual tolerance")
    p.add_argument("--out", help="also write the full report JSON here")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo cost estimate")
    p.add_argument("--x", type=float, required=True, help="initial reserve")
    p.add_argument("--paths", type=int, default=10000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--horizon", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-feedback", action="store_true", help="hold u = 1 instead of u*")
    p.add_argument("--out", help="also write the SimResult JSON here")

    p = sub.add_parser("fd", parents=[common], help="finite-difference crosscheck")
    p.add_argument("--h", type=float, default=1e-3, help="mesh width (default 1e-3)")
    p.add_argument("--xmax", type=float, help="domain size (default 3x the refund cap)")
    p.add_argument("--csv", help="also write the per-node grid CSV here")
    p.add_argument("--out", help="also write the comparison JSON here")

    p = sub.add_parser("sweep", parents=[common], help="regime scan over the call cost")
    p.add_argument("--kplus-from", type=float, help="default: half the threshold")
    p.add_argument("--kplus-to", type=float, help="default: twice the threshold")
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--out", default="sweep.csv", help="output path (default sweep.csv)")
    return ap


def _cmd_solve(args) -> tuple[int, list[str]]:
    _, vf = solve(load_params(args.params))
    with open(args.out, "w") as fh:
        json.dump(policy_to_dict(vf), fh, indent=2)
        fh.write("\n")
    return 0, [args.out]


def _cmd_table(args) -> tuple[int, list[str]]:
    if args.x_step <= 0.0:
        raise InvalidConfig(f"--step must be positive, got {args.x_step}")
    if args.x_to < args.x_from:
        raise InvalidConfig("--to must not be below --from")
    _, vf = solve(load_params(args.params))
    n = int(np.floor((args.x_to - args.x_from) / args.x_step + 1e-9)) + 1
    xs = args.x_from + args.x_step * np.arange(n)
    V, Vp, Vpp = V_eval(xs, vf)
    u = feedback_u(xs, vf)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "V", "Vp", "Vpp", "u"])
        for i in range(n):
            w.writerow([repr(float(c)) for c in (xs[i], V[i], Vp[i], Vpp[i], u[i])])
    return 0, [args.out]


def _cmd_verify(args) -> tuple[int, list[str]]:
    _, vf = solve(load_params(args.params))
    rep = qvi_report(vf, n_grid=args.grid, tol=args.tol)
    print(json.dumps(report_to_dict(rep, vf), indent=2))
    outputs = []
    if args.out:
        from .qvi import write_report_json

        write_report_json(rep, args.out, vf)
        outputs.append(args.out)
    return (0 if rep.passed else 1), outputs


def _cmd_simulate(args) -> tuple[int, list[str]]:
    params = load_params(args.params)
    pol, _ = solve(params)
    cfg = SimConfig(
        params=params,
        policy=pol,
        x_init=args.x,
        dt=args.dt,
        horizon=args.horizon,
        n_paths=args.paths,
        seed=args.seed,
        use_feedback=not args.no_feedback,
    )
    res = estimate_cost(cfg)
    print(json.dumps(result_to_dict(res), indent=2))
    outputs = []
    if args.out:
        write_result_json(res, args.out)
        outputs.append(args.out)
    return 0, outputs


def _cmd_fd(args) -> tuple[int, list[str]]:
    params = load_params(args.params)
    _, vf = solve(params)
    x_max = args.xmax if args.xmax is not None else 3.0 * vf.aux.b_bar
    g = solve_qvi_fd(params, x_max=x_max, h=args.h)
    comp = compare_to_analytic(g, vf)
    report = {
        "sup_error": comp.sup_error,
        "l2_error": comp.l2_error,
        "regime_fd": comp.regime_fd,
        "A_fd": comp.A_fd,
        "B_fd": comp.B_fd,
        "b_fd": comp.b_fd,
        "call_nodes": comp.call_nodes,
        "value_at_zero": comp.value_at_zero,
        "iterations": g.iterations,
        "h": g.h,
        "x_max": g.x_max,
    }
    print(json.dumps(report, indent=2))
    outputs = []
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
        outputs.append(args.out)
    if args.csv:
        write_grid_csv(g, args.csv, vf)
        outputs.append(args.csv)
    return 0, outputs


def _cmd_sweep(args) -> tuple[int, list[str]]:
    if args.points < 2:
        raise InvalidConfig(f"--points must be at least 2, got {args.points}")
    params = load_params(args.params)
    _, vf0 = solve(params)
    k_bar = vf0.aux.K_plus_bar
    lo = args.kplus_from if args.kplus_from is not None else 0.5 * k_bar
    hi = args.kplus_to if args.kplus_to is not None else 2.0 * k_bar
    if not (0.0 < lo < hi):
        raise InvalidConfig(f"need 0 < from < to, got [{lo}, {hi}]")
    base = {k: getattr(params, k) for k in ("mu", "sigma", "r", "c_plus", "c_minus", "k_minus")}
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["K_plus", "regime", "A", "B", "b", "V0"])
        for k_plus in np.linspace(lo, hi, args.points):
            pol, vf = solve(dict(base, k_plus=float(k_plus)))
            V0 = float(V_eval(0.0, vf)[0])
            w.writerow(
                [
                    repr(float(k_plus)),
                    pol.regime.value,
                    repr(pol.A),
                    repr(pol.B),
                    repr(pol.b),
                    repr(V0),
                ]
            )
    return 0, [args.out]


_DISPATCH = {
    "solve": _cmd_solve,
    "table": _cmd_table,
    "verify": _cmd_verify,
    "simulate": _cmd_simulate,
    "fd": _cmd_fd,
    "sweep": _cmd_sweep,
}


def run(argv: list[str] | None = None) -> int:
    """Parse and execute; returns the exit code instead of raising."""
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2
    t0 = time.perf_counter()
    try:
        code, outputs = _DISPATCH[args.cmd](args)
    except _USAGE_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except _NUMERIC_ERRORS as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except MutualBandError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    wall = time.perf_counter() - t0
    if args.manifest:
        manifest = {
            "command": args.cmd,
            "params_file": args.params,
            "options": argv,
            "tool_version": __version__,
            "wall_time_s": wall,
            "outputs": outputs,
        }
        with open(args.manifest, "w") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
