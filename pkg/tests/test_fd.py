"""Finite-difference oracle on coarse grids.

Fine-grid accuracy and the convergence-order check live in the
acceptance suite; here the scheme is exercised at h = 4e-3 / 8e-3 where
a solve takes a fraction of a second.
"""

from __future__ import annotations

import numpy as np
import pytest

from mutualband import solve, solve_qvi_fd
from mutualband.errors import InvalidConfig, NonConvergence
from mutualband.fd_oracle import (
    CONTINUE,
    JUMP,
    _build_mesh,
    compare_to_analytic,
    discrete_complementarity,
    write_grid_csv,
)
from mutualband.policy import feedback_u

from conftest import K_PLUS_BAND, K_PLUS_DIVONLY, canonical_params

H_COARSE = 4e-3
X_MAX = 5.5


@pytest.fixture(scope="module")
def band_grid():
    return solve_qvi_fd(canonical_params(K_PLUS_BAND), x_max=X_MAX, h=H_COARSE)


@pytest.fixture(scope="module")
def divonly_grid():
    return solve_qvi_fd(canonical_params(K_PLUS_DIVONLY), x_max=X_MAX, h=H_COARSE)


def test_mesh_is_graded_then_uniform():
    x = _build_mesh(3.0, 1e-3)
    gaps = np.diff(x)
    assert x[0] == 0.0
    assert abs(x[-1] - 3.0) < 1e-12
    assert np.all(gaps > 0.0)
    assert gaps.max() <= 1e-3 * (1.0 + 1e-9)
    # Refined toward the origin: the first gap is orders finer than h.
    assert gaps[0] < 1e-5


def test_band_regime_recovered(band_grid):
    pol, vf = solve(canonical_params(K_PLUS_BAND))
    cmp_ = compare_to_analytic(band_grid, vf)
    assert band_grid.converged
    assert cmp_.regime_fd == "BandFull"
    assert cmp_.sup_error < 6e-3
    assert cmp_.l2_error < 6e-3
    assert abs(cmp_.A_fd - pol.A) <= 2 * H_COARSE
    assert abs(cmp_.B_fd - pol.B) <= 2 * H_COARSE
    assert abs(cmp_.b_fd - pol.b) <= 2 * H_COARSE
    assert cmp_.call_nodes == 1  # only the ruin node jumps up


def test_dividend_only_recovered(divonly_grid):
    pol, vf = solve(canonical_params(K_PLUS_DIVONLY))
    cmp_ = compare_to_analytic(divonly_grid, vf)
    assert cmp_.regime_fd == "DividendOnly"
    assert cmp_.sup_error < 1.2e-2
    assert cmp_.call_nodes == 0
    assert abs(cmp_.value_at_zero) < 1e-12  # absorbed node, up to LU roundoff
    assert abs(cmp_.B_fd - pol.B) <= 2 * H_COARSE
    assert abs(cmp_.b_fd - pol.b) <= 2 * H_COARSE


def test_grid_value_shape_invariants(band_grid, divonly_grid):
    for g in (band_grid, divonly_grid):
        assert np.all(g.values <= 1e-12)
        assert np.all(np.diff(g.values) < 1e-10)


def test_discrete_complementarity(band_grid):
    # The improvement step tolerates switches within 1e-12 of the value
    # scale (~2 here), so violations up to a few e-12 are roundoff.
    residual, slack = discrete_complementarity(band_grid)
    finite = np.isfinite(residual)
    assert np.min(residual[finite]) > -5e-12
    assert np.min(slack) > -5e-12
    both = np.minimum(np.clip(residual[finite], 0.0, None), np.clip(slack[finite], 0.0, None))
    assert np.max(both) < 1e-10


def test_continuation_u_tracks_feedback(band_grid):
    _, vf = solve(canonical_params(K_PLUS_BAND))
    cont = band_grid.decision == CONTINUE
    xs = band_grid.x[cont]
    inner = (xs > 0.05) & (xs < vf.policy.b - 0.05)
    diff = band_grid.u[cont][inner] - feedback_u(xs[inner], vf)
    assert np.max(np.abs(diff)) < 0.02


def test_sup_changes_settle(band_grid):
    # Iteration may stop on a fixed policy before the value tolerance, so
    # only the order of the final change is pinned, not the 1e-10 gate.
    assert band_grid.converged
    changes = band_grid.sup_changes
    assert changes[-1] < 1e-6
    assert np.min(changes) == changes[-1]


def test_refund_targets_point_down_and_inside(band_grid):
    idx = np.arange(band_grid.x.size)
    down = (band_grid.decision == JUMP) & (band_grid.target < idx)
    tgt = band_grid.target[down]
    assert np.all(tgt > 0)
    assert np.unique(band_grid.x[tgt]).size == 1  # single refund target B


def test_config_guards():
    params = canonical_params()
    with pytest.raises(InvalidConfig):
        solve_qvi_fd(params, x_max=3.0, h=0.0)
    with pytest.raises(InvalidConfig):
        solve_qvi_fd(params, x_max=1e-2, h=1e-2)
    with pytest.raises(InvalidConfig):
        solve_qvi_fd(params, x_max=3.0, h=1e-3, u_points=1)


def test_nonconvergence_reports_sweep_count():
    with pytest.raises(NonConvergence):
        solve_qvi_fd(canonical_params(), x_max=X_MAX, h=8e-3, max_iter=1)


def test_grid_csv(tmp_path, band_grid):
    _, vf = solve(canonical_params(K_PLUS_BAND))
    path = tmp_path / "grid.csv"
    write_grid_csv(band_grid, path, vf)
    rows = path.read_text().strip().splitlines()
    assert rows[0].split(",")[:3] == ["x", "V_fd", "V_analytic"]
    assert len(rows) == band_grid.x.size + 1
