"""Parameter validation and derived constants."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from mutualband import ModelParams, derive_constants, load_params, validate_params
from mutualband.errors import ParamOutOfRange, ZeroJump
from mutualband.model import cost_g, params_to_dict

from conftest import canonical_params

SQRT2 = math.sqrt(2.0)


def _random_param_dicts(rng: np.random.Generator, n: int) -> list[dict]:
    out = []
    for _ in range(n):
        out.append(
            {
                "mu": float(rng.uniform(0.1, 5.0)),
                "sigma": float(rng.uniform(0.1, 5.0)),
                "r": float(rng.uniform(0.05, 2.0)),
                "c_plus": float(rng.uniform(1.01, 3.0)),
                "c_minus": float(rng.uniform(0.05, 0.95)),
                "k_plus": float(rng.uniform(0.01, 2.0)),
                "k_minus": float(rng.uniform(0.01, 2.0)),
            }
        )
    return out


def test_canonical_constants_match_closed_forms():
    c = derive_constants(validate_params(canonical_params()))
    assert abs(c.gamma - 0.5) < 1e-14
    assert abs(c.x_tilde0 - 0.5) < 1e-14
    assert abs(c.rho1 - (SQRT2 - 1.0)) < 1e-14
    assert abs(c.rho2 - (SQRT2 + 1.0)) < 1e-14
    assert abs(c.beta - (2.0 * SQRT2 - 3.0)) < 1e-14
    assert abs(c.lambda_const - (-(1.0 + c.beta) * SQRT2)) < 1e-12


def test_derived_constant_invariants_random_sweep():
    rng = np.random.default_rng(4211)
    for d in _random_param_dicts(rng, 1000):
        p = validate_params(d)
        c = derive_constants(p)
        assert 0.0 < c.gamma < 1.0
        assert 0.0 < c.rho1 < c.rho2
        assert abs(c.rho1 * c.rho2 - 2.0 * p.r / p.sigma**2) < 1e-12 * c.rho1 * c.rho2
        assert -1.0 < c.beta < 0.0
        assert c.lambda_const < 0.0
        assert c.x_tilde0 > 0.0


def test_validate_accepts_round_trip():
    p = validate_params(canonical_params())
    assert isinstance(p, ModelParams)
    again = validate_params(params_to_dict(p))
    assert again == p


@pytest.mark.parametrize(
    "field,value",
    [
        ("mu", 0.0),
        ("mu", -1.0),
        ("sigma", 0.0),
        ("r", 0.0),
        ("r", -0.5),
        ("c_plus", 1.0),
        ("c_plus", 0.9),
        ("c_minus", 0.0),
        ("c_minus", 1.0),
        ("c_minus", 1.5),
        ("k_plus", 0.0),
        ("k_minus", -0.1),
    ],
)
def test_validate_rejects_out_of_range(field, value):
    d = canonical_params()
    d[field] = value
    with pytest.raises(ParamOutOfRange):
        validate_params(d)


def test_validate_rejects_missing_and_unknown_keys():
    d = canonical_params()
    del d["sigma"]
    with pytest.raises(ParamOutOfRange):
        validate_params(d)
    d = canonical_params()
    d["drift"] = 1.0
    with pytest.raises(ParamOutOfRange):
        validate_params(d)


def test_load_params_from_json(tmp_path):
    path = tmp_path / "params.json"
    path.write_text(json.dumps(canonical_params()))
    p = load_params(path)
    assert p == validate_params(canonical_params())


def test_cost_g_piecewise_affine():
    p = validate_params(canonical_params())
    assert abs(cost_g(1.0, p) - (p.k_plus + p.c_plus)) < 1e-15
    assert abs(cost_g(-1.0, p) - (p.k_minus - p.c_minus)) < 1e-15
    assert abs(cost_g(0.25, p) - (p.k_plus + 0.25 * p.c_plus)) < 1e-15
    with pytest.raises(ZeroJump):
        cost_g(0.0, p)


def test_cost_g_lower_bounds():
    # g(xi) >= k_plus for injections; refunds net at least k_minus - c_minus*xi.
    p = validate_params(canonical_params())
    rng = np.random.default_rng(7)
    for xi in rng.uniform(1e-6, 10.0, size=100):
        assert cost_g(float(xi), p) >= p.k_plus
        assert cost_g(-float(xi), p) == p.k_minus - p.c_minus * float(xi)
