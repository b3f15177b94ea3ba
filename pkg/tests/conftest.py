"""Shared fixtures: the canonical parameter set in both regimes.

The fixed call cost k_plus is half the regime threshold for the band
case and twice it for the dividend-only case, so the two fixtures sit
well inside their regimes.
"""

from __future__ import annotations

import pytest

from mutualband import solve

CANONICAL_BASE = {
    "mu": 1.0,
    "sigma": 1.0,
    "r": 0.5,
    "c_plus": 1.1,
    "c_minus": 0.9,
    "k_minus": 0.1,
}
K_PLUS_BAR = 0.47061536430098388
K_PLUS_BAND = 0.23530768215049194
K_PLUS_DIVONLY = 0.94123072860196775


def canonical_params(k_plus: float = K_PLUS_BAND) -> dict:
    return dict(CANONICAL_BASE, k_plus=k_plus)


@pytest.fixture(scope="session")
def band_solution():
    return solve(canonical_params(K_PLUS_BAND))


@pytest.fixture(scope="session")
def divonly_solution():
    return solve(canonical_params(K_PLUS_DIVONLY))
