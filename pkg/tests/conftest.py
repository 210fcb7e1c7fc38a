import json
from pathlib import Path

import numpy as np
import pytest

from edmlab.mdp import TabularMdp


GOLDEN = json.loads((Path(__file__).parent / "golden" / "consistency.json").read_text())


@pytest.fixture
def golden():
    return GOLDEN


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def swap_chain(gamma=0.99):
    """Two states that swap every step regardless of the action."""
    P = np.zeros((2, 2, 2))
    P[0, :, 1] = 1.0
    P[1, :, 0] = 1.0
    return TabularMdp(2, 2, P, [0.5, 0.5], gamma)


def brute_force_occupancy(P_pi, mu, gamma, horizon=60):
    """Truncated series sum_{t<=horizon} gamma^t mu P^t, renormalized."""
    acc = np.zeros_like(mu)
    x = mu.copy()
    for t in range(horizon + 1):
        acc += gamma ** t * x
        x = x @ P_pi
    return acc / acc.sum()
