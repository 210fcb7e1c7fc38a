"""Probability containers shared by the visitation solvers and the models."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

SUM_TOL = 1e-10
# negative entries down to this size are floating-point dust and get clamped
DUST = 1e-14


class Kind(str, enum.Enum):
    DISCOUNTED = "discounted"
    STATIONARY = "stationary"
    FINITE_HORIZON = "finite_horizon"
    EXACT = "exact"


def _clean(probs, ndim: int, name: str) -> np.ndarray:
    arr = np.array(probs, dtype=float)
    if arr.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite entries")
    if arr.min(initial=0.0) < -DUST:
        raise ValidationError(f"{name} has negative entry {arr.min()!r}")
    arr[arr < 0] = 0.0
    total = arr.sum()
    if abs(total - 1.0) > SUM_TOL:
        raise ValidationError(f"{name} sums to {total!r}, not 1")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateDist:
    """Distribution over states, tagged with how it was obtained."""

    probs: np.ndarray
    kind: Kind = Kind.EXACT

    def __post_init__(self):
        object.__setattr__(self, "probs", _clean(self.probs, 1, "StateDist"))
        object.__setattr__(self, "kind", Kind(self.kind))

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]


@dataclass(frozen=True)
class JointDist:
    """Distribution over (state, action) pairs; ``probs[s, a]``."""

    probs: np.ndarray
    kind: Kind = Kind.EXACT

    def __post_init__(self):
        object.__setattr__(self, "probs", _clean(self.probs, 2, "JointDist"))
        object.__setattr__(self, "kind", Kind(self.kind))

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape

    def state_marginal(self) -> StateDist:
        return StateDist(self.probs.sum(axis=1), self.kind)
