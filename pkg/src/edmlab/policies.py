"""Softmax policy families.

``SoftmaxPolicy`` is a tabular exponential-family policy whose logits carry an
explicit per-state gauge shift ``g[s]``. The gauge never changes the action
distribution, but it is kept as data so that models which *do* read it (see
``edmlab.ebm.pseudo_state_dist_gauged``) can be exercised directly.

``CoupledPolicy`` is the two-state, two-action family in which a single scalar
``theta`` sets the preference for the second action in both states, scaled by
a coupling constant ``k`` in the second state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit

from .dists import JointDist, Kind
from .errors import BadShape, EmptyDataset, ValidationError


def logsumexp(x, axis=None, keepdims: bool = False):
    """``log(sum(exp(x)))`` with max-subtraction; shared by the policy and energy code."""
    x = np.asarray(x, dtype=float)
    top = np.max(x, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(x - top), axis=axis, keepdims=True)) + top
    return out if keepdims else np.squeeze(out, axis=axis)


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SoftmaxPolicy:
    logits: np.ndarray
    gauge: np.ndarray = field(default=None)

    def __post_init__(self):
        logits = _frozen(self.logits)
        if logits.ndim != 2 or logits.shape[0] < 1 or logits.shape[1] < 1:
            raise BadShape(f"logits must be a nonempty (S, A) table, got shape {logits.shape}")
        gauge = np.zeros(logits.shape[0]) if self.gauge is None else self.gauge
        gauge = _frozen(gauge)
        if gauge.shape != (logits.shape[0],):
            raise BadShape(f"gauge must have shape ({logits.shape[0]},), got {gauge.shape}")
        if not (np.all(np.isfinite(logits)) and np.all(np.isfinite(gauge))):
            raise ValidationError("policy parameters must be finite")
        object.__setattr__(self, "logits", logits)
        object.__setattr__(self, "gauge", gauge)

    @property
    def n_states(self) -> int:
        return self.logits.shape[0]

    @property
    def n_actions(self) -> int:
        return self.logits.shape[1]

    @property
    def shifted(self) -> np.ndarray:
        """Logits with the gauge added to every action of each state."""
        return self.logits + self.gauge[:, None]

    def with_gauge(self, gauge) -> "SoftmaxPolicy":
        return SoftmaxPolicy(self.logits, gauge)

    def to_json(self) -> dict:
        return {"logits": self.logits.tolist(), "gauge": self.gauge.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "SoftmaxPolicy":
        if "logits" not in obj:
            raise ValidationError("policy: missing field 'logits'")
        return cls(obj["logits"], obj.get("gauge"))

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> "SoftmaxPolicy":
        return cls(np.zeros((n_states, n_actions)))


@dataclass(frozen=True)
class CoupledPolicy:
    """pi(a2|s1) = sigmoid(theta), pi(a2|s2) = sigmoid(k * theta)."""

    theta: float
    k: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "k", float(self.k))
        if not (np.isfinite(self.theta) and np.isfinite(self.k)):
            raise ValidationError("theta and k must be finite")

    def with_theta(self, theta: float) -> "CoupledPolicy":
        return CoupledPolicy(theta, self.k)

    def to_json(self) -> dict:
        return {"theta": self.theta, "k": self.k}

    @classmethod
    def from_json(cls, obj: dict) -> "CoupledPolicy":
        for key in ("theta", "k"):
            if key not in obj:
                raise ValidationError(f"coupled policy: missing field '{key}'")
        return cls(obj["theta"], obj["k"])


@dataclass(frozen=True)
class DemoDataset:
    """Demonstrations as raw (state, action) pairs or as an empirical weight matrix."""

    pairs: tuple[tuple[int, int], ...] | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.pairs is not None:
            pairs = tuple((int(s), int(a)) for s, a in self.pairs)
            if any(s < 0 or a < 0 for s, a in pairs):
                raise ValidationError("dataset pairs must be non-negative indices")
            object.__setattr__(self, "pairs", pairs)
        if self.weights is not None:
            w = _frozen(self.weights)
            if w.ndim != 2 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ValidationError("dataset weights must be a non-negative matrix summing to 1")
            object.__setattr__(self, "weights", w)

    @classmethod
    def from_trajectories(cls, trajectories) -> "DemoDataset":
        return cls(pairs=[step for traj in trajectories for step in traj.steps])


def coupled_to_softmax(c: CoupledPolicy) -> SoftmaxPolicy:
    return SoftmaxPolicy([[0.0, c.theta], [0.0, c.k * c.theta]])


def _as_softmax(p) -> SoftmaxPolicy:
    return coupled_to_softmax(p) if isinstance(p, CoupledPolicy) else p


def action_probs(p: SoftmaxPolicy | CoupledPolicy, s: int) -> np.ndarray:
    p = _as_softmax(p)
    row = p.logits[s] + p.gauge[s]
    z = np.exp(row - row.max())
    return z / z.sum()


def action_table(policy) -> np.ndarray:
    """Full (S, A) matrix of pi(a|s).

    Accepts a ``SoftmaxPolicy``, a ``CoupledPolicy`` or an explicit row-stochastic
    array, which lets the MDP solvers take deterministic policies directly.
    """
    if isinstance(policy, (SoftmaxPolicy, CoupledPolicy)):
        p = _as_softmax(policy)
        z = p.shifted
        z = np.exp(z - z.max(axis=1, keepdims=True))
        return z / z.sum(axis=1, keepdims=True)
    table = np.asarray(policy, dtype=float)
    if table.ndim != 2:
        raise BadShape(f"policy table must be (S, A), got shape {table.shape}")
    if np.any(table < 0) or np.any(np.abs(table.sum(axis=1) - 1.0) > 1e-12):
        raise ValidationError("policy table rows must be distributions")
    return table


def log_prob(p: SoftmaxPolicy | CoupledPolicy, s: int, a: int) -> float:
    p = _as_softmax(p)
    row = p.logits[s] + p.gauge[s]
    return float(row[a] - logsumexp(row))


def log_prob_table(p: SoftmaxPolicy | CoupledPolicy) -> np.ndarray:
    p = _as_softmax(p)
    z = p.shifted
    return z - logsumexp(z, axis=1, keepdims=True)


def grad_log_prob(p: SoftmaxPolicy, s: int, a: int, wrt: str = "logits") -> np.ndarray:
    """Gradient of ``log pi(a|s)`` with respect to the logit table or the gauge.

    With ``wrt="logits"`` the result has the logits' shape and only row ``s`` is
    nonzero: ``onehot(a) - pi(.|s)``. With ``wrt="gauge"`` the result is the zero
    vector, since a per-state shift cancels inside the softmax.
    """
    if wrt == "gauge":
        return np.zeros(p.n_states)
    if wrt != "logits":
        raise ValueError(f"wrt must be 'logits' or 'gauge', got {wrt!r}")
    grad = np.zeros_like(p.logits)
    grad[s] = -action_probs(p, s)
    grad[s, a] += 1.0
    return grad


def coupled_grad_log_prob(c: CoupledPolicy, s: int, a: int) -> float:
    """d/dtheta of log pi(a|s) for the coupled family (a=1 is the second action)."""
    if s not in (0, 1) or a not in (0, 1):
        raise ValidationError(f"coupled policy has 2 states and 2 actions, got ({s}, {a})")
    scale = 1.0 if s == 0 else c.k
    return scale * (float(a == 1) - float(expit(scale * c.theta)))


def empirical_joint(d: DemoDataset, n_states: int, n_actions: int) -> JointDist:
    if d.weights is not None:
        if d.weights.shape != (n_states, n_actions):
            raise BadShape(f"weights shape {d.weights.shape} != ({n_states}, {n_actions})")
        return JointDist(d.weights, Kind.EXACT)
    if not d.pairs:
        raise EmptyDataset("dataset has no (state, action) pairs")
    arr = np.asarray(d.pairs, dtype=int)
    if arr[:, 0].max() >= n_states or arr[:, 1].max() >= n_actions:
        raise ValidationError("dataset pair out of range for the given state/action counts")
    counts = np.zeros((n_states, n_actions))
    np.add.at(counts, (arr[:, 0], arr[:, 1]), 1.0)
    return JointDist(counts / counts.sum(), Kind.EXACT)


def population_joint(state_weights: Sequence[float], expert) -> JointDist:
    """Joint ``w(s) * expert(a|s)``: the infinite-demonstration limit."""
    w = np.asarray(state_weights, dtype=float)
    table = action_table(expert)
    if w.shape != (table.shape[0],):
        raise BadShape(f"state weights of length {w.size} for a {table.shape[0]}-state policy")
    return JointDist(w[:, None] * table, Kind.EXACT)
