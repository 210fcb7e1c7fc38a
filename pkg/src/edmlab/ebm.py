"""Energy-based pseudo-state distribution built from a policy's logits.

Each state's energy is the log-partition of its action logits, and the
pseudo-state distribution is the Boltzmann distribution ``softmax(-E)`` over
states. Nothing here takes an MDP: the distribution is a function of policy
parameters alone, which is exactly why it can disagree with the policy's true
state visitation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dists import JointDist, Kind
from .errors import DimensionMismatch, GaugeNotZero, ValidationError
from .policies import CoupledPolicy, SoftmaxPolicy, action_table, coupled_to_softmax, logsumexp


@dataclass(frozen=True)
class EnergyTable:
    values: np.ndarray


@dataclass(frozen=True)
class PseudoStateDist:
    probs: np.ndarray
    gauge_used: np.ndarray
    log_probs: np.ndarray

    def __post_init__(self):
        for name in ("probs", "gauge_used", "log_probs"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if abs(self.probs.sum() - 1.0) > 1e-12:
            raise ValidationError(f"pseudo-state probabilities sum to {self.probs.sum()!r}")

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]


def _softmax_policy(p) -> SoftmaxPolicy:
    return coupled_to_softmax(p) if isinstance(p, CoupledPolicy) else p


def _require_zero_gauge(p: SoftmaxPolicy) -> None:
    if np.any(p.gauge != 0.0):
        raise GaugeNotZero("policy carries a nonzero gauge; use pseudo_state_dist_gauged")


def energy(p: SoftmaxPolicy | CoupledPolicy) -> EnergyTable:
    """Per-state log-partition of the raw logits (the gauge is not included)."""
    p = _softmax_policy(p)
    return EnergyTable(logsumexp(p.logits, axis=1))


def _from_log_weights(log_w: np.ndarray, gauge: np.ndarray) -> PseudoStateDist:
    log_p = log_w - logsumexp(log_w)
    return PseudoStateDist(np.exp(log_p), gauge, log_p)


def pseudo_state_dist(p: SoftmaxPolicy | CoupledPolicy) -> PseudoStateDist:
    p = _softmax_policy(p)
    _require_zero_gauge(p)
    return _from_log_weights(-energy(p).values, p.gauge)


def pseudo_state_dist_gauged(p: SoftmaxPolicy | CoupledPolicy) -> PseudoStateDist:
    """Pseudo-state distribution ``p(s) ∝ exp(-g[s]) / sum_a exp(f[s, a])``."""
    p = _softmax_policy(p)
    return _from_log_weights(-p.gauge - energy(p).values, p.gauge)


def normalizing_gauge(p: SoftmaxPolicy) -> np.ndarray:
    """The gauge ``g[s] = -logsumexp_a f[s, a]``, under which the gauged pseudo-state
    distribution is uniform whatever the logits."""
    return -energy(p).values


def joint_model(p: SoftmaxPolicy | CoupledPolicy, d: PseudoStateDist) -> JointDist:
    pi = action_table(p)
    if pi.shape[0] != d.n_states:
        raise DimensionMismatch(f"policy has {pi.shape[0]} states, pseudo dist has {d.n_states}")
    return JointDist(d.probs[:, None] * pi, Kind.EXACT)


def grad_log_pseudo(p: SoftmaxPolicy | CoupledPolicy) -> np.ndarray:
    """Jacobian of ``log p(s)`` with respect to the logit table.

    Returns an (S, S, A) array ``J`` with ``J[s, s', a'] =
    -[s' == s] pi(a'|s) + p(s') pi(a'|s')``.
    """
    p = _softmax_policy(p)
    _require_zero_gauge(p)
    pi = action_table(p)
    d = pseudo_state_dist(p).probs
    n = p.n_states
    jac = np.broadcast_to(d[:, None] * pi, (n,) + pi.shape).copy()
    jac[np.arange(n), np.arange(n)] -= pi
    return jac


def coupled_log_pseudo_grad(c: CoupledPolicy, state: int = 0) -> float:
    """Closed-form ``d/dtheta log p(state)`` for the coupled two-state family.

    With ``p(s) ∝ exp(-E(s))`` the first state has probability
    ``(1 + e^{k t}) / (2 + e^t + e^{k t})``, so for ``state=0``

        k e^{k t} / (1 + e^{k t}) - (e^t + k e^{k t}) / (2 + e^t + e^{k t})

    and for ``state=1`` the first term becomes ``e^t / (1 + e^t)``. At ``t=0`` the
    ``state=0`` value reduces to ``(k - 1) / 4``.
    """
    t, k = c.theta, c.k
    if state == 0:
        own = k / (1.0 + np.exp(-k * t))
    elif state == 1:
        own = 1.0 / (1.0 + np.exp(-t))
    else:
        raise ValidationError(f"coupled family has states 0 and 1, got {state}")
    # rescale by the largest exponent so neither ratio overflows
    m = max(0.0, t, k * t)
    et, ekt = np.exp(t - m), np.exp(k * t - m)
    shared = (et + k * ekt) / (2.0 * np.exp(-m) + et + ekt)
    return float(own - shared)
