"""Behavioral cloning and EDM objectives, their gradients, and plain descent.

Every gradient in this module is the gradient of a *loss*: a negative value
means gradient descent increases the parameter.

The EDM loss is the BC loss plus a state term ``E[-log p(s)]`` where ``p`` is
the pseudo-state distribution of :mod:`edmlab.ebm`. The expectation is taken
either under an empirical dataset or under a population joint
``w(s) * expert(a|s)`` given by a :class:`PopulationSpec`.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .dists import JointDist
from .ebm import coupled_log_pseudo_grad, grad_log_pseudo, pseudo_state_dist
from .errors import Divergence, FdMismatch, NonFiniteEvaluation, ValidationError
from .policies import (
    CoupledPolicy,
    DemoDataset,
    SoftmaxPolicy,
    action_table,
    coupled_to_softmax,
    empirical_joint,
    log_prob_table,
    population_joint,
)

FD_STEP = 1e-5
FD_RTOL = 1e-6
FD_ATOL = 1e-8
DIVERGENCE_BOUND = 1e6


@dataclass(frozen=True)
class PopulationSpec:
    """Exact expert state-action distribution ``w(s) * expert(a|s)``."""

    state_weights: np.ndarray
    expert: SoftmaxPolicy | CoupledPolicy

    def __post_init__(self):
        w = np.array(self.state_weights, dtype=float)
        if w.ndim != 1 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError(f"state weights must be a distribution, got {w.tolist()}")
        n_states = action_table(self.expert).shape[0]
        if w.size != n_states:
            raise ValidationError(f"{w.size} state weights for a {n_states}-state expert")
        w.setflags(write=False)
        object.__setattr__(self, "state_weights", w)

    @cached_property
    def joint(self) -> JointDist:
        return population_joint(self.state_weights, self.expert)

    @classmethod
    def coupled(cls, theta_expert: float = 1.0, k: float = 0.5,
                weights: Sequence[float] = (0.5, 0.5)) -> "PopulationSpec":
        return cls(np.asarray(weights, dtype=float), CoupledPolicy(theta_expert, k))


@dataclass(frozen=True)
class GradientReport:
    bc_term: np.ndarray | float
    state_term: np.ndarray | float
    total: np.ndarray | float
    fd_total: np.ndarray | float
    max_rel_err: float


@dataclass
class DescentTrace:
    objective: str
    rows: list[tuple[int, float, float, float, float]] = field(default_factory=list)

    HEADER = ("step", "theta", "bc_loss", "edm_loss", "grad_total")

    @property
    def final_theta(self) -> float:
        return self.rows[-1][1]

    @property
    def final_grad(self) -> float:
        return self.rows[-1][4]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.HEADER)
        for step, *vals in self.rows:
            writer.writerow([step] + [repr(float(v)) for v in vals])
        return buf.getvalue()


def _softmax(policy) -> SoftmaxPolicy:
    return coupled_to_softmax(policy) if isinstance(policy, CoupledPolicy) else policy


def _joint_for(policy: SoftmaxPolicy, data) -> np.ndarray:
    if isinstance(data, PopulationSpec):
        joint = data.joint
    elif isinstance(data, DemoDataset):
        joint = empirical_joint(data, policy.n_states, policy.n_actions)
    elif isinstance(data, JointDist):
        joint = data
    else:
        raise TypeError(f"expected PopulationSpec, DemoDataset or JointDist, got {type(data).__name__}")
    if joint.shape != policy.logits.shape:
        raise ValidationError(f"data is {joint.shape}, policy is {policy.logits.shape}")
    return joint.probs


def bc_loss(policy, data) -> float:
    """``E[-log pi(a|s)]`` under the data's state-action distribution."""
    p = _softmax(policy)
    joint = _joint_for(p, data)
    return float(-np.sum(joint * log_prob_table(p)))


def state_loss(policy, data) -> float:
    """``E[-log p(s)]`` under the data's state marginal."""
    p = _softmax(policy)
    marginal = _joint_for(p, data).sum(axis=1)
    return float(-np.sum(marginal * pseudo_state_dist(p).log_probs))


def edm_loss(policy, data) -> float:
    return bc_loss(policy, data) + state_loss(policy, data)


def finite_diff(fn: Callable[[np.ndarray], float], x, h: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of a scalar function of a parameter vector."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    grad = np.empty(x.shape)
    for i in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fp, fm = fn(xp), fn(xm)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NonFiniteEvaluation(f"function is not finite near component {i}")
        grad[i] = (fp - fm) / (2.0 * h)
    return grad


def fd_rel_err(analytic, fd) -> float:
    """Largest ``|analytic - fd| / max(|fd|, FD_ATOL / FD_RTOL)``.

    The floor makes ``rel_err <= FD_RTOL`` equivalent to
    ``|analytic - fd| <= max(FD_RTOL * |fd|, FD_ATOL)``.
    """
    analytic, fd = np.asarray(analytic, dtype=float), np.asarray(fd, dtype=float)
    scale = np.maximum(np.abs(fd), FD_ATOL / FD_RTOL)
    return float(np.max(np.abs(analytic - fd) / scale))


def _check_coupled(c: CoupledPolicy, spec: PopulationSpec) -> CoupledPolicy:
    expert = spec.expert
    if not isinstance(expert, CoupledPolicy):
        raise ValidationError("coupled gradients need a CoupledPolicy expert")
    if expert.k != c.k:
        raise ValidationError(f"learner k={c.k} differs from expert k={expert.k}")
    return expert


def bc_population_gradient(c: CoupledPolicy, spec: PopulationSpec) -> float:
    expert = _check_coupled(c, spec)
    w1, w2 = spec.state_weights
    k = c.k
    return float(-(w1 * (expit(expert.theta) - expit(c.theta))
                   + w2 * k * (expit(k * expert.theta) - expit(k * c.theta))))


def _coupled_state_term(c: CoupledPolicy, spec: PopulationSpec) -> float:
    w1, w2 = spec.state_weights
    return -(w1 * coupled_log_pseudo_grad(c, 0) + w2 * coupled_log_pseudo_grad(c, 1))


def edm_population_gradient(c: CoupledPolicy, spec: PopulationSpec,
                            h: float = FD_STEP, rtol: float = FD_RTOL) -> GradientReport:
    """BC and pseudo-state terms of the EDM loss gradient in ``theta``, checked
    against central differences of :func:`edm_loss`.

    Raises :class:`FdMismatch` when the two disagree beyond tolerance.
    """
    bc = bc_population_gradient(c, spec)
    st = _coupled_state_term(c, spec)
    total = bc + st
    fd = float(finite_diff(lambda x: edm_loss(c.with_theta(x[0]), spec), [c.theta], h)[0])
    err = fd_rel_err(total, fd)
    if err > rtol:
        raise FdMismatch(f"analytic {total!r} vs finite difference {fd!r} (rel err {err:.2e})")
    return GradientReport(bc, st, total, fd, err)


def bc_gradient(policy: SoftmaxPolicy, data) -> np.ndarray:
    """Gradient of :func:`bc_loss` with respect to the logit table."""
    joint = _joint_for(policy, data)
    return -(joint - joint.sum(axis=1, keepdims=True) * action_table(policy))


def state_gradient(policy: SoftmaxPolicy, data) -> np.ndarray:
    """Gradient of :func:`state_loss` with respect to the logit table."""
    marginal = _joint_for(policy, data).sum(axis=1)
    return -np.tensordot(marginal, grad_log_pseudo(policy), axes=1)


def edm_gradient(policy: SoftmaxPolicy, data, h: float = FD_STEP,
                 rtol: float = FD_RTOL) -> GradientReport:
    """Tabular counterpart of :func:`edm_population_gradient`."""
    bc = bc_gradient(policy, data)
    st = state_gradient(policy, data)
    total = bc + st
    shape = policy.logits.shape
    fd = finite_diff(lambda x: edm_loss(SoftmaxPolicy(x.reshape(shape)), data),
                     policy.logits.ravel(), h).reshape(shape)
    err = fd_rel_err(total, fd)
    if err > rtol:
        raise FdMismatch(f"tabular EDM gradient off by rel err {err:.2e}")
    return GradientReport(bc, st, total, fd, err)


def gradient_descent(objective: str, init: float, lr: float, steps: int,
                     spec: PopulationSpec) -> DescentTrace:
    """Fixed-step descent on the coupled parameter ``theta``.

    The trace has one row per iterate, ``steps + 1`` rows in all; the gradient on
    row ``t`` is the one evaluated at that row's ``theta``.
    """
    if objective not in ("bc", "edm"):
        raise ValidationError(f"objective must be 'bc' or 'edm', got {objective!r}")
    if not lr > 0:
        raise ValidationError(f"learning rate must be positive, got {lr}")
    if steps < 1:
        raise ValidationError(f"steps must be >= 1, got {steps}")
    expert = _check_coupled(CoupledPolicy(init, spec.expert.k), spec)

    trace = DescentTrace(objective)
    theta = float(init)
    for step in range(steps + 1):
        c = CoupledPolicy(theta, expert.k)
        grad = bc_population_gradient(c, spec)
        if objective == "edm":
            grad += _coupled_state_term(c, spec)
        bc = bc_loss(c, spec)
        trace.rows.append((step, theta, bc, bc + state_loss(c, spec), grad))
        if step == steps:
            break
        theta -= lr * grad
        if not np.isfinite(theta) or abs(theta) > DIVERGENCE_BOUND:
            raise Divergence(f"theta reached {theta!r} at step {step + 1}")
    return trace
