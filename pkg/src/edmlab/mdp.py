"""Finite MDPs, exact visitation distributions and seeded rollouts."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .dists import DUST, JointDist, Kind, StateDist
from .errors import (
    BadInitial,
    BadShape,
    DimensionMismatch,
    NoConvergence,
    RowNotStochastic,
    SolverFailure,
    ValidationError,
)
from .policies import action_table

ROW_TOL = 1e-12
DENSE_LIMIT = 200


@dataclass(frozen=True)
class TabularMdp:
    """Finite MDP with transition tensor ``transitions[s, a, s']``.

    Construction does not validate; call :func:`validate_mdp` (the loaders and
    solvers do) so that malformed instances can still be built and inspected.
    """

    n_states: int
    n_actions: int
    transitions: np.ndarray
    initial: np.ndarray
    gamma: float = 0.99

    def __post_init__(self):
        for name in ("transitions", "initial"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "gamma", float(self.gamma))

    def to_json(self) -> dict:
        return {
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "transitions": self.transitions.tolist(),
            "initial": self.initial.tolist(),
            "gamma": self.gamma,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TabularMdp":
        missing = [k for k in ("n_states", "n_actions", "transitions", "initial") if k not in obj]
        if missing:
            raise ValidationError(f"mdp: missing field(s) {', '.join(missing)}")
        try:
            m = cls(int(obj["n_states"]), int(obj["n_actions"]), obj["transitions"],
                    obj["initial"], obj.get("gamma", 0.99))
        except (TypeError, ValueError) as exc:
            raise BadShape(f"mdp: malformed numeric field ({exc})") from None
        validate_mdp(m)
        return m


@dataclass(frozen=True)
class Trajectory:
    steps: tuple[tuple[int, int], ...]
    horizon: int

    def to_json(self) -> dict:
        return {"steps": [list(step) for step in self.steps]}


def validate_mdp(m: TabularMdp) -> None:
    if m.n_states < 1 or m.n_actions < 1:
        raise BadShape(f"n_states={m.n_states}, n_actions={m.n_actions} must be positive")
    expected = (m.n_states, m.n_actions, m.n_states)
    if m.transitions.shape != expected:
        raise BadShape(f"transitions has shape {m.transitions.shape}, expected {expected}")
    if m.initial.shape != (m.n_states,):
        raise BadShape(f"initial has shape {m.initial.shape}, expected ({m.n_states},)")
    if not 0.0 <= m.gamma < 1.0:
        raise ValidationError(f"gamma={m.gamma} must lie in [0, 1)")
    P = m.transitions
    bad = np.argwhere(~np.isfinite(P) | (P < 0))
    if bad.size:
        s, a, s2 = bad[0]
        raise RowNotStochastic(int(s), int(a), float(P[s, a].sum()))
    sums = P.sum(axis=2)
    bad = np.argwhere(np.abs(sums - 1.0) > ROW_TOL)
    if bad.size:
        s, a = bad[0]
        raise RowNotStochastic(int(s), int(a), float(sums[s, a]))
    mu = m.initial
    if not np.all(np.isfinite(mu)) or np.any(mu < 0):
        raise BadInitial(f"initial has a negative or non-finite entry at index {int(np.argmin(mu))}")
    if abs(mu.sum() - 1.0) > ROW_TOL:
        raise BadInitial(f"initial sums to {mu.sum()!r}, not 1")


def _policy_for(m: TabularMdp, policy) -> np.ndarray:
    table = action_table(policy)
    if table.shape != (m.n_states, m.n_actions):
        raise DimensionMismatch(
            f"policy is {table.shape}, mdp has {m.n_states} states and {m.n_actions} actions"
        )
    return table


def policy_transition_matrix(m: TabularMdp, policy) -> np.ndarray:
    """``P_pi[s, s'] = sum_a pi(a|s) P[s, a, s']``."""
    pi = _policy_for(m, policy)
    return np.einsum("sa,sat->st", pi, m.transitions)


def _finish(x: np.ndarray, kind: Kind) -> StateDist:
    x = np.where((x < 0) & (x >= -DUST), 0.0, x)
    return StateDist(x / x.sum(), kind)


def visitation_discounted(m: TabularMdp, policy) -> StateDist:
    """Normalized discounted occupancy ``(1 - gamma) sum_t gamma^t Pr(s_t = s)``."""
    validate_mdp(m)
    P_pi = policy_transition_matrix(m, policy)
    A = np.eye(m.n_states) - m.gamma * P_pi.T
    b = (1.0 - m.gamma) * m.initial
    if m.n_states <= DENSE_LIMIT:
        x = np.linalg.solve(A, b)
    else:
        x = b.copy()
        for _ in range(100_000):
            nxt = b + m.gamma * (P_pi.T @ x)
            if np.abs(nxt - x).sum() < 1e-14:
                x = nxt
                break
            x = nxt
    residual = np.abs(A @ x - b).sum()
    if not np.isfinite(residual) or residual > 1e-8:
        raise SolverFailure(f"occupancy residual {residual:.3e} exceeds 1e-8")
    return _finish(x, Kind.DISCOUNTED)


def visitation_stationary(m: TabularMdp, policy, tol: float = 1e-12,
                          max_iter: int = 100_000) -> StateDist:
    """Stationary distribution reached from the initial distribution.

    Power iteration runs on the lazy chain ``(I + P_pi) / 2``, which shares the
    fixed points of ``P_pi`` but is aperiodic. Seeding at the initial
    distribution picks the fixed point reachable from it when the chain is
    reducible.
    """
    validate_mdp(m)
    P_pi = policy_transition_matrix(m, policy)
    lazy = 0.5 * (np.eye(m.n_states) + P_pi)
    x = m.initial.copy()
    for _ in range(max_iter):
        nxt = x @ lazy
        nxt /= nxt.sum()
        if np.abs(nxt - x).sum() < tol:
            return _finish(nxt, Kind.STATIONARY)
        x = nxt
    raise NoConvergence(f"power iteration did not reach L1 residual {tol:g} in {max_iter} steps")


def visitation_finite_horizon(m: TabularMdp, policy, horizon: int) -> StateDist:
    """Undiscounted average of ``Pr(s_t = s)`` over ``t < horizon``."""
    validate_mdp(m)
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    P_pi = policy_transition_matrix(m, policy)
    x = m.initial.copy()
    acc = np.zeros(m.n_states)
    for _ in range(horizon):
        acc += x
        x = x @ P_pi
    return _finish(acc / horizon, Kind.FINITE_HORIZON)


def visitation(m: TabularMdp, policy, mode: str = "discounted", horizon: int = 100) -> StateDist:
    if mode == "discounted":
        return visitation_discounted(m, policy)
    if mode == "stationary":
        return visitation_stationary(m, policy)
    if mode in ("finite_horizon", "finite-horizon"):
        return visitation_finite_horizon(m, policy, horizon)
    raise ValidationError(f"unknown visitation mode {mode!r}")


def joint_visitation(d: StateDist, policy) -> JointDist:
    pi = action_table(policy)
    if pi.shape[0] != d.n_states:
        raise DimensionMismatch(f"state dist has {d.n_states} states, policy has {pi.shape[0]}")
    return JointDist(d.probs[:, None] * pi, d.kind)


def rollout(m: TabularMdp, policy, episodes: int, horizon: int, seed: int) -> list[Trajectory]:
    validate_mdp(m)
    if episodes < 1 or horizon < 1:
        raise ValidationError("episodes and horizon must be >= 1")
    pi = _policy_for(m, policy)
    rng = np.random.default_rng(seed)
    # inverse-CDF tables; the last column is forced to 1 so a uniform draw always lands
    pi_cdf = np.cumsum(pi, axis=1)
    pi_cdf[:, -1] = 1.0
    p_cdf = np.cumsum(m.transitions, axis=2)
    p_cdf[:, :, -1] = 1.0
    mu_cdf = np.cumsum(m.initial)
    mu_cdf[-1] = 1.0

    out = []
    for _ in range(episodes):
        u = rng.random(2 * horizon + 1)
        s = int(np.searchsorted(mu_cdf, u[0], side="right"))
        steps = []
        for t in range(horizon):
            a = int(np.searchsorted(pi_cdf[s], u[2 * t + 1], side="right"))
            steps.append((s, a))
            s = int(np.searchsorted(p_cdf[s, a], u[2 * t + 2], side="right"))
        out.append(Trajectory(tuple(steps), horizon))
    return out


def tv_distance(p, q) -> float:
    p = p.probs if isinstance(p, StateDist) else np.asarray(p, dtype=float)
    q = q.probs if isinstance(q, StateDist) else np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DimensionMismatch(f"cannot compare distributions of shapes {p.shape} and {q.shape}")
    return float(0.5 * np.abs(p - q).sum())


def self_loop_mdp(n_states: int, n_actions: int = 2, start: int = 0, gamma: float = 0.99) -> TabularMdp:
    """Every action keeps the agent where it is; all mass starts at ``start``."""
    P = np.zeros((n_states, n_actions, n_states))
    for s in range(n_states):
        P[s, :, s] = 1.0
    mu = np.zeros(n_states)
    mu[start] = 1.0
    return TabularMdp(n_states, n_actions, P, mu, gamma)


def random_mdp(n_states: int, n_actions: int, rng: np.random.Generator,
               gamma: float = 0.99) -> TabularMdp:
    P = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    mu = rng.dirichlet(np.ones(n_states))
    # dirichlet rows can be off by an ulp or two; renormalize against the 1e-12 check
    P /= P.sum(axis=2, keepdims=True)
    return TabularMdp(n_states, n_actions, P, mu / mu.sum(), gamma)


def write_trajectories(trajectories: Iterable[Trajectory], fh) -> None:
    for traj in trajectories:
        fh.write(json.dumps(traj.to_json()) + "\n")


def read_trajectories(fh) -> list[Trajectory]:
    out = []
    for lineno, line in enumerate(fh, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            steps = tuple((int(s), int(a)) for s, a in obj["steps"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"trajectories line {lineno}: {exc}") from None
        out.append(Trajectory(steps, len(steps)))
    return out
