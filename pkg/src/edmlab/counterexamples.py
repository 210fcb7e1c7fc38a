"""Self-checking reproductions of the pseudo-state and consistency counterexamples.

Each check builds its own fixtures and returns a :class:`CheckResult`. A check
whose headline claim does not apply to its arguments (for example the
"pushes away from the expert" claim at ``k >= 1``) still verifies every
identity it can and sets ``applicable=False``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .dists import JointDist
from .ebm import coupled_log_pseudo_grad, normalizing_gauge, pseudo_state_dist, pseudo_state_dist_gauged
from .errors import DegenerateContrast, ValidationError
from .mdp import TabularMdp, self_loop_mdp, tv_distance, visitation
from .objectives import (
    DescentTrace,
    PopulationSpec,
    bc_loss,
    bc_population_gradient,
    edm_population_gradient,
    finite_diff,
    fd_rel_err,
    gradient_descent,
)
from .policies import CoupledPolicy, SoftmaxPolicy, action_table, coupled_to_softmax

MODES = ("discounted", "stationary", "finite_horizon")


@dataclass
class CheckResult:
    name: str
    passed: bool
    observed: dict[str, float]
    expected: dict[str, float]
    tolerance: float
    applicable: bool = True
    note: str = ""

    def to_json(self) -> dict:
        out = asdict(self)
        out["observed"] = {k: float(v) for k, v in self.observed.items()}
        out["expected"] = {k: float(v) for k, v in self.expected.items()}
        return out


def example1_check(n_states: int, n_actions: int = 2) -> CheckResult:
    """Self-loop MDP: true visitation is a point mass, the uniform joint model is not."""
    if n_states < 2:
        raise ValidationError("example 1 needs at least two states")
    tol = 1e-12
    m = self_loop_mdp(n_states, n_actions)
    rng = np.random.default_rng(n_states)
    policies = [SoftmaxPolicy.uniform(n_states, n_actions),
                SoftmaxPolicy(rng.normal(size=(n_states, n_actions)))]
    point = np.eye(n_states)[0]
    model_marginal = JointDist(np.full((n_states, n_actions), 1.0 / (n_states * n_actions))).probs.sum(axis=1)

    ok = bool(np.all(np.abs(model_marginal - 1.0 / n_states) <= tol))
    observed = {"model_marginal_min": model_marginal.min(), "model_marginal_max": model_marginal.max()}
    tvs = []
    for mode in MODES:
        for pol in policies:
            d = visitation(m, pol, mode)
            ok &= bool(np.all(np.abs(d.probs - point) <= tol))
            tvs.append(tv_distance(d.probs, model_marginal))
        observed[f"tv_{mode}"] = tvs[-1]
    expected_tv = 1.0 - 1.0 / n_states
    ok &= all(abs(tv - expected_tv) <= tol for tv in tvs)
    observed["tv"] = max(tvs, key=lambda v: abs(v - expected_tv))
    return CheckResult(
        f"example1[n={n_states}]", ok, observed,
        {"tv": expected_tv, "model_marginal_min": 1.0 / n_states, "model_marginal_max": 1.0 / n_states},
        tol,
    )


def example2_check(policy: SoftmaxPolicy, mdp: TabularMdp, mode: str = "discounted",
                   label: str | None = None) -> CheckResult:
    """The normalizing gauge leaves the policy alone but makes the pseudo-state
    distribution uniform, whatever the true visitation is."""
    tol = 1e-12
    n = policy.n_states
    d = visitation(mdp, policy, mode)
    uniform = np.full(n, 1.0 / n)
    tv_true = tv_distance(d.probs, uniform)
    if tv_true <= tol:
        raise DegenerateContrast("true visitation is uniform for this MDP and policy; pick another instance")

    gauged = policy.with_gauge(normalizing_gauge(policy))
    action_gap = float(np.max(np.abs(action_table(gauged) - action_table(policy))))
    pseudo = pseudo_state_dist_gauged(gauged).probs
    uniform_gap = float(np.max(np.abs(pseudo - uniform)))
    tv_ungauged = tv_distance(pseudo, pseudo_state_dist(policy.with_gauge(None)).probs)
    passed = action_gap <= tol and uniform_gap <= tol and tv_true > 0
    return CheckResult(
        f"example2[{label or f'n={n}'}]", passed,
        {"action_gap": action_gap, "uniform_gap": uniform_gap, "tv_uniform_vs_true": tv_true,
         "tv_gauged_vs_ungauged": tv_ungauged, "pseudo_min": pseudo.min(), "pseudo_max": pseudo.max()},
        {"action_gap": 0.0, "uniform_gap": 0.0, "pseudo_min": 1.0 / n, "pseudo_max": 1.0 / n},
        tol,
    )


def example3_check(k: float) -> CheckResult:
    """At theta=0 with expert theta=1: BC descends toward the expert, while the
    pseudo-state score ``d/dtheta log p(s1)`` equals (k - 1) / 4.

    For k < 1 that score is negative, so demonstrations concentrated on the
    first state make the EDM state term push theta away from the expert.
    """
    tol = 1e-12
    c = CoupledPolicy(0.0, k)
    spec = PopulationSpec.coupled(1.0, k)
    bc = bc_population_gradient(c, spec)
    score = coupled_log_pseudo_grad(c, 0)
    push = edm_population_gradient(c, PopulationSpec.coupled(1.0, k, (1.0, 0.0))).state_term
    closed = (k - 1.0) / 4.0
    identity = abs(score - closed) <= tol
    bc_toward = bc < 0
    applicable = k < 1
    passed = identity and bc_toward and (score < 0 if applicable else True)
    if k == 1:
        note = "degenerate: k = 1 makes the score vanish at theta = 0"
    elif k > 1:
        note = "not applicable: for k > 1 the score is positive and the push is toward the expert"
    else:
        note = "score < 0: the pseudo-state term pushes theta away from the expert"
    return CheckResult(
        f"example3[k={k:g}]", passed,
        {"grad_log_p_s1": score, "bc_loss_grad": bc, "state_loss_grad_on_s1": push},
        {"grad_log_p_s1": closed},
        tol, applicable, note,
    )


def theorem1_contrast_mdp() -> TabularMdp:
    """Two states; the first action always leads to the second state and the
    second action to the first."""
    P = np.zeros((2, 2, 2))
    P[:, 0, 1] = 1.0
    P[:, 1, 0] = 1.0
    return TabularMdp(2, 2, P, [0.5, 0.5], 0.99)


def theorem1_check(mode: str | None = None) -> CheckResult:
    """At the expert's own parameter (theta = 1, k = 1/2) the BC gradient vanishes
    but the EDM gradient does not.

    With ``mode`` set, the state weights are the expert's actual visitation on
    :func:`theorem1_contrast_mdp` under that convention, in addition to the
    uniform weighting.
    """
    k, theta_e = 0.5, 1.0
    c = CoupledPolicy(theta_e, k)
    score = coupled_log_pseudo_grad(c, 0)

    def log_p_first(x):
        return pseudo_state_dist(coupled_to_softmax(CoupledPolicy(x[0], k))).log_probs[0]

    score_err = fd_rel_err(score, finite_diff(log_p_first, [theta_e])[0])
    weightings = {"uniform": np.array([0.5, 0.5])}
    if mode is not None:
        weightings[mode] = visitation(theorem1_contrast_mdp(), c, mode).probs

    observed = {"grad_log_p_s1": score, "grad_log_p_s1_fd_rel_err": score_err}
    ok = abs(score - (-0.245)) <= 5e-4 and score_err <= 1e-6
    for label, w in weightings.items():
        spec = PopulationSpec(w, CoupledPolicy(theta_e, k))
        bc = bc_population_gradient(c, spec)
        report = edm_population_gradient(c, spec)
        bc_fd = finite_diff(lambda x: bc_loss(CoupledPolicy(x[0], k), spec), [theta_e])[0]
        ok &= abs(bc) <= 1e-12 and abs(bc_fd) <= 1e-8 and abs(report.total) > 0.03
        observed[f"bc_grad[{label}]"] = bc
        observed[f"edm_grad_total[{label}]"] = report.total
        observed[f"edm_grad_fd_rel_err[{label}]"] = report.max_rel_err
    return CheckResult(
        "theorem1" if mode is None else f"theorem1[{mode}]", bool(ok), observed,
        {"grad_log_p_s1": -0.245, "bc_grad[uniform]": 0.0},
        5e-4, True, "EDM loss gradient is nonzero at the realizable expert",
    )


@dataclass
class ConsistencyResult:
    bc: DescentTrace
    edm: DescentTrace
    theta_expert: float
    check: CheckResult = field(default=None)


def consistency_experiment(k: float = 0.5, weights=(0.5, 0.5), lr: float = 0.5,
                           steps: int = 5000, theta_expert: float = 1.0) -> ConsistencyResult:
    """Population BC and EDM descent from theta = 0 toward a realizable expert."""
    spec = PopulationSpec.coupled(theta_expert, k, weights)
    bc = gradient_descent("bc", 0.0, lr, steps, spec)
    edm = gradient_descent("edm", 0.0, lr, steps, spec)
    bc_gap = abs(bc.final_theta - theta_expert)
    edm_gap = abs(edm.final_theta - theta_expert)
    check = CheckResult(
        f"consistency[k={k:g}]", bc_gap < 1e-3,
        {"bc_final_theta": bc.final_theta, "edm_final_theta": edm.final_theta,
         "bc_gap": bc_gap, "edm_gap": edm_gap, "edm_final_grad": edm.final_grad},
        {"bc_final_theta": theta_expert},
        1e-3, True, "EDM fixed point is reported, not asserted",
    )
    return ConsistencyResult(bc, edm, theta_expert, check)
