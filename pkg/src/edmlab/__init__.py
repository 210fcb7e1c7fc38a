"""Tabular laboratory comparing behavioral cloning with energy-based
distribution matching (EDM) on small MDPs."""

from .dists import JointDist, Kind, StateDist
from .ebm import (
    EnergyTable,
    PseudoStateDist,
    coupled_log_pseudo_grad,
    energy,
    grad_log_pseudo,
    joint_model,
    normalizing_gauge,
    pseudo_state_dist,
    pseudo_state_dist_gauged,
)
from .mdp import (
    TabularMdp,
    Trajectory,
    joint_visitation,
    policy_transition_matrix,
    rollout,
    tv_distance,
    validate_mdp,
    visitation,
    visitation_discounted,
    visitation_finite_horizon,
    visitation_stationary,
)
from .objectives import (
    DescentTrace,
    GradientReport,
    PopulationSpec,
    bc_loss,
    bc_population_gradient,
    edm_loss,
    edm_population_gradient,
    finite_diff,
    gradient_descent,
)
from .policies import (
    CoupledPolicy,
    DemoDataset,
    SoftmaxPolicy,
    action_probs,
    coupled_grad_log_prob,
    coupled_to_softmax,
    empirical_joint,
    grad_log_prob,
    log_prob,
)

__version__ = "0.1.0"
