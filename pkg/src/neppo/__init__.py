"""Potential-based equilibrium solving for finite normal-form and Markov games."""

from .algorithm import (
    FiReport,
    IterationTrace,
    NeppoConfig,
    compute_F,
    exact_objective_report,
    run,
    sample_unit_sphere,
    smooth_max,
    zeroth_order_gradient,
)
from .games import (
    CapacityError,
    GameFormatError,
    JointPolicy,
    MarkovGame,
    NormalFormGame,
    TabularPolicy,
    ValueVector,
    as_markov,
    best_response_exact,
    evaluate_exact,
    evaluate_mc,
    is_epsilon_nash,
    load_game,
    regret,
    save_game,
)
from .potentials import (
    PotentialParams,
    StateFeatures,
    perturb,
    potential_value,
    project,
    stage_reward,
)
from .solvers import SolverBudget, coop_game_solver, rl_solver

__all__ = [
    "CapacityError",
    "FiReport",
    "GameFormatError",
    "IterationTrace",
    "JointPolicy",
    "MarkovGame",
    "NeppoConfig",
    "NormalFormGame",
    "PotentialParams",
    "SolverBudget",
    "StateFeatures",
    "TabularPolicy",
    "ValueVector",
    "as_markov",
    "best_response_exact",
    "compute_F",
    "coop_game_solver",
    "evaluate_exact",
    "evaluate_mc",
    "exact_objective_report",
    "is_epsilon_nash",
    "load_game",
    "perturb",
    "potential_value",
    "project",
    "regret",
    "rl_solver",
    "run",
    "sample_unit_sphere",
    "save_game",
    "smooth_max",
    "stage_reward",
    "zeroth_order_gradient",
]
