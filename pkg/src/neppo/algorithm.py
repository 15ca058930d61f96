"""Outer loop: learn potential parameters by two-point zeroth-order descent.

Each iteration perturbs the parameter vector along a random unit
direction, solves the induced cooperative game at both perturbations
(warm-started from the persistent shared policy, which is then replaced
by the +delta solution), best-responds per player, scores both sides with
the smoothed worst-case objective, and takes a projected gradient step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import rng as _rng
from .games import (
    Game,
    JointPolicy,
    TabularPolicy,
    as_markov,
    best_response_exact,
    default_horizon,
    evaluate_exact,
    regret,
    returns_from_rollouts,
    rollout_batch,
    shared_value_exact,
    uniform_joint_policy,
    uniform_policy,
)
from .potentials import (
    PotentialParams,
    StateFeatures,
    perturb,
    project,
    stage_reward_table,
)
from .solvers import (
    MODE_EXACT,
    MODE_ITERATIVE,
    SolverBudget,
    coop_game_solver,
    maximize_shared_stage_reward,
    rl_solver,
)


@dataclass(frozen=True)
class NeppoConfig:
    """Hyperparameters of the outer loop; all defaults are overridable."""
    delta: float = 0.05
    eta: float = 0.05
    beta: float = 10.0
    k1: int = 50
    k2: int = 50
    outer_iterations: int = 300
    seed: int = 0
    coop_mode: str = MODE_EXACT
    rl_mode: str = MODE_EXACT
    mc_episodes: int = 0  # 0 = exact evaluation of the objective
    coop_learning_rate: float = 0.1
    rl_learning_rate: float = 0.1
    step_decay: bool = False  # optional 1/sqrt(t) decay of eta
    report_window: int = 20

    def __post_init__(self) -> None:
        for name in ("delta", "eta", "beta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("k1", "k2", "outer_iterations", "report_window"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.mc_episodes < 0:
            raise ValueError("mc_episodes must be >= 0")
        for name in ("coop_mode", "rl_mode"):
            if getattr(self, name) not in (MODE_EXACT, MODE_ITERATIVE):
                raise ValueError(f"{name} must be '{MODE_EXACT}' or '{MODE_ITERATIVE}'")


@dataclass(frozen=True)
class FiReport:
    """Per-player objective values with the four returns that produced them.

    f is derived in construction as
    (phi_at_eq - phi_at_dev) - (j_at_eq - j_at_dev), so the recomputation
    identity holds bit-exactly.
    """
    phi_at_eq: np.ndarray
    phi_at_dev: np.ndarray
    j_at_eq: np.ndarray
    j_at_dev: np.ndarray
    f: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        arrays = {}
        for name in ("phi_at_eq", "phi_at_dev", "j_at_eq", "j_at_dev"):
            a = np.atleast_1d(np.asarray(getattr(self, name), dtype=np.float64))
            a.setflags(write=False)
            arrays[name] = a
            object.__setattr__(self, name, a)
        f = (arrays["phi_at_eq"] - arrays["phi_at_dev"]) - (
            arrays["j_at_eq"] - arrays["j_at_dev"]
        )
        f.setflags(write=False)
        object.__setattr__(self, "f", f)

    @property
    def num_players(self) -> int:
        return self.f.shape[0]


@dataclass(frozen=True)
class IterationTrace:
    """One outer iteration: parameter move, objective values, diagnostics."""
    iteration: int
    w_before: np.ndarray
    w_after: np.ndarray
    u: np.ndarray
    f_tilde_hat: float
    f_tilde_check: float
    f: np.ndarray       # per-player objective at the +delta side
    dj: np.ndarray      # per-player value change under own best response
    dphi: np.ndarray    # per-player potential change under own best response
    regret_max: float   # exact max regret of the current shared policy
    j_values: np.ndarray


# ---------------------------------------------------------------------------
# Objective pieces
# ---------------------------------------------------------------------------

def smooth_max(values: Sequence[float], beta: float) -> float:
    """Log-sum-exp upper bound on max(values): max <= result <= max + ln(N)/beta."""
    if not beta > 0:
        raise ValueError("beta must be > 0")
    v = np.asarray(values, dtype=np.float64)
    m = float(v.max())
    return m + float(np.log(np.sum(np.exp(beta * (v - m))))) / beta


def sample_unit_sphere(p: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the unit sphere in R^p (normalized Gaussian)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    while True:
        x = rng.standard_normal(p)
        norm = np.linalg.norm(x)
        if norm > 0:
            return x / norm


def zeroth_order_gradient(
    f_hat: float, f_check: float, u: np.ndarray, delta: float, p: int
) -> np.ndarray:
    """Two-point gradient surrogate (p / 2 delta) (f_hat - f_check) u."""
    if not delta > 0:
        raise ValueError("delta must be > 0")
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    if u.shape != (p,):
        raise ValueError(f"direction shape {u.shape} != ({p},)")
    if p >= 1 and abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    return (p / (2.0 * delta)) * (f_hat - f_check) * u


def compute_F(
    params: PotentialParams,
    game: Game,
    coop_policy: JointPolicy,
    br_policies: Sequence[TabularPolicy],
    mc_episodes: int = 0,
    rng_seed: int = 0,
    features: StateFeatures | None = None,
) -> FiReport:
    """Per-player potential-vs-value deviation gap at the cooperative optimum.

    For each player, compares the change in the potential and in the
    player's own return when that player unilaterally switches from the
    cooperative policy to its best-response candidate.  With
    mc_episodes > 0 the four returns are Monte-Carlo estimates sharing
    common random numbers per player.
    """
    g = as_markov(game)
    table = stage_reward_table(params, g, features)
    return compute_F_from_table(g, table, coop_policy, br_policies, mc_episodes, rng_seed)


def compute_F_from_table(
    game: Game,
    stage_table: np.ndarray,
    coop_policy: JointPolicy,
    br_policies: Sequence[TabularPolicy],
    mc_episodes: int = 0,
    rng_seed: int = 0,
) -> FiReport:
    """compute_F against an explicit shared stage-reward table (S, A)."""
    g = as_markov(game)
    n = g.num_players
    brs = sorted(br_policies, key=lambda p: p.player)
    if [p.player for p in brs] != list(range(n)):
        raise ValueError("br_policies must contain one policy per player")
    phi_eq = np.empty(n)
    phi_dev = np.empty(n)
    j_eq = np.empty(n)
    j_dev = np.empty(n)
    if mc_episodes == 0:
        phi_eq[:] = shared_value_exact(g, coop_policy, stage_table)
        j_eq[:] = evaluate_exact(g, coop_policy).values
        for i in range(n):
            dev = coop_policy.replaced(brs[i])
            phi_dev[i] = shared_value_exact(g, dev, stage_table)
            j_dev[i] = evaluate_exact(g, dev).values[i]
        return FiReport(phi_eq, phi_dev, j_eq, j_dev)
    horizon = default_horizon(g)
    for i in range(n):
        dev = coop_policy.replaced(brs[i])
        gen_eq = _rng.stream(rng_seed, "objective_mc", i)
        states, actions = rollout_batch(g, coop_policy, mc_episodes, horizon, gen_eq)
        phi_eq[i] = returns_from_rollouts(stage_table, states, actions, g.discount).mean()
        j_eq[i] = returns_from_rollouts(g.rewards[i], states, actions, g.discount).mean()
        gen_dev = _rng.stream(rng_seed, "objective_mc", i)  # common random numbers
        states, actions = rollout_batch(g, dev, mc_episodes, horizon, gen_dev)
        phi_dev[i] = returns_from_rollouts(stage_table, states, actions, g.discount).mean()
        j_dev[i] = returns_from_rollouts(g.rewards[i], states, actions, g.discount).mean()
    return FiReport(phi_eq, phi_dev, j_eq, j_dev)


def exact_objective_report(
    params: PotentialParams,
    game: Game,
    features: StateFeatures | None = None,
) -> tuple[FiReport, JointPolicy]:
    """Exact-solver evaluation of the objective at fixed parameters.

    Returns the per-player report together with the cooperative optimum it
    was evaluated at.
    """
    g = as_markov(game)
    table = stage_reward_table(params, g, features)
    coop = maximize_shared_stage_reward(g, table)
    brs = [best_response_exact(g, i, coop.without(i))[0] for i in range(g.num_players)]
    return compute_F_from_table(g, table, coop, brs), coop


# ---------------------------------------------------------------------------
# Outer loop
# ---------------------------------------------------------------------------

def run(
    game: Game,
    initial_params: PotentialParams,
    config: NeppoConfig,
    features: StateFeatures | None = None,
) -> tuple[JointPolicy, PotentialParams, list[IterationTrace]]:
    """Full optimization run; deterministic given config.seed.

    Returns the final shared policy, the final parameters, and one trace
    record per outer iteration.
    """
    g = as_markov(game)
    params = project(initial_params)
    p = params.dim
    coop_budget = SolverBudget(
        mode=config.coop_mode,
        iterations=config.k1,
        learning_rate=config.coop_learning_rate,
    )
    rl_budget = SolverBudget(
        mode=config.rl_mode,
        iterations=config.k2,
        learning_rate=config.rl_learning_rate,
    )
    pi_phi = uniform_joint_policy(g)
    pi_j = [uniform_policy(g, i) for i in range(g.num_players)]
    traces: list[IterationTrace] = []
    for t in range(config.outer_iterations):
        if p > 0:
            u = sample_unit_sphere(p, _rng.stream(config.seed, "direction", t))
        else:
            u = np.zeros(0)
        hat, check = perturb(params, u, config.delta)
        pi_phi_check = coop_game_solver(pi_phi, check, g, coop_budget, features)
        pi_phi_hat = coop_game_solver(pi_phi, hat, g, coop_budget, features)
        brs_check = [
            rl_solver(pi_j[i], pi_phi_check.without(i), g.rewards[i], g, rl_budget)
            for i in range(g.num_players)
        ]
        brs_hat = [
            rl_solver(pi_j[i], pi_phi_hat.without(i), g.rewards[i], g, rl_budget)
            for i in range(g.num_players)
        ]
        pi_phi = pi_phi_hat
        pi_j = brs_hat
        seed_hat = int(_rng.stream(config.seed, "objective_seed_hat", t).integers(2**62))
        seed_check = int(_rng.stream(config.seed, "objective_seed_check", t).integers(2**62))
        report_hat = compute_F(
            hat, g, pi_phi_hat, brs_hat, config.mc_episodes, seed_hat, features
        )
        report_check = compute_F(
            check, g, pi_phi_check, brs_check, config.mc_episodes, seed_check, features
        )
        f_tilde_hat = smooth_max(report_hat.f, config.beta)
        f_tilde_check = smooth_max(report_check.f, config.beta)
        w_before = params.w
        if p > 0:
            grad = zeroth_order_gradient(
                f_tilde_hat, f_tilde_check, u, config.delta, p
            )
            eta_t = config.eta / np.sqrt(t + 1.0) if config.step_decay else config.eta
            params = project(params.with_w(params.w - eta_t * grad))
        traces.append(IterationTrace(
            iteration=t,
            w_before=w_before,
            w_after=params.w,
            u=u,
            f_tilde_hat=f_tilde_hat,
            f_tilde_check=f_tilde_check,
            f=report_hat.f,
            dj=report_hat.j_at_eq - report_hat.j_at_dev,
            dphi=report_hat.phi_at_eq - report_hat.phi_at_dev,
            regret_max=float(np.max(regret(g, pi_phi))),
            j_values=evaluate_exact(g, pi_phi).values,
        ))
    return pi_phi, params, traces


def trailing_max_f_mean(traces: Sequence[IterationTrace], window: int) -> float:
    """Convergence report: mean of max_i F_i over the trailing window."""
    tail = traces[-window:]
    return float(np.mean([np.max(tr.f) for tr in tail]))
