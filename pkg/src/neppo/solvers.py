"""Inner solvers: cooperative shared-reward maximization and best response.

Both solvers come in two modes.  Exact mode runs value iteration to a
1e-10 Bellman residual and returns a deterministic policy (warm starts are
ignored).  Iterative mode runs a fixed budget of tabular softmax
policy-gradient steps from the warm start; gradients use exact occupancy
measures by default, or Monte-Carlo estimates when an episode budget is
given.  Identical inputs (including the seed) give bit-identical outputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng as _rng
from .games import (
    Game,
    JointPolicy,
    MarkovGame,
    TabularPolicy,
    as_markov,
    check_exact_capacity,
    default_horizon,
    deterministic_policy,
    induced_mdp,
    returns_from_rollouts,
    rollout_batch,
    value_iteration,
)
from .potentials import PotentialParams, StateFeatures, stage_reward_table

MODE_EXACT = "exact"
MODE_ITERATIVE = "iterative"

# step size at or below which the iterative cooperative solver is monotone
# in the shared value on desk-scale games
COOP_STABLE_LEARNING_RATE = 0.1

_CLIP_EPOCHS = 4  # surrogate refits per best-response gradient step


@dataclass(frozen=True)
class SolverBudget:
    """Iteration/step budget for one inner solver invocation."""
    mode: str = MODE_EXACT
    iterations: int = 50
    learning_rate: float = 0.1
    clip_ratio: float = 0.2
    episodes: int = 0  # 0 = exact occupancy gradients
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in (MODE_EXACT, MODE_ITERATIVE):
            raise ValueError(f"mode must be '{MODE_EXACT}' or '{MODE_ITERATIVE}'")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.mode == MODE_ITERATIVE and not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0 in iterative mode")
        if self.clip_ratio <= 0:
            raise ValueError("clip_ratio must be > 0")
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")


# ---------------------------------------------------------------------------
# Exact solvers
# ---------------------------------------------------------------------------

def maximize_shared_stage_reward(game: Game, stage_table: np.ndarray) -> JointPolicy:
    """Deterministic joint policy maximizing the return of a shared (S, A) table.

    Value iteration over the joint-action MDP; argmax ties resolve to the
    lowest flat joint-action index.
    """
    g = as_markov(game)
    check_exact_capacity(g)
    _, greedy_flat = value_iteration(g.transition, np.asarray(stage_table, float), g.discount)
    per_player = np.unravel_index(greedy_flat, g.action_counts)
    return JointPolicy(tuple(
        deterministic_policy(g, i, per_player[i]) for i in range(g.num_players)
    ))


def _best_response_table(
    game: MarkovGame,
    player: int,
    others: Sequence[TabularPolicy],
    reward_table: np.ndarray,
) -> TabularPolicy:
    check_exact_capacity(game)
    p_i, r_i = induced_mdp(game, player, others, reward_table)
    _, greedy = value_iteration(p_i, r_i, game.discount)
    return deterministic_policy(game, player, greedy)


# ---------------------------------------------------------------------------
# Occupancy-measure policy gradients
# ---------------------------------------------------------------------------

def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _logits(table: np.ndarray) -> np.ndarray:
    return np.log(np.clip(table, 1e-12, None))


def _advantages_exact(
    p_i: np.ndarray, r_i: np.ndarray, table: np.ndarray, gamma: float, rho: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Advantage A(s, a) and discounted occupancy d(s) of `table` in an MDP."""
    r_pi = np.einsum("sa,sa->s", table, r_i)
    if gamma == 0.0:
        return r_i - r_pi[:, None], rho.copy()
    p_pi = np.einsum("sa,sat->st", table, p_i)
    n = p_pi.shape[0]
    v = np.linalg.solve(np.eye(n) - gamma * p_pi, r_pi)
    q = r_i + gamma * np.einsum("sat,t->sa", p_i, v)
    d = np.linalg.solve(np.eye(n) - gamma * p_pi.T, rho)
    return q - v[:, None], d


def _player_actions(flat: np.ndarray, counts: Sequence[int], player: int) -> np.ndarray:
    stride = int(np.prod(counts[player + 1:]))
    return (flat // stride) % counts[player]


def _advantages_sampled(
    game: MarkovGame,
    player: int,
    policy: TabularPolicy,
    others: Sequence[TabularPolicy],
    reward_table: np.ndarray,
    episodes: int,
    gen: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo estimate of (A, d) from rollouts against the frozen others."""
    horizon = default_horizon(game)
    joint = JointPolicy(tuple(sorted(tuple(others) + (policy,), key=lambda p: p.player)))
    states, actions = rollout_batch(game, joint, episodes, horizon, gen)
    table = np.asarray(reward_table, dtype=np.float64)
    stage = table[states, actions]
    togo = np.zeros_like(stage)
    togo[:, -1] = stage[:, -1]
    for t in range(horizon - 2, -1, -1):
        togo[:, t] = stage[:, t] + game.discount * togo[:, t + 1]
    own = _player_actions(actions, game.action_counts, player)
    m = game.action_counts[player]
    n = game.num_states
    q_sum = np.zeros((n, m))
    q_cnt = np.zeros((n, m))
    np.add.at(q_sum, (states.ravel(), own.ravel()), togo.ravel())
    np.add.at(q_cnt, (states.ravel(), own.ravel()), 1.0)
    v_sum = q_sum.sum(axis=1)
    v_cnt = q_cnt.sum(axis=1)
    q_hat = np.divide(q_sum, q_cnt, out=np.zeros_like(q_sum), where=q_cnt > 0)
    v_hat = np.divide(v_sum, v_cnt, out=np.zeros(n), where=v_cnt > 0)
    adv = np.where(q_cnt > 0, q_hat - v_hat[:, None], 0.0)
    weights = game.discount ** np.arange(horizon)
    d_hat = np.zeros(n)
    np.add.at(d_hat, states.ravel(), np.broadcast_to(weights, states.shape).ravel())
    return adv, d_hat / episodes


def _advantage_and_occupancy(
    game: MarkovGame,
    player: int,
    policy: TabularPolicy,
    others: Sequence[TabularPolicy],
    reward_table: np.ndarray,
    budget: SolverBudget,
    gen: np.random.Generator | None,
) -> tuple[np.ndarray, np.ndarray]:
    if budget.episodes > 0:
        assert gen is not None
        return _advantages_sampled(
            game, player, policy, others, reward_table, budget.episodes, gen
        )
    p_i, r_i = induced_mdp(game, player, others, reward_table)
    return _advantages_exact(p_i, r_i, policy.table, game.discount, game.initial_dist)


def _clipped_surrogate_steps(
    logits: np.ndarray,
    adv: np.ndarray,
    occupancy: np.ndarray,
    budget: SolverBudget,
) -> np.ndarray:
    """Gradient steps on the clipped-ratio surrogate around the current policy."""
    old = _softmax_rows(logits)
    for _ in range(_CLIP_EPOCHS):
        table = _softmax_rows(logits)
        ratio = table / np.clip(old, 1e-12, None)
        active = np.where(
            adv >= 0, ratio <= 1.0 + budget.clip_ratio, ratio >= 1.0 - budget.clip_ratio
        )
        g = occupancy[:, None] * adv * active
        grad = table * (g - (table * g).sum(axis=1, keepdims=True))
        logits = logits + budget.learning_rate * grad
    return logits


# ---------------------------------------------------------------------------
# Public solvers
# ---------------------------------------------------------------------------

def coop_game_solver(
    warm_start: JointPolicy,
    params: PotentialParams,
    game: Game,
    budget: SolverBudget,
    features: StateFeatures | None = None,
) -> JointPolicy:
    """Maximize the potential's shared return over joint policies.

    Exact mode ignores the warm start and returns the global maximizer via
    joint value iteration.  Iterative mode runs `budget.iterations` rounds
    of sequential per-player softmax policy-gradient ascent on the shared
    value, starting from the warm start.
    """
    g = as_markov(game)
    table = stage_reward_table(params, g, features)
    if budget.mode == MODE_EXACT:
        return maximize_shared_stage_reward(g, table)
    logits = [_logits(p.table) for p in warm_start.policies]
    policies = [TabularPolicy(i, _softmax_rows(lg)) for i, lg in enumerate(logits)]
    for it in range(budget.iterations):
        for i in range(g.num_players):
            others = tuple(p for p in policies if p.player != i)
            gen = (
                _rng.stream(budget.seed, "coop_solver", it, i)
                if budget.episodes > 0 else None
            )
            adv, occ = _advantage_and_occupancy(
                g, i, policies[i], others, table, budget, gen
            )
            logits[i] = logits[i] + budget.learning_rate * (
                occ[:, None] * policies[i].table * adv
            )
            policies[i] = TabularPolicy(i, _softmax_rows(logits[i]))
    return JointPolicy(tuple(policies))


def rl_solver(
    warm_start: TabularPolicy,
    others: Sequence[TabularPolicy],
    reward_table: np.ndarray,
    game: Game,
    budget: SolverBudget,
) -> TabularPolicy:
    """Best-respond to frozen opponents under an arbitrary stage reward (S, A).

    Exact mode returns the deterministic best response from value
    iteration.  Iterative mode runs `budget.iterations` clipped-ratio
    policy-gradient steps from the warm start.
    """
    g = as_markov(game)
    player = warm_start.player
    if budget.mode == MODE_EXACT:
        return _best_response_table(g, player, others, reward_table)
    logits = _logits(warm_start.table)
    for it in range(budget.iterations):
        policy = TabularPolicy(player, _softmax_rows(logits))
        gen = (
            _rng.stream(budget.seed, "rl_solver", it, player)
            if budget.episodes > 0 else None
        )
        adv, occ = _advantage_and_occupancy(
            g, player, policy, tuple(others), reward_table, budget, gen
        )
        logits = _clipped_surrogate_steps(logits, adv, occ, budget)
    return TabularPolicy(player, _softmax_rows(logits))
