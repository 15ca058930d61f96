"""Shared random-instance builders for the test suite."""
from __future__ import annotations

import numpy as np

from neppo.games import JointPolicy, MarkovGame, NormalFormGame, TabularPolicy, as_markov


def random_markov_game(
    rng: np.random.Generator,
    num_players: int = 2,
    num_states: int = 3,
    action_counts: tuple[int, ...] = (2, 2),
    gamma: float = 0.9,
    reward_lo: float = -1.0,
    reward_hi: float = 1.0,
) -> MarkovGame:
    a_joint = int(np.prod(action_counts))
    transition = rng.dirichlet(np.ones(num_states), size=(num_states, a_joint))
    rewards = rng.uniform(reward_lo, reward_hi, size=(num_players, num_states, a_joint))
    rho = rng.dirichlet(np.ones(num_states))
    return MarkovGame(num_players, action_counts, transition, rewards, gamma, rho)


def random_normal_form(
    rng: np.random.Generator,
    action_counts: tuple[int, ...] = (2, 2),
    lo: float = 0.0,
    hi: float = 1.0,
) -> NormalFormGame:
    n = len(action_counts)
    payoff = rng.uniform(lo, hi, size=(n, int(np.prod(action_counts))))
    return NormalFormGame(n, action_counts, payoff)


def random_identical_interest(
    rng: np.random.Generator, markov: bool = False
) -> MarkovGame | NormalFormGame:
    if not markov:
        counts = tuple(rng.integers(2, 4, size=2))
        shared = rng.uniform(-1.0, 1.0, size=int(np.prod(counts)))
        return NormalFormGame(2, counts, np.stack([shared, shared]))
    num_states = int(rng.integers(2, 4))
    counts = (2, 2)
    a_joint = 4
    transition = rng.dirichlet(np.ones(num_states), size=(num_states, a_joint))
    shared = rng.uniform(-1.0, 1.0, size=(num_states, a_joint))
    rewards = np.stack([shared, shared])
    rho = rng.dirichlet(np.ones(num_states))
    return MarkovGame(2, counts, transition, rewards, 0.9, rho)


def random_policy(rng: np.random.Generator, game, player: int) -> TabularPolicy:
    g = as_markov(game)
    table = rng.dirichlet(np.ones(g.action_counts[player]), size=g.num_states)
    return TabularPolicy(player, table)


def random_joint_policy(rng: np.random.Generator, game) -> JointPolicy:
    g = as_markov(game)
    return JointPolicy(tuple(random_policy(rng, g, i) for i in range(g.num_players)))
