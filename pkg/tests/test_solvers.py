"""Inner solvers: exact optimality, iterative stability, determinism."""
from __future__ import annotations

import numpy as np
import pytest
from conftest import random_joint_policy, random_markov_game

from neppo.games import (
    CapacityError,
    NormalFormGame,
    TabularPolicy,
    evaluate_exact,
    uniform_joint_policy,
    uniform_policy,
)
from neppo.oracles import toy_game
from neppo.potentials import KIND_CONVEX, PotentialParams, potential_value
from neppo.solvers import (
    COOP_STABLE_LEARNING_RATE,
    MODE_EXACT,
    MODE_ITERATIVE,
    SolverBudget,
    coop_game_solver,
    rl_solver,
)

EXACT = SolverBudget(mode=MODE_EXACT)


def _convex(w: float) -> PotentialParams:
    return PotentialParams(KIND_CONVEX, np.array([w]))


def _argmax_profile(policy) -> tuple[int, ...]:
    return tuple(int(p.table[0].argmax()) for p in policy.policies)


def test_budget_validation():
    with pytest.raises(ValueError):
        SolverBudget(mode="other")
    with pytest.raises(ValueError):
        SolverBudget(mode=MODE_ITERATIVE, iterations=0)
    with pytest.raises(ValueError):
        SolverBudget(mode=MODE_ITERATIVE, learning_rate=0.0)
    assert SolverBudget(mode=MODE_EXACT, learning_rate=0.0).iterations == 50


# ---------------------------------------------------------------------------
# Cooperative solver
# ---------------------------------------------------------------------------

def test_exact_coop_matches_known_maximizers():
    game = toy_game()
    warm = uniform_joint_policy(game)
    assert _argmax_profile(coop_game_solver(warm, _convex(0.2), game, EXACT)) == (1, 1)
    assert _argmax_profile(coop_game_solver(warm, _convex(0.5), game, EXACT)) == (1, 0)
    assert _argmax_profile(coop_game_solver(warm, _convex(0.8), game, EXACT)) == (0, 0)


def test_exact_coop_dominates_random_policies():
    for seed in range(3):
        rng = np.random.default_rng(400 + seed)
        game = random_markov_game(rng)
        params = _convex(float(rng.uniform(0, 1)))
        best = coop_game_solver(uniform_joint_policy(game), params, game, EXACT)
        best_value = potential_value(params, game, best)
        for _ in range(100):
            other = random_joint_policy(rng, game)
            assert best_value >= potential_value(params, game, other) - 1e-9


def test_iterative_coop_monotone_at_stable_step():
    game = toy_game()
    budget = SolverBudget(
        mode=MODE_ITERATIVE, iterations=1, learning_rate=COOP_STABLE_LEARNING_RATE
    )
    for wi in range(1, 10):
        params = _convex(wi / 10.0)
        pi = uniform_joint_policy(game)
        prev = potential_value(params, game, pi)
        for _ in range(25):
            pi = coop_game_solver(pi, params, game, budget)
            value = potential_value(params, game, pi)
            assert value >= prev - 1e-12
            prev = value


def test_iterative_coop_improves_from_warm_start():
    rng = np.random.default_rng(5)
    game = random_markov_game(rng)
    params = _convex(0.4)
    warm = random_joint_policy(rng, game)
    budget = SolverBudget(mode=MODE_ITERATIVE, iterations=40, learning_rate=0.1)
    out = coop_game_solver(warm, params, game, budget)
    assert potential_value(params, game, out) >= potential_value(params, game, warm) - 1e-12


def test_exact_coop_capacity_error():
    big = NormalFormGame(2, (1024, 1024), np.zeros((2, 1024 * 1024)))
    with pytest.raises(CapacityError):
        coop_game_solver(uniform_joint_policy(big), _convex(0.5), big, EXACT)


# ---------------------------------------------------------------------------
# Best-response solver
# ---------------------------------------------------------------------------

def test_exact_rl_matches_known_best_responses():
    game = toy_game()
    b1 = (TabularPolicy(1, np.array([[1.0, 0.0]])),)
    out = rl_solver(uniform_policy(game, 0), b1, game.payoff[0][None, :], game, EXACT)
    assert out.table[0].argmax() == 0
    a2 = (TabularPolicy(0, np.array([[0.0, 1.0]])),)
    out = rl_solver(uniform_policy(game, 1), a2, game.payoff[1][None, :], game, EXACT)
    assert out.table[0].argmax() == 1


def test_iterative_rl_vanishing_step_returns_warm_start():
    rng = np.random.default_rng(6)
    game = random_markov_game(rng)
    warm = random_joint_policy(rng, game).policies[0]
    others = (random_joint_policy(rng, game).policies[1],)
    budget = SolverBudget(mode=MODE_ITERATIVE, iterations=1, learning_rate=1e-12)
    out = rl_solver(warm, others, game.rewards[0], game, budget)
    assert np.max(np.abs(out.table - warm.table)) <= 1e-9


def test_exact_rl_dominates_iterative_for_any_budget():
    for seed in range(5):
        rng = np.random.default_rng(500 + seed)
        game = random_markov_game(
            rng, num_states=int(rng.integers(1, 3)),
            action_counts=tuple(rng.integers(1, 4, size=2)),
        )
        player = int(rng.integers(0, 2))
        warm = random_joint_policy(rng, game).policies[player]
        others = random_joint_policy(rng, game).without(player)
        reward = game.rewards[player]

        def value_of(candidate):
            profile = sorted(others + (candidate,), key=lambda p: p.player)
            from neppo.games import JointPolicy

            return evaluate_exact(game, JointPolicy(tuple(profile))).values[player]

        exact_value = value_of(rl_solver(warm, others, reward, game, EXACT))
        budget = SolverBudget(
            mode=MODE_ITERATIVE,
            iterations=int(rng.integers(1, 60)),
            learning_rate=float(rng.uniform(0.01, 1.0)),
        )
        iter_value = value_of(rl_solver(warm, others, reward, game, budget))
        assert exact_value >= iter_value - 1e-9


def test_iterative_rl_approaches_best_response_value():
    from neppo.games import JointPolicy

    rng = np.random.default_rng(8)
    game = random_markov_game(rng)
    player = 0
    others = random_joint_policy(rng, game).without(player)
    warm = uniform_policy(game, player)
    reward = game.rewards[player]

    def value_of(candidate):
        profile = sorted(others + (candidate,), key=lambda p: p.player)
        return evaluate_exact(game, JointPolicy(tuple(profile))).values[player]

    exact_value = value_of(rl_solver(warm, others, reward, game, EXACT))
    budget = SolverBudget(mode=MODE_ITERATIVE, iterations=300, learning_rate=2.0)
    out_value = value_of(rl_solver(warm, others, reward, game, budget))
    assert out_value >= exact_value - 1e-3


# ---------------------------------------------------------------------------
# Determinism (exact occupancy and sampled gradients)
# ---------------------------------------------------------------------------

def test_solvers_are_bit_deterministic():
    rng = np.random.default_rng(9)
    game = random_markov_game(rng)
    warm = random_joint_policy(rng, game)
    for episodes in (0, 64):
        budget = SolverBudget(
            mode=MODE_ITERATIVE, iterations=5, learning_rate=0.3,
            episodes=episodes, seed=123,
        )
        a = coop_game_solver(warm, _convex(0.3), game, budget)
        b = coop_game_solver(warm, _convex(0.3), game, budget)
        for p, q in zip(a.policies, b.policies):
            assert np.array_equal(p.table, q.table)
        x = rl_solver(warm.policies[0], warm.without(0), game.rewards[0], game, budget)
        y = rl_solver(warm.policies[0], warm.without(0), game.rewards[0], game, budget)
        assert np.array_equal(x.table, y.table)


def test_sampled_gradients_improve_value():
    rng = np.random.default_rng(10)
    game = random_markov_game(rng, num_states=2)
    warm = uniform_policy(game, 0)
    others = random_joint_policy(rng, game).without(0)
    budget = SolverBudget(
        mode=MODE_ITERATIVE, iterations=30, learning_rate=0.5, episodes=256, seed=7
    )
    out = rl_solver(warm, others, game.rewards[0], game, budget)
    from neppo.games import JointPolicy

    def value_of(candidate):
        profile = sorted(others + (candidate,), key=lambda p: p.player)
        return evaluate_exact(game, JointPolicy(tuple(profile))).values[0]

    assert value_of(out) > value_of(warm)
