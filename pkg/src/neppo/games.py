"""Finite game representations and tabular policy evaluation.

Normal-form games are embedded as single-state Markov games with a zero
discount, so evaluation, best response and regret have one code path.
All types are immutable value objects; arrays are frozen read-only after
validation and can be shared across threads.
"""
from __future__ import annotations

import json
import math
import string
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng as _rng

DIST_ATOL = 1e-9
BELLMAN_TOL = 1e-10
MC_TRUNCATION_TOL = 1e-6
EXACT_TABLE_CAP = 10**6


class CapacityError(RuntimeError):
    """Dense/exact computation would exceed its table-size cap."""


class GameFormatError(ValueError):
    """Game spec file does not parse into a valid game."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# Game types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalFormGame:
    """One-shot game: per-player payoff over joint pure actions.

    ``payoff`` has shape (num_players, prod(action_counts)); joint actions
    are flattened in C order (player 0 slowest).
    """
    num_players: int
    action_counts: tuple[int, ...]
    payoff: np.ndarray

    def __post_init__(self) -> None:
        if self.num_players < 1:
            raise ValueError("num_players must be >= 1")
        counts = tuple(int(m) for m in self.action_counts)
        if len(counts) != self.num_players or any(m < 1 for m in counts):
            raise ValueError(f"need one action count >= 1 per player, got {counts}")
        object.__setattr__(self, "action_counts", counts)
        pay = np.asarray(self.payoff, dtype=np.float64)
        a_joint = int(np.prod(counts))
        if pay.shape == (self.num_players,) + counts:
            pay = pay.reshape(self.num_players, a_joint)
        if pay.shape != (self.num_players, a_joint):
            raise ValueError(
                f"payoff shape {pay.shape} does not match {self.num_players} players "
                f"x {a_joint} joint actions"
            )
        if not np.all(np.isfinite(pay)):
            raise ValueError("payoff entries must be finite")
        object.__setattr__(self, "payoff", _frozen(pay))

    @property
    def num_joint_actions(self) -> int:
        return int(np.prod(self.action_counts))

    def payoff_at(self, actions: Sequence[int]) -> np.ndarray:
        """Per-player payoff vector at a joint pure action."""
        return self.payoff[:, joint_index(actions, self.action_counts)].copy()


@dataclass(frozen=True)
class MarkovGame:
    """Discounted Markov game with dense transition and reward tables.

    Shapes: transition (S, A, S), rewards (N, S, A), initial_dist (S,)
    with A = prod(action_counts) flattened joint actions in C order.
    Discount 0 is admitted for the single-stage (normal-form) embedding;
    genuine multi-step games use a discount in (0, 1).
    """
    num_players: int
    action_counts: tuple[int, ...]
    transition: np.ndarray
    rewards: np.ndarray
    discount: float
    initial_dist: np.ndarray
    state_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.num_players < 1:
            raise ValueError("num_players must be >= 1")
        counts = tuple(int(m) for m in self.action_counts)
        if len(counts) != self.num_players or any(m < 1 for m in counts):
            raise ValueError(f"need one action count >= 1 per player, got {counts}")
        object.__setattr__(self, "action_counts", counts)
        a_joint = int(np.prod(counts))
        trans = np.asarray(self.transition, dtype=np.float64)
        if trans.ndim != 3 or trans.shape[0] != trans.shape[2] or trans.shape[1] != a_joint:
            raise ValueError(f"transition shape {trans.shape} is not (S, {a_joint}, S)")
        n_states = trans.shape[0]
        rew = np.asarray(self.rewards, dtype=np.float64)
        if rew.shape != (self.num_players, n_states, a_joint):
            raise ValueError(
                f"rewards shape {rew.shape} is not ({self.num_players}, {n_states}, {a_joint})"
            )
        if not np.all(np.isfinite(rew)):
            raise ValueError("reward entries must be finite")
        if np.any(trans < -1e-12):
            raise ValueError("transition probabilities must be nonnegative")
        row_sums = trans.sum(axis=2)
        if np.max(np.abs(row_sums - 1.0)) > DIST_ATOL:
            raise ValueError("every transition row must sum to 1 within 1e-9")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {self.discount}")
        rho = np.asarray(self.initial_dist, dtype=np.float64)
        if rho.shape != (n_states,):
            raise ValueError(f"initial_dist shape {rho.shape} is not ({n_states},)")
        if np.any(rho < -1e-12) or abs(rho.sum() - 1.0) > DIST_ATOL:
            raise ValueError("initial_dist must be a probability vector (1e-9 tolerance)")
        if self.state_names is not None:
            names = tuple(str(s) for s in self.state_names)
            if len(names) != n_states:
                raise ValueError("state_names length must match number of states")
            object.__setattr__(self, "state_names", names)
        object.__setattr__(self, "transition", _frozen(trans))
        object.__setattr__(self, "rewards", _frozen(rew))
        object.__setattr__(self, "initial_dist", _frozen(rho))
        object.__setattr__(self, "discount", float(self.discount))

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    @property
    def num_joint_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def max_abs_reward(self) -> float:
        return float(np.max(np.abs(self.rewards))) if self.rewards.size else 0.0


Game = NormalFormGame | MarkovGame


def joint_index(actions: Sequence[int], action_counts: Sequence[int]) -> int:
    """Flat index of a joint action (C order, player 0 slowest)."""
    return int(np.ravel_multi_index(tuple(int(a) for a in actions), tuple(action_counts)))


def joint_actions(action_counts: Sequence[int]) -> list[tuple[int, ...]]:
    """All joint pure actions in flat-index order."""
    idx = np.indices(tuple(action_counts)).reshape(len(action_counts), -1)
    return [tuple(int(a) for a in col) for col in idx.T]


def as_markov(game: Game) -> MarkovGame:
    """View any supported game as a Markov game (one code path downstream)."""
    if isinstance(game, MarkovGame):
        return game
    a_joint = game.num_joint_actions
    return MarkovGame(
        num_players=game.num_players,
        action_counts=game.action_counts,
        transition=np.ones((1, a_joint, 1)),
        rewards=game.payoff.reshape(game.num_players, 1, a_joint),
        discount=0.0,
        initial_dist=np.ones(1),
    )


def check_exact_capacity(game: MarkovGame) -> None:
    if game.num_states * game.num_joint_actions > EXACT_TABLE_CAP:
        raise CapacityError(
            f"dense table with {game.num_states * game.num_joint_actions} entries "
            f"exceeds the exact-method cap of {EXACT_TABLE_CAP}"
        )


# ---------------------------------------------------------------------------
# Policies and values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TabularPolicy:
    """Per-state action distribution for one player."""
    player: int
    table: np.ndarray  # (S, m_player)

    def __post_init__(self) -> None:
        if self.player < 0:
            raise ValueError("player index must be >= 0")
        table = np.asarray(self.table, dtype=np.float64)
        if table.ndim != 2:
            raise ValueError("policy table must be 2-D (states x actions)")
        if np.any(table < -1e-12):
            raise ValueError("policy probabilities must be nonnegative")
        if np.max(np.abs(table.sum(axis=1) - 1.0)) > DIST_ATOL:
            raise ValueError("every policy row must sum to 1 within 1e-9")
        object.__setattr__(self, "table", _frozen(table))


@dataclass(frozen=True)
class JointPolicy:
    """One tabular policy per player, indexed 0..N-1 with no gaps."""
    policies: tuple[TabularPolicy, ...]

    def __post_init__(self) -> None:
        pols = tuple(self.policies)
        if [p.player for p in pols] != list(range(len(pols))):
            raise ValueError("policies must carry player indices 0..N-1 in order")
        object.__setattr__(self, "policies", pols)

    @property
    def num_players(self) -> int:
        return len(self.policies)

    def without(self, player: int) -> tuple[TabularPolicy, ...]:
        return tuple(p for p in self.policies if p.player != player)

    def replaced(self, policy: TabularPolicy) -> "JointPolicy":
        pols = list(self.policies)
        pols[policy.player] = policy
        return JointPolicy(tuple(pols))


@dataclass(frozen=True)
class ValueVector:
    """Per-player discounted return."""
    values: np.ndarray  # (N,)

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen(np.atleast_1d(self.values)))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def uniform_policy(game: Game, player: int) -> TabularPolicy:
    g = as_markov(game)
    m = g.action_counts[player]
    return TabularPolicy(player, np.full((g.num_states, m), 1.0 / m))


def uniform_joint_policy(game: Game) -> JointPolicy:
    g = as_markov(game)
    return JointPolicy(tuple(uniform_policy(g, i) for i in range(g.num_players)))


def deterministic_policy(game: Game, player: int, actions) -> TabularPolicy:
    """Pure policy playing actions[s] in state s (a scalar means every state)."""
    g = as_markov(game)
    m = g.action_counts[player]
    acts = np.broadcast_to(np.asarray(actions, dtype=int), (g.num_states,))
    table = np.zeros((g.num_states, m))
    table[np.arange(g.num_states), acts] = 1.0
    return TabularPolicy(player, table)


def pure_joint_policy(game: Game, actions: Sequence[int]) -> JointPolicy:
    """Joint pure policy playing the same joint action in every state."""
    return JointPolicy(tuple(
        deterministic_policy(game, i, a) for i, a in enumerate(actions)
    ))


def _check_policy_shapes(game: MarkovGame, pi: JointPolicy) -> None:
    if pi.num_players != game.num_players:
        raise ValueError(f"policy has {pi.num_players} players, game has {game.num_players}")
    for p in pi.policies:
        want = (game.num_states, game.action_counts[p.player])
        if p.table.shape != want:
            raise ValueError(f"player {p.player} policy shape {p.table.shape} != {want}")


# ---------------------------------------------------------------------------
# Exact evaluation
# ---------------------------------------------------------------------------

def joint_action_distribution(game: MarkovGame, pi: JointPolicy) -> np.ndarray:
    """Per-state product distribution over flattened joint actions, shape (S, A)."""
    dist = np.ones((game.num_states, 1))
    for p in pi.policies:
        dist = (dist[:, :, None] * p.table[:, None, :]).reshape(game.num_states, -1)
    return dist


def _policy_chain(game: MarkovGame, pi: JointPolicy) -> tuple[np.ndarray, np.ndarray]:
    """Induced state chain P_pi (S, S) and per-player stage rewards r_pi (N, S)."""
    dist = joint_action_distribution(game, pi)
    p_pi = np.einsum("sa,sat->st", dist, game.transition)
    r_pi = np.einsum("sa,nsa->ns", dist, game.rewards)
    return p_pi, r_pi


def _discounted_values(p_pi: np.ndarray, r_rows: np.ndarray, gamma: float) -> np.ndarray:
    """Solve (I - gamma P) v = r for each row of r_rows; returns same shape."""
    n_states = p_pi.shape[0]
    a = np.eye(n_states) - gamma * p_pi
    return np.linalg.solve(a, r_rows.T).T


def evaluate_exact(game: Game, pi: JointPolicy) -> ValueVector:
    """Per-player discounted return from the initial distribution.

    Solves the linear policy-evaluation system under the joint policy; the
    system is diagonally dominant for discount < 1, so it cannot be singular.
    """
    g = as_markov(game)
    _check_policy_shapes(g, pi)
    check_exact_capacity(g)
    p_pi, r_pi = _policy_chain(g, pi)
    v = _discounted_values(p_pi, r_pi, g.discount)
    return ValueVector(v @ g.initial_dist)


def shared_value_exact(game: Game, pi: JointPolicy, stage_table: np.ndarray) -> float:
    """Discounted return of a shared stage reward table (S, A) under pi."""
    g = as_markov(game)
    _check_policy_shapes(g, pi)
    dist = joint_action_distribution(g, pi)
    p_pi = np.einsum("sa,sat->st", dist, g.transition)
    r_pi = np.einsum("sa,sa->s", dist, np.asarray(stage_table, dtype=np.float64))
    v = _discounted_values(p_pi, r_pi[None, :], g.discount)[0]
    return float(v @ g.initial_dist)


def induced_mdp(
    game: MarkovGame,
    player: int,
    others: Sequence[TabularPolicy],
    reward_table: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Single-agent MDP seen by `player` when the others are frozen.

    reward_table has shape (S, A) over joint actions; returns transition
    (S, m_player, S) and reward (S, m_player).
    """
    got = sorted(p.player for p in others)
    want = [i for i in range(game.num_players) if i != player]
    if got != want:
        raise ValueError(f"others must fix exactly players {want}, got {got}")
    counts = game.action_counts
    n = game.num_players
    pool = "".join(c for c in string.ascii_lowercase if c not in "sz")
    if n > len(pool):
        raise CapacityError(f"at most {len(pool)} players supported")
    letters = pool[:n]
    tables = {p.player: p.table for p in others}
    other_subs = ["s" + letters[j] for j in want]
    other_tables = [tables[j] for j in want]
    p_expr = ",".join(["s" + letters + "z"] + other_subs) + "->s" + letters[player] + "z"
    p_i = np.einsum(
        p_expr,
        game.transition.reshape((game.num_states,) + counts + (game.num_states,)),
        *other_tables,
    )
    r_expr = ",".join(["s" + letters] + other_subs) + "->s" + letters[player]
    r_i = np.einsum(
        r_expr,
        np.asarray(reward_table, dtype=np.float64).reshape((game.num_states,) + counts),
        *other_tables,
    )
    return p_i, r_i


def value_iteration(
    p: np.ndarray, r: np.ndarray, gamma: float, tol: float = BELLMAN_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Optimal values and greedy actions for an MDP given as (S, m, S), (S, m).

    Runs to sup-norm Bellman residual <= tol; argmax ties resolve to the
    lowest action index.
    """
    n_states = p.shape[0]
    v = np.zeros(n_states)
    if gamma == 0.0:
        q = r
        v = q.max(axis=1)
        return v, q.argmax(axis=1)
    r_max = float(np.max(np.abs(r))) if r.size else 0.0
    span = max(r_max / (1.0 - gamma), tol)
    cap = int(math.ceil(math.log(tol / span) / math.log(gamma))) + 16
    for _ in range(max(cap, 1)):
        q = r + gamma * (p @ v)
        v_next = q.max(axis=1)
        residual = float(np.max(np.abs(v_next - v)))
        v = v_next
        if residual <= tol:
            return v, q.argmax(axis=1)
    raise RuntimeError("value iteration failed to reach the Bellman residual target")


def best_response_exact(
    game: Game, player: int, others: Sequence[TabularPolicy]
) -> tuple[TabularPolicy, float]:
    """Exact best response of `player` to frozen opponents, with its value.

    The returned policy is deterministic (greedy from value iteration); the
    value is recomputed by exact policy evaluation of the joint profile.
    """
    g = as_markov(game)
    check_exact_capacity(g)
    p_i, r_i = induced_mdp(g, player, others, g.rewards[player])
    _, greedy = value_iteration(p_i, r_i, g.discount)
    br = deterministic_policy(g, player, greedy)
    joint = JointPolicy(tuple(sorted(tuple(others) + (br,), key=lambda p: p.player)))
    value = float(evaluate_exact(g, joint).values[player])
    return br, value


def regret(game: Game, pi: JointPolicy) -> np.ndarray:
    """Per-player best-response gain over the current value (>= 0 up to fp)."""
    g = as_markov(game)
    _check_policy_shapes(g, pi)
    current = evaluate_exact(g, pi).values
    gains = np.empty(g.num_players)
    for i in range(g.num_players):
        _, br_value = best_response_exact(g, i, pi.without(i))
        gains[i] = br_value - current[i]
    return gains


def is_epsilon_nash(game: Game, pi: JointPolicy, epsilon: float) -> bool:
    """True iff no player can gain more than epsilon (1e-9 slack) by deviating."""
    return bool(np.max(regret(game, pi)) <= epsilon + 1e-9)


# ---------------------------------------------------------------------------
# Monte-Carlo evaluation
# ---------------------------------------------------------------------------

def default_horizon(game: Game, tol: float = MC_TRUNCATION_TOL) -> int:
    """Shortest horizon whose tail bound gamma^T r_max/(1-gamma) is <= tol."""
    g = as_markov(game)
    if g.discount == 0.0:
        return 1
    r_max = g.max_abs_reward
    if r_max == 0.0:
        return 1
    tail = tol * (1.0 - g.discount) / r_max
    if tail >= 1.0:
        return 1
    return max(1, int(math.ceil(math.log(tail) / math.log(g.discount))))


def truncation_bound(game: Game, horizon: int) -> float:
    g = as_markov(game)
    return g.discount**horizon * g.max_abs_reward / (1.0 - g.discount) if g.discount else 0.0


def _sample_rows(table: np.ndarray, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF sample from table[rows[k]] using uniform draws u[k]."""
    cdf = np.cumsum(table[rows], axis=1)
    return (u[:, None] > cdf).sum(axis=1).clip(max=table.shape[1] - 1)


def rollout_batch(
    game: MarkovGame,
    pi: JointPolicy,
    episodes: int,
    horizon: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate episodes in parallel; returns states and flat joint actions (E, T).

    Draw order per step is fixed (players in index order, then the
    transition), so runs with a common seed share their randomness even
    when policies differ.
    """
    states = np.empty((episodes, horizon), dtype=np.int64)
    actions = np.empty((episodes, horizon), dtype=np.int64)
    s = _sample_rows(game.initial_dist[None, :], np.zeros(episodes, dtype=np.int64),
                     rng.random(episodes))
    strides = np.cumprod((game.action_counts + (1,))[::-1])[::-1][1:]
    for t in range(horizon):
        states[:, t] = s
        flat = np.zeros(episodes, dtype=np.int64)
        for p in pi.policies:
            a = _sample_rows(p.table, s, rng.random(episodes))
            flat += a * strides[p.player]
        actions[:, t] = flat
        rows = s * game.num_joint_actions + flat
        s = _sample_rows(
            game.transition.reshape(-1, game.num_states), rows, rng.random(episodes)
        )
    return states, actions


def returns_from_rollouts(
    reward_table: np.ndarray, states: np.ndarray, actions: np.ndarray, gamma: float
) -> np.ndarray:
    """Discounted return per episode for a stage table of shape (S, A) or (N, S, A)."""
    table = np.asarray(reward_table, dtype=np.float64)
    horizon = states.shape[1]
    discounts = gamma ** np.arange(horizon)
    if table.ndim == 2:
        stage = table[states, actions]
        return stage @ discounts
    stage = table[:, states, actions]
    return stage @ discounts


def evaluate_mc(
    game: Game,
    pi: JointPolicy,
    episodes: int,
    horizon: int | None = None,
    rng_seed: int = 0,
) -> ValueVector:
    """Monte-Carlo estimate of the per-player return; deterministic given rng_seed."""
    g = as_markov(game)
    _check_policy_shapes(g, pi)
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if horizon is None:
        horizon = default_horizon(g)
    gen = _rng.stream(rng_seed, "evaluate_mc")
    states, actions = rollout_batch(g, pi, episodes, horizon, gen)
    per_episode = returns_from_rollouts(g.rewards, states, actions, g.discount)
    return ValueVector(per_episode.mean(axis=1))


# ---------------------------------------------------------------------------
# Game spec files (JSON)
# ---------------------------------------------------------------------------

def parse_game(obj: dict) -> Game:
    """Build a game from its JSON object form; see save-side for the schema."""
    if not isinstance(obj, dict):
        raise GameFormatError("game spec must be a JSON object")
    try:
        if "payoff_matrix" in obj:
            table = np.asarray(obj["payoff_matrix"], dtype=np.float64)
            if table.ndim < 2:
                raise GameFormatError("payoff_matrix must nest one level per player")
            counts = table.shape[:-1]
            n = table.shape[-1]
            if len(counts) != n:
                raise GameFormatError(
                    f"payoff_matrix nests {len(counts)} action axes but lists "
                    f"{n} payoffs per cell"
                )
            return NormalFormGame(n, counts, np.moveaxis(table, -1, 0))
        players = int(obj["players"])
        states = obj["states"]
        if isinstance(states, int):
            n_states, names = states, None
        else:
            n_states, names = len(states), tuple(str(s) for s in states)
        counts = tuple(int(m) for m in obj["actions"])
        a_joint = int(np.prod(counts))
        trans = np.zeros((n_states, a_joint, n_states))
        seen = set()
        for entry in obj["transition"]:
            s, a, s_next, prob = entry
            key = (int(s), joint_index(a, counts), int(s_next))
            if key in seen:
                raise GameFormatError(f"duplicate transition entry {entry}")
            seen.add(key)
            trans[key] = float(prob)
        rewards = np.zeros((players, n_states, a_joint))
        seen_rewards = set()
        for entry in obj["rewards"]:
            s, a, values = entry
            key = (int(s), joint_index(a, counts))
            if key in seen_rewards:
                raise GameFormatError(f"duplicate reward entry {entry}")
            seen_rewards.add(key)
            rewards[:, key[0], key[1]] = np.asarray(values, dtype=np.float64)
        return MarkovGame(
            num_players=players,
            action_counts=counts,
            transition=trans,
            rewards=rewards,
            discount=float(obj["gamma"]),
            initial_dist=np.asarray(obj["rho"], dtype=np.float64),
            state_names=names,
        )
    except GameFormatError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise GameFormatError(f"bad game spec: {exc}") from exc


def game_to_json(game: Game) -> dict:
    """JSON object form; floats survive a load -> save -> load round trip bit-exactly."""
    if isinstance(game, NormalFormGame):
        nested = np.moveaxis(
            game.payoff.reshape((game.num_players,) + game.action_counts), 0, -1
        )
        return {"payoff_matrix": nested.tolist()}
    acts = joint_actions(game.action_counts)
    transition = [
        [s, list(acts[a]), s_next, float(game.transition[s, a, s_next])]
        for s in range(game.num_states)
        for a in range(game.num_joint_actions)
        for s_next in range(game.num_states)
        if game.transition[s, a, s_next] != 0.0
    ]
    rewards = [
        [s, list(acts[a]), [float(x) for x in game.rewards[:, s, a]]]
        for s in range(game.num_states)
        for a in range(game.num_joint_actions)
    ]
    obj: dict = {
        "players": game.num_players,
        "states": list(game.state_names) if game.state_names else game.num_states,
        "actions": list(game.action_counts),
        "gamma": game.discount,
        "rho": [float(x) for x in game.initial_dist],
        "transition": transition,
        "rewards": rewards,
    }
    return obj


def joint_policy_to_json(pi: JointPolicy) -> dict:
    return {
        "players": pi.num_players,
        "tables": [[list(map(float, row)) for row in p.table] for p in pi.policies],
    }


def joint_policy_from_json(obj: dict) -> JointPolicy:
    return JointPolicy(tuple(
        TabularPolicy(i, np.asarray(table, dtype=np.float64))
        for i, table in enumerate(obj["tables"])
    ))


def load_game(path: str) -> Game:
    try:
        with open(path) as f:
            obj = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise GameFormatError(f"cannot read game spec {path}: {exc}") from exc
    return parse_game(obj)


def save_game(game: Game, path: str) -> None:
    with open(path, "w") as f:
        json.dump(game_to_json(game), f, indent=1)
        f.write("\n")
