"""Parameterized potential-function families over finite games.

A parameter vector w defines a stage reward phi_w(s, a); the induced
potential of a joint policy is the discounted return of that shared stage
reward.  Two families are provided:

* ``convex_combination`` — phi_w = sum_i lambda_i(w) r_i with
  state-independent simplex weights.  For two players the single stored
  parameter IS the weight on player 0, kept in [0, 1] by projection; for
  three or more players the N-1 stored parameters map to the simplex via a
  softmax of (w, 0), leaving the parameter space unconstrained.
* ``state_feature_softmax`` — per-state weights softmax(W f(s) + b) over
  players, with W (N x d) and b (N) flattened into w.  Features default
  to a one-hot encoding of the state.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .games import Game, JointPolicy, as_markov, joint_index, shared_value_exact

KIND_CONVEX = "convex_combination"
KIND_SOFTMAX = "state_feature_softmax"


@dataclass(frozen=True)
class PotentialParams:
    kind: str
    w: np.ndarray
    feature_dim: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in (KIND_CONVEX, KIND_SOFTMAX):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        w = np.atleast_1d(np.asarray(self.w, dtype=np.float64))
        if w.ndim != 1 or not np.all(np.isfinite(w)):
            raise ValueError("w must be a finite 1-D vector")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        if self.kind == KIND_SOFTMAX:
            if self.feature_dim is None or self.feature_dim < 1:
                raise ValueError("state_feature_softmax requires feature_dim >= 1")

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    def with_w(self, w: np.ndarray) -> "PotentialParams":
        return PotentialParams(self.kind, w, self.feature_dim)


@dataclass(frozen=True)
class StateFeatures:
    matrix: np.ndarray  # (S, d)

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or not np.all(np.isfinite(m)):
            raise ValueError("feature matrix must be 2-D and finite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def one_hot_features(num_states: int) -> StateFeatures:
    return StateFeatures(np.eye(num_states))


def default_params(game: Game, kind: str = KIND_CONVEX) -> PotentialParams:
    """Neutral starting parameters: equal weights on every player's reward."""
    g = as_markov(game)
    if kind == KIND_CONVEX:
        w = np.full(max(g.num_players - 1, 0), 0.5 if g.num_players == 2 else 0.0)
        return PotentialParams(KIND_CONVEX, w)
    d = g.num_states
    return PotentialParams(KIND_SOFTMAX, np.zeros(g.num_players * (d + 1)), feature_dim=d)


def _softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def simplex_weights(params: PotentialParams, num_players: int) -> np.ndarray:
    """Per-player reward weights (nonnegative, summing to 1) for the convex kind."""
    if params.kind != KIND_CONVEX:
        raise ValueError("simplex_weights applies to the convex_combination kind")
    if params.dim != num_players - 1:
        raise ValueError(
            f"convex_combination needs {num_players - 1} parameters for "
            f"{num_players} players, got {params.dim}"
        )
    if num_players == 1:
        return np.ones(1)
    if num_players == 2:
        w0 = float(np.clip(params.w[0], 0.0, 1.0))
        return np.array([w0, 1.0 - w0])
    return _softmax(np.concatenate([params.w, [0.0]]))


def _state_weights(params: PotentialParams, game, features: StateFeatures) -> np.ndarray:
    """Per-state player weights, shape (S, N), for the softmax kind."""
    n, d = game.num_players, params.feature_dim
    if params.dim != n * (d + 1):
        raise ValueError(
            f"state_feature_softmax needs {n * (d + 1)} parameters "
            f"(N*(feature_dim+1)), got {params.dim}"
        )
    if features.matrix.shape != (game.num_states, d):
        raise ValueError(
            f"feature matrix shape {features.matrix.shape} != ({game.num_states}, {d})"
        )
    weight = params.w[: n * d].reshape(n, d)
    bias = params.w[n * d:]
    return _softmax(features.matrix @ weight.T + bias, axis=1)


def _resolve_features(params: PotentialParams, game, features: StateFeatures | None):
    if features is not None:
        return features
    if params.feature_dim != game.num_states:
        raise ValueError(
            "default one-hot features need feature_dim == num_states; "
            f"got {params.feature_dim} vs {game.num_states}"
        )
    return one_hot_features(game.num_states)


def stage_reward_table(
    params: PotentialParams, game: Game, features: StateFeatures | None = None
) -> np.ndarray:
    """Stage reward phi_w as a dense (S, A) table over flattened joint actions."""
    g = as_markov(game)
    if params.kind == KIND_CONVEX:
        lam = simplex_weights(params, g.num_players)
        return np.einsum("n,nsa->sa", lam, g.rewards)
    weights = _state_weights(params, g, _resolve_features(params, g, features))
    return np.einsum("sn,nsa->sa", weights, g.rewards)


def stage_reward(
    params: PotentialParams,
    game: Game,
    s: int,
    a: Sequence[int],
    features: StateFeatures | None = None,
) -> float:
    """phi_w(s, a) for a joint pure action."""
    g = as_markov(game)
    if not 0 <= s < g.num_states:
        raise IndexError(f"state {s} out of range")
    return float(stage_reward_table(params, g, features)[s, joint_index(a, g.action_counts)])


def potential_value(
    params: PotentialParams,
    game: Game,
    pi: JointPolicy,
    features: StateFeatures | None = None,
) -> float:
    """Potential of a joint policy: discounted return of phi_w under pi."""
    g = as_markov(game)
    return shared_value_exact(g, pi, stage_reward_table(params, g, features))


def perturb(
    params: PotentialParams, u: np.ndarray, delta: float
) -> tuple[PotentialParams, PotentialParams]:
    """Antipodal pair (w + delta u, w - delta u) along a unit direction."""
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    if u.shape != params.w.shape:
        raise ValueError(f"direction shape {u.shape} != parameter shape {params.w.shape}")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if delta > 0 and params.dim > 0 and abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    return params.with_w(params.w + delta * u), params.with_w(params.w - delta * u)


def project(params: PotentialParams) -> PotentialParams:
    """Project onto the feasible parameter set (idempotent).

    Only the two-player convex form is constrained (scalar weight in
    [0, 1]); every other form is unconstrained.
    """
    if params.kind == KIND_CONVEX and params.dim == 1:
        return params.with_w(np.clip(params.w, 0.0, 1.0))
    return params


def params_to_json(params: PotentialParams) -> dict:
    obj: dict = {"kind": params.kind, "w": [float(x) for x in params.w]}
    if params.feature_dim is not None:
        obj["feature_dim"] = params.feature_dim
    return obj


def params_from_json(obj: dict) -> PotentialParams:
    return PotentialParams(
        kind=obj["kind"],
        w=np.asarray(obj["w"], dtype=np.float64),
        feature_dim=obj.get("feature_dim"),
    )


def save_params(params: PotentialParams, path: str) -> None:
    with open(path, "w") as f:
        json.dump(params_to_json(params), f, indent=1)
        f.write("\n")


def load_params(path: str) -> PotentialParams:
    with open(path) as f:
        return params_from_json(json.load(f))
