"""Reference training schemes and the max-regret comparison table.

The comparison protocol scores each named joint policy by the largest
gain any single player obtains from an exact best response computed
while the other policies stay frozen.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng as _rng
from .games import (
    Game,
    JointPolicy,
    TabularPolicy,
    as_markov,
    regret,
    uniform_joint_policy,
)
from .potentials import KIND_CONVEX, PotentialParams
from .solvers import (
    MODE_EXACT,
    SolverBudget,
    _advantage_and_occupancy,
    _softmax_rows,
    coop_game_solver,
)


def _equal_weight_params(num_players: int) -> PotentialParams:
    if num_players == 2:
        return PotentialParams(KIND_CONVEX, np.array([0.5]))
    return PotentialParams(KIND_CONVEX, np.zeros(max(num_players - 1, 0)))


def mappo_like(game: Game, budget: SolverBudget) -> JointPolicy:
    """Maximize the uniform average of all players' returns as a shared objective."""
    g = as_markov(game)
    return coop_game_solver(
        uniform_joint_policy(g), _equal_weight_params(g.num_players), g, budget
    )


def ippo_like(
    game: Game,
    budget: SolverBudget,
    seed: int = 0,
    init: JointPolicy | None = None,
) -> JointPolicy:
    """Independent learning: simultaneous policy-gradient rounds on own returns.

    Every round snapshots all policies, computes each player's gradient
    against the snapshot, and applies all updates together.  The solver
    mode is immaterial here; the budget supplies iterations, step size and
    the optional episode knob for sampled gradients.  Starts from the
    uniform profile unless an init is given.
    """
    g = as_markov(game)
    start = init if init is not None else uniform_joint_policy(g)
    policies = list(start.policies)
    logits = [np.log(np.clip(p.table, 1e-12, None)) for p in policies]
    for it in range(budget.iterations):
        snapshot = list(policies)
        for i in range(g.num_players):
            others = tuple(p for p in snapshot if p.player != i)
            gen = (
                _rng.stream(seed, "ippo", it, i) if budget.episodes > 0 else None
            )
            adv, occ = _advantage_and_occupancy(
                g, i, snapshot[i], others, g.rewards[i], budget, gen
            )
            logits[i] = logits[i] + budget.learning_rate * (
                occ[:, None] * snapshot[i].table * adv
            )
        policies = [TabularPolicy(i, _softmax_rows(lg)) for i, lg in enumerate(logits)]
    return JointPolicy(tuple(policies))


@dataclass(frozen=True)
class RegretRow:
    name: str
    max_regret: float
    per_player: tuple[float, ...]
    best: bool


def regret_table(
    game: Game, named_policies: Sequence[tuple[str, JointPolicy]]
) -> list[RegretRow]:
    """Max regret per named policy, ascending; the lowest row is flagged."""
    if not named_policies:
        raise ValueError("need at least one named policy")
    g = as_markov(game)
    scored = []
    for name, pi in named_policies:
        gains = regret(g, pi)
        scored.append((name, float(np.max(gains)), tuple(float(x) for x in gains)))
    scored.sort(key=lambda row: (row[1], row[0]))
    return [
        RegretRow(name, max_regret, per_player, best=(k == 0))
        for k, (name, max_regret, per_player) in enumerate(scored)
    ]


def write_regret_csv(rows: Sequence[RegretRow], path: str) -> None:
    n = len(rows[0].per_player)
    with open(path, "w", newline="") as f:
        headers = ["name", "max_regret"] + [f"regret_{i}" for i in range(1, n + 1)] + ["best"]
        f.write(",".join(headers) + "\n")
        for row in rows:
            cells = [row.name, repr(row.max_regret)]
            cells += [repr(x) for x in row.per_player]
            cells.append("1" if row.best else "0")
            f.write(",".join(cells) + "\n")


def format_regret_table(rows: Sequence[RegretRow]) -> str:
    name_width = max(len(row.name) for row in rows)
    lines = [f"{'policy'.ljust(name_width)}  max_regret"]
    for row in rows:
        marker = "  <-- lowest" if row.best else ""
        lines.append(f"{row.name.ljust(name_width)}  {row.max_regret:.6g}{marker}")
    return "\n".join(lines) + "\n"
