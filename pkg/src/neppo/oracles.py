"""Ground-truth machinery for small games.

Holds the bundled 2x2 example game together with closed-form curves for
its worst-case objective and cooperative maximizer as functions of the
scalar weight, an exact-potential decision procedure with certificates,
and brute-force equilibrium/approximation diagnostics.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .games import CapacityError, Game, NormalFormGame, as_markov, joint_actions
from .potentials import PotentialParams, StateFeatures, stage_reward_table

ENUMERATION_CAP = 10**4

# scalar weights where the cooperative maximizer of the example game is
# set-valued; closed-form curves are undefined there
TOY_ARGMAX_TIES = (1.0 / 3.0, 0.6, 1.0)
TOY_CURVE_TIES = (1.0 / 3.0, 0.6)


class TiePointError(ValueError):
    """Queried a closed-form curve at a weight where it is set-valued.

    Carries the value interval (for scalar curves) or the candidate joint
    actions (for maximizer curves) attained over the tie's selection set.
    """

    def __init__(
        self,
        w: float,
        interval: tuple[float, float] | None = None,
        candidates: tuple[tuple[int, ...], ...] | None = None,
    ) -> None:
        self.w = w
        self.interval = interval
        self.candidates = candidates
        detail = f"interval {interval}" if interval else f"candidates {candidates}"
        super().__init__(f"set-valued at w={w}: {detail}")


@dataclass(frozen=True)
class Branch:
    lo: float
    hi: float
    include_lo: bool
    include_hi: bool
    fn: Callable[[float], float]

    def contains(self, w: float) -> bool:
        if w < self.lo or w > self.hi:
            return False
        if w == self.lo and not self.include_lo:
            return False
        if w == self.hi and not self.include_hi:
            return False
        return True


@dataclass(frozen=True)
class PiecewiseCurve:
    """Closed-form branches on [0, 1] with set-valued tie points between them."""
    branches: tuple[Branch, ...]
    ties: dict

    def value(self, w: float) -> float:
        if not 0.0 <= w <= 1.0:
            raise ValueError(f"w={w} outside [0, 1]")
        for tie, interval in self.ties.items():
            if w == tie:
                raise TiePointError(w, interval=interval)
        for branch in self.branches:
            if branch.contains(w):
                return float(branch.fn(w))
        raise ValueError(f"no branch covers w={w}")


def toy_game() -> NormalFormGame:
    """The bundled 2x2 example game; its unique pure equilibrium is (0, 0)."""
    return NormalFormGame(
        num_players=2,
        action_counts=(2, 2),
        payoff=np.array([
            [[1.0, 1.0], [0.5, 0.0]],
            [[1.0, 0.5], [1.75, 2.0]],
        ]),
    )


TOY_MAX_F_CURVE = PiecewiseCurve(
    branches=(
        Branch(0.0, 1.0 / 3.0, True, False, lambda w: 5.0 * (1.0 - w) / 2.0),
        Branch(1.0 / 3.0, 0.6, False, False, lambda w: 5.0 * (1.0 - w) / 4.0),
        Branch(0.6, 1.0, False, True, lambda w: 0.0),
    ),
    ties={
        1.0 / 3.0: (5.0 / 6.0, 5.0 / 3.0),
        0.6: (0.0, 0.5),
    },
)


def toy_max_f(w: float) -> float:
    """Closed-form worst-case objective max_i F_i of the example game at weight w."""
    return TOY_MAX_F_CURVE.value(w)


def toy_phi_argmax(w: float) -> tuple[int, int]:
    """Joint pure maximizer of the weighted potential of the example game."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"w={w} outside [0, 1]")
    ties = {
        1.0 / 3.0: ((1, 0), (1, 1)),
        0.6: ((0, 0), (1, 0)),
        1.0: ((0, 0), (0, 1)),
    }
    for tie, candidates in ties.items():
        if w == tie:
            raise TiePointError(w, candidates=candidates)
    if w < 1.0 / 3.0:
        return (1, 1)
    if w < 0.6:
        return (1, 0)
    return (0, 0)


def toy_phi_max(w: float) -> float:
    """Maximum of the weighted potential of the example game (continuous in w)."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"w={w} outside [0, 1]")
    if w <= 1.0 / 3.0:
        return 2.0 * (1.0 - w)
    if w <= 0.6:
        return (7.0 - 5.0 * w) / 4.0
    return 1.0


# ---------------------------------------------------------------------------
# Exact-potential decision procedure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialCheck:
    """Decision plus certificate: a potential table, or a violated 4-cycle."""
    is_potential: bool
    max_residual: float
    potential: np.ndarray | None = None
    cycle: tuple[tuple[int, ...], ...] | None = None
    cycle_sum: float | None = None


def _check_enumeration_capacity(game: NormalFormGame) -> None:
    if game.num_joint_actions > ENUMERATION_CAP:
        raise CapacityError(
            f"{game.num_joint_actions} joint actions exceed the enumeration "
            f"cap of {ENUMERATION_CAP}"
        )


def exact_potential_check(game: NormalFormGame, tol: float = 1e-9) -> PotentialCheck:
    """Decide whether a one-shot game admits an exact potential.

    Solves the unilateral-deviation difference system in least squares; a
    residual <= tol certifies a potential table.  Otherwise returns the
    four-profile deviation cycle whose utility changes sum furthest from
    zero, together with that sum.
    """
    if not isinstance(game, NormalFormGame):
        raise ValueError("exact_potential_check expects a one-shot game")
    _check_enumeration_capacity(game)
    counts = game.action_counts
    n = game.num_players
    a_joint = game.num_joint_actions
    payoff = game.payoff.reshape((n,) + counts)
    acts = joint_actions(counts)
    rows = []
    rhs = []
    for i in range(n):
        for flat, a in enumerate(acts):
            for b in range(a[i] + 1, counts[i]):
                alt = a[:i] + (b,) + a[i + 1:]
                flat_alt = int(np.ravel_multi_index(alt, counts))
                row = np.zeros(a_joint)
                row[flat_alt] = 1.0
                row[flat] = -1.0
                rows.append(row)
                rhs.append(payoff[(i,) + alt] - payoff[(i,) + a])
    if not rows:  # every player has a single action
        return PotentialCheck(True, 0.0, potential=np.zeros(a_joint))
    system = np.asarray(rows)
    target = np.asarray(rhs)
    phi, *_ = np.linalg.lstsq(system, target, rcond=None)
    residual = float(np.max(np.abs(system @ phi - target)))
    if residual <= tol:
        return PotentialCheck(True, residual, potential=phi - phi[0])
    best = (0.0, None)
    for i, j in itertools.combinations(range(n), 2):
        for a in acts:
            for b_i in range(a[i] + 1, counts[i]):
                for b_j in range(a[j] + 1, counts[j]):
                    c1 = a
                    c2 = a[:i] + (b_i,) + a[i + 1:]
                    c3 = c2[:j] + (b_j,) + c2[j + 1:]
                    c4 = a[:j] + (b_j,) + a[j + 1:]
                    total = (
                        payoff[(i,) + c2] - payoff[(i,) + c1]
                        + payoff[(j,) + c3] - payoff[(j,) + c2]
                        + payoff[(i,) + c4] - payoff[(i,) + c3]
                        + payoff[(j,) + c1] - payoff[(j,) + c4]
                    )
                    if abs(total) > abs(best[0]):
                        best = (float(total), (c1, c2, c3, c4))
    return PotentialCheck(
        False, residual, cycle=best[1], cycle_sum=best[0]
    )


# ---------------------------------------------------------------------------
# Brute-force diagnostics
# ---------------------------------------------------------------------------

def brute_force_pure_nash(game: NormalFormGame, tol: float = 1e-9) -> list[tuple[int, ...]]:
    """All joint pure actions from which no player gains more than tol."""
    if not isinstance(game, NormalFormGame):
        raise ValueError("brute_force_pure_nash expects a one-shot game")
    _check_enumeration_capacity(game)
    counts = game.action_counts
    payoff = game.payoff.reshape((game.num_players,) + counts)
    equilibria = []
    for a in joint_actions(counts):
        stable = True
        for i in range(game.num_players):
            own = payoff[(i,) + a]
            line = payoff[(i,) + a[:i] + (slice(None),) + a[i + 1:]]
            if own < line.max() - tol:
                stable = False
                break
        if stable:
            equilibria.append(a)
    return equilibria


def simplex_grid(num_actions: int, resolution: int) -> np.ndarray:
    """Mixed strategies with weights k/(resolution-1); includes every vertex."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    steps = resolution - 1
    points = [
        np.array(c, dtype=np.float64) / steps
        for c in _compositions(steps, num_actions)
    ]
    return np.asarray(points)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def global_alpha_estimate(
    game: NormalFormGame,
    params: PotentialParams,
    grid_resolution: int,
    features: StateFeatures | None = None,
) -> float:
    """Grid lower bound on the worst-case potential/value deviation mismatch.

    Maximizes |change in a player's payoff - change in the potential| over
    unilateral deviations, with opponents on simplex grids.  The deviation
    itself is linear in the deviating player's mixture, so its extremes
    are attained at pure strategies, which every grid contains.  The
    estimate accumulates over resolutions 2..grid_resolution, making it
    monotone in the resolution.
    """
    if not isinstance(game, NormalFormGame):
        raise ValueError("global_alpha_estimate expects a one-shot game")
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be >= 2")
    _check_enumeration_capacity(game)
    counts = game.action_counts
    n = game.num_players
    payoff = game.payoff.reshape((n,) + counts)
    phi = stage_reward_table(params, as_markov(game), features)[0].reshape(counts)
    alpha = 0.0
    for resolution in range(2, grid_resolution + 1):
        grids = [simplex_grid(m, resolution) for m in counts]
        for i in range(n):
            others = [j for j in range(n) if j != i]
            combos = 1
            for j in others:
                combos *= len(grids[j])
            if combos * counts[i] > 10**6:
                raise CapacityError("opponent grid enumeration too large")
            gap = payoff[i] - phi  # (counts...) mismatch tensor for player i
            for mixtures in itertools.product(*(grids[j] for j in others)):
                vec = gap
                # contract opponents in descending axis order so axis j stays valid
                for j, mix in sorted(zip(others, mixtures), key=lambda t: -t[0]):
                    vec = np.tensordot(vec, mix, axes=(j, 0))
                alpha = max(alpha, float(vec.max() - vec.min()))
    return alpha


# ---------------------------------------------------------------------------
# Comparison reports
# ---------------------------------------------------------------------------

def write_comparison_csv(rows: Sequence[dict], path: str) -> None:
    """Rows: {w, oracle_value, computed_value, abs_error, status}."""
    with open(path, "w", newline="") as f:
        f.write("w,oracle_value,computed_value,abs_error,status\n")
        for row in rows:
            if row["status"] == "ok":
                f.write(
                    f"{row['w']!r},{row['oracle_value']!r},{row['computed_value']!r},"
                    f"{row['abs_error']!r},ok\n"
                )
            else:
                f.write(f"{row['w']!r},,,,{row['status']}\n")
