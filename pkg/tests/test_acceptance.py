"""Acceptance suite: one test per release criterion, each printing a verdict.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion.
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest
from conftest import random_identical_interest, random_normal_form

from neppo.algorithm import (
    NeppoConfig,
    exact_objective_report,
    run,
    smooth_max,
    zeroth_order_gradient,
)
from neppo.baselines import ippo_like, mappo_like, regret_table
from neppo.cli import main as cli_main
from neppo.games import evaluate_exact, regret, uniform_joint_policy
from neppo.oracles import TiePointError, exact_potential_check, toy_game, toy_max_f, toy_phi_argmax
from neppo.potentials import KIND_CONVEX, PotentialParams
from neppo.solvers import MODE_EXACT, MODE_ITERATIVE, SolverBudget


def _convex(w: float) -> PotentialParams:
    return PotentialParams(KIND_CONVEX, np.array([w]))


def _verdict(name: str, ok: bool, detail: str = "") -> None:
    tag = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{tag}] {name}{suffix}")
    assert ok, f"{name}{suffix}"


def test_criterion_oracle_equivalence():
    game = toy_game()
    start = time.perf_counter()
    worst_error = 0.0
    argmax_ok = True
    checked = 0
    for i in range(1, 100):
        w = i / 100.0
        try:
            oracle_value = toy_max_f(w)
            oracle_argmax = toy_phi_argmax(w)
        except TiePointError:
            continue  # 0.6 is the only representable tie on this grid
        report, coop = exact_objective_report(_convex(w), game)
        worst_error = max(worst_error, abs(float(np.max(report.f)) - oracle_value))
        argmax = tuple(int(p.table[0].argmax()) for p in coop.policies)
        argmax_ok = argmax_ok and (argmax == oracle_argmax)
        checked += 1
    elapsed = time.perf_counter() - start
    _verdict(
        "oracle equivalence on the weight grid",
        checked == 98 and worst_error <= 1e-9 and argmax_ok and elapsed < 5.0,
        f"{checked} points, max err {worst_error:.2e}, {elapsed:.2f}s",
    )


def test_criterion_toy_convergence():
    game = toy_game()
    all_ok = True
    details = []
    for seed in range(5):
        cfg = NeppoConfig(seed=seed, outer_iterations=300)
        policy, params, trace = run(game, _convex(0.1), cfg)
        final_w = float(params.w[0])
        profile = tuple(int(p.table[0].argmax()) for p in policy.policies)
        worst = float(np.max(regret(game, policy)))
        ok = 0.6 < final_w <= 1.0 and profile == (0, 0) and worst <= 1e-6
        all_ok = all_ok and ok
        details.append(f"seed {seed}: w={final_w:.3f} regret={worst:.1e}")
    _verdict("toy run reaches the zero-gap branch (5/5 seeds)", all_ok,
             "; ".join(details))


def test_criterion_regret_bounded_by_objective():
    rng = np.random.default_rng(321)
    games = [toy_game()] + [random_normal_form(rng) for _ in range(50)]
    weights = np.linspace(0.0, 1.0, 21)
    worst_slack = -np.inf
    ok = True
    for game in games:
        for w in weights:
            report, coop = exact_objective_report(_convex(float(w)), game)
            slack = float(np.max(regret(game, coop))) - float(np.max(report.f))
            worst_slack = max(worst_slack, slack)
            ok = ok and slack <= 1e-9
    _verdict("max regret of the shared optimum is bounded by max F",
             ok, f"worst slack {worst_slack:.2e} over 51 games x 21 weights")


def test_criterion_potential_games_have_zero_objective():
    rng = np.random.default_rng(654)
    worst = 0.0
    for k in range(20):
        game = random_identical_interest(rng, markov=bool(k % 2))
        w = float(rng.uniform(0, 1))
        report, _ = exact_objective_report(_convex(w), game)
        worst = max(worst, float(np.max(np.abs(report.f))))
    check = exact_potential_check(toy_game())
    witness_ok = (not check.is_potential) and toy_max_f(0.8) == 0.0
    _verdict(
        "identical-interest games score zero; non-potential witness holds",
        worst <= 1e-9 and witness_ok,
        f"max |F| {worst:.2e}; example game not potential with zero tail",
    )


def test_criterion_smoothing_bound():
    rng = np.random.default_rng(987)
    ok = True
    for _ in range(1000):
        n = int(rng.integers(1, 8))
        values = rng.normal(scale=rng.uniform(0.5, 20), size=n)
        top = values.max()
        for beta in (1.0, 10.0, 100.0):
            s = smooth_max(values, beta)
            ok = ok and (-1e-12 <= s - top <= math.log(n) / beta + 1e-12)
    _verdict("smoothed objective stays within [max, max + ln(N)/beta]", ok,
             "1000 vectors x beta in {1, 10, 100}")


def test_criterion_gradient_estimator():
    rng = np.random.default_rng(31)
    # quadratics: averaging the estimates over an orthonormal antipodal
    # frame reproduces the gradient exactly at any radius
    quad_ok = True
    worst_quad = 0.0
    for _ in range(25):
        p = int(rng.integers(1, 6))
        a = rng.normal(size=(p, p))
        a = (a + a.T) / 2.0
        b = rng.normal(size=p)
        w = rng.normal(size=p)
        delta = float(rng.uniform(1e-3, 2.0))

        def f(x):
            return float(x @ a @ x + b @ x)

        grad_true = 2.0 * a @ w + b
        frame = np.zeros(p)
        for j in range(p):
            e = np.zeros(p)
            e[j] = 1.0
            frame += zeroth_order_gradient(f(w + delta * e), f(w - delta * e), e, delta, p)
        frame /= p
        err = float(np.max(np.abs(frame - grad_true)))
        worst_quad = max(worst_quad, err)
        quad_ok = quad_ok and err <= 1e-9
        if p == 1:
            u = np.array([1.0 if rng.random() < 0.5 else -1.0])
            single = zeroth_order_gradient(
                f(w + delta * u), f(w - delta * u), u, delta, 1
            )
            quad_ok = quad_ok and abs(single[0] - grad_true[0]) <= 1e-9

    # smooth non-quadratics: the sample mean matches finite differences
    def f1(x):
        return np.log1p(np.sum(np.exp(0.7 * x), axis=-1)) + 0.25 * np.sin(x[..., 0])

    def f2(x):
        return np.sqrt(1.0 + np.sum(x * x, axis=-1)) + 0.2 * np.cos(2.0 * x[..., -1])

    mc_ok = True
    worst_z = 0.0
    for func, w in ((f1, np.array([0.4, -0.2, 0.9])), (f2, np.array([-0.3, 0.8]))):
        p = w.shape[0]
        h = 1e-6
        fd = np.array([
            (func(w + h * e) - func(w - h * e)) / (2 * h) for e in np.eye(p)
        ])
        n = 100_000
        delta = 0.02
        u = rng.normal(size=(n, p))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        est = (p / (2 * delta)) * (func(w + delta * u) - func(w - delta * u))[:, None] * u
        mean = est.mean(axis=0)
        stderr = est.std(axis=0, ddof=1) / math.sqrt(n)
        z = float(np.max(np.abs(mean - fd) / stderr))
        worst_z = max(worst_z, z)
        mc_ok = mc_ok and np.all(np.abs(mean - fd) <= 3.0 * stderr)
    _verdict(
        "two-point estimator: exact on quadratics, unbiased on smooth functions",
        quad_ok and mc_ok,
        f"quad err {worst_quad:.1e}; worst z {worst_z:.2f} over 1e5 samples",
    )


def test_criterion_baseline_separation():
    game = toy_game()
    avg_policy = mappo_like(game, SolverBudget(mode=MODE_EXACT))
    avg_profile = tuple(int(p.table[0].argmax()) for p in avg_policy.policies)
    avg_regret = float(np.max(regret(game, avg_policy)))
    policy, _, _ = run(game, _convex(0.1), NeppoConfig(seed=0, outer_iterations=150))
    own_regret = float(np.max(regret(game, policy)))
    ippo_policy = ippo_like(
        game, SolverBudget(mode=MODE_ITERATIVE, iterations=3000, learning_rate=1.0),
        seed=0,
    )
    rows = regret_table(game, [
        ("neppo", policy),
        ("mappo", avg_policy),
        ("ippo", ippo_policy),
        ("uniform", uniform_joint_policy(game)),
    ])
    strictly_lowest = rows[0].name == "neppo" and rows[0].max_regret < rows[1].max_regret
    _verdict(
        "baseline separation on the example game",
        avg_profile == (1, 0) and avg_regret == 0.5
        and own_regret <= 1e-6 and strictly_lowest,
        f"avg-optimum regret {avg_regret}, own {own_regret:.1e}, "
        f"ranking {[r.name for r in rows]}",
    )


def test_criterion_cli_determinism(tmp_path):
    args = ["run", "--game", "toy", "--seed", "5", "--iterations", "100", "--w0", "0.1"]
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    code_a = cli_main(args + ["--out", str(out_a)])
    code_b = cli_main(args + ["--out", str(out_b)])
    identical = (out_a / "trace.csv").read_bytes() == (out_b / "trace.csv").read_bytes()
    _verdict("identical seeds give byte-identical traces",
             code_a == 0 and code_b == 0 and identical,
             f"{(out_a / 'trace.csv').stat().st_size} bytes compared")
