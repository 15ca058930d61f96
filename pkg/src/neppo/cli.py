"""Command-line entry point.

Subcommands:
  run           optimize a potential on a game and write trace + artifacts
  oracle-check  compare the pipeline against the example game's closed forms
  baselines     score this solver against reference schemes by max regret

Exit codes: 0 success, 2 parse/usage error, 3 capacity error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import baselines, oracles, traces
from .algorithm import (
    NeppoConfig,
    exact_objective_report,
    run,
    trailing_max_f_mean,
)
from .games import (
    CapacityError,
    Game,
    GameFormatError,
    as_markov,
    evaluate_exact,
    joint_policy_to_json,
    load_game,
    regret,
    uniform_joint_policy,
)
from .potentials import (
    KIND_CONVEX,
    KIND_SOFTMAX,
    PotentialParams,
    default_params,
    params_from_json,
    save_params,
)
from .solvers import MODE_ITERATIVE, SolverBudget


class UsageError(ValueError):
    pass


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(NeppoConfig)}


def _load_config(path: str | None, overrides: dict) -> tuple[NeppoConfig, dict]:
    """Config file mirrors NeppoConfig field names; CLI flags override."""
    data: dict = {}
    extras: dict = {}
    if path:
        try:
            with open(path) as f:
                raw = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise UsageError("config file must hold a JSON object")
        extras = {k: raw[k] for k in ("initial_params",) if k in raw}
        unknown = set(raw) - _CONFIG_FIELDS - set(extras)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in raw.items() if k in _CONFIG_FIELDS})
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return NeppoConfig(**data), extras
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad config: {exc}") from exc


def _resolve_game(spec: str) -> Game:
    if spec == "toy":
        return oracles.toy_game()
    return load_game(spec)


def _initial_params(args, extras: dict, game: Game) -> PotentialParams:
    if args.w0 is not None:
        try:
            w = np.asarray([float(x) for x in args.w0.split(",")], dtype=np.float64)
        except ValueError as exc:
            raise UsageError(f"bad --w0 value {args.w0!r}") from exc
        if args.kind == "softmax":
            g = as_markov(game)
            return PotentialParams(KIND_SOFTMAX, w, feature_dim=g.num_states)
        return PotentialParams(KIND_CONVEX, w)
    if "initial_params" in extras:
        try:
            return params_from_json(extras["initial_params"])
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"bad initial_params in config: {exc}") from exc
    kind = KIND_SOFTMAX if args.kind == "softmax" else KIND_CONVEX
    return default_params(game, kind)


def _config_overrides(args) -> dict:
    overrides = {
        "seed": args.seed,
        "outer_iterations": args.iterations,
        "delta": args.delta,
        "eta": args.eta,
        "beta": args.beta,
        "k1": args.k1,
        "k2": args.k2,
        "mc_episodes": args.mc_episodes,
    }
    if args.mode is not None:
        overrides["coop_mode"] = args.mode
        overrides["rl_mode"] = args.mode
    return overrides


def _cmd_run(args) -> int:
    game = _resolve_game(args.game)
    config, extras = _load_config(args.config, _config_overrides(args))
    params0 = _initial_params(args, extras, game)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    policy, params, trace = run(game, params0, config)
    wall = time.perf_counter() - start
    traces.write_trace_csv(trace, str(out / "trace.csv"))
    traces.write_trace_jsonl(trace, str(out / "trace.jsonl"))
    with open(out / "final_policy.json", "w") as f:
        json.dump(joint_policy_to_json(policy), f, indent=1)
        f.write("\n")
    save_params(params, str(out / "final_params.json"))
    g = as_markov(game)
    summary = {
        "iterations": config.outer_iterations,
        "seed": config.seed,
        "final_w": [float(x) for x in params.w],
        "max_f": float(np.max(trace[-1].f)),
        "regret_max": float(np.max(regret(g, policy))),
        "j_values": [float(x) for x in evaluate_exact(g, policy).values],
        "trailing_max_f_mean": trailing_max_f_mean(trace, config.report_window),
        "wall_time_s": wall,
    }
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=1)
        f.write("\n")
    print(f"run complete: regret_max={summary['regret_max']:.3g} "
          f"max_f={summary['max_f']:.3g} ({wall:.2f}s)")
    return 0


def _oracle_rows(w_values) -> tuple[list[dict], float]:
    game = oracles.toy_game()
    worst = 0.0
    rows = []
    for w in w_values:
        try:
            oracle_value = oracles.toy_max_f(w)
        except oracles.TiePointError:
            rows.append({"w": w, "status": "SKIPPED_TIE"})
            continue
        report, _ = exact_objective_report(
            PotentialParams(KIND_CONVEX, np.array([w])), game
        )
        computed = float(np.max(report.f))
        err = abs(computed - oracle_value)
        worst = max(worst, err)
        rows.append({
            "w": w,
            "oracle_value": oracle_value,
            "computed_value": computed,
            "abs_error": err,
            "status": "ok",
        })
    return rows, worst


def _cmd_oracle_check(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.w is not None:
        grid = [float(args.w)]
    else:
        grid = [i / 100.0 for i in range(1, 100)]
    rows, worst = _oracle_rows(grid)
    oracles.write_comparison_csv(rows, str(out / "oracle_check.csv"))
    checked = sum(1 for r in rows if r["status"] == "ok")
    skipped = len(rows) - checked
    ok = worst <= 1e-9
    print(f"oracle check: {checked} points, {skipped} skipped ties, "
          f"max abs error {worst:.3g} -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _cmd_baselines(args) -> int:
    game = _resolve_game(args.game)
    config, extras = _load_config(args.config, _config_overrides(args))
    names = [name for name in args.algorithms.split(",") if name]
    if not names:
        raise UsageError("no algorithms requested")
    known = {"neppo", "mappo", "ippo", "uniform"}
    unknown = set(names) - known
    if unknown:
        raise UsageError(f"unknown algorithms: {sorted(unknown)}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    g = as_markov(game)
    policies = []
    for name in names:
        if name == "neppo":
            policy, _, _ = run(game, _initial_params(args, extras, game), config)
        elif name == "mappo":
            policy = baselines.mappo_like(g, SolverBudget(
                mode=config.coop_mode,
                iterations=config.k1,
                learning_rate=config.coop_learning_rate,
            ))
        elif name == "ippo":
            policy = baselines.ippo_like(g, SolverBudget(
                mode=MODE_ITERATIVE,
                iterations=max(config.k1 * config.outer_iterations, 1000),
                learning_rate=config.rl_learning_rate,
            ), seed=config.seed)
        else:
            policy = uniform_joint_policy(g)
        policies.append((name, policy))
    rows = baselines.regret_table(g, policies)
    baselines.write_regret_csv(rows, str(out / "regret_table.csv"))
    text = baselines.format_regret_table(rows)
    with open(out / "regret_table.txt", "w") as f:
        f.write(text)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neppo",
        description="Potential-based equilibrium solver for finite games",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_game=True):
        if with_game:
            p.add_argument("--game", required=True,
                           help="game spec JSON path, or 'toy' for the bundled game")
            p.add_argument("--config", default=None, help="JSON config file")
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--iterations", type=int, default=None,
                           help="outer iterations")
            p.add_argument("--delta", type=float, default=None)
            p.add_argument("--eta", type=float, default=None)
            p.add_argument("--beta", type=float, default=None)
            p.add_argument("--k1", type=int, default=None)
            p.add_argument("--k2", type=int, default=None)
            p.add_argument("--mode", choices=["exact", "iterative"], default=None,
                           help="sets both inner solver modes")
            p.add_argument("--mc-episodes", dest="mc_episodes", type=int, default=None)
            p.add_argument("--w0", default=None,
                           help="comma-separated initial parameter vector")
            p.add_argument("--kind", choices=["convex", "softmax"], default="convex")
        p.add_argument("--out", required=True, help="output directory")

    run_p = sub.add_parser("run", help="optimize and emit trace + artifacts")
    add_common(run_p)
    oracle_p = sub.add_parser("oracle-check",
                              help="compare against the example game's closed forms")
    add_common(oracle_p, with_game=False)
    oracle_p.add_argument("--w", type=float, default=None,
                          help="check a single weight instead of the grid")
    base_p = sub.add_parser("baselines", help="max-regret comparison table")
    add_common(base_p)
    base_p.add_argument("--algorithms", default="neppo,mappo,ippo",
                        help="comma-separated subset of neppo,mappo,ippo,uniform")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "oracle-check": _cmd_oracle_check,
        "baselines": _cmd_baselines,
    }
    try:
        return handlers[args.command](args)
    except (UsageError, GameFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
