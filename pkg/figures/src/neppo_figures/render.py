"""Render solver trace CSVs into the four standard diagnostic figures.

This package is a read-only consumer of the trace schema emitted by the
`neppo` CLI (iter, w_*, F_tilde_*, F_*, dJ_*, dPhi_*, regret_max, J_*):
nothing is recomputed here, the trace is the single source of truth.

Figure ids:
  w-evolution        parameter trajectory over iterations
  Fi-evolution       per-player objective values over iterations
  deltas             per-player value and potential changes under deviation
  reward-comparison  per-player returns, overlaid across one or more traces
"""
from __future__ import annotations

import argparse
import csv
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_IDS = ("w-evolution", "Fi-evolution", "deltas", "reward-comparison")


class TraceFormatError(ValueError):
    """Trace file is missing or does not match the expected schema."""


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    trace_paths: tuple[str, ...]
    out_path: str
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(f"figure_id must be one of {FIGURE_IDS}")
        if not self.trace_paths:
            raise ValueError("need at least one trace path")
        if self.figure_id != "reward-comparison" and len(self.trace_paths) != 1:
            raise ValueError(f"{self.figure_id} takes exactly one trace")
        if self.labels is not None and len(self.labels) != len(self.trace_paths):
            raise ValueError("labels must match trace paths one to one")


def read_trace(path: str) -> dict[str, np.ndarray]:
    """Parse a trace CSV into column arrays; empty traces are an error."""
    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None:
                raise TraceFormatError(f"{path}: empty trace file")
            rows = list(reader)
    except OSError as exc:
        raise TraceFormatError(f"cannot read trace {path}: {exc}") from exc
    if not rows:
        raise TraceFormatError(f"{path}: trace has a header but no rows")
    columns = {}
    for name in reader.fieldnames:
        try:
            columns[name] = np.asarray([float(row[name]) for row in rows])
        except (TypeError, ValueError) as exc:
            raise TraceFormatError(f"{path}: column {name!r} is not numeric") from exc
    return columns


def _indices(columns: dict[str, np.ndarray], prefix: str) -> list[int]:
    pattern = re.compile(rf"^{re.escape(prefix)}_(\d+)$")
    return sorted(int(m.group(1)) for name in columns if (m := pattern.match(name)))


def _series(columns: dict[str, np.ndarray], prefix: str, path: str) -> list[str]:
    """Column names of a per-player family, validated against the J_* columns."""
    reference = _indices(columns, "J")
    if not reference:
        raise TraceFormatError(f"{path}: no J_* columns in trace")
    if prefix == "w":
        names = [f"w_{i}" for i in _indices(columns, "w")]
        if not names:
            raise TraceFormatError(f"{path}: no w_* columns in trace")
        return names
    for i in reference:
        if f"{prefix}_{i}" not in columns:
            raise TraceFormatError(f"{path}: missing column '{prefix}_{i}'")
    return [f"{prefix}_{i}" for i in reference]


def _require(columns: dict[str, np.ndarray], name: str, path: str) -> np.ndarray:
    if name not in columns:
        raise TraceFormatError(f"{path}: missing column {name!r}")
    return columns[name]


def build_figure(spec: FigureSpec) -> plt.Figure:
    """Assemble the figure for a spec without writing it."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    if spec.figure_id == "reward-comparison":
        labels = spec.labels or tuple(Path(p).stem for p in spec.trace_paths)
        for path, label in zip(spec.trace_paths, labels):
            columns = read_trace(path)
            iters = _require(columns, "iter", path)
            for name in _series(columns, "J", path):
                player = name.split("_")[1]
                ax.plot(iters, columns[name], label=f"{label}: player {player}")
        ax.set_ylabel("return")
        ax.set_title("per-player returns across runs")
    else:
        path = spec.trace_paths[0]
        columns = read_trace(path)
        iters = _require(columns, "iter", path)
        if spec.figure_id == "w-evolution":
            for name in _series(columns, "w", path):
                ax.plot(iters, columns[name], label=name)
            ax.set_ylabel("parameter value")
            ax.set_title("parameter trajectory")
        elif spec.figure_id == "Fi-evolution":
            for name in _series(columns, "F", path):
                ax.plot(iters, columns[name], label=name)
            ax.set_ylabel("objective value")
            ax.set_title("per-player objective")
        else:  # deltas
            for name in _series(columns, "dJ", path):
                ax.plot(iters, columns[name], label=name)
            for name in _series(columns, "dPhi", path):
                ax.plot(iters, columns[name], linestyle="--", label=name)
            ax.set_ylabel("change under unilateral best response")
            ax.set_title("value and potential deviation changes")
    ax.set_xlabel("iteration")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> str:
    """Render the figure to spec.out_path and return the path."""
    fig = build_figure(spec)
    try:
        fig.savefig(spec.out_path, dpi=120)
    finally:
        plt.close(fig)
    return spec.out_path


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="neppo-figures", description="Render trace CSVs into figures"
    )
    parser.add_argument("figure_id", choices=FIGURE_IDS)
    parser.add_argument("traces", nargs="+", help="trace CSV path(s)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--labels", default=None,
                        help="comma-separated labels, one per trace")
    args = parser.parse_args(argv)
    labels = tuple(args.labels.split(",")) if args.labels else None
    try:
        spec = FigureSpec(args.figure_id, tuple(args.traces), args.out, labels)
        render(spec)
    except (TraceFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
