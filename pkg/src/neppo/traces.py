"""Trace emission: one row per outer iteration, CSV and JSON-lines.

Column schema (p parameter entries, N players):
iter, w_0..w_{p-1}, F_tilde_hat, F_tilde_check, F_1..F_N, dJ_1..dJ_N,
dPhi_1..dPhi_N, regret_max, J_1..J_N.  The w columns hold the parameter
vector after the iteration's update.  Float cells use shortest
round-trip decimal form, so identical runs produce identical bytes.
"""
from __future__ import annotations

import json
from typing import Sequence

from .algorithm import IterationTrace


def trace_columns(p: int, n: int) -> list[str]:
    cols = ["iter"]
    cols += [f"w_{j}" for j in range(p)]
    cols += ["F_tilde_hat", "F_tilde_check"]
    cols += [f"F_{i}" for i in range(1, n + 1)]
    cols += [f"dJ_{i}" for i in range(1, n + 1)]
    cols += [f"dPhi_{i}" for i in range(1, n + 1)]
    cols += ["regret_max"]
    cols += [f"J_{i}" for i in range(1, n + 1)]
    return cols


def trace_row(tr: IterationTrace) -> list[float]:
    row: list[float] = [tr.iteration]
    row += [float(x) for x in tr.w_after]
    row += [float(tr.f_tilde_hat), float(tr.f_tilde_check)]
    row += [float(x) for x in tr.f]
    row += [float(x) for x in tr.dj]
    row += [float(x) for x in tr.dphi]
    row += [float(tr.regret_max)]
    row += [float(x) for x in tr.j_values]
    return row


def _columns_for(traces: Sequence[IterationTrace]) -> list[str]:
    if not traces:
        raise ValueError("cannot emit an empty trace")
    return trace_columns(traces[0].w_after.shape[0], traces[0].f.shape[0])


def write_trace_csv(traces: Sequence[IterationTrace], path: str) -> None:
    cols = _columns_for(traces)
    with open(path, "w", newline="") as f:
        f.write(",".join(cols) + "\n")
        for tr in traces:
            row = trace_row(tr)
            f.write(",".join([str(int(row[0]))] + [repr(x) for x in row[1:]]) + "\n")


def write_trace_jsonl(traces: Sequence[IterationTrace], path: str) -> None:
    cols = _columns_for(traces)
    with open(path, "w") as f:
        for tr in traces:
            row = trace_row(tr)
            obj = {cols[0]: int(row[0]), **dict(zip(cols[1:], row[1:]))}
            f.write(json.dumps(obj) + "\n")
