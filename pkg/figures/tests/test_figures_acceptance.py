"""Acceptance: render every figure id from a real solver run's trace."""
from __future__ import annotations

import csv
import subprocess
import sys

import pytest

from neppo_figures import FIGURE_IDS, FigureSpec, render


@pytest.fixture(scope="module")
def solver_trace(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    result = subprocess.run(
        [sys.executable, "-m", "neppo.cli", "run", "--game", "toy",
         "--seed", "0", "--iterations", "300", "--w0", "0.1",
         "--out", str(out)],
        capture_output=True, text=True,
    )
    assert result.returncode == 0, result.stderr
    return out / "trace.csv"


def test_criterion_figures_render_from_solver_trace(solver_trace, tmp_path):
    for figure_id in FIGURE_IDS:
        out = tmp_path / f"{figure_id}.png"
        render(FigureSpec(figure_id, (str(solver_trace),), str(out)))
        assert out.stat().st_size > 1000
    with open(solver_trace, newline="") as f:
        rows = list(csv.DictReader(f))
    final_w = float(rows[-1]["w_0"])
    print(f"[PASS] all four figures rendered; final parameter {final_w:.3f}")
    assert 0.6 < final_w <= 1.0
