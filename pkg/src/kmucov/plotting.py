"""Figures for coverage sweeps, written next to the CSV output."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed ids and no timestamp keep the SVG byte-stable between runs
matplotlib.rcParams["svg.hashsalt"] = "kmucov"
_SVG_META = {"Date": None, "Creator": None}


def plot_coverage(
    t_db: Sequence[float],
    analytic: Sequence[float | None],
    mc: Sequence[float | None] | None,
    ci: Sequence[tuple[float, float] | None] | None,
    path: str | Path,
    title: str = "",
) -> Path:
    """Analytic curve with Monte Carlo points and confidence bars."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    pts = [(t, a) for t, a in zip(t_db, analytic) if a is not None]
    if pts:
        ax.plot(*zip(*pts), "-", color="C0", lw=1.6, label="analytic")
    if mc is not None:
        rows = [(t, p, c) for t, p, c in zip(t_db, mc, ci) if p is not None]
        if rows:
            ts, ps, cs = zip(*rows)
            lo = [p - c[0] for p, c in zip(ps, cs)]
            hi = [c[1] - p for p, c in zip(ps, cs)]
            ax.errorbar(ts, ps, yerr=[lo, hi], fmt="o", ms=4, mfc="none", color="C3",
                        capsize=2, label="simulation")
    ax.set_xlabel("SIR threshold T (dB)")
    ax.set_ylabel("coverage probability")
    ax.set_ylim(0, 1.02)
    ax.grid(True, lw=0.4, alpha=0.6)
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(loc="upper right", frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def plot_squared_error(
    t_db: Sequence[float], sq_err: Sequence[float | None], path: str | Path, title: str = ""
) -> Path:
    """Squared error between exact and approximate coverage, log scale."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    pts = [(t, e) for t, e in zip(t_db, sq_err) if e is not None and e > 0]
    if pts:
        ax.semilogy(*zip(*pts), "s-", ms=4, color="C2")
    ax.set_xlabel("SIR threshold T (dB)")
    ax.set_ylabel("squared error")
    ax.grid(True, which="both", lw=0.4, alpha=0.6)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path
