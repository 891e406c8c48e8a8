"""Matplotlib renderers for the CLI report paths.

Each figure command writes its delimited data first and then renders the
same rows to a PNG next to it; rendering never feeds back into the data.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_RC = {
    "figure.figsize": (6.0, 4.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
}


def _new_axes():
    plt.rcParams.update(_RC)
    fig, ax = plt.subplots()
    return fig, ax


def _finish(fig, ax, path):
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_fig1(rows, path) -> None:
    """Deviation bound vs bath size: lhs and rhs on a log scale."""
    n = [r[0] for r in rows]
    lhs = [r[1] for r in rows]
    rhs = [r[2] for r in rows]
    fig, ax = _new_axes()
    ax.semilogy(n, lhs, "r*-", label="deviation from factorized state")
    ax.semilogy(n, rhs, "bo-", label="bound 4 beta ||H_SB||")
    ax.set_xlabel("number of bath spins N")
    ax.set_ylabel("trace norm")
    _finish(fig, ax, path)


def render_fig2(rows, path) -> None:
    """Deviation bound vs coupling strength on a log-log scale."""
    g = [r[0] for r in rows]
    lhs = [r[1] for r in rows]
    rhs = [r[2] for r in rows]
    fig, ax = _new_axes()
    ax.loglog(g, lhs, "r*-", label="deviation from factorized state")
    ax.loglog(g, rhs, "bo-", label="bound 4 beta ||H_SB||")
    ax.set_xlabel("interaction strength g")
    ax.set_ylabel("trace norm")
    _finish(fig, ax, path)


def render_witness(series, path, title: str | None = None) -> None:
    """One distinguishability-growth trace with its bound."""
    fig, ax = _new_axes()
    ax.plot(series.t, series.delta, "-", lw=1.2, label="Delta(t)")
    ax.axhline(series.bound, color="k", ls="--", lw=1, label="bound 8 beta ||H_SB||")
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.set_xlabel("t (units of 1 / max system eigenenergy)")
    ax.set_ylabel("distinguishability growth")
    if title:
        ax.set_title(title)
    _finish(fig, ax, path)


def render_fig3(summary_rows, trace, path) -> None:
    """Witness trace of the first instance plus the batch max-Delta spread."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    plt.rcParams.update(_RC)
    ax1.plot(trace.t, trace.delta, "-", lw=1.2, label="Delta(t), first instance")
    ax1.axhline(trace.bound, color="k", ls="--", lw=1, label="bound")
    ax1.axhline(0.0, color="gray", lw=0.8)
    ax1.set_xlabel("t (units of 1 / max system eigenenergy)")
    ax1.set_ylabel("distinguishability growth")
    ax1.legend()
    ax1.grid(alpha=0.3)

    max_deltas = np.array([r[1] for r in summary_rows])
    bounds_arr = np.array([r[2] for r in summary_rows])
    ratios = max_deltas / bounds_arr
    ax2.hist(np.clip(ratios, 0, None), bins=30, color="tab:blue", alpha=0.8)
    ax2.axvline(1.0, color="k", ls="--", lw=1, label="bound")
    ax2.set_xlabel("max Delta / bound")
    ax2.set_ylabel("instances")
    ax2.legend()
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
