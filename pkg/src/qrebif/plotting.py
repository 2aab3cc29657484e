"""Matplotlib renderings of bifurcation diagrams and trajectories.

Figures are written straight to files (Agg backend); the CLI drops them next
to the delimited outputs they illustrate.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bifurcation import BifurcationDiagram
from .dynamics import Trajectory


def _temperature_cap(diagram: BifurcationDiagram) -> float:
    """Horizontal-axis limit: show the fold structure, not the 1/2 blowup."""
    caps = []
    if diagram.critical_temp:
        caps.append(2.5 * diagram.critical_temp)
    for b in diagram.branches:
        t = b.t_x[np.isfinite(b.t_x)]
        if t.size:
            caps.append(2.0 * float(np.quantile(t, 0.75)))
    return max(caps) if caps else 1.0


def plot_diagram(diagram: BifurcationDiagram, path: str) -> None:
    """Equilibrium x against T_x at fixed T_y; solid stable, dashed unstable."""
    fig, ax = plt.subplots(figsize=(7, 5))
    cap = _temperature_cap(diagram)
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i, b in enumerate(diagram.branches):
        color = colors[i % len(colors)]
        keep = b.t_x <= cap
        for mask, style in ((b.stable, "-"), (~b.stable, "--")):
            m = mask & keep
            if m.any():
                t = np.where(m, b.t_x, np.nan)[keep]
                x = np.where(m, b.x, np.nan)[keep]
                ax.plot(t, x, style, color=color, lw=1.6)
        if b.is_principal and keep.any():
            mid = np.flatnonzero(keep)[len(np.flatnonzero(keep)) // 2]
            ax.annotate("principal", (b.t_x[mid], b.x[mid]), fontsize=8, color=color)
    if diagram.critical_temp:
        ax.axvline(diagram.critical_temp, color="gray", ls=":", lw=1)
        ax.annotate(
            f"$T_C$={diagram.critical_temp:.3g}",
            (diagram.critical_temp, 0.02),
            fontsize=8,
            color="gray",
        )
    ax.axhline(0.5, color="lightgray", lw=0.8)
    ax.set_xlim(0.0, cap)
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("$T_x$")
    ax.set_ylabel("x at equilibrium")
    ax.set_title(f"Equilibrium correspondence, $T_y$={diagram.t_y:.4g}")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_trajectory(traj: Trajectory, path: str) -> None:
    """State, temperatures, and welfare/entropy panels over time."""
    fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
    axes[0].plot(traj.t, traj.x, label="x", lw=1.4)
    axes[0].plot(traj.t, traj.y, label="y", lw=1.4)
    axes[0].set_ylabel("strategy")
    axes[0].set_ylim(-0.02, 1.02)
    axes[0].legend(loc="best", fontsize=8)
    axes[1].plot(traj.t, traj.t_x, label="$T_x$", lw=1.4)
    axes[1].plot(traj.t, traj.t_y, label="$T_y$", lw=1.4)
    axes[1].set_yscale("log")
    axes[1].set_ylabel("temperature")
    axes[1].legend(loc="best", fontsize=8)
    axes[2].plot(traj.t, traj.sw, label="welfare", lw=1.4)
    axes[2].plot(traj.t, traj.entropy, label="entropy", lw=1.4)
    axes[2].set_xlabel("t")
    axes[2].legend(loc="best", fontsize=8)
    for _, i in traj.phase_marks:
        for ax in axes:
            ax.axvline(traj.t[i], color="lightgray", lw=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
