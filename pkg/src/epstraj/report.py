"""Static report figures rendered to image files next to the CSV outputs."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_trajectory_figure(trajectory, path, waypoints=(), log=None):
    """Planned path with curvature profile; overlays the vehicle path if given."""
    fig, (ax_path, ax_kappa) = plt.subplots(
        2, 1, figsize=(7.0, 7.0), height_ratios=[2.2, 1.0])
    ax_path.plot(trajectory.pos[:, 0], trajectory.pos[:, 1],
                 color="tab:blue", lw=1.5, label="reference")
    if log is not None:
        ax_path.plot(log.state[:, 0], log.state[:, 1],
                     color="tab:orange", lw=1.0, ls="--", label="vehicle")
    if len(waypoints):
        wx = [w.x for w in waypoints]
        wy = [w.y for w in waypoints]
        ax_path.plot(wx, wy, "k^", ms=7, label="waypoints")
    ax_path.set_xlabel("x [m]")
    ax_path.set_ylabel("y [m]")
    ax_path.set_aspect("equal", adjustable="datalim")
    ax_path.grid(True, alpha=0.3)
    ax_path.legend(loc="best", fontsize=9)

    ax_kappa.plot(trajectory.t, trajectory.kappa, color="tab:green", lw=1.2)
    ax_kappa.set_xlabel("t [s]")
    ax_kappa.set_ylabel("curvature [1/m]")
    ax_kappa.grid(True, alpha=0.3)

    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def save_error_figure(log, path):
    """Tracking-error history: vehicle error and displaced-point error."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    pos = np.maximum(log.err_pos, 1e-16)
    eps = np.maximum(log.eps_err, 1e-16)
    ax.semilogy(log.t, pos, color="tab:blue", lw=1.2, label="|x - x_r|")
    ax.semilogy(log.t, eps, color="tab:orange", lw=1.2, label="|q_eps - q_eps,r|")
    ax.axhline(log.epsilon, color="gray", lw=0.8, ls=":", label="epsilon")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("error [m]")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def save_figures(trajectory, out_dir, waypoints=(), log=None):
    """Write trajectory.png (and error.png when a log is given); returns paths."""
    written = [save_trajectory_figure(
        trajectory, os.path.join(out_dir, "trajectory.png"),
        waypoints=waypoints, log=log)]
    if log is not None:
        written.append(save_error_figure(log, os.path.join(out_dir, "error.png")))
    return written
