"""Figure rendering for run reports.

Written next to the delimited outputs in the run directory: monitor time
series with their theoretical bounds, the final graph height over the
physical mesh, and radial profiles from the shooting solver.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_run_figures(outdir, records, grid, state, bounds, cfg):
    """monitors.png and final_state.png; returns the written paths."""
    outdir = Path(outdir)
    t = np.array([r.t for r in records])

    fig, axes = plt.subplots(2, 2, figsize=(9.5, 7), sharex=True)
    ax = axes[0, 0]
    ax.plot(t, [r.sup_v for r in records], lw=1.2, color="tab:blue")
    ax.axhline(1.05 * bounds.c_grad, color="tab:red", ls="--", lw=1,
               label="1.05 x gradient bound")
    ax.set_ylabel("sup v")
    ax.legend(fontsize=8)

    ax = axes[0, 1]
    ax.semilogy(t, np.maximum([r.osc_ut for r in records], 1e-18),
                lw=1.2, color="tab:green")
    ax.axhline(cfg.trans_tol, color="tab:red", ls="--", lw=1,
               label="translator threshold")
    ax.set_ylabel("osc $u_t$")
    ax.legend(fontsize=8)

    ax = axes[1, 0]
    ax.plot(t, [r.lambda_est for r in records], lw=1.2, color="tab:orange")
    ax.set_ylabel("mean $u_t$")
    ax.set_xlabel("t")

    ax = axes[1, 1]
    ax.semilogy(t, [r.spacelike_margin for r in records], lw=1.2,
                color="tab:purple")
    ax.set_ylabel(r"min $(1-|Du|^2)$")
    ax.set_xlabel("t")

    fig.suptitle("flow monitors")
    fig.tight_layout()
    monitors_png = outdir / "monitors.png"
    fig.savefig(monitors_png, dpi=130)
    plt.close(fig)

    # final height over the physical mesh, theta wrapped for a closed plot
    xs = np.concatenate([grid.x, grid.x[:, :1]], axis=1)
    ys = np.concatenate([grid.y, grid.y[:, :1]], axis=1)
    us = np.concatenate([state.u.values, state.u.values[:, :1]], axis=1)
    fig, ax = plt.subplots(figsize=(6.4, 5.2))
    pc = ax.pcolormesh(xs, ys, us, shading="gouraud", cmap="viridis")
    fig.colorbar(pc, ax=ax, label="u")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"graph height at t = {state.t:.4g}")
    fig.tight_layout()
    final_png = outdir / "final_state.png"
    fig.savefig(final_png, dpi=130)
    plt.close(fig)
    return [monitors_png, final_png]


def render_profile_figure(path, profile):
    """Radial profile plot (height and slope) for a translator."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ax.plot(profile.radii, profile.values, lw=1.4, color="tab:blue",
            label="height")
    if profile.slopes is not None:
        ax.plot(profile.radii, profile.slopes, lw=1.2, color="tab:orange",
                ls="--", label="slope")
    ax.set_xlabel("r")
    if profile.lam is not None:
        ax.set_title(f"translator profile, speed = {profile.lam:.6g}")
    ax.legend(fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return Path(path)
