"""Figures written next to the delimited outputs."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "pi_psi_w": ("tab:blue", r"$\langle\Pi_\psi\rangle_w$"),
    "pi_v_w": ("tab:red", r"$\langle\Pi_V\rangle_w$"),
    "seq_w": ("tab:purple", r"$\langle\Pi_\psi\Pi_V\rangle_w$"),
}


def sweep_figure(result, path, title=None) -> Path:
    """Estimated weak values (points) against analytic curves (dashed)."""
    theta = result.column("theta")
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    for q, (color, label) in STYLE.items():
        ax.plot(theta, result.column("analytic_" + q), "--", color=color, lw=1.2)
        if result.mode != "analytic":
            ax.errorbar(theta, result.column(q), yerr=result.column(q + "_se"), fmt="o",
                        ms=3.5, color=color, label=label, capsize=2)
        else:
            ax.plot([], [], "--", color=color, label=label)
    ax.axhline(0.0, color="0.7", lw=0.6)
    ax.set_xlabel(r"$\theta$ (rad)")
    ax.set_ylabel("weak value")
    ax.set_xlim(theta.min() - 0.05, theta.max() + 0.05)
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def scan_figure(scan, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4), dpi=120)
    r = scan.ratios
    pos = r > 0
    for j, (q, (color, label)) in enumerate(STYLE.items()):
        d = scan.deviations[pos, j]
        if np.any(d > 0):
            slope = scan.slopes.get(q)
            tag = f" (slope {slope:.2f})" if slope is not None else " (degenerate)"
            ax.loglog(r[pos], np.where(d > 0, d, np.nan), "o-", color=color, label=label + tag)
    ax.set_xlabel(r"$g/\sigma$")
    ax.set_ylabel("|inverted - analytic|")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def frame_figure(counts, config, path) -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 4), dpi=120)
    ex, ey = config.edges(0), config.edges(1)
    im = ax.pcolormesh(ex, ey, counts, cmap="viridis", shading="flat")
    fig.colorbar(im, ax=ax, label="counts")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path
