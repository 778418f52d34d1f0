"""Figure rendering for frontier logs, bounds sweeps, and check tables.

Every figure lands next to the delimited output it illustrates; the
run manifest rides along as PNG text metadata so an artifact can be
traced back to its command line.
"""

from __future__ import annotations

import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _png_metadata(manifest: dict | None) -> dict:
    if not manifest:
        return {}
    return {"manifest": json.dumps(manifest, sort_keys=True)}


def save_frontier_figure(records, path: str, manifest: dict | None = None,
                         title: str = "certified efficiency ratios") -> None:
    """Scatter of candidate ratios, certified candidates highlighted."""
    certified = [(i, r.ratio) for i, r in enumerate(records) if r.certified]
    rejected = [(i, r.ratio) for i, r in enumerate(records) if not r.certified]
    fig, ax = plt.subplots(figsize=(7.5, 4.5))
    if rejected:
        xs, ys = zip(*rejected)
        ax.scatter(xs, ys, s=8, c="0.75", marker="x", label="not supportable")
    if certified:
        xs, ys = zip(*certified)
        ax.scatter(xs, ys, s=10, c="tab:blue", label="certified")
        best = max(ys)
        ax.axhline(best, color="tab:red", lw=0.8, ls="--",
                   label=f"best {best:.6g}")
    ax.set_xlabel("candidate")
    ax.set_ylabel("optimal / equilibrium welfare")
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_png_metadata(manifest))
    plt.close(fig)


def save_bounds_figure(records, path: str, manifest: dict | None = None) -> None:
    """Per-k panels: sampled (decay, ratio) points against both bounds."""
    ks = sorted({r.k for r in records})
    cols = min(3, len(ks))
    nrows = (len(ks) + cols - 1) // cols
    fig, axes = plt.subplots(nrows, cols, figsize=(4 * cols, 3.2 * nrows),
                             squeeze=False)
    grid = np.linspace(0.02, 1.0, 200)
    for idx, k in enumerate(ks):
        ax = axes[idx // cols][idx % cols]
        pts = [r for r in records if r.k == k]
        lam = [float(r.decay) for r in pts]
        f = [float(r.ratio) for r in pts]
        ax.scatter(lam, f, s=6, c="tab:blue", alpha=0.4, label="closed-form ratio")
        ax.plot(grid, (k - 1) / (k - 2) * grid, c="tab:orange", lw=1,
                label="(k-1)/(k-2) * decay")
        ax.plot(grid, k - (k - 1) * grid, c="tab:green", lw=1,
                label="k - (k-1) * decay")
        ax.axhline(k / (k - 1), color="0.4", lw=0.8, ls=":")
        ax.set_ylim(0.8, 2.0)
        ax.set_title(f"k = {k}", fontsize=9)
        ax.set_xlabel("mean ctr decay")
        if idx % cols == 0:
            ax.set_ylabel("ratio")
        if idx == 0:
            ax.legend(fontsize=7, loc="upper right")
    for idx in range(len(ks), nrows * cols):
        axes[idx // cols][idx % cols].set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_png_metadata(manifest))
    plt.close(fig)


def save_check_figure(rows, path: str, manifest: dict | None = None) -> None:
    """Horizontal pass/fail bars for the reproduction suite rows."""
    names = [f"{r.key}  {r.title}" for r in rows]
    colors = ["tab:green" if r.passed else "tab:red" for r in rows]
    fig, ax = plt.subplots(figsize=(8, 0.45 * len(rows) + 1.2))
    y = np.arange(len(rows))
    ax.barh(y, [r.seconds for r in rows], color=colors, height=0.6)
    ax.set_yticks(y)
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("runtime (s)")
    ax.set_title("reproduction checks (green = pass)")
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_png_metadata(manifest))
    plt.close(fig)
