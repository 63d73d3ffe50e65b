"""Matplotlib figures for check reports and Bratteli data.

Only the report path draws figures, so matplotlib is imported lazily.
"""
from __future__ import annotations

import math
import pathlib

import numpy as np

RC = {
    "figure.dpi": 110,
    "font.size": 8,
    "axes.linewidth": 0.6,
    "axes.titlesize": 9,
    "xtick.labelsize": 7,
    "ytick.labelsize": 7,
    "savefig.dpi": 150,
}


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def residual_figure(report, path, title=None):
    """log10 residual per check against its threshold, failures in red."""
    plt = _plt()
    recs = sorted(report.records, key=lambda r: r.check_id)
    floor = 1e-18
    res = np.array([max(r.residual, floor) if math.isfinite(r.residual) else 1e3 for r in recs])
    thr = np.array([r.threshold for r in recs])
    ok = np.array([r.passed for r in recs], dtype=bool)
    x = np.arange(len(recs))
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(7.0, 3.2))
        if len(recs):
            ax.scatter(x[ok], np.log10(res[ok]), s=6, c="tab:blue", label="pass")
            ax.scatter(x[~ok], np.log10(res[~ok]), s=10, c="tab:red", label="fail")
            ax.step(x, np.log10(thr), where="mid", c="k", lw=0.7, label="threshold")
        ax.set_xlabel("check (sorted by id)")
        ax.set_ylabel("log10 residual")
        ax.set_title(title or report.title or "residuals")
        ax.legend(frameon=False, loc="upper left")
        fig.tight_layout()
        path = pathlib.Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path)
        plt.close(fig)
    return path


def timing_figure(report, path, top=20):
    """Slowest checks as a horizontal bar chart."""
    plt = _plt()
    recs = sorted(report.records, key=lambda r: -r.wall_time)[:top]
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(7.0, 0.22 * max(len(recs), 4) + 0.8))
        ax.barh(np.arange(len(recs)), [r.wall_time for r in recs], color="tab:gray")
        ax.set_yticks(np.arange(len(recs)))
        ax.set_yticklabels([r.check_id for r in recs], fontsize=6)
        ax.invert_yaxis()
        ax.set_xlabel("wall time [s]")
        fig.tight_layout()
        path = pathlib.Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path)
        plt.close(fig)
    return path


def bratteli_figure(matrices, labels, path, title=None):
    """Draw a multi-level Bratteli diagram from consecutive inclusion matrices.

    Rows of each matrix are the blocks of the smaller algebra; ``labels`` names
    the levels, one more than there are matrices.
    """
    plt = _plt()
    mats = [np.asarray(m) for m in matrices]
    sizes = [mats[0].shape[0]] + [m.shape[1] for m in mats]
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(1.6 * len(sizes) + 1.0, 0.5 * max(sizes) + 1.2))
        pos = []
        for lvl, s in enumerate(sizes):
            ys = np.linspace(0, 1, s) if s > 1 else np.array([0.5])
            pos.append(ys)
            ax.scatter(np.full(s, lvl), ys, s=30, c="k", zorder=3)
        for lvl, m in enumerate(mats):
            for i, j in zip(*np.nonzero(m)):
                ax.plot([lvl, lvl + 1], [pos[lvl][i], pos[lvl + 1][j]], c="tab:blue", lw=0.6 + 0.6 * (m[i, j] - 1))
                if m[i, j] > 1:
                    ax.text(lvl + 0.5, (pos[lvl][i] + pos[lvl + 1][j]) / 2, str(m[i, j]), fontsize=6)
        ax.set_xticks(range(len(sizes)))
        ax.set_xticklabels(labels)
        ax.set_yticks([])
        ax.set_title(title or "Bratteli diagram")
        for side in ("left", "right", "top"):
            ax.spines[side].set_visible(False)
        fig.tight_layout()
        path = pathlib.Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path)
        plt.close(fig)
    return path
