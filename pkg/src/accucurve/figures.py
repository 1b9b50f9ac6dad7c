"""Matplotlib rendering of the report figures.

Each CLI report writes its figure next to the delimited output it belongs
to. The Agg backend keeps rendering headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _thin(idx, values, max_points=400):
    idx = np.asarray(idx)
    values = np.asarray(values, dtype=float)
    if idx.size <= max_points:
        return idx, values
    keep = np.unique(np.linspace(0, idx.size - 1, max_points).round().astype(int))
    return idx[keep], values[keep]


def render_curve_figure(positions, observed, expected, lower, upper, split_at,
                        out_path, title=None):
    """Accumulation curve: observed dots, expected line, dashed band edges."""
    positions = np.asarray(positions, dtype=float)
    fig, ax = plt.subplots(figsize=(7.5, 4.5))
    have = ~np.isnan(np.asarray(observed, dtype=float))
    if have.any():
        ox, oy = _thin(positions[have], np.asarray(observed, dtype=float)[have])
        ax.plot(ox, oy, "o", ms=3, mfc="white", mec="0.3", label="observed")
    ax.plot(positions, expected, "-", color="C0", lw=1.6, label="expected")
    ax.plot(positions, lower, "--", color="0.2", lw=0.9)
    ax.plot(positions, upper, "--", color="0.2", lw=0.9, label="interval")
    if split_at is not None:
        ax.axvline(split_at, color="0.6", lw=0.8, ls=":")
    ax.set_xlabel("observations")
    ax.set_ylabel("distinct labels")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, loc="lower right")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_richness_figure(richness_values, saturation_values, out_path, title=None):
    """Two-panel histogram: per-sample richness and saturation."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.8))
    ax1.hist(np.asarray(richness_values, dtype=float), bins="auto",
             color="C0", edgecolor="white")
    ax1.set_xlabel("posterior mean richness")
    ax1.set_ylabel("samples")
    ax2.hist(np.asarray(saturation_values, dtype=float), bins="auto",
             color="C2", edgecolor="white")
    ax2.set_xlabel("posterior mean saturation")
    ax2.set_ylabel("samples")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_dic_figure(labels, dic_values, out_path):
    """Bar chart of DIC values, best (lowest) first."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    y = np.arange(len(labels))
    ax.barh(y, dic_values, color="C0")
    ax.set_yticks(y, labels)
    ax.invert_yaxis()
    ax.set_xlabel("DIC (lower is better)")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
