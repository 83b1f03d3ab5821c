"""Report figures rendered next to the CSV/JSON outputs of ``conic-em run``."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def sweep_loglog(path, x, series, xlabel, ylabel, title, hline=None, hlabel=None):
    """log-log sweep plot; ``series`` maps label -> y array."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, y in series.items():
        ax.loglog(x, np.abs(y), "o-", label=label)
    if hline is not None:
        ax.axhline(hline, color="k", ls="--", lw=1, label=hlabel)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    return _save(fig, path)


def sweep_semilogx(path, x, series, xlabel, ylabel, title, hline=None, hlabel=None):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, y in series.items():
        ax.semilogx(x, y, "o-", label=label)
    if hline is not None:
        ax.axhline(hline, color="k", ls="--", lw=1, label=hlabel)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    return _save(fig, path)


def residual_scatter(path, values, threshold, title, ylabel="relative residual"):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(np.arange(len(values)), np.maximum(np.abs(values), 1e-18), ".",
                label="residual")
    ax.axhline(threshold, color="r", ls="--", lw=1, label=f"threshold {threshold:g}")
    ax.set_xlabel("case index")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    return _save(fig, path)


def pattern_heatmap(path, pattern, title):
    """|E_inf| on the (theta, phi) grid of a product-rule far-field pattern."""
    d = pattern.directions
    mag = np.linalg.norm(pattern.E, axis=1)
    theta = np.arccos(np.clip(d[:, 2], -1, 1))
    phi = np.mod(np.arctan2(d[:, 1], d[:, 0]), 2 * np.pi)
    n_theta = len(np.unique(np.round(theta, 12)))
    n_phi = d.shape[0] // n_theta
    order = np.lexsort((phi, theta))
    grid = mag[order].reshape(n_theta, n_phi)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    im = ax.imshow(grid, origin="lower", aspect="auto",
                   extent=[0, 360, 180, 0], cmap="viridis")
    ax.set_xlabel("phi (deg)")
    ax.set_ylabel("theta (deg)")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label="|E_inf|")
    return _save(fig, path)


def profile_plot(path, rows_by_label, xlabel, ylabel, title):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, (x, y) in rows_by_label.items():
        ax.loglog(x, np.maximum(np.abs(y), 1e-18), "o-", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    return _save(fig, path)
