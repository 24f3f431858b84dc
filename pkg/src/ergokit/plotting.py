"""Matplotlib renderings of the analysis tables (Agg backend, deterministic PNGs)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_PNG_META = {"Software": None}


def _style(ax, xlabel, ylabel):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_persistence(path, p, z2, bound, gaussian, d, poisson_ref=None, t_R=None):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    pos = p > 0
    if poisson_ref is not None:
        ax.plot(p[pos], poisson_ref[pos], color="0.75", lw=0.6, label="poisson_ref")
    ax.plot(p[pos], z2[pos], color="tab:red", lw=0.8, label="z2")
    ax.plot(p[pos], np.maximum(bound[pos], 1e-300), "k--", lw=0.8, label="bound")
    ax.plot(p[pos], np.maximum(gaussian[pos] ** 2, 1e-300), color="tab:blue", lw=0.8, label="gaussian")
    ax.axhline(1.0 / d, color="k", lw=0.5, ls=":")
    if t_R is not None:
        ax.axvline(t_R, color="tab:green", lw=0.6, ls=":")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_ylim(max(1e-3 / d, float(np.min(z2[pos][z2[pos] > 0], initial=1.0)) / 10), 1.5)
    ax.legend(frameon=False, fontsize=8)
    _style(ax, "p", "z^2(p)")
    return _save(fig, path)


def plot_sff(path, t, K, d):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    m = t > 0
    ax.plot(t[m], np.maximum(K[m], 1e-300), lw=0.6)
    ax.axhline(1.0 / d, color="k", lw=0.5, ls=":")
    ax.set_xscale("log")
    ax.set_yscale("log")
    _style(ax, "t", "K(t)")
    return _save(fig, path)


def plot_modes(path, n, delta):
    fig, ax = plt.subplots(figsize=(6.4, 3.2))
    ax.plot(n, delta, ".", ms=1.5)
    ax.axhline(0.0, color="k", lw=0.5)
    _style(ax, "n", "Delta_n")
    return _save(fig, path)


def plot_spacings(path, edges, density, reference: dict):
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    c = 0.5 * (edges[1:] + edges[:-1])
    ax.bar(c, density, width=edges[1] - edges[0], color="0.8", edgecolor="0.5", lw=0.3)
    for name, ls in (("poisson", "-"), ("goe", "--"), ("gue", "-."), ("gse", ":")):
        ax.plot(c, reference[name], ls, lw=1.0, label=name)
    ax.legend(frameon=False, fontsize=8)
    _style(ax, "S", "P(S)")
    return _save(fig, path)


def plot_polar(path, theta, r):
    fig = plt.figure(figsize=(4.4, 4.4))
    ax = fig.add_subplot(projection="polar")
    ax.plot(theta, r, lw=0.4)
    ax.set_rmax(1.05)
    return _save(fig, path)
