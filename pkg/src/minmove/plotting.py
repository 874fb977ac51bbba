"""Optional figures written next to the delimited outputs (matplotlib, Agg backend)."""
from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path):
    # fixed metadata keeps reruns byte-stable where the backend allows it
    fig.savefig(path, dpi=120, metadata={"Software": None})
    fig.clf()


def plot_trajectory(path, times, states, title=""):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.step(times, states, where="post", lw=1)
    ax.set_xlabel("t")
    ax.set_ylabel("x")
    ax.set_title(title)
    _save(fig, path)
    plt.close(fig)


def plot_phase(path, gammas, Ts, f):
    """Heatmap of f over the (gamma, T) grid with the pinned region in white."""
    plt = _pyplot()
    g = np.unique(gammas)
    t = np.unique(Ts)
    grid = np.asarray(f, dtype=float).reshape(len(g), len(t))
    fig, ax = plt.subplots(figsize=(6, 4))
    masked = np.ma.masked_where(grid <= 0.0, grid)
    mesh = ax.pcolormesh(t, g, masked, shading="nearest")
    fig.colorbar(mesh, ax=ax, label="f")
    ax.set_xlabel("T")
    ax.set_ylabel("gamma")
    _save(fig, path)
    plt.close(fig)


def plot_limit(path, ode, mm=None):
    """The limit ODE solution, optionally with discrete trajectories {eps: (t, x)}."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    t = np.linspace(0.0, ode.t_end, 500)
    ax.plot(t, ode.at(t), color="k", lw=1.5, label="limit ODE")
    for eps, (ts, xs) in (mm or {}).items():
        ax.step(ts, xs, where="post", lw=0.8, label=f"eps={eps:g}")
    if ode.pinned_at is not None:
        ax.axvline(ode.pinned_at, ls=":", color="grey")
    ax.set_xlabel("t")
    ax.set_ylabel("x")
    ax.legend()
    _save(fig, path)
    plt.close(fig)


def plot_convergence(path, table):
    plt = _pyplot()
    eps = [e for e, _ in table]
    dist = [d for _, d in table]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(eps, dist, "o-")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("sup distance")
    _save(fig, path)
    plt.close(fig)
