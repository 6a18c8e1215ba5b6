"""Figures written next to the run output (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .energy import density_field  # noqa: E402
from .fields import FlowState  # noqa: E402

# no timestamps or version strings, so reruns give identical bytes
_META = {"Software": None}


def energy_figure(series, events, path: Path):
    t = np.array([r.time for r in series])
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    ax1.plot(t, [r.total_energy for r in series], label="total")
    ax1.plot(t, [r.curvature_term for r in series], label="|F|^2")
    ax1.plot(t, [r.kinetic_term for r in series], label="|D phi|^2")
    ax1.plot(t, [r.potential_term for r in series], label="(mu - c)^2")
    for ev in events:
        ax1.axvline(ev.time, color="k", ls=":", lw=0.8)
    ax1.set_ylabel("energy")
    ax1.legend(fontsize=8)
    tens = np.array([r.tension_norm1 + r.tension_norm2 for r in series])
    ax2.semilogy(t, np.maximum(tens, 1e-300))
    ax2.set_ylabel("|tau1| + |tau2|")
    ax2.set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)


def density_figure(state: FlowState, path: Path):
    L = state.grid.length
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(density_field(state).T, origin="lower", extent=(0, L, 0, L), cmap="magma")
    fig.colorbar(im, ax=ax, label="energy density")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(f"t = {state.time:.6g}")
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
