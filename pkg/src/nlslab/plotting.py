"""Figures written next to the CLI's delimited output (opt-in via ``--figures``)."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "legend.fontsize": 8,
    "savefig.dpi": 120,
}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    # fixed metadata keeps reruns byte-identical
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def series_figure(series, path: str | Path, title: str = "") -> Path:
    """Relative drift of Q and E, plus K and V, against time."""
    t = np.array([r.t for r in series])
    Q = np.array([r.Q for r in series])
    E = np.array([r.E for r in series])
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6))
        drift_q = np.abs(Q / Q[0] - 1) if Q[0] else np.abs(Q - Q[0])
        drift_e = np.abs(E / E[0] - 1) if E[0] else np.abs(E - E[0])
        axes[0].semilogy(t, np.maximum(drift_q, 1e-18), label="|Q/Q0 - 1|")
        axes[0].semilogy(t, np.maximum(drift_e, 1e-18), label="|E/E0 - 1|")
        axes[0].set_xlabel("t")
        axes[0].legend()
        axes[1].plot(t, [r.K for r in series], label="K")
        axes[1].plot(t, [r.V for r in series], label="V")
        axes[1].set_xlabel("t")
        axes[1].legend()
        if title:
            fig.suptitle(title)
        return _save(fig, Path(path))


def profile_figure(psi, path: str | Path, title: str = "") -> Path:
    """Ground-state components along the first axis (or radius)."""
    grid = psi.grid
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if hasattr(grid, "x"):
            mid = (grid.N // 2,) * (grid.n - 1)
            x = grid.x
            for k, c in enumerate(psi.components):
                ax.plot(x, np.real(c[(slice(None),) + mid]), label=f"psi_{k + 1}")
            ax.set_xlabel("x_1")
        else:
            for k, c in enumerate(psi.components):
                ax.plot(grid.r, np.real(c), label=f"psi_{k + 1}")
            ax.set_xlabel("r")
        ax.legend()
        if title:
            ax.set_title(title)
        return _save(fig, Path(path))


def blowup_figure(tau: Sequence[float], K: Sequence[float], K_exact: Sequence[float],
                  path: str | Path, title: str = "") -> Path:
    """K(t) against T - t on log axes, evolved and closed form."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(tau, K, "o", ms=3, label="evolved")
        ax.loglog(tau, K_exact, "-", label="closed form")
        ax.set_xlabel("T - t")
        ax.set_ylabel("K")
        ax.invert_xaxis()
        ax.legend()
        if title:
            ax.set_title(title)
        return _save(fig, Path(path))


def virial_figure(series, path: str | Path, title: str = "") -> Path:
    """Finite-difference V'' against the identity's right-hand side."""
    rows = [r for r in series if r.Vddot_fd is not None]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot([r.t for r in series], [r.Vddot_formula for r in series], "-", label="formula")
        ax.plot([r.t for r in rows], [r.Vddot_fd for r in rows], ".", ms=3, label="central difference")
        ax.set_xlabel("t")
        ax.set_ylabel("V''")
        ax.legend()
        if title:
            ax.set_title(title)
        return _save(fig, Path(path))
