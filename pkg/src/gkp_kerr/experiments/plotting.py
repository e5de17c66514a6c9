"""Deterministic SVG rendering of result grids; the CSVs remain the record."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "gkp-kerr"


def wigner_svg(path, w: np.ndarray, q, p, title: str = "") -> None:
    lim = float(np.abs(w).max()) or 1.0
    fig, ax = plt.subplots(figsize=(4, 4))
    mesh = ax.pcolormesh(q, p, w, cmap="RdBu_r", vmin=-lim, vmax=lim, shading="auto", rasterized=False)
    ax.set_aspect("equal")
    ax.set_xlabel("q")
    ax.set_ylabel("p")
    if title:
        ax.set_title(title)
    fig.colorbar(mesh, ax=ax, shrink=0.8)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def infidelity_svg(path, rows: list, title: str = "") -> None:
    """Infidelity (solid) and success probability (dashed) against gamma."""
    fig, ax = plt.subplots(figsize=(5, 4))
    ax2 = ax.twinx()
    keys = sorted({(r["delta"], r["decoder"], r["n_rounds"]) for r in rows})
    for delta, decoder, n in keys:
        sel = sorted((r for r in rows if (r["delta"], r["decoder"], r["n_rounds"]) == (delta, decoder, n)), key=lambda r: r["gamma"])
        g = [r["gamma"] for r in sel if r["gamma"] > 0]
        inf = [max(r["infidelity"], 1e-16) for r in sel if r["gamma"] > 0]
        suc = [r["success_prob"] for r in sel if r["gamma"] > 0]
        label = f"Delta={delta:g} {decoder} N={n}"
        (line,) = ax.loglog(g, inf, "-o", ms=3, label=label)
        ax2.semilogx(g, suc, "--", color=line.get_color())
    ax.set_xlabel("gamma")
    ax.set_ylabel("infidelity")
    ax2.set_ylabel("success probability")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
