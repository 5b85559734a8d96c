"""Report figures: ranked screening scores and the planar domain of a molecule."""

from __future__ import annotations

import logging
import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Circle  # noqa: E402

logger = logging.getLogger(__name__)


def plot_screen(scores, path: str | os.PathLike, query_name: str = "", max_rows: int = 40) -> Path:
    """Horizontal bars of the ranked scores, split into area and shape parts."""
    rows = list(scores)[:max_rows]
    path = Path(path)
    height = max(2.5, 0.3 * len(rows) + 1.2)
    fig, ax = plt.subplots(figsize=(7, height))
    if rows:
        names = [s.name or f"#{i}" for i, s in enumerate(rows)]
        y = np.arange(len(rows))[::-1]
        area_part = np.array([s.weights[0] * s.area_ratio for s in rows])
        shape_part = np.array([s.weights[1] / (1 + s.distance) for s in rows])
        ax.barh(y, shape_part, color="tab:blue", label="shape 1/(1+d)")
        ax.barh(y, area_part, left=shape_part, color="tab:orange", label="area ratio")
        ax.set_yticks(y)
        ax.set_yticklabels(names, fontsize=8)
        ax.legend(loc="lower right", fontsize=8)
    else:
        ax.text(0.5, 0.5, "no scored pairs", ha="center", va="center", transform=ax.transAxes)
    ax.set_xlim(0, 1)
    ax.set_xlabel("similarity score")
    ax.set_title(f"screen: {query_name}" if query_name else "screen")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info("wrote %s", path)
    return path


def plot_domain(domain, path: str | os.PathLike, title: str = "") -> Path:
    """The nested discs of the planar domain, coloured by BFS level."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5, 5))
    cmap = plt.get_cmap("viridis")
    depth = max(r.level for r in domain.regions) or 1
    ax.add_patch(Circle((0, 0), 1.0, fill=False, ls="--", lw=0.8, color="grey"))
    lim = 1.5
    for reg in domain.regions[1:]:
        c = reg.disc_centre
        ax.add_patch(Circle((c.real, c.imag), reg.disc_radius, fill=False, lw=1.2, color=cmap(reg.level / depth)))
        lim = max(lim, abs(c) + reg.disc_radius)
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_aspect("equal")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_title(title or "planar domain")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
