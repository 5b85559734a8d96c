"""Sphere intersection graph, surface area, rescaling to area 4*pi and BFS levels."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

from .molecule import MoleculeError, SphereSet

logger = logging.getLogger(__name__)


class SurfaceError(MoleculeError):
    pass


@dataclass
class IntersectionGraph:
    T: np.ndarray  # (N, N) int, symmetric, zero diagonal
    lam: np.ndarray  # (N, N) signed centre-to-plane distances, nan where T == 0

    def neighbours(self, i: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.T[i])]


@dataclass
class SurfaceGeometry:
    spheres: SphereSet  # rescaled
    graph: IntersectionGraph  # lambda rescaled too
    area_original: float
    scale_factor: float
    base_index: int
    levels: np.ndarray
    parent: np.ndarray  # -1 for the base
    dropped: list[int]  # indices into the input SphereSet removed as engulfed

    @property
    def n_spheres(self) -> int:
        return self.spheres.n_spheres

    def children(self, i: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.parent == i)]


def _pair_geometry(centres, radii):
    diff = centres[:, None, :] - centres[None, :, :]
    d = np.linalg.norm(diff, axis=-1)
    rsum = radii[:, None] + radii[None, :]
    rdiff = np.abs(radii[:, None] - radii[None, :])
    return d, rsum, rdiff


def drop_engulfed(s: SphereSet) -> tuple[SphereSet, list[int]]:
    """Remove spheres lying inside another sphere; returns kept set and dropped indices."""
    d, _, rdiff = _pair_geometry(s.centres, s.radii)
    n = s.n_spheres
    dropped = set()
    # largest first so that a chain of nested spheres collapses onto the outermost
    order = sorted(range(n), key=lambda i: (-s.radii[i], i))
    for a_pos, i in enumerate(order):
        if i in dropped:
            continue
        for j in order[a_pos + 1 :]:
            if j not in dropped and d[i, j] <= rdiff[i, j]:
                dropped.add(j)
                logger.warning("sphere %d (%s) is engulfed by sphere %d; dropped", j, s.provenance[j], i)
    keep = [i for i in range(n) if i not in dropped]
    return s.subset(keep), sorted(dropped)


def build_adjacency(s: SphereSet) -> IntersectionGraph:
    """Intersection graph of a sphere set with no engulfed spheres.

    Raises SurfaceError if a sphere is engulfed or the graph is disconnected.
    """
    d, rsum, rdiff = _pair_geometry(s.centres, s.radii)
    n = s.n_spheres
    off = ~np.eye(n, dtype=bool)
    if np.any((d <= rdiff) & off):
        i, j = np.argwhere((d <= rdiff) & off)[0]
        raise SurfaceError(f"sphere {min(i, j)} or {max(i, j)} is engulfed; call drop_engulfed first")
    T = ((d < rsum) & off).astype(int)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = (d**2 + s.radii[:, None] ** 2 - s.radii[None, :] ** 2) / (2 * d)
    lam = np.where(T == 1, lam, np.nan)
    graph = IntersectionGraph(T, lam)
    if len(_bfs_levels(graph, 0)) != n:
        raise SurfaceError("sphere model is disconnected")
    return graph


def surface_area(s: SphereSet, g: IntersectionGraph) -> float:
    """Sphere areas minus the caps removed by each intersection."""
    r = s.radii
    caps = np.where(g.T == 1, np.abs(r[:, None] - np.nan_to_num(g.lam)), 0.0).sum(axis=1)
    area = 2 * np.pi * float(np.sum(2 * r**2 - r * caps))
    if not area > 0:
        raise SurfaceError(f"non-positive surface area ({area:.4g}); overlap is pathological")
    return area


def _bfs_levels(g: IntersectionGraph, root: int):
    levels = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in g.neighbours(u):
            if v not in levels:
                levels[v] = levels[u] + 1
                queue.append(v)
    return levels


def base_sphere(centres: np.ndarray) -> int:
    """Sphere whose centre is closest to the unweighted centroid; lowest index on ties."""
    centroid = centres.mean(axis=0)
    dist = np.linalg.norm(centres - centroid, axis=1)
    return int(np.flatnonzero(dist <= dist.min() + 1e-12 * max(1.0, dist.min()))[0])


def rescale_and_root(s: SphereSet, g: IntersectionGraph, area: float | None = None) -> SurfaceGeometry:
    area = surface_area(s, g) if area is None else area
    scale = float(np.sqrt(4 * np.pi / area))
    centroid = s.centres.mean(axis=0)
    spheres = SphereSet((s.centres - centroid) * scale, s.radii * scale, list(s.provenance), s.name)
    graph = IntersectionGraph(g.T.copy(), g.lam * scale)

    base = base_sphere(spheres.centres)
    lv = _bfs_levels(graph, base)
    n = s.n_spheres
    levels = np.array([lv[i] for i in range(n)])
    parent = np.full(n, -1)
    for i in range(n):
        if i == base:
            continue
        cands = [j for j in graph.neighbours(i) if levels[j] == levels[i] - 1]
        parent[i] = min(cands)
    return SurfaceGeometry(spheres, graph, area, scale, base, levels, parent, [])


def build_surface(s: SphereSet) -> SurfaceGeometry:
    """Drop engulfed spheres, build the graph, rescale and root."""
    kept, dropped = drop_engulfed(s)
    graph = build_adjacency(kept)
    geom = rescale_and_root(kept, graph)
    geom.dropped = dropped
    return geom
