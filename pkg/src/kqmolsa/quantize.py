"""Quantization: the Hermitian matrix of L2 products of the monomials 1, z, ..., z^2k.

Each sphere's contribution is integrated on the unit disc through its chart
w -> z, with the volume form set to zero on the pre-images of the child
discs. The base sphere is split into its two hemispheres |z| <= 1 and
|z| >= 1, the second through z = 1/w.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import PlanarDomain, build_domain
from .mobius import MobiusMap
from .molecule import MoleculeRecord, SphereSet, build_sphere_set
from .potential import PotentialData, evaluate_region_phi, solve_potential
from .surface import build_surface

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FOUR_PI = 4.0 * np.pi


class QuantizeError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureConfig:
    n_r: int = 15
    n_theta: int = 10

    def __post_init__(self):
        if self.n_r < 2 or self.n_theta < 2:
            raise ValueError("quadrature needs n_r >= 2 and n_theta >= 2")


@dataclass
class ShapeDescriptor:
    k: int
    M: np.ndarray
    area_original: float
    area_check: float
    molecule_name: str = ""
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    n_spheres: int = 0
    seed_matrix: np.ndarray | None = None  # k = 1 matrix kept for warm-starting k >= 2 alignment
    warnings: list[str] = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.molecule_name

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "molecule_name": self.molecule_name,
            "k": self.k,
            "n_spheres": self.n_spheres,
            "area_original": float(self.area_original),
            "area_check": float(self.area_check),
            "quadrature": {"n_r": self.quadrature.n_r, "n_theta": self.quadrature.n_theta},
            "matrix": _matrix_to_pairs(self.M),
        }
        if self.seed_matrix is not None:
            out["seed_matrix_k1"] = _matrix_to_pairs(self.seed_matrix)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ShapeDescriptor":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported descriptor schema_version {data.get('schema_version')!r}")
        k = int(data["k"])
        M = _pairs_to_matrix(data["matrix"])
        if M.shape != (2 * k + 1, 2 * k + 1):
            raise ValueError(f"matrix shape {M.shape} does not match k={k}")
        seed = data.get("seed_matrix_k1")
        q = data.get("quadrature", {})
        return cls(
            k=k,
            M=M,
            area_original=float(data["area_original"]),
            area_check=float(data["area_check"]),
            molecule_name=data.get("molecule_name", ""),
            quadrature=QuadratureConfig(int(q.get("n_r", 15)), int(q.get("n_theta", 10))),
            n_spheres=int(data.get("n_spheres", 0)),
            seed_matrix=None if seed is None else _pairs_to_matrix(seed),
        )

    def save(self, path: str | os.PathLike) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ShapeDescriptor":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _matrix_to_pairs(M) -> list:
    # json writes floats with repr, which round-trips doubles exactly
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(M)]


def _pairs_to_matrix(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def polar_grid(q: QuadratureConfig):
    """Nodes w and trapezium weights (including the polar Jacobian) on the unit disc.

    Radii s/n_r for s = 1..n_r (the origin carries zero weight), angles
    2*pi*t/n_theta for t = 0..n_theta-1.
    """
    rho = np.arange(1, q.n_r + 1) / q.n_r
    wr = np.full(q.n_r, 1.0 / q.n_r)
    wr[-1] *= 0.5
    theta = 2 * np.pi * np.arange(q.n_theta) / q.n_theta
    w = (rho[:, None] * np.exp(1j * theta[None, :])).ravel()
    weights = np.repeat(wr * rho * (2 * np.pi / q.n_theta), q.n_theta)
    return w, weights


def _circle_through(p):
    """Centre and radius of the circle through three points (None if collinear)."""
    a, b, c = p
    d = 2 * ((a.real - c.real) * (b.imag - c.imag) - (b.real - c.real) * (a.imag - c.imag))
    if abs(d) < 1e-14 * max(1.0, abs(a), abs(b), abs(c)) ** 2:
        return None
    aa, bb, cc = abs(a) ** 2, abs(b) ** 2, abs(c) ** 2
    ux = ((aa - cc) * (b.imag - c.imag) - (bb - cc) * (a.imag - c.imag)) / d
    uy = ((bb - cc) * (a.real - c.real) - (aa - cc) * (b.real - c.real)) / d
    centre = complex(ux, uy)
    return centre, abs(a - centre)


def exposed_fraction(q: QuadratureConfig, tmap: MobiusMap, holes, n_sub: int = 16):
    """Fraction of each node's trapezium cell that lies outside the holes.

    `holes` are discs (centre, radius) in the z-plane; w maps to z via tmap.
    Cells away from every hole boundary are 0 or 1 by their node; cells the
    boundary may cross are subsampled n_sub x n_sub, area-weighted.
    """
    w, _ = polar_grid(q)
    frac = np.ones(w.shape)
    if not holes:
        return frac
    h = 1.0 / q.n_r
    dtheta = 2 * np.pi / q.n_theta
    rho = np.abs(w)
    r_lo = rho - h / 2
    r_hi = np.minimum(rho + h / 2, 1.0)
    cell_radius = np.hypot(h / 2, (rho + h / 2) * dtheta / 2) * 1.05
    z = tmap(w)
    inside_any = np.zeros(w.shape, dtype=bool)
    near = np.zeros(w.shape, dtype=bool)
    inv = tmap.inverse()
    for centre, radius in holes:
        inside_any |= np.abs(z - centre) < radius
        circ = _circle_through(inv(centre + radius * np.exp(2j * np.pi * np.arange(3) / 3)))
        if circ is None:
            near[:] = True
        else:
            near |= np.abs(np.abs(w - circ[0]) - circ[1]) <= cell_radius
    frac[inside_any] = 0.0
    idx = np.flatnonzero(near)
    if idx.size:
        u = (np.arange(n_sub) + 0.5) / n_sub
        rs = r_lo[idx, None] + (r_hi - r_lo)[idx, None] * u[None, :]
        ang = np.angle(w[idx])[:, None] + dtheta * (u - 0.5)[None, :]
        pts = rs[:, :, None] * np.exp(1j * ang[:, None, :])
        zs = tmap(pts)
        out = np.ones(zs.shape, dtype=bool)
        for centre, radius in holes:
            out &= np.abs(zs - centre) >= radius
        wgt = np.broadcast_to(rs[:, :, None], zs.shape)
        frac[idx] = (wgt * out).sum(axis=(1, 2)) / wgt.sum(axis=(1, 2))
    return frac


def _chart_density(region, tmap: MobiusMap, w):
    """Kähler density of the region's round form pulled back to w, times 2 (dx dy measure)."""
    h = region.chart @ tmap
    q = np.abs(h.alpha * w + h.beta) ** 2 + np.abs(h.gamma * w + h.delta) ** 2
    return 4.0 * region.radius**2 / q**2


def quantize(
    domain: PlanarDomain,
    pot: PotentialData,
    k: int = 1,
    q: QuadratureConfig = QuadratureConfig(),
    area_original: float = float("nan"),
    molecule_name: str = "",
    area_tolerance: float = 0.05,
) -> ShapeDescriptor:
    if k < 1:
        raise ValueError("quantization level k must be >= 1")
    if k > 2:
        logger.warning("k=%d: descriptors above k=2 are numerically unstable", k)
    w, weights = polar_grid(q)
    dim = 2 * k + 1
    M = np.zeros((dim, dim), dtype=complex)
    area = 0.0
    for m, reg in enumerate(domain.regions):
        charts = [MobiusMap.identity(), MobiusMap.inversion()] if reg.is_base else [reg.to_unit_disc]
        kids = [domain.regions[c] for c in reg.children]
        for tmap in charts:
            z = tmap(w)
            holes = [(kid.disc_centre, kid.disc_radius) for kid in kids]
            wt = weights * _chart_density(reg, tmap, w) * exposed_fraction(q, tmap, holes)
            area += float(wt.sum())
            with np.errstate(over="ignore", invalid="ignore"):
                g = wt * np.exp(-k * evaluate_region_phi(pot, m, z))
                V = z[:, None] ** np.arange(dim)[None, :]
                contrib = V.T @ (g[:, None] * V.conj())
            if not np.all(np.isfinite(contrib)):
                raise QuantizeError(f"overflow evaluating the integrand on region {m}")
            M += contrib
    M = 0.5 * (M + M.conj().T)
    rel = abs(area - FOUR_PI) / FOUR_PI
    if rel > area_tolerance:
        raise QuantizeError(
            f"recovered area {area:.4f} deviates from 4*pi by {100 * rel:.1f}% "
            f"(tolerance {100 * area_tolerance:.1f}%): planar domain construction failed"
        )
    return ShapeDescriptor(
        k=k,
        M=M,
        area_original=area_original,
        area_check=area,
        molecule_name=molecule_name,
        quadrature=q,
        n_spheres=domain.n_regions,
        warnings=list(domain.warnings),
    )


def descriptor_from_spheres(
    spheres: SphereSet,
    k: int = 1,
    q: QuadratureConfig = QuadratureConfig(),
    area_tolerance: float = 0.05,
) -> ShapeDescriptor:
    """Full pipeline from a sphere set: surface, planar domain, potential, quantization."""
    geom = build_surface(spheres)
    domain = build_domain(geom)
    pot = solve_potential(domain)
    desc = quantize(domain, pot, k, q, geom.area_original, spheres.name, area_tolerance)
    if k >= 2:
        desc.seed_matrix = quantize(domain, pot, 1, q, geom.area_original, spheres.name, area_tolerance).M
    return desc


def descriptor_from_molecule(
    mol: MoleculeRecord,
    k: int = 1,
    q: QuadratureConfig = QuadratureConfig(),
    radii_table: dict[str, float] | None = None,
    area_tolerance: float = 0.05,
) -> ShapeDescriptor:
    spheres = build_sphere_set(mol, radii_table)
    return descriptor_from_spheres(spheres, k, q, area_tolerance)
