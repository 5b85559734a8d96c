"""Piecewise stereographic projection of a sphere-union surface onto C.

Every sphere m carries a conformal chart: a right-handed frame about its
centre, the stereographic coordinate zeta from the frame's third axis, and a
Möbius map G_m taking the global coordinate z to zeta. The base sphere uses
G = identity with the pole placed as far as possible from its neighbours'
caps. A child sphere's chart is fixed by requiring it to agree with its
parent's chart on their seam circle, which makes the metric function F
continuous across disc boundaries. For a tree of spheres the seam is the
circle of intersection; see plan_seams for the general case.

In a child's frame the third axis points at the parent, so the exposed part
of the child is |zeta| < R_gamma and the map w -> G^-1(R_gamma * w) takes the
unit disc onto the child's disc D(a, R). Both the child's and the parent's
metric are rotationally symmetric in w, which is what the potential solver
relies on.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .mobius import MobiusMap, disc_image
from .surface import SurfaceGeometry

logger = logging.getLogger(__name__)


class DomainError(ValueError):
    pass


def orthonormal_frame(axis) -> np.ndarray:
    """Right-handed frame (columns e1, e2, e3) with e3 along `axis`."""
    e3 = np.asarray(axis, dtype=float)
    e3 = e3 / np.linalg.norm(e3)
    helper = np.array([1.0, 0.0, 0.0]) if abs(e3[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - helper.dot(e3) * e3
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(e3, e1)
    return np.column_stack([e1, e2, e3])


def stereo(points, centre, radius, frame):
    """Stereographic coordinate of points on a sphere, projected from frame[:, 2]."""
    x = (np.asarray(points, dtype=float) - centre) @ frame / radius
    return (x[..., 0] + 1j * x[..., 1]) / (1.0 - x[..., 2])


def inverse_stereo(zeta, centre, radius, frame):
    zeta = np.asarray(zeta, dtype=complex)
    m2 = np.abs(zeta) ** 2
    x = np.stack([2 * zeta.real, 2 * zeta.imag, m2 - 1.0], axis=-1) / (1.0 + m2)[..., None]
    return centre + radius * x @ frame.T


@dataclass
class PlanarRegion:
    sphere_index: int
    level: int
    parent: int  # region index, -1 for the base
    radius: float  # rescaled sphere radius r'
    centre: np.ndarray
    frame: np.ndarray
    chart: MobiusMap  # z -> zeta (sphere stereographic coordinate)
    to_unit_disc: MobiusMap  # w in the unit disc -> z
    disc_centre: complex | None = None
    disc_radius: float | None = None
    shrink: float = 1.0
    # metric F pulled back to w: kappa / (|w|^2 + eps)^2, for this sphere and for the parent
    kappa: float = 0.0
    eps: float = 0.0
    kappa_parent: float = 0.0
    eps_parent: float = 0.0
    children: list[int] = field(default_factory=list)
    seam_radius: float = 0.0  # radius of the circle glued to the parent (rescaled units)
    seam_axis: np.ndarray | None = None  # axis of that circle's cap on the parent sphere

    @property
    def is_base(self) -> bool:
        return self.parent < 0

    def _quadratic(self):
        a, b, c, d = self.chart.alpha, self.chart.beta, self.chart.gamma, self.chart.delta
        s = abs(a) ** 2 + abs(c) ** 2
        centre = -(np.conj(a) * b + np.conj(c) * d) / s
        return s, complex(centre)

    @property
    def A(self) -> complex:
        return self._quadratic()[1]

    @property
    def B(self) -> float:
        return 1.0 / self._quadratic()[0] ** 2

    @property
    def C(self) -> float:
        """Coefficient of the Riemannian metric g = C / (|z - A|^2 + B)^2 |dz|^2."""
        return 4.0 * self.B * self.radius**2

    @property
    def kahler_coefficient(self) -> float:
        """Coefficient of the Kähler density F = (C/2) / (|z - A|^2 + B)^2."""
        return 0.5 * self.C

    def metric(self, z):
        """F(z) for this region's round-sphere formula (valid on the whole plane)."""
        z = np.asarray(z, dtype=complex)
        ch = self.chart
        q = np.abs(ch.alpha * z + ch.beta) ** 2 + np.abs(ch.gamma * z + ch.delta) ** 2
        return 2.0 * self.radius**2 / q**2


@dataclass
class PlanarDomain:
    regions: list[PlanarRegion]
    pole: np.ndarray  # unit vector on the base sphere mapped to infinity
    warnings: list[str] = field(default_factory=list)

    @property
    def r_B(self) -> float:
        return self.regions[0].radius

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    def locate(self, z) -> np.ndarray:
        """Index of the deepest region containing each z (0 = base region)."""
        z = np.asarray(z, dtype=complex)
        idx = np.zeros(z.shape, dtype=int)
        for k, reg in enumerate(self.regions):
            if reg.is_base:
                continue
            inside = (idx == reg.parent) & (np.abs(z - reg.disc_centre) < reg.disc_radius)
            idx[inside] = k
        return idx


def metric_F(domain: PlanarDomain, z):
    """Kähler density F at z: round base form in the base region, disc forms elsewhere."""
    z = np.asarray(z, dtype=complex)
    idx = domain.locate(z)
    out = np.empty(z.shape, dtype=float)
    for k in np.unique(idx):
        mask = idx == k
        out[mask] = domain.regions[k].metric(z[mask])
    return out if out.ndim else float(out)


def _fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    phi = np.arccos(1 - 2 * k / n)
    theta = np.pi * (1 + 5**0.5) * k
    return np.column_stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)])


def _disc_ok(candidate, parent_disc, siblings, tol=1e-12) -> bool:
    centre, radius = candidate
    if parent_disc is not None:
        pc, pr = parent_disc
        if abs(centre - pc) + radius > pr * (1 - tol):
            return False
    for sc, sr in siblings:
        if abs(centre - sc) < (radius + sr) * (1 + tol):
            return False
    return True


def _largest_admissible_shrink(tmap: MobiusMap, parent_disc, siblings) -> float:
    if _disc_ok(disc_image(tmap, 0j, 1.0), parent_disc, siblings):
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _disc_ok(disc_image(tmap, 0j, mid), parent_disc, siblings):
            lo = mid
        else:
            hi = mid
    if lo <= 0.0:
        raise DomainError("no room left for a child disc")
    return lo


# --- seams ----------------------------------------------------------------------
#
# A seam glues the cap of the parent beyond a circle of radius a to the cap of
# the child beyond a circle of the same radius. With equal radii the two round
# metrics agree on the seam, so F stays continuous. For a pure tree of spheres
# the seam is the true intersection circle. Intersections that are not tree
# edges are absorbed by enlarging the child's seam so that the total area of
# the unwrapped surface equals the cap-subtracted area; caps of siblings that
# overlap on their parent are rotated apart on the parent sphere.

SEAM_MARGIN = 1e-6  # radians kept between neighbouring caps


@dataclass
class Seam:
    child: int
    parent: int
    axis_true: np.ndarray  # unit vector parent -> child
    axis: np.ndarray  # cap axis on the parent sphere after separation
    phi: float  # half-angle of the hidden cap on the child
    phi_true: float
    sign_p: float  # +1 when the parent's hidden cap is smaller than a hemisphere
    r_p: float
    r_c: float
    target: float  # desired two-sided cap area
    a_max: float = np.inf  # largest seam radius that still fits on the parent
    phi_max: float = np.pi  # largest child cap that leaves room for the child's own children

    @property
    def a(self) -> float:
        """Radius of the seam circle."""
        return min(self.r_c * np.sin(self.phi), self.r_p)

    @property
    def x(self) -> float:
        """Height of the seam plane on the parent, along the cap axis."""
        return self.sign_p * np.sqrt(max(self.r_p**2 - self.a**2, 0.0))

    @property
    def y(self) -> float:
        """Height of the seam plane on the child, towards the parent."""
        return self.r_c * np.cos(self.phi)

    @property
    def half_angle_parent(self) -> float:
        return float(np.arccos(np.clip(self.x / self.r_p, -1.0, 1.0)))

    def area(self, phi=None) -> float:
        return _seam_area(self.phi if phi is None else phi, self.r_p, self.r_c, self.sign_p)


def _seam_area(phi, r_p, r_c, sp):
    a = np.minimum(r_c * np.sin(phi), r_p)
    x = sp * np.sqrt(np.maximum(r_p**2 - a**2, 0.0))
    return 2 * np.pi * (r_p * (r_p - x) + r_c**2 * (1 - np.cos(phi)))


# A child keeps at least the cap of half-angle PHI_KEEP around its far pole;
# smaller remnants make the seam chart ill-conditioned.
PHI_KEEP = 0.1
_PHI_GRID = np.linspace(1e-6, np.pi - PHI_KEEP, 2001)


def _admissible_runs(sm: Seam):
    """Index ranges of the angle grid where the seam is admissible."""
    ok = (sm.r_c * np.sin(_PHI_GRID) <= min(sm.r_p, sm.a_max)) & (_PHI_GRID <= sm.phi_max)
    edges = np.flatnonzero(np.diff(np.concatenate([[0], ok.astype(int), [0]])))
    return list(zip(edges[::2], edges[1::2]))


def seam_area_intervals(sm: Seam) -> list[tuple[float, float]]:
    """Areas reachable by the seam, as a sorted union of closed intervals."""
    vals = _seam_area(_PHI_GRID, sm.r_p, sm.r_c, sm.sign_p)
    spans = sorted((float(vals[i:j].min()), float(vals[i:j].max())) for i, j in _admissible_runs(sm))
    merged: list[list[float]] = []
    for lo, hi in spans:
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [tuple(m) for m in merged]


def _project(v: float, intervals) -> float:
    return min((min(max(v, lo), hi) for lo, hi in intervals), key=lambda p: abs(p - v))


def _solve_seam_angle(sm: Seam, target: float | None = None) -> float:
    """Admissible child cap angle whose two caps add up to the target.

    Among several roots the one nearest the true angle is taken; without a
    root the admissible angle closest in area is returned.
    """
    target = sm.target if target is None else target
    resid = _seam_area(_PHI_GRID, sm.r_p, sm.r_c, sm.sign_p) - target
    roots, best = [], None
    for i, j in _admissible_runs(sm):
        seg = resid[i:j]
        k = i + int(np.argmin(np.abs(seg)))
        if best is None or abs(resid[k]) < abs(resid[best]):
            best = k
        for m in np.flatnonzero(np.sign(seg[:-1]) != np.sign(seg[1:])):
            roots.append(brentq(lambda f: sm.area(f) - target, _PHI_GRID[i + m], _PHI_GRID[i + m + 1]))
    if roots:
        return float(min(roots, key=lambda f: abs(f - sm.phi_true)))
    if best is None:
        raise DomainError(f"sphere {sm.child}: no admissible seam towards sphere {sm.parent}")
    return float(_PHI_GRID[best])


MAX_BRANCH_CHOICES = 4096


def _allocate(seams: dict, total: float) -> None:
    """Share the total cap area among the seams in proportion to their targets.

    Seams whose reachable areas have gaps are put on one branch each; every
    combination of branches is tried (up to MAX_BRANCH_CHOICES, the seams
    with the largest targets first) and the common scale of the targets is
    fitted by bisection. The allocation that matches the total and stays
    closest to the targets wins.
    """
    keys = list(seams)
    ivs = [seam_area_intervals(seams[c]) for c in keys]
    targets = np.array([seams[c].target for c in keys])
    gapped = sorted((i for i in range(len(keys)) if len(ivs[i]) > 1), key=lambda i: -targets[i])
    while np.prod([len(ivs[i]) for i in gapped], dtype=float) > MAX_BRANCH_CHOICES:
        gapped.pop()
    choices = np.array(list(itertools.product(*(range(len(ivs[i])) for i in gapped))), dtype=int)
    n_combo = max(len(choices), 1)
    # per combination, each seam is confined to one interval (or the whole set if not enumerated)
    lo = np.empty((n_combo, len(keys)))
    hi = np.empty((n_combo, len(keys)))
    for i, iv in enumerate(ivs):
        lo[:, i], hi[:, i] = iv[0][0], iv[-1][1]
    for col, i in enumerate(gapped):
        pick = np.array(ivs[i])[choices[:, col]]
        lo[:, i], hi[:, i] = pick[:, 0], pick[:, 1]
    ungapped_multi = [i for i in range(len(keys)) if len(ivs[i]) > 1 and i not in gapped]

    def alloc(mu):
        v = np.clip(targets * np.exp(mu)[:, None], lo, hi)
        for i in ungapped_multi:
            v[:, i] = [_project(x, ivs[i]) for x in v[:, i]]
        return v

    mu_lo, mu_hi = np.full(n_combo, -30.0), np.full(n_combo, 30.0)
    for _ in range(100):
        mid = 0.5 * (mu_lo + mu_hi)
        under = alloc(mid).sum(axis=1) < total
        mu_lo = np.where(under, mid, mu_lo)
        mu_hi = np.where(under, mu_hi, mid)
    a_lo, a_hi = alloc(mu_lo), alloc(mu_hi)
    take_hi = a_hi.sum(axis=1) - total <= total - a_lo.sum(axis=1)
    v = np.where(take_hi[:, None], a_hi, a_lo)
    mismatch = np.round(np.abs(v.sum(axis=1) - total) / (1e-9 * total))
    spread = ((v - targets) ** 2 / targets).sum(axis=1)
    best = np.lexsort((spread, mismatch))[0]
    for i, c in enumerate(keys):
        seams[c].phi = _solve_seam_angle(seams[c], float(v[best, i]))


def _rotate_towards(v, w, angle):
    """Rotate unit vector v by `angle` in the plane of v and w (towards w if positive)."""
    perp = w - v.dot(w) * v
    n = np.linalg.norm(perp)
    if n < 1e-12:
        perp = orthonormal_frame(v)[:, 0]
    else:
        perp = perp / n
    out = np.cos(angle) * v + np.sin(angle) * perp
    return out / np.linalg.norm(out)


def _separate_caps(axes, half_angles, fixed_axes, fixed_half, iters: int = 400):
    """Rotate cap axes apart until no two caps (or a cap and a fixed cap) overlap.

    Returns (axes, ok). Each violation moves the caps apart along their
    common great circle, which keeps the displacement small.
    """
    axes = [a.copy() for a in axes]
    n = len(axes)
    for _ in range(iters):
        worst = 0.0
        for i in range(n):
            for fa, fh in zip(fixed_axes, fixed_half):
                gap = np.arccos(np.clip(axes[i].dot(fa), -1, 1)) - (half_angles[i] + fh + SEAM_MARGIN)
                if gap < 0:
                    axes[i] = _rotate_towards(axes[i], fa, gap * 1.01)
                    worst = min(worst, gap)
            for j in range(i + 1, n):
                gap = np.arccos(np.clip(axes[i].dot(axes[j]), -1, 1)) - (half_angles[i] + half_angles[j] + SEAM_MARGIN)
                if gap < 0:
                    axes[i] = _rotate_towards(axes[i], axes[j], 0.505 * gap)
                    axes[j] = _rotate_towards(axes[j], axes[i], 0.505 * gap)
                    worst = min(worst, gap)
        if worst == 0.0:
            return axes, True
    return axes, False


def _hidden_caps(geom: SurfaceGeometry) -> np.ndarray:
    r = geom.spheres.radii
    lam = np.nan_to_num(geom.graph.lam)
    return np.where(geom.graph.T == 1, 2 * np.pi * r[:, None] * (r[:, None] - lam), 0.0)


def plan_seams(geom: SurfaceGeometry):
    """Seam circle for every tree edge; returns (seams by child index, messages)."""
    r = geom.spheres.radii
    centres = geom.spheres.centres
    lam = geom.graph.lam
    caps = _hidden_caps(geom)
    n = geom.n_spheres
    tree = np.zeros((n, n), dtype=bool)
    for c in range(n):
        p = geom.parent[c]
        if p >= 0:
            tree[c, p] = tree[p, c] = True
    extra = np.where(tree, 0.0, caps).sum(axis=1)  # each sphere's caps from non-tree neighbours

    seams: dict[int, Seam] = {}
    for c in range(n):
        p = int(geom.parent[c])
        if p < 0:
            continue
        u = centres[c] - centres[p]
        u /= np.linalg.norm(u)
        phi_true = float(np.arccos(np.clip(lam[c, p] / r[c], -1.0, 1.0)))
        seams[c] = Seam(
            child=c, parent=p, axis_true=u, axis=u.copy(), phi=phi_true, phi_true=phi_true,
            sign_p=1.0 if lam[p, c] >= 0 else -1.0, r_p=float(r[p]), r_c=float(r[c]),
            target=float(caps[p, c] + caps[c, p] + extra[c]),
        )
    if not seams:
        return seams, []

    total_target = float(caps.sum())
    messages: list[str] = []
    order = sorted(seams, key=lambda c: (geom.levels[c], c))
    for sm in seams.values():
        if sm.target != caps[sm.parent, sm.child] + caps[sm.child, sm.parent]:
            sm.phi = _solve_seam_angle(sm)
    _place_caps(geom, seams, order)
    for sm in seams.values():  # footprints may shrink from here on but never grow
        sm.a_max = min(sm.a_max, sm.a * (1 + 1e-12))
    if any(abs(sm.phi - sm.phi_true) > 1e-12 for sm in seams.values()):
        _allocate(seams, total_target)
    achieved = sum(sm.area() for sm in seams.values())
    if abs(achieved - total_target) > 1e-6 * total_target:
        messages.append(f"seams remove {achieved:.4f} of {total_target:.4f} hidden cap area")
    tilt = max(np.degrees(np.arccos(np.clip(sm.axis.dot(sm.axis_true), -1, 1))) for sm in seams.values())
    if tilt > 1e-6:
        messages.append(f"overlapping sibling caps rotated apart by up to {tilt:.1f} degrees")
    moved = [sm for sm in seams.values() if abs(sm.phi - sm.phi_true) > 1e-12]
    if moved:
        messages.append(f"{len(moved)} seams moved to absorb non-tree intersections")
    return seams, messages


def _place_caps(geom: SurfaceGeometry, seams: dict, order) -> None:
    """Separate the child caps on every sphere; narrow the seams that cannot fit."""
    by_parent: dict[int, list[int]] = {}
    for c in order:
        by_parent.setdefault(seams[c].parent, []).append(c)
    for p in sorted(by_parent, key=lambda i: (geom.levels[i], i)):
        kids = by_parent[p]
        fixed_axes, fixed_half = [], []
        if p in seams:  # the sphere's own seam towards its parent, seen from p
            own = seams[p]
            own.phi_max = own.phi
            fixed_axes.append(-own.axis_true)
            fixed_half.append(own.phi)
        for _ in range(60):
            half = [seams[c].half_angle_parent for c in kids]
            axes, ok = _separate_caps([seams[c].axis_true for c in kids], half, fixed_axes, fixed_half)
            area = sum(1 - np.cos(h) for h in half) + sum(1 - np.cos(h) for h in fixed_half)
            if ok and area < 1.9:
                break
            for c in kids:  # a smaller seam circle gives a smaller cap on the parent
                sm = seams[c]
                sm.a_max = 0.97 * sm.a
                sm.phi = _solve_seam_angle(sm)
        else:
            raise DomainError(f"sphere {p}: cannot fit the caps of its children")
        for c, ax in zip(kids, axes):
            seams[c].axis = ax


def _rotation_between(u, v) -> np.ndarray:
    """Smallest rotation taking unit vector u to unit vector v."""
    c = float(np.clip(u.dot(v), -1.0, 1.0))
    axis = np.cross(u, v)
    s = np.linalg.norm(axis)
    if s < 1e-15:
        if c > 0:
            return np.eye(3)
        axis = orthonormal_frame(u)[:, 0]
        return 2 * np.outer(axis, axis) - np.eye(3)
    k = axis / s
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * K + (1 - c) * K @ K


def choose_pole_from_caps(centre_axes, half_angles, n_samples: int = 2000) -> np.ndarray:
    """Unit vector maximising the angular clearance to the given caps."""
    if not centre_axes:
        return np.array([0.0, 0.0, 1.0])
    dirs = np.array(centre_axes)
    half = np.array(half_angles)

    def clearance(p):
        p = np.atleast_2d(p)
        p = p / np.linalg.norm(p, axis=1)[:, None]
        return (np.arccos(np.clip(p @ dirs.T, -1.0, 1.0)) - half).min(axis=1)

    samples = _fibonacci_sphere(n_samples)
    best = samples[int(np.argmax(clearance(samples)))]
    res = minimize(lambda v: -clearance(v)[0], best, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
    pole = res.x / np.linalg.norm(res.x)
    if clearance(pole)[0] < clearance(best)[0]:
        pole = best
    if clearance(pole)[0] <= 0:
        raise DomainError("every point of the base sphere is covered by a neighbour cap")
    return pole


def build_domain(geom: SurfaceGeometry) -> PlanarDomain:
    spheres = geom.spheres
    base = geom.base_index
    seams, warnings = plan_seams(geom)
    for msg in warnings:
        logger.info("%s: %s", spheres.name or "molecule", msg)
    r_base = float(spheres.radii[base])
    base_kids = [c for c in seams if seams[c].parent == base]
    pole = choose_pole_from_caps(
        [seams[c].axis for c in base_kids],
        [seams[c].half_angle_parent for c in base_kids],
    )
    base_frame = orthonormal_frame(pole)
    regions = [
        PlanarRegion(
            sphere_index=base,
            level=0,
            parent=-1,
            radius=r_base,
            centre=spheres.centres[base].copy(),
            frame=base_frame,
            chart=MobiusMap.identity(),
            to_unit_disc=MobiusMap.identity(),
            kappa=2.0 * r_base**2,
            eps=1.0,
        )
    ]
    region_of = {base: 0}

    # BFS order: by level, then sphere index
    order = sorted((i for i in range(geom.n_spheres) if i != base), key=lambda i: (geom.levels[i], i))
    for sph in order:
        sm = seams[sph]
        p_reg_idx = region_of[sm.parent]
        p_reg = regions[p_reg_idx]
        c_l = spheres.centres[sph]
        r_l = float(spheres.radii[sph])
        u = sm.axis_true
        frame = orthonormal_frame(-u)
        y = sm.y
        x = sm.x
        t = y / r_l  # seam plane height along -u, in units of r_l

        angles = np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3, 1.0])
        ring = sm.a * (np.outer(np.cos(angles), frame[:, 0]) + np.outer(np.sin(angles), frame[:, 1]))
        zeta_child = sm.a * np.exp(1j * angles) / (r_l - y)
        rot = _rotation_between(u, sm.axis)
        pts = p_reg.centre + x * sm.axis + ring @ rot.T
        zeta_parent = stereo(pts, p_reg.centre, p_reg.radius, p_reg.frame)
        z_pts = p_reg.chart.inverse()(zeta_parent)
        chart = MobiusMap.from_three_points(z_pts[:3], zeta_child[:3])
        if abs(chart(z_pts[3]) - zeta_child[3]) > 1e-8 * max(1.0, abs(zeta_child[3])):
            raise DomainError(f"sphere {sph}: child chart does not match its parent on the seam")

        r_gamma = float(np.sqrt((1 + t) / (1 - t)))
        full_map = chart.inverse() @ MobiusMap.scaling(r_gamma)

        # orientation check: the parent's hidden cap centre must land inside the child's disc
        hidden = p_reg.centre + p_reg.radius * sm.axis
        z_hidden = p_reg.chart.inverse()(stereo(hidden, p_reg.centre, p_reg.radius, p_reg.frame))
        try:
            full_disc = disc_image(full_map, 0j, 1.0)
        except ValueError as exc:
            raise DomainError(f"sphere {sph}: its disc contains the projection pole") from exc
        if abs(z_hidden - full_disc[0]) >= full_disc[1]:
            raise DomainError(f"sphere {sph}: child disc lies on the wrong side of its seam")

        parent_disc = None if p_reg.is_base else (p_reg.disc_centre, p_reg.disc_radius)
        siblings = [(regions[k].disc_centre, regions[k].disc_radius) for k in p_reg.children]
        shrink = _largest_admissible_shrink(full_map, parent_disc, siblings)
        if shrink < 1.0:
            msg = (f"sphere {sph} ({spheres.provenance[sph]}): disc overlaps its "
                   f"siblings or parent boundary; shrunk to {shrink:.4f} of its seam radius")
            logger.warning(msg)
            warnings.append(msg)
        s = r_gamma * shrink
        tmap = chart.inverse() @ MobiusMap.scaling(s)
        d_centre, d_radius = disc_image(tmap, 0j, 1.0)

        # parent's round metric pulled back to w; centred by symmetry about the seam axis
        h = (p_reg.chart @ tmap).matrix
        big_s = abs(h[0, 0]) ** 2 + abs(h[1, 0]) ** 2
        offset = -(np.conj(h[0, 0]) * h[0, 1] + np.conj(h[1, 0]) * h[1, 1]) / big_s
        if abs(offset) > 1e-7 * (1 + 1 / big_s):
            raise DomainError(f"sphere {sph}: parent metric is not symmetric in the seam chart")

        reg = PlanarRegion(
            sphere_index=int(sph),
            level=int(geom.levels[sph]),
            parent=p_reg_idx,
            radius=r_l,
            centre=c_l.copy(),
            frame=frame,
            chart=chart,
            to_unit_disc=tmap,
            disc_centre=complex(d_centre),
            disc_radius=float(d_radius),
            shrink=float(shrink),
            kappa=2.0 * r_l**2 / s**2,
            eps=1.0 / s**2,
            kappa_parent=2.0 * p_reg.radius**2 / big_s**2,
            eps_parent=1.0 / big_s**2,
            seam_radius=float(sm.a),
            seam_axis=sm.axis.copy(),
        )
        region_of[int(sph)] = len(regions)
        p_reg.children.append(len(regions))
        regions.append(reg)

    return PlanarDomain(regions=regions, pole=pole, warnings=warnings)


def surface_point(domain: PlanarDomain, z):
    """Map plane points back to the 3D surface (rescaled coordinates)."""
    z = np.asarray(z, dtype=complex)
    idx = domain.locate(z)
    out = np.empty(z.shape + (3,))
    for k in np.unique(idx):
        reg = domain.regions[k]
        mask = idx == k
        out[mask] = inverse_stereo(reg.chart(z[mask]), reg.centre, reg.radius, reg.frame)
    return out
