"""Synthetic sphere sets used by the self-test and the test suite."""

from __future__ import annotations

import numpy as np

from .molecule import SphereSet
from .surface import build_adjacency


def single_sphere(radius: float = 1.7, centre=(0.0, 0.0, 0.0), name: str = "sphere") -> SphereSet:
    return SphereSet(np.array([centre], dtype=float), np.array([radius]), ["atom:0"], name)


def random_chain(
    n: int,
    rng: np.random.Generator,
    radius_range=(1.5, 2.25),
    spacing_range=(2.0, 2.8),
    max_bend_deg: float = 40.0,
    name: str | None = None,
) -> SphereSet:
    """A bent chain of n spheres where only consecutive spheres intersect.

    Radii and spacings are uniform in their ranges; each step turns by at
    most max_bend_deg. Draws are repeated until the intersection graph is
    exactly the path 0-1-...-(n-1).
    """
    for _ in range(1000):
        r = rng.uniform(*radius_range, size=n)
        pts = [np.zeros(3)]
        d = np.array([1.0, 0.0, 0.0])
        for _ in range(1, n):
            v = rng.normal(size=3)
            v -= v.dot(d) * d
            v /= np.linalg.norm(v)
            ang = np.radians(rng.uniform(0, max_bend_deg))
            d = np.cos(ang) * d + np.sin(ang) * v
            pts.append(pts[-1] + rng.uniform(*spacing_range) * d)
        s = SphereSet(np.array(pts), r, [f"atom:{i}" for i in range(n)], name or f"chain{n}")
        if n == 1:
            return s
        T = build_adjacency(s).T
        path = np.abs(np.subtract.outer(np.arange(n), np.arange(n))) == 1
        if np.array_equal(T.astype(bool), path):
            return s
    raise RuntimeError("could not draw a path-shaped chain with these ranges")


def chain_suite(seed: int = 2024, sizes=range(2, 9), per_size: int = 3) -> list[SphereSet]:
    """The fixture suite of chains with 2..8 spheres."""
    rng = np.random.default_rng(seed)
    out = []
    for n in sizes:
        for rep in range(per_size):
            out.append(random_chain(n, rng, name=f"chain{n}_{rep}"))
    return out


def rigid_motion(s: SphereSet, rng: np.random.Generator, max_shift: float = 5.0) -> SphereSet:
    """Random rotation (uniform on SO(3)) plus translation of a sphere set."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    a, b, c, d = q
    R = np.array([
        [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
        [2 * (b * c + a * d), a * a - b * b + c * c - d * d, 2 * (c * d - a * b)],
        [2 * (b * d - a * c), 2 * (c * d + a * b), a * a - b * b - c * c + d * d],
    ])
    t = rng.uniform(-max_shift, max_shift, size=3)
    return SphereSet(s.centres @ R.T + t, s.radii.copy(), list(s.provenance), s.name)


def random_sl2(rng: np.random.Generator, bound: float = 2.0):
    """Random unit-determinant Moebius map with all entries bounded in modulus."""
    from .mobius import MobiusMap

    while True:
        a, b, c = rng.uniform(-bound, bound, 3) + 1j * rng.uniform(-bound, bound, 3)
        if abs(a) < 0.2 or abs(a) > bound or abs(b) > bound or abs(c) > bound:
            continue
        d = (1 + b * c) / a
        if abs(d) <= bound:
            return MobiusMap(a, b, c, d)
