import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import fsolve

from kqmolsa.molecule import SphereSet
from kqmolsa.surface import (
    SurfaceError,
    build_adjacency,
    build_surface,
    drop_engulfed,
    surface_area,
)
from kqmolsa.synthetic import chain_suite, random_chain


def spheres(centres, radii):
    return SphereSet(np.array(centres, dtype=float), np.array(radii, dtype=float), [f"atom:{i}" for i in range(len(radii))])


def test_two_unit_spheres_intersection():
    g = build_adjacency(spheres([(0, 0, 0), (1, 0, 0)], [1, 1]))
    assert g.T[0, 1] == g.T[1, 0] == 1
    assert g.lam[0, 1] == pytest.approx(0.5) and g.lam[1, 0] == pytest.approx(0.5)


def test_separated_spheres_disconnected():
    with pytest.raises(SurfaceError, match="disconnected"):
        build_adjacency(spheres([(0, 0, 0), (3, 0, 0)], [1, 1]))


def test_lambda_against_numeric_circle():
    g = build_adjacency(spheres([(0, 0, 0), (1.43, 0, 0)], [1.70, 1.52]))
    assert g.lam[0, 1] == pytest.approx(0.9177, abs=1e-4)
    assert g.lam[1, 0] == pytest.approx(0.5123, abs=1e-4)
    # independent: a point (x, rho) on both spheres, solved numerically
    x, rho = fsolve(lambda v: [v[0] ** 2 + v[1] ** 2 - 1.70**2, (v[0] - 1.43) ** 2 + v[1] ** 2 - 1.52**2], [1.0, 1.0])
    assert g.lam[0, 1] == pytest.approx(x, abs=1e-10)
    assert g.lam[1, 0] == pytest.approx(1.43 - x, abs=1e-10)


def test_area_single_sphere():
    s = spheres([(0, 0, 0)], [1.0])
    assert surface_area(s, build_adjacency(s)) == pytest.approx(4 * np.pi)


def test_area_two_unit_spheres():
    s = spheres([(0, 0, 0), (1, 0, 0)], [1, 1])
    # each sphere loses a cap of height 0.5: 2 * (4 pi - 2 pi * 0.5)
    assert surface_area(s, build_adjacency(s)) == pytest.approx(6 * np.pi)


def test_area_unequal_pair():
    s = spheres([(0, 0, 0), (1.43, 0, 0)], [1.70, 1.52])
    assert surface_area(s, build_adjacency(s)) == pytest.approx(47.37, abs=0.01)


def test_area_pair_matches_monte_carlo(rng):
    # cap-area oracle, independent of the formula: uniform points on each sphere
    s = spheres([(0, 0, 0), (1.43, 0, 0)], [1.70, 1.52])
    total = 0.0
    n = 200_000
    for i in range(2):
        v = rng.normal(size=(n, 3))
        p = s.centres[i] + s.radii[i] * v / np.linalg.norm(v, axis=1)[:, None]
        other = 1 - i
        exposed = np.linalg.norm(p - s.centres[other], axis=1) > s.radii[other]
        total += 4 * np.pi * s.radii[i] ** 2 * exposed.mean()
    assert surface_area(s, build_adjacency(s)) == pytest.approx(total, rel=0.01)


def test_rescale_single_sphere():
    g = build_surface(spheres([(1, 2, 3)], [2.0]))
    assert g.scale_factor == pytest.approx(0.5)
    assert g.spheres.radii[0] == pytest.approx(1.0)
    assert g.area_original == pytest.approx(16 * np.pi)


def test_rescale_two_spheres_and_tie_break():
    g = build_surface(spheres([(0, 0, 0), (1, 0, 0)], [1, 1]))
    assert g.scale_factor == pytest.approx(np.sqrt(2 / 3))
    assert g.base_index == 0
    assert list(g.levels) == [0, 1]


def test_three_collinear_middle_is_base():
    g = build_surface(spheres([(-1.5, 0, 0), (0, 0, 0), (1.5, 0, 0)], [1, 1, 1]))
    assert g.base_index == 1
    assert list(g.levels) == [1, 0, 1]
    assert list(g.parent) == [1, -1, 1]


def test_parent_is_lowest_index_neighbour():
    # symmetric about the origin, so sphere 0 is the base; spheres 3 and 6 each
    # touch two level-1 spheres and take the lower-indexed one as parent
    c = [(0, 0, 0), (1.5, 0.7, 0), (1.5, -0.7, 0), (3, 0, 0), (-1.5, 0.7, 0), (-1.5, -0.7, 0), (-3, 0, 0)]
    g = build_surface(spheres(c, [1] * 7))
    assert g.base_index == 0
    assert list(g.levels) == [0, 1, 1, 2, 1, 1, 2]
    assert g.parent[3] == 1 and g.parent[6] == 4


def test_engulfed_sphere_dropped():
    s = spheres([(0, 0, 0), (0.2, 0, 0), (1.5, 0, 0)], [1.5, 0.5, 1.0])
    kept, dropped = drop_engulfed(s)
    assert dropped == [1] and kept.n_spheres == 2
    g = build_surface(s)
    assert g.dropped == [1] and g.n_spheres == 2


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(1, 7))
def test_rescaled_area_is_four_pi(seed, n):
    s = random_chain(n, np.random.default_rng(seed))
    g = build_surface(s)
    assert surface_area(g.spheres, g.graph) == pytest.approx(4 * np.pi, rel=1e-12)
    assert g.area_original == pytest.approx(surface_area(s, build_adjacency(s)))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_area_invariant_under_rigid_motion(seed):
    from kqmolsa.synthetic import rigid_motion

    rng = np.random.default_rng(seed)
    s = random_chain(5, rng)
    a0 = surface_area(s, build_adjacency(s))
    t = rigid_motion(s, rng)
    assert surface_area(t, build_adjacency(t)) == pytest.approx(a0, rel=1e-10)


def test_chain_suite_shapes():
    suite = chain_suite()
    assert len(suite) == 21
    assert sorted({s.n_spheres for s in suite}) == list(range(2, 9))
    for s in suite:
        assert np.all((s.radii >= 1.5) & (s.radii <= 2.25))
        T = build_adjacency(s).T
        n = s.n_spheres
        assert np.array_equal(T, (np.abs(np.subtract.outer(np.arange(n), np.arange(n))) == 1).astype(int))
