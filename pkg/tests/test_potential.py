import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fixture_spheres
from kqmolsa.domain import build_domain, metric_F
from kqmolsa.molecule import SphereSet
from kqmolsa.potential import evaluate_phi, evaluate_region_phi, solve_potential
from kqmolsa.surface import build_surface
from kqmolsa.synthetic import chain_suite, random_chain, single_sphere


def setup(spheres):
    dom = build_domain(build_surface(spheres))
    return dom, solve_potential(dom)


def laplacian(f, z, h=1e-3):
    return (f(z + h) + f(z - h) + f(z + 1j * h) + f(z - 1j * h) - 4 * f(z)) / h**2


def interior_points(dom, rng, n=40, margin=0.05):
    """Random points at least `margin` (relative) away from every disc boundary."""
    out = []
    while len(out) < n:
        z = complex(*rng.normal(scale=1.5, size=2))
        ok = all(
            abs(abs(z - r.disc_centre) - r.disc_radius) > margin * r.disc_radius for r in dom.regions[1:]
        )
        if ok:
            out.append(z)
    return np.array(out)


def boundary_distance(dom, z):
    return np.min([np.abs(np.abs(z - r.disc_centre) - r.disc_radius) for r in dom.regions[1:]], axis=0)


def test_unit_sphere_potential():
    dom, pot = setup(single_sphere(1.0))
    assert np.allclose(pot.K, 0)
    assert evaluate_phi(pot, dom, 0j) == pytest.approx(0.0, abs=1e-12)
    assert evaluate_phi(pot, dom, 1 + 0j) == pytest.approx(2 * np.log(2), abs=1e-12)
    z = np.array([0.5j, 3 - 1j])
    assert np.allclose(evaluate_phi(pot, dom, z), 2 * np.log1p(np.abs(z) ** 2))


def test_poisson_equation_single_sphere(rng):
    dom, pot = setup(single_sphere(1.0))
    z = rng.normal(size=20) + 1j * rng.normal(size=20)
    lap = laplacian(lambda x: evaluate_phi(pot, dom, x), z)
    # d^2 phi / dz dzbar = F, i.e. the flat Laplacian is 4F
    assert np.allclose(lap, 4 * metric_F(dom, z), rtol=1e-5)


@pytest.mark.parametrize("name", ["ethanol", "acetone", "sildenafil", "tadalafil"])
def test_poisson_equation_molecules(name, rng):
    dom, pot = setup(fixture_spheres()[name])
    z = interior_points(dom, rng)
    lap = laplacian(lambda x: evaluate_phi(pot, dom, x), z, h=0.002 * boundary_distance(dom, z))
    assert np.allclose(lap, 4 * metric_F(dom, z), rtol=1e-3)


def test_poisson_equation_chains(rng):
    for s in chain_suite(sizes=[4, 7], per_size=1):
        dom, pot = setup(s)
        z = interior_points(dom, rng)
        lap = laplacian(lambda x: evaluate_phi(pot, dom, x), z, h=0.002 * boundary_distance(dom, z))
        assert np.allclose(lap, 4 * metric_F(dom, z), rtol=1e-3)


def test_two_sphere_boundary_continuity():
    s = SphereSet(np.array([[0, 0, 0], [1.3, 0, 0]], float), np.array([1.0, 0.8]), ["atom:0", "atom:1"])
    dom, pot = setup(s)
    zb = dom.regions[1].to_unit_disc(np.exp(2j * np.pi * np.arange(32) / 32))
    inner = evaluate_region_phi(pot, 1, zb)
    outer = evaluate_region_phi(pot, 0, zb)
    assert np.max(np.abs(inner - outer)) < 1e-6


@pytest.mark.parametrize("name", ["ethanol", "propane", "acetone", "naphthalene", "sildenafil", "vardenafil", "tadalafil"])
def test_every_seam_is_c1(name):
    dom, pot = setup(fixture_spheres()[name])
    h = 1e-6
    for m, reg in enumerate(dom.regions[1:], start=1):
        u = np.exp(2j * np.pi * np.arange(32) / 32)
        zb = reg.to_unit_disc(u)
        inner = evaluate_region_phi(pot, m, zb)
        outer = evaluate_region_phi(pot, reg.parent, zb)
        assert np.max(np.abs(inner - outer)) < 1e-6
        # radial derivatives in w agree as well
        d_in = (evaluate_region_phi(pot, m, reg.to_unit_disc(u * (1 + h))) - evaluate_region_phi(pot, m, reg.to_unit_disc(u * (1 - h)))) / (2 * h)
        d_out = (evaluate_region_phi(pot, reg.parent, reg.to_unit_disc(u * (1 + h))) - evaluate_region_phi(pot, reg.parent, reg.to_unit_disc(u * (1 - h)))) / (2 * h)
        assert np.allclose(d_in, d_out, atol=1e-4 * max(1.0, np.max(np.abs(d_in))))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 6))
def test_random_chain_seams_continuous(seed, n):
    dom, pot = setup(random_chain(n, np.random.default_rng(seed)))
    for m, reg in enumerate(dom.regions[1:], start=1):
        zb = reg.to_unit_disc(np.exp(2j * np.pi * np.arange(16) / 16))
        assert np.max(np.abs(evaluate_region_phi(pot, m, zb) - evaluate_region_phi(pot, reg.parent, zb))) < 1e-6


def test_log_terms_are_harmonic_away_from_singularities(rng):
    # the sum of K log|alpha z + beta|^2 terms carries no curvature
    dom, pot = setup(fixture_spheres()["tadalafil"])
    for m in range(dom.n_regions):
        sing = pot.singular_points(m)

        def logs(z, m=m):
            z = np.asarray(z, dtype=complex)
            return sum(pot.K[m, j] * np.log(np.abs(pot.alpha[m, j] * z + pot.beta[m, j]) ** 2) for j in range(dom.n_regions))

        z = rng.normal(size=30) + 1j * rng.normal(size=30)
        if sing.size:
            z = z[np.min(np.abs(z[:, None] - sing[None, :]), axis=1) > 0.05]
        assert np.allclose(laplacian(logs, z, h=1e-4), 0, atol=1e-3)
