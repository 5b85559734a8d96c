"""Built-in oracle checks run by `kqmolsa selftest`."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from .distance import MinimizerOptions, min_distance, raw_distance, scale_optimum, sym_power_rep
from .quantize import FOUR_PI, QuadratureConfig, descriptor_from_spheres
from .similarity import fit_area_ratio, weight_table
from .synthetic import chain_suite, random_sl2, single_sphere

logger = logging.getLogger(__name__)

UNIT_SPHERE_DIAG = np.array([4 * np.pi / 3, 2 * np.pi / 3, 4 * np.pi / 3])

# Published weight sweep for the PDE5 inhibitor pairs, x = 0, 0.1, ..., 0.5
PDE5_SWEEP_X = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
PDE5_SWEEP = {
    "Sildenafil-Vardenafil": (0.884, 0.892, 0.900, 0.908, 0.916, 0.924),
    "Sildenafil-Tadalafil": (0.286, 0.340, 0.394, 0.449, 0.503, 0.557),
    "Vardenafil-Tadalafil": (0.275, 0.328, 0.380, 0.432, 0.485, 0.537),
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'} ({self.detail})"


def check_unit_sphere(q: QuadratureConfig, tol: float = 0.03) -> CheckResult:
    desc = descriptor_from_spheres(single_sphere(1.7), 1, q, area_tolerance=np.inf)
    diag = desc.M.diagonal().real
    rel = np.max(np.abs(diag - UNIT_SPHERE_DIAG) / UNIT_SPHERE_DIAG)
    off = np.max(np.abs(desc.M - np.diag(desc.M.diagonal())))
    ok = rel <= tol and off <= 1e-3 * diag.max()
    return CheckResult("unit-sphere M", ok, f"max rel diag error {rel:.2e}, max |offdiag| {off:.1e}")


def check_area(q: QuadratureConfig, seed: int, tol: float = 0.005) -> CheckResult:
    worst = 0.0
    for s in chain_suite(seed):
        desc = descriptor_from_spheres(s, 1, q, area_tolerance=np.inf)
        worst = max(worst, abs(desc.area_check - FOUR_PI) / FOUR_PI)
    return CheckResult("area conservation", worst <= tol, f"worst |area/4pi - 1| = {worst:.2e} over 21 chains")


def check_raw_distance() -> CheckResult:
    e = np.e
    d1 = raw_distance(np.eye(3), np.diag([e, 1, 1 / e]), 1)
    d2 = raw_distance(np.eye(5), e * np.eye(5), 2)
    err = max(abs(d1 - np.sqrt(2)), abs(d2 - 2**-1.5 * np.sqrt(5)))
    return CheckResult("raw distance closed forms", err < 1e-12, f"error {err:.1e}")


def check_scale(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    M = A @ A.conj().T + np.eye(3)
    worst = 0.0
    for c in (1e-3, 1.0, 1e3):
        p = scale_optimum(M, c * M, 1)
        worst = max(worst, abs(p + np.log(c)), raw_distance(M, np.exp(p) * c * M, 1))
    return CheckResult("scale quotient", worst < 1e-9, f"max error {worst:.1e}")


def check_representation(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in (1, 2):
        w1, w2 = random_sl2(rng), random_sl2(rng)
        # s -> (gamma z + delta)^2k s(w(z)) reverses the order of composition
        lhs = sym_power_rep(w1 @ w2, k)
        rhs = sym_power_rep(w2, k) @ sym_power_rep(w1, k)
        worst = max(worst, np.max(np.abs(lhs - rhs)) / np.max(np.abs(lhs)))
    return CheckResult("Sym representation", worst < 1e-10, f"relative error {worst:.1e}")


def check_orbit(q: QuadratureConfig, seed: int, trials: int = 5, opts: MinimizerOptions | None = None) -> CheckResult:
    rng = np.random.default_rng(seed)
    s = chain_suite(seed, sizes=[4], per_size=1)[0]
    M = descriptor_from_spheres(s, 1, QuadratureConfig(max(q.n_r, 15), max(q.n_theta, 10))).M
    worst = 0.0
    for _ in range(trials):
        th = sym_power_rep(random_sl2(rng), 1)
        worst = max(worst, min_distance(M, th.conj().T @ M @ th, 1, opts).distance)
    return CheckResult("orbit invariance", worst <= 1e-2, f"worst distance {worst:.1e} over {trials} maps")


def check_table_linearity() -> CheckResult:
    worst = 0.0
    for vals in PDE5_SWEEP.values():
        ratio = fit_area_ratio(PDE5_SWEEP_X, vals)
        pred = weight_table(vals[0], ratio, PDE5_SWEEP_X)
        worst = max(worst, np.max(np.abs(np.array(pred) - vals)))
    return CheckResult("weight sweep linearity", worst <= 1e-3 + 1e-12, f"worst deviation {worst:.4f}")


def run_selftest(q: QuadratureConfig = QuadratureConfig(), seed: int = 0, opts: MinimizerOptions | None = None):
    checks = [
        ("unit-sphere M", lambda: check_unit_sphere(q)),
        ("area conservation", lambda: check_area(q, 2024)),
        ("raw distance closed forms", check_raw_distance),
        ("scale quotient", lambda: check_scale(seed)),
        ("Sym representation", lambda: check_representation(seed)),
        ("orbit invariance", lambda: check_orbit(q, seed, opts=opts)),
        ("weight sweep linearity", check_table_linearity),
    ]
    results = []
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            res = fn()
        except Exception as exc:  # a crashing check is a failed check
            res = CheckResult(name, False, f"error: {exc}")
        res.seconds = time.perf_counter() - t0
        results.append(res)
    return results
