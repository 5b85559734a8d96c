"""Distance between shape descriptors.

Descriptors are Hermitian inner products on the sections 1, z, ..., z^2k.
Two descriptors are compared by the symmetric-space distance

    d(M1, M2) = k^(-3/2) sqrt(sum_i log(eta_i)^2),   eta = eig(M1^-1 M2),

minimized over an overall scale e^p and the action of SL(2, C) on M2
through its representation on degree-2k polynomials.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy import linalg, optimize

from .mobius import MobiusMap

logger = logging.getLogger(__name__)

EIG_FLOOR = 1e-3
EIG_RATIO = 1e-12
SANITIZE_FACTORS = (1.0, 10.0, 100.0, 1000.0)
IDENTITY_PARAMS = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])


class NonPDError(ValueError):
    """A descriptor matrix that is not (or cannot be made) positive definite."""

    def __init__(self, message: str, eigenvalue: float):
        super().__init__(message)
        self.eigenvalue = eigenvalue


@dataclass
class AlignmentResult:
    distance: float
    scale: float
    mobius_params: np.ndarray
    converged: bool
    objective: float
    raw_distance: float = float("nan")
    sanitize_factors: tuple[float, float] = (1.0, 1.0)

    @property
    def mobius(self) -> MobiusMap:
        return params_to_mobius(self.mobius_params)


@dataclass
class MinimizerOptions:
    method: str = "nelder-mead"  # or "powell"
    initial_step: float = 0.1
    fatol: float = 1e-8
    maxiter: int = 2000
    restarts: int = 3
    seed: int = 0
    warm_start: bool = True  # k >= 2: start from the k = 1 optimum when seed matrices exist
    extra_starts: list = field(default_factory=list)

    def __post_init__(self):
        self.method = self.method.lower().replace("_", "-")
        if self.method not in ("nelder-mead", "powell"):
            raise ValueError(f"unknown minimizer {self.method!r} (use nelder-mead or powell)")


def _dim(k: int) -> int:
    if k < 1:
        raise ValueError("quantization level k must be >= 1")
    return 2 * k + 1


def _check_pair(M1, M2, k):
    M1 = np.asarray(M1, dtype=complex)
    M2 = np.asarray(M2, dtype=complex)
    n = _dim(k)
    if M1.shape != (n, n) or M2.shape != (n, n):
        raise ValueError(f"matrices must be {n}x{n} for k={k}, got {M1.shape} and {M2.shape}")
    return M1, M2


def _cholesky(M):
    try:
        return linalg.cholesky(M, lower=True)
    except linalg.LinAlgError:
        ev = linalg.eigvalsh(M)
        raise NonPDError(f"matrix is not positive definite (smallest eigenvalue {ev[0]:.3e})", float(ev[0])) from None


def _log_eigs(L1, M2):
    """log eigenvalues of M1^-1 M2 given the Cholesky factor L1 of M1."""
    X = linalg.solve_triangular(L1, M2, lower=True)
    W = linalg.solve_triangular(L1, X.conj().T, lower=True)
    W = 0.5 * (W + W.conj().T)
    eta = linalg.eigvalsh(W)
    if eta[0] <= 0:
        raise NonPDError(f"matrix is not positive definite (generalized eigenvalue {eta[0]:.3e})", float(eta[0]))
    return np.log(eta)


def generalized_log_eigenvalues(M1, M2, k: int) -> np.ndarray:
    M1, M2 = _check_pair(M1, M2, k)
    return _log_eigs(_cholesky(M1), M2)


def raw_distance(M1, M2, k: int) -> float:
    le = generalized_log_eigenvalues(M1, M2, k)
    return float(k**-1.5 * np.sqrt(np.sum(le**2)))


def scale_optimum(M1, M2, k: int) -> float:
    """The p minimizing d(M1, e^p M2): minus the mean log eigenvalue."""
    return float(-np.mean(generalized_log_eigenvalues(M1, M2, k)))


def sym_power_rep(w: MobiusMap, k: int) -> np.ndarray:
    """Matrix of s(z) -> (gamma z + delta)^2k s(w(z)) on the basis 1, z, ..., z^2k.

    Column j holds the coefficients of (alpha z + beta)^j (gamma z + delta)^(2k - j).
    """
    n = _dim(k)
    a, b, c, d = w.alpha, w.beta, w.gamma, w.delta
    out = np.zeros((n, n), dtype=complex)
    for j in range(n):
        p = np.array([comb(j, i) * a**i * b ** (j - i) for i in range(j + 1)], dtype=complex)
        m = 2 * k - j
        q = np.array([comb(m, i) * c**i * d ** (m - i) for i in range(m + 1)], dtype=complex)
        out[:, j] = np.convolve(p, q)
    return out


def params_to_mobius(x) -> MobiusMap:
    """Six reals to a unit-determinant map: alpha = x1 + i x2, beta = x3 + i x4, gamma = x5 + i x6."""
    a = complex(x[0], x[1])
    b = complex(x[2], x[3])
    c = complex(x[4], x[5])
    if abs(a) < 1e-10:
        raise ZeroDivisionError("alpha vanishes; det-1 completion is singular")
    return MobiusMap(a, b, c, (1 + b * c) / a)


def sanitize(M, k: int) -> tuple[np.ndarray, float]:
    """Bring M's eigenvalues above the floor by the factor ladder 1, 10, 100, 1000.

    A negative eigenvalue or a spectrum too ill-conditioned for any uniform
    scaling is a hard NonPDError.
    """
    M = np.asarray(M, dtype=complex)
    if M.shape != (_dim(k),) * 2:
        raise ValueError(f"matrix must be {_dim(k)}x{_dim(k)} for k={k}")
    H = 0.5 * (M + M.conj().T)
    ev = linalg.eigvalsh(H)
    if not np.all(np.isfinite(ev)):
        raise NonPDError("matrix has non-finite entries", float("nan"))
    if ev[0] <= 0:
        raise NonPDError(f"negative eigenvalue {ev[0]:.3e}: descriptor unusable", float(ev[0]))
    if ev[0] < EIG_RATIO * ev[-1]:
        raise NonPDError(f"eigenvalue {ev[0]:.3e} below {EIG_RATIO:g} of the largest: descriptor unusable", float(ev[0]))
    for f in SANITIZE_FACTORS:
        if f * ev[0] >= EIG_FLOOR:
            if f > 1:
                logger.info("descriptor matrix scaled by %g (smallest eigenvalue %.3e)", f, ev[0])
            return f * H, f
    raise NonPDError(f"smallest eigenvalue {ev[0]:.3e} stays below {EIG_FLOOR:g} after scaling by 1000", float(ev[0]))


class _Objective:
    """zeta(x) = sum log(eta)^2 with the optimal scale, eta = eig(M1^-1 th* M2 th)."""

    def __init__(self, M1, M2, k):
        self.L1 = _cholesky(M1)
        self.M2 = M2
        self.k = k
        self.penalty = 1e6

    def transformed(self, x):
        th = sym_power_rep(params_to_mobius(x), self.k)
        return th.conj().T @ self.M2 @ th

    def __call__(self, x):
        try:
            le = _log_eigs(self.L1, self.transformed(x))
        except (ZeroDivisionError, NonPDError, ValueError, linalg.LinAlgError):
            return self.penalty
        le = le - le.mean()
        val = float(np.sum(le**2))
        return val if np.isfinite(val) else self.penalty


def _run(obj, x0, opts: MinimizerOptions):
    if opts.method == "powell":
        res = optimize.minimize(
            obj, x0, method="Powell",
            options={"xtol": 1e-6, "ftol": opts.fatol, "maxiter": opts.maxiter, "maxfev": 20 * opts.maxiter},
        )
    else:
        simplex = np.vstack([x0] + [x0 + opts.initial_step * e for e in np.eye(6)])
        res = optimize.minimize(
            obj, x0, method="Nelder-Mead",
            options={"initial_simplex": simplex, "fatol": opts.fatol, "xatol": 1e-6,
                     "maxiter": opts.maxiter, "maxfev": 4 * opts.maxiter},
        )
    return np.asarray(res.x, dtype=float), float(res.fun), bool(res.success)


def _minimize(obj, x0, opts: MinimizerOptions):
    rng = np.random.default_rng(opts.seed)
    x, f, ok = _run(obj, np.asarray(x0, dtype=float), opts)
    for _ in range(opts.restarts):
        if abs(complex(x[0], x[1])) < 1e-6 or f >= obj.penalty:
            # stuck at the singular completion: jitter away from it
            start = IDENTITY_PARAMS + rng.normal(scale=0.2, size=6)
        else:
            start = x
        x2, f2, ok2 = _run(obj, start, opts)
        improved = f - f2
        if f2 <= f:
            x, f, ok = x2, f2, ok2
        if 0 <= improved < opts.fatol:
            break
    return x, f, ok


def min_distance(M1, M2, k: int, opts: MinimizerOptions | None = None, seeds=None) -> AlignmentResult:
    """Distance minimized over scale and the Moebius action on M2.

    `seeds` is an optional pair of k = 1 matrices for the same two
    descriptors; for k >= 2 their alignment supplies the start point.
    """
    opts = opts or MinimizerOptions()
    M1, M2 = _check_pair(M1, M2, k)
    M1s, f1 = sanitize(M1, k)
    M2s, f2 = sanitize(M2, k)
    obj = _Objective(M1s, M2s, k)
    raw_zeta = obj(IDENTITY_PARAMS)

    starts = [IDENTITY_PARAMS]
    if k >= 2 and seeds is not None and opts.warm_start:
        seed_res = min_distance(seeds[0], seeds[1], 1, opts)
        starts = [seed_res.mobius_params, IDENTITY_PARAMS]
    starts += [np.asarray(s, dtype=float) for s in opts.extra_starts]

    best = (IDENTITY_PARAMS.copy(), raw_zeta, True)
    for x0 in starts:
        x, f, ok = _minimize(obj, x0, opts)
        if f < best[1]:
            best = (x, f, ok)
    x, zeta, ok = best
    if not ok:
        logger.warning("minimizer did not converge; returning best value %.3e", zeta)
    p = scale_optimum(M1s, obj.transformed(x), k) + np.log(f2 / f1)
    return AlignmentResult(
        distance=float(k**-1.5 * np.sqrt(max(zeta, 0.0))),
        scale=float(p),
        mobius_params=x,
        converged=ok,
        objective=float(zeta),
        raw_distance=float(k**-1.5 * np.sqrt(raw_zeta)),
        sanitize_factors=(f1, f2),
    )


def descriptor_distance(d1, d2, opts: MinimizerOptions | None = None) -> AlignmentResult:
    """min_distance between two ShapeDescriptors, warm-starting k >= 2 from their k = 1 matrices."""
    if d1.k != d2.k:
        raise ValueError(f"quantization level mismatch: k={d1.k} vs k={d2.k}")
    seeds = None
    if d1.k >= 2 and d1.seed_matrix is not None and d2.seed_matrix is not None:
        seeds = (d1.seed_matrix, d2.seed_matrix)
    return min_distance(d1.M, d2.M, d1.k, opts, seeds)
