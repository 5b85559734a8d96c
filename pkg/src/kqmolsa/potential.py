"""Closed-form Kähler potential of the piecewise round metric.

Spheres are attached one at a time in BFS order. Attaching sphere j inside
the disc D_j replaces the parent's density there; in the unit-disc
coordinate w of D_j both densities are centred round forms
kappa / (|w|^2 + eps)^2, and the change of potential is

    inside  |w| < 1:  (kappa/eps) log(|w|^2 + eps) - (kappa~/eps~) log(|w|^2 + eps~) - K
    outside |w| > 1:  c log|w|^2,   c = (kappa/eps)/(1 + eps) - (kappa~/eps~)/(1 + eps~)

with K = (kappa/eps) log(1 + eps) - (kappa~/eps~) log(1 + eps~), which makes
the increment C^1 across |w| = 1. Pulled back to z, log|w|^2 has a spurious
singularity at the image of w = infinity; adding c log|alpha - gamma z|^2 on
both sides removes it. Summing the increments and telescoping the local
terms along each ancestor chain gives, in region m,

    phi(z) = (C_m/B_m) log(|z - A_m|^2 + B_m) + sum_j K_mj log|alpha_mj z + beta_mj|^2
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import PlanarDomain


class PotentialError(ValueError):
    pass


@dataclass
class PotentialData:
    K: np.ndarray  # (N, N) real, indexed by region
    alpha: np.ndarray  # (N, N) complex
    beta: np.ndarray  # (N, N) complex
    local_coeffs: list[tuple[float, complex, float]]  # per region: (C_F/B, A, B)
    offset: np.ndarray  # residual additive constants; zero unless a row has no log term
    seam_slope: np.ndarray  # c_j of each attached sphere (0 for the base)
    seam_constant: np.ndarray  # K_j matching constant of each attached sphere

    @property
    def n_regions(self) -> int:
        return len(self.local_coeffs)

    def singular_points(self, m: int) -> np.ndarray:
        """Points -beta/alpha of the log terms active in region m (alpha != 0, K != 0)."""
        a, b, k = self.alpha[m], self.beta[m], self.K[m]
        mask = (np.abs(a) > 0) & (k != 0)
        return -b[mask] / a[mask]


def _ancestors(domain: PlanarDomain, m: int) -> list[int]:
    """Non-base regions whose disc contains region m (m included unless base)."""
    chain = []
    while m > 0:
        chain.append(m)
        m = domain.regions[m].parent
    return chain


def solve_potential(domain: PlanarDomain) -> PotentialData:
    n = domain.n_regions
    regions = domain.regions
    slope = np.zeros(n)
    const = np.zeros(n)
    log_s = np.zeros(n)  # child round form in w: |.|^2 sum = s (|w|^2 + eps)
    log_s_parent = np.zeros(n)
    for j, reg in enumerate(regions):
        if reg.is_base:
            continue
        if not (reg.kappa > 0 and reg.eps > 0 and reg.kappa_parent > 0 and reg.eps_parent > 0):
            raise PotentialError(f"region {j}: invalid seam constants")
        lj = reg.kappa / reg.eps
        lp = reg.kappa_parent / reg.eps_parent
        slope[j] = lj / (1 + reg.eps) - lp / (1 + reg.eps_parent)
        const[j] = lj * np.log1p(reg.eps) - lp * np.log1p(reg.eps_parent)
        log_s[j] = -0.5 * np.log(reg.eps)
        log_s_parent[j] = -0.5 * np.log(reg.eps_parent)

    K = np.zeros((n, n))
    alpha = np.zeros((n, n), dtype=complex)
    beta = np.ones((n, n), dtype=complex)
    offset = np.zeros(n)
    local = []
    for m, reg in enumerate(regions):
        two_r2 = 2.0 * reg.radius**2
        ch = reg.chart
        sigma = abs(ch.alpha) ** 2 + abs(ch.gamma) ** 2
        total = two_r2 * np.log(sigma)
        anc = set(_ancestors(domain, m))
        for j in range(1, n):
            t = regions[j].to_unit_disc
            two_rj2 = 2.0 * regions[j].radius ** 2
            two_rp2 = 2.0 * regions[regions[j].parent].radius ** 2
            if j in anc:
                K[m, j] = slope[j] - two_rj2 + two_rp2
                alpha[m, j] = -t.gamma
                beta[m, j] = t.alpha
                total += -const[j] - two_rj2 * log_s[j] + two_rp2 * log_s_parent[j]
            else:
                K[m, j] = slope[j]
                alpha[m, j] = t.delta
                beta[m, j] = -t.beta
        # fold the constant into the dominant log term
        if n > 1 and np.max(np.abs(K[m])) > 1e-8:
            j = int(np.argmax(np.abs(K[m])))
            lam = np.exp(total / (2.0 * K[m, j]))
            alpha[m, j] *= lam
            beta[m, j] *= lam
        else:
            offset[m] = total
        local.append((two_r2, reg.A, reg.B))
    return PotentialData(K, alpha, beta, local, offset, slope, const)


def evaluate_region_phi(pot: PotentialData, m: int, z) -> np.ndarray:
    """Region m's closed-form expression, evaluated at z regardless of location."""
    z = np.asarray(z, dtype=complex)
    coeff, a_m, b_m = pot.local_coeffs[m]
    out = coeff * np.log(np.abs(z - a_m) ** 2 + b_m) + pot.offset[m]
    for j in np.flatnonzero(pot.K[m]):
        out = out + pot.K[m, j] * np.log(np.abs(pot.alpha[m, j] * z + pot.beta[m, j]) ** 2)
    return out


def evaluate_phi(pot: PotentialData, domain: PlanarDomain, z):
    z = np.asarray(z, dtype=complex)
    idx = domain.locate(z)
    out = np.empty(z.shape, dtype=float)
    for m in np.unique(idx):
        mask = idx == m
        out[mask] = evaluate_region_phi(pot, int(m), z[mask])
    return out if out.ndim else float(out)


def evaluate_phi_increments(pot: PotentialData, domain: PlanarDomain, z):
    """Potential as base term plus per-sphere increments (the inductive form).

    Independent of the folded matrices; used to cross-check them.
    """
    z = np.asarray(z, dtype=complex)
    r_b = domain.regions[0].radius
    out = 2 * r_b**2 * np.log1p(np.abs(z) ** 2)
    for j, reg in enumerate(domain.regions):
        if reg.is_base:
            continue
        t = reg.to_unit_disc
        w = (t.delta * z - t.beta) / (t.alpha - t.gamma * z)
        inside = np.abs(z - reg.disc_centre) < reg.disc_radius
        lj = reg.kappa / reg.eps
        lp = reg.kappa_parent / reg.eps_parent
        w2 = np.abs(w) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            val_in = (lj * np.log(w2 + reg.eps) - lp * np.log(w2 + reg.eps_parent)
                      - pot.seam_constant[j] + pot.seam_slope[j] * np.log(np.abs(t.alpha - t.gamma * z) ** 2))
            val_out = pot.seam_slope[j] * np.log(np.abs(t.delta * z - t.beta) ** 2)
        out = out + np.where(inside, val_in, val_out)
    return out
