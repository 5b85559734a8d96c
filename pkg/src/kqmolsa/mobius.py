"""Möbius transformations of the Riemann sphere, stored as SL(2, C) matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MobiusError(ValueError):
    pass


@dataclass(frozen=True)
class MobiusMap:
    """z -> (alpha z + beta) / (gamma z + delta) with alpha delta - beta gamma = 1."""

    alpha: complex
    beta: complex
    gamma: complex
    delta: complex

    @classmethod
    def from_matrix(cls, m) -> "MobiusMap":
        m = np.asarray(m, dtype=complex)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det) == 0.0:
            raise MobiusError("singular Möbius matrix")
        s = np.sqrt(det)
        m = m / s
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))

    @classmethod
    def identity(cls) -> "MobiusMap":
        return cls(1 + 0j, 0j, 0j, 1 + 0j)

    @classmethod
    def scaling(cls, factor: complex) -> "MobiusMap":
        """z -> factor * z."""
        s = np.sqrt(complex(factor))
        return cls(s, 0j, 0j, 1 / s)

    @classmethod
    def inversion(cls) -> "MobiusMap":
        """z -> 1/z, written with unit determinant."""
        return cls(0j, 1j, 1j, 0j)

    @classmethod
    def from_three_points(cls, src, dst) -> "MobiusMap":
        """The unique map sending src[k] to dst[k] (all finite, distinct)."""
        p1, p2, p3 = (complex(p) for p in src)
        q1, q2, q3 = (complex(q) for q in dst)
        # cross-ratio normal forms: S sends (p1, p2, p3) -> (0, inf, 1)
        s = np.array([[p3 - p2, -p1 * (p3 - p2)], [p3 - p1, -p2 * (p3 - p1)]])
        t = np.array([[q3 - q2, -q1 * (q3 - q2)], [q3 - q1, -q2 * (q3 - q1)]])
        return cls.from_matrix(np.linalg.solve(t, s))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.alpha, self.beta], [self.gamma, self.delta]], dtype=complex)

    @property
    def det(self) -> complex:
        return self.alpha * self.delta - self.beta * self.gamma

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.alpha * z + self.beta) / (self.gamma * z + self.delta)

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        return self.det / (self.gamma * z + self.delta) ** 2

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """self o other."""
        return MobiusMap.from_matrix(self.matrix @ other.matrix)

    def __matmul__(self, other: "MobiusMap") -> "MobiusMap":
        return self.compose(other)

    def inverse(self) -> "MobiusMap":
        return MobiusMap(self.delta, -self.beta, -self.gamma, self.alpha)

    @property
    def pole(self) -> complex:
        """Preimage of infinity (complex inf when gamma == 0)."""
        if self.gamma == 0:
            return complex(np.inf, np.inf)
        return -self.delta / self.gamma

    def image_of_infinity(self) -> complex:
        if self.gamma == 0:
            return complex(np.inf, np.inf)
        return self.alpha / self.gamma


def mobius_apply(m: MobiusMap, z):
    return m(z)


def mobius_compose(m1: MobiusMap, m2: MobiusMap) -> MobiusMap:
    return m1.compose(m2)


def disc_image(m: MobiusMap, centre: complex, radius: float) -> tuple[complex, float]:
    """Exact image of the open disc D(centre, radius) under m.

    Raises MobiusError when the image is not a bounded disc, i.e. when the
    pole of m lies on the boundary circle (image is a half-plane) or inside
    the disc (image is the exterior of a circle).
    """
    if radius <= 0:
        raise MobiusError("disc radius must be positive")
    pole = m.pole
    if np.isfinite(pole.real):
        dist = abs(pole - centre)
        if abs(dist - radius) <= 1e-12 * max(1.0, radius):
            raise MobiusError("disc boundary passes through the pole: image is a half-plane")
        if dist < radius:
            raise MobiusError("disc contains the pole: image is unbounded")
        # the point of the disc-circle family symmetric to the pole maps to the centre
        inv_point = centre + radius**2 / np.conj(pole - centre)
        new_centre = complex(m(inv_point))
    else:
        new_centre = complex(m(centre))
    new_radius = float(abs(complex(m(centre + radius)) - new_centre))
    return new_centre, new_radius
