"""Quaternion arithmetic, 2x2 complex matrices and complex polynomials.

These are the exact-as-possible kernels everything else is built on:
Hamilton quaternions with the complex split H = C + Cj, thin helpers for
2x2 complex matrices, and a univariate complex polynomial type with root
finding and multiplicity clustering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# degree detection: coefficients below this (relative to the largest one)
# are treated as zero
TRUNCATION_RTOL = 1e-10


class DegeneratePolynomialError(ValueError):
    pass


# ---------------------------------------------------------------------------
# quaternions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Quaternion:
    """Hamilton quaternion w + x*i + y*j + z*k."""

    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w + other.w, self.x + other.x,
                          self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w - other.w, self.x - other.x,
                          self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return quat_mul(self, other)
        return Quaternion(self.w * other, self.x * other,
                          self.y * other, self.z * other)

    def __rmul__(self, scalar) -> "Quaternion":
        return Quaternion(self.w * scalar, self.x * scalar,
                          self.y * scalar, self.z * scalar)

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm(self) -> float:
        return float(np.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2))

    def dot(self, other: "Quaternion") -> float:
        """R^4 inner product."""
        return (self.w * other.w + self.x * other.x
                + self.y * other.y + self.z * other.z)

    def complex_split(self) -> tuple[complex, complex]:
        """p = p1 + j p2 with p1 = w + i x and p2 = y - i z."""
        return complex(self.w, self.x), complex(self.y, -self.z)

    @staticmethod
    def from_complex_split(p1: complex, p2: complex) -> "Quaternion":
        return Quaternion(p1.real, p1.imag, p2.real, -p2.imag)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    @staticmethod
    def from_array(v) -> "Quaternion":
        return Quaternion(float(v[0]), float(v[1]), float(v[2]), float(v[3]))


QUAT_ONE = Quaternion(1.0, 0.0, 0.0, 0.0)
QUAT_I = Quaternion(0.0, 1.0, 0.0, 0.0)
QUAT_J = Quaternion(0.0, 0.0, 1.0, 0.0)
QUAT_K = Quaternion(0.0, 0.0, 0.0, 1.0)


def quat_mul(p: Quaternion, q: Quaternion) -> Quaternion:
    """Hamilton product with i*j = k."""
    return Quaternion(
        p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
        p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
        p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
        p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w,
    )


# ---------------------------------------------------------------------------
# 2x2 complex matrices
# ---------------------------------------------------------------------------

def mat2(a, b, c, d) -> np.ndarray:
    """Row-major 2x2 complex matrix [[a, b], [c, d]]."""
    return np.array([[a, b], [c, d]], dtype=complex)


def det2(m: np.ndarray) -> complex:
    return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def tr2(m: np.ndarray) -> complex:
    return complex(m[0, 0] + m[1, 1])


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


# ---------------------------------------------------------------------------
# complex polynomials (coefficients low degree first)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CPoly:
    """Univariate complex polynomial, coefficient c_k of a^k at index k."""

    coeffs: np.ndarray

    def __init__(self, coeffs):
        arr = np.atleast_1d(np.asarray(coeffs, dtype=complex))
        object.__setattr__(self, "coeffs", arr)

    @property
    def degree(self) -> int:
        """Index of the last coefficient above the truncation threshold."""
        mags = np.abs(self.coeffs)
        top = mags.max() if mags.size else 0.0
        if top == 0.0:
            return -1
        above = np.nonzero(mags > TRUNCATION_RTOL * top)[0]
        return int(above[-1]) if above.size else -1

    def __call__(self, a):
        return np.polynomial.polynomial.polyval(a, self.coeffs)

    def derivative(self) -> "CPoly":
        if len(self.coeffs) <= 1:
            return CPoly([0.0])
        return CPoly(np.polynomial.polynomial.polyder(self.coeffs))

    def __mul__(self, other: "CPoly") -> "CPoly":
        return CPoly(np.polynomial.polynomial.polymul(self.coeffs,
                                                      other.coeffs))

    def __add__(self, other: "CPoly") -> "CPoly":
        return CPoly(np.polynomial.polynomial.polyadd(self.coeffs,
                                                      other.coeffs))

    def monic(self) -> "CPoly":
        d = self.degree
        if d < 0:
            raise DegeneratePolynomialError("zero polynomial")
        return CPoly(self.coeffs[: d + 1] / self.coeffs[d])


def poly_roots(p: CPoly, tol: float = 1e-8) -> list[tuple[complex, int]]:
    """Roots with multiplicities assigned by clustering.

    Clusters are merged while the centroid distance stays below
    tol**(1/k) * scale, k the candidate multiplicity: numerically repeated
    roots of order k spread like tol**(1/k).
    """
    d = p.degree
    if d < 1:
        raise DegeneratePolynomialError("degenerate polynomial")
    coeffs = p.coeffs[: d + 1]
    raw = np.roots(coeffs[::-1])  # np.roots wants high degree first
    scale = 1.0 + np.abs(raw).max()

    clusters: list[list[complex]] = [[complex(r)] for r in raw]
    merged = True
    while merged and len(clusters) > 1:
        merged = False
        best = None
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                ci = np.mean(clusters[i])
                cj = np.mean(clusters[j])
                k = len(clusters[i]) + len(clusters[j])
                radius = (tol ** (1.0 / k)) * scale
                dist = abs(ci - cj)
                if dist < radius and (best is None or dist < best[0]):
                    best = (dist, i, j)
        if best is not None:
            _, i, j = best
            clusters[i] = clusters[i] + clusters[j]
            del clusters[j]
            merged = True

    out = [(complex(np.mean(c)), len(c)) for c in clusters]
    out.sort(key=lambda rm: (rm[0].real, rm[0].imag))
    assert sum(m for _, m in out) == d
    return out


def poly_odd_order_roots(p: CPoly, tol: float = 1e-8) -> list[complex]:
    """The subset of roots with odd multiplicity."""
    return [r for r, m in poly_roots(p, tol) if m % 2 == 1]
