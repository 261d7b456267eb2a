"""Geometry of the (m,n) Seifert fibration of S^3.

Fiber length, fiber direction, the surface normal of the associated
equivariant torus, and the conformal Hopf differential of a sampled
profile curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import QUAT_I, Quaternion, quat_mul

SINGULAR_FIBER_TOL = 1e-12


class SingularFiberError(ValueError):
    pass


class NonConformalSampleError(ValueError):
    pass


@dataclass(frozen=True)
class SeifertType:
    """Coprime pair (m, n) labelling the circle action on S^3."""

    m: int
    n: int

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ValueError("m, n must be nonnegative")
        if math.gcd(self.m, self.n) != 1:
            raise ValueError("gcd(m,n) must be 1")

    @property
    def l1(self) -> float:
        return 0.5 * (self.m + self.n)

    @property
    def l2(self) -> float:
        return 0.5 * (self.m - self.n)


@dataclass(frozen=True)
class CurveSampleS3:
    """A point of a conformal horizontal curve: position, velocity, parameter."""

    gamma: Quaternion
    dgamma: Quaternion
    y: float = 0.0

    def validate(self):
        if abs(self.gamma.norm() - 1.0) > 1e-9:
            raise ValueError("gamma not unit length")
        if abs(self.gamma.dot(self.dgamma)) > 1e-8:
            raise ValueError("velocity not tangent")


def fiber_speed(gamma: Quaternion, st: SeifertType) -> float:
    """Squared fiber length h = m^2 |g1|^2 + n^2 |g2|^2 at gamma = g1 + j g2."""
    g1, g2 = gamma.complex_split()
    h = st.m**2 * abs(g1) ** 2 + st.n**2 * abs(g2) ** 2
    if h < SINGULAR_FIBER_TOL:
        raise SingularFiberError("singular fiber")
    return h


def fiber_direction(gamma: Quaternion, st: SeifertType) -> Quaternion:
    """Unit fiber direction B = (l1 i gamma + l2 gamma i) / sqrt(h)."""
    h = fiber_speed(gamma, st)
    b = (st.l1 * quat_mul(QUAT_I, gamma) + st.l2 * quat_mul(gamma, QUAT_I))
    return (1.0 / math.sqrt(h)) * b


def surface_normal(sample: CurveSampleS3, st: SeifertType) -> Quaternion:
    """Normal N = B conj(gamma) T of the torus along the profile curve."""
    h = fiber_speed(sample.gamma, st)
    speed2 = sample.dgamma.dot(sample.dgamma)
    if abs(speed2 - h) > 1e-6 * h:
        raise NonConformalSampleError("non-conformal sample")
    t = (1.0 / math.sqrt(h)) * sample.dgamma
    b = fiber_direction(sample.gamma, st)
    return quat_mul(quat_mul(b, sample.gamma.conj()), t)


def frame(sample: CurveSampleS3, st: SeifertType):
    """Orthonormal frame (T, N, B) of the torus at a curve sample."""
    h = fiber_speed(sample.gamma, st)
    t = (1.0 / math.sqrt(h)) * sample.dgamma
    b = fiber_direction(sample.gamma, st)
    n = quat_mul(quat_mul(b, sample.gamma.conj()), t)
    return t, n, b


def _second_derivative(arr: np.ndarray, dy: float, periodic: bool) -> np.ndarray:
    """4th-order second derivative along axis 0."""
    if periodic:
        out = (-np.roll(arr, 2, axis=0) + 16 * np.roll(arr, 1, axis=0)
               - 30 * arr + 16 * np.roll(arr, -1, axis=0)
               - np.roll(arr, -2, axis=0)) / (12 * dy * dy)
        return out
    out = np.empty_like(arr)
    out[2:-2] = (-arr[:-4] + 16 * arr[1:-3] - 30 * arr[2:-2]
                 + 16 * arr[3:-1] - arr[4:]) / (12 * dy * dy)
    # one-sided 2nd-order stencils at the ends
    for i in (0, 1):
        out[i] = (2 * arr[i] - 5 * arr[i + 1] + 4 * arr[i + 2]
                  - arr[i + 3]) / dy**2
    for i in (-1, -2):
        out[i] = (2 * arr[i] - 5 * arr[i - 1] + 4 * arr[i - 2]
                  - arr[i - 3]) / dy**2
    return out


def hopf_differential_from_curve(curve, st: SeifertType) -> np.ndarray:
    """Conformal Hopf differential q = (kappa_{m,n} + i 2mn/sqrt(h)) / 4.

    The g_{m,n} curvature is obtained from the S^3 curvature of the sampled
    curve (read off gamma'' = (sqrt h)' T + h kappa_{S3} N - h gamma) via
    kappa_{m,n} = sqrt(h) kappa_{S3} - (2 l1 l2 / sqrt h) <N, i gamma i>.
    """
    if len(curve) < 5:
        raise ValueError("need at least 5 samples")
    gam = np.array([s.gamma.as_array() for s in curve])
    dgam = np.array([s.dgamma.as_array() for s in curve])
    ys = np.array([s.y for s in curve])
    dy = ys[1] - ys[0]
    if not np.allclose(np.diff(ys), dy, rtol=1e-8, atol=1e-12):
        raise ValueError("samples not uniformly spaced")

    periodic = bool(np.linalg.norm(gam[0] - gam[-1]) < 1e-6
                    and np.linalg.norm(dgam[0] - dgam[-1]) < 1e-6)
    if periodic:
        gam_fd = gam[:-1]
        d2 = np.empty_like(gam)
        d2[:-1] = _second_derivative(gam_fd, dy, periodic=True)
        d2[-1] = d2[0]
    else:
        d2 = _second_derivative(gam, dy, periodic=False)

    out = np.empty(len(curve), dtype=complex)
    for i, s in enumerate(curve):
        h = fiber_speed(s.gamma, st)
        speed2 = s.dgamma.dot(s.dgamma)
        if abs(speed2 - h) > 1e-5 * h:
            raise NonConformalSampleError(f"non-conformal sample at y={s.y:.6g}")
        sh = math.sqrt(h)
        n_vec = surface_normal(s, st)
        kappa_s3 = float(d2[i] @ n_vec.as_array()) / h
        igi = quat_mul(quat_mul(QUAT_I, s.gamma), QUAT_I)
        kappa_mn = sh * kappa_s3 - (2 * st.l1 * st.l2 / sh) * n_vec.dot(igi)
        out[i] = 0.25 * (kappa_mn + 1j * 2 * st.m * st.n / sh)
    return out
