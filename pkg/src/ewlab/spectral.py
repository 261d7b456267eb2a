"""Spectral data of a polynomial Killing field: det X(a), its symmetry
residuals, branch points and genus."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import CPoly, poly_odd_order_roots, poly_roots
from .killing import GenusConstants, KillingField, build_killing_field
from .elflow import Trajectory


@dataclass(frozen=True)
class SpectralCurveData:
    """Hyperelliptic data eta^2 = P(a)."""

    P: CPoly
    branch_points: tuple  # ((complex, odd multiplicity), ...)
    genus: int  # -1 when degenerate (perfect square P)
    evenness_residual: float
    reality_residual: float
    singular: bool = False  # P has even-order (nodal) roots
    degenerate: bool = False  # P is a perfect square


def det_killing(kf: KillingField) -> CPoly:
    """Exact polynomial expansion of det X(a); monic of degree 2g+2."""
    c = kf.coeffs
    p00 = np.convolve(c[:, 0, 0], c[:, 1, 1])
    p01 = np.convolve(c[:, 0, 1], c[:, 1, 0])
    return CPoly(p00 - p01)


def check_symmetries(P: CPoly) -> tuple[float, float]:
    """(evenness, reality) residuals of the coefficients, relative to the
    largest coefficient."""
    coeffs = np.asarray(P.coeffs, dtype=complex)
    top = np.abs(coeffs).max()
    if top == 0.0:
        raise ValueError("zero polynomial")
    evenness = float(np.abs(coeffs[1::2]).max() / top) if len(coeffs) > 1 else 0.0
    reality = float(np.abs(coeffs.imag).max() / top)
    return evenness, reality


def curve_from_field(kf: KillingField, tol: float = 1e-8) -> SpectralCurveData:
    """Branch points (odd-order roots of det X) and the resulting genus."""
    P = det_killing(kf)
    evenness, reality = check_symmetries(P)
    roots = poly_roots(P, tol)
    odd = tuple((z, m) for z, m in roots if m % 2 == 1)
    singular = any(m >= 2 for _, m in roots)
    if not odd:
        return SpectralCurveData(P, (), -1, evenness, reality,
                                 singular=singular, degenerate=True)
    genus = len(odd) // 2 - 1
    return SpectralCurveData(P, odd, genus, evenness, reality,
                             singular=singular)


def involution_defect(points) -> tuple[float, float]:
    """Set distances of the branch points under a -> -a and a -> conj(a)."""
    pts = np.array([z for z, _ in points], dtype=complex)
    if len(pts) == 0:
        return 0.0, 0.0

    def setdist(img):
        return float(max(np.abs(pts[None, :] - img[:, None]).min(axis=1).max(),
                         np.abs(img[None, :] - pts[:, None]).min(axis=1).max()))

    return setdist(-pts), setdist(np.conj(pts))


def spectral_invariance(traj: Trajectory, constants: GenusConstants,
                        genus: int) -> float:
    """Max relative coefficient drift of det X along the trajectory."""
    P0 = det_killing(build_killing_field(traj.jet(0), constants, genus))
    ref = np.asarray(P0.coeffs, dtype=complex)
    top = np.abs(ref).max()
    worst = 0.0
    for i in range(1, len(traj)):
        P = det_killing(build_killing_field(traj.jet(i), constants, genus))
        cur = np.asarray(P.coeffs, dtype=complex)
        k = max(len(cur), len(ref))
        a = np.pad(cur, (0, k - len(cur)))
        b = np.pad(ref, (0, k - len(ref)))
        worst = max(worst, float(np.abs(a - b).max() / top))
    return worst
