"""Spectral data from the monodromy side.

The transfer matrix H(a) is the fundamental solution over one period of

    Phi' = -[[-ia, 2i conj(q)], [2i q, ia]] Phi,

its trace is the discriminant Delta(a), and the odd-order zeros of
Delta^2 - 4 are the branch points seen from this side.  They are
cross-checked against the Killing-field polynomial det X.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .elflow import Trajectory
from .killing import KillingField
from .spectral import SpectralCurveData

PERIODICITY_TOL = 1e-6


class AperiodicPotentialError(ValueError):
    pass


class RefineGridError(ValueError):
    pass


@dataclass(frozen=True)
class TransferSample:
    """Transfer matrix H and discriminant Delta = tr H at one a."""

    a: complex
    H: np.ndarray
    delta: complex

    @property
    def det_defect(self) -> float:
        return float(abs(np.linalg.det(self.H) - 1.0))


def _check_periodic(traj: Trajectory):
    gap = max(abs(traj.q[-1] - traj.q[0]), abs(traj.qp[-1] - traj.qp[0]),
              abs(traj.r[-1] - traj.r[0]))
    if gap > PERIODICITY_TOL:
        raise AperiodicPotentialError(
            f"aperiodic potential (endpoint jet gap {gap:.3g})")


def transfer_matrix(traj: Trajectory, a: complex) -> TransferSample:
    """H(a) over the full (periodic) trajectory; Phi(0) = identity."""
    _check_periodic(traj)
    if traj.step > traj.length / 200:
        raise ValueError("step too coarse (need step <= L/200)")
    H = kernels.transfer_rk4(traj.q_half_grid(), np.array([a], dtype=complex),
                             traj.step)[0]
    return TransferSample(complex(a), H, complex(np.trace(H)))


def discriminant_scan(traj: Trajectory, grid, threads: int = 1):
    """Transfer samples over an a-grid, in grid order.

    The scan is split over `threads` workers; results are merged back in
    the input order regardless of completion order.
    """
    _check_periodic(traj)
    grid = np.atleast_1d(np.asarray(grid, dtype=complex))
    q_half = traj.q_half_grid()
    dt = traj.step

    def work(chunk):
        return kernels.transfer_rk4(q_half, chunk, dt)

    threads = max(1, int(threads))
    if threads == 1 or len(grid) < 4:
        H = work(grid)
    else:
        chunks = np.array_split(grid, threads)
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, chunks))
        H = np.concatenate(parts, axis=0)
    return [TransferSample(complex(a), H[k], complex(H[k, 0, 0] + H[k, 1, 1]))
            for k, a in enumerate(grid)]


def _disc_poly(traj: Trajectory):
    """Callable a -> Delta(a)^2 - 4 (one integration per call)."""
    q_half = traj.q_half_grid()
    dt = traj.step

    def f(a_vals):
        H = kernels.transfer_rk4(q_half, np.atleast_1d(a_vals), dt)
        return (H[:, 0, 0] + H[:, 1, 1]) ** 2 - 4.0

    return f


def refine_zero(traj: Trajectory, a0: complex, max_iter: int = 40,
                fd_step: float = 1e-6) -> complex:
    """Newton refinement of a zero of Delta^2 - 4 starting from a0.

    The derivative is taken by a complex central difference, which is
    exact up to O(h^2) for the analytic discriminant.
    """
    f = _disc_poly(traj)
    a = complex(a0)
    best, best_val = a, abs(f(a)[0])
    for _ in range(max_iter):
        vals = f(np.array([a, a + fd_step, a - fd_step]))
        fa = vals[0]
        if abs(fa) < 1e-13:
            return a
        df = (vals[1] - vals[2]) / (2 * fd_step)
        if df == 0:
            break
        step = fa / df
        # damp far jumps; a zero of order k pulls Newton by fa/df = (a-z)/k
        if abs(step) > 1.0:
            step *= 1.0 / abs(step)
        a = a - step
        val = abs(f(a)[0])
        if val < best_val:
            best, best_val = a, val
        if abs(step) < 1e-12:
            break
    if best_val > 1e-4:
        raise RefineGridError("refine grid")
    return best


def branch_match(curve: SpectralCurveData, traj: Trajectory, box: float = 4.0,
                 tol: float = 1e-4) -> dict:
    """Match branch points of det X against zeros of Delta^2 - 4.

    For each branch point inside |Re a|, |Im a| <= box a nearby zero of
    the discriminant is located by Newton refinement; reports per-point
    distances and the overall verdict.
    """
    pairs = []
    for z, mult in curve.branch_points:
        if abs(z.real) > box or abs(z.imag) > box:
            continue
        zero = refine_zero(traj, z)
        pairs.append({"branch_point": z, "disc_zero": zero,
                      "distance": abs(zero - z), "multiplicity": mult})
    matched = bool(pairs) and all(p["distance"] < tol for p in pairs)
    return {"pairs": pairs, "matched": matched, "tol": tol}


def commutator_defect(kf: KillingField, traj: Trajectory, grid,
                      near_branch_tol: float = 0.1) -> float:
    """max ||[X(a), H(a)]|| / (||X|| ||H||) over regular grid points.

    Points with |Delta^2 - 4| <= near_branch_tol are excluded (H may not
    be diagonalizable there).
    """
    samples = discriminant_scan(traj, grid)
    worst = 0.0
    for s in samples:
        if abs(s.delta**2 - 4.0) <= near_branch_tol:
            continue
        X = kf(s.a)
        comm = X @ s.H - s.H @ X
        denom = np.linalg.norm(X) * np.linalg.norm(s.H)
        if denom > 0:
            worst = max(worst, float(np.linalg.norm(comm) / denom))
    return worst
