"""Polynomial Killing fields of spectral genus 0-3 built from a q-jet.

The field is the matrix polynomial

    X(a) = diag(-i, i) a^{g+1} + [[0, 2i conj(q)], [2i q, 0]] a^g
           + sum_j blk(beta_j, pi_j) a^{g-1-j},

    blk(b, p) = [[-i b, 2i conj(p)], [2i p, i b]],

whose coefficients follow the recursion

    pi_0 = (i/2) q',      beta_0 = -2|q|^2 - 2c,
    pi_{j+1} = beta_j q + (i/2) pi_j',   beta_j' = -8 Im(conj(q) pi_j),

integrated to beta_1 = 2 Im(conj(q) q') + d and
beta_2 = 6|q|^4 + 4c|q|^2 + Re(conj(q) q'') - |q'|^2/2 + e.  The flow
equation of genus g is the termination condition pi_g = 0.  Everything is
checked a posteriori against the Lax equation X' = [X, L] with
L(a) = [[-ia, 2i conj(q)], [2i q, ia]].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import CPoly
from .elflow import (DEGENERATE_Q_TOL, DegenerateImmersionError, ELParams,
                     HopfJet, Trajectory, first_integral)

LAX_A_GRID = (0.0, 1.0, -1.0, 1j, -1j, 2.0, -2.0)


class UnidentifiableConstantsError(ValueError):
    pass


@dataclass(frozen=True)
class GenusConstants:
    """Integration constants of the flow hierarchy."""

    c: float = 0.0
    d: float = 0.0
    e: float = 0.0
    dtilde: float = 0.0


@dataclass(frozen=True)
class KillingField:
    """Matrix polynomial X(a) at one parameter value y.

    coeffs[k] is the (traceless) 2x2 coefficient of a^k, k = 0..genus+1.
    """

    genus: int
    coeffs: np.ndarray  # (genus+2, 2, 2) complex
    constants: GenusConstants
    y: float = 0.0

    def __call__(self, a: complex) -> np.ndarray:
        out = np.zeros((2, 2), dtype=complex)
        ak = 1.0 + 0.0j
        for k in range(self.coeffs.shape[0]):
            out += self.coeffs[k] * ak
            ak *= a
        return out


def _blk(beta: float, pi: complex) -> np.ndarray:
    return np.array([[-1j * beta, 2j * np.conj(pi)],
                     [2j * pi, 1j * beta]], dtype=complex)


def _block_data(jet: HopfJet, constants: GenusConstants, genus: int):
    """(beta_j, pi_j) for j < genus, pointwise in the jet."""
    q, qp, qpp, qppp = jet.q, jet.qp, jet.qpp, jet.qppp
    c, d, e = constants.c, constants.d, constants.e
    out = []
    if genus >= 1:
        out.append((-2 * abs(q) ** 2 - 2 * c, 0.5j * qp))
    if genus >= 2:
        beta0 = out[0][0]
        out.append((2 * (np.conj(q) * qp).imag + d, beta0 * q - qpp / 4))
    if genus >= 3:
        beta0, beta1 = out[0][0], out[1][0]
        beta0p = -2 * (qp * np.conj(q) + q * np.conj(qp)).real
        pi1p = beta0p * q + beta0 * qp - qppp / 4
        pi2 = beta1 * q + 0.5j * pi1p
        beta2 = (6 * abs(q) ** 4 + 4 * c * abs(q) ** 2
                 + (np.conj(q) * qpp).real - 0.5 * abs(qp) ** 2 + e)
        out.append((beta2, pi2))
    return out


def build_killing_field(jet: HopfJet, constants: GenusConstants,
                        genus: int) -> KillingField:
    """Assemble the genus-g polynomial Killing field at one jet."""
    if genus not in (0, 1, 2, 3):
        raise ValueError("genus must be in {0,1,2,3}")
    coeffs = np.zeros((genus + 2, 2, 2), dtype=complex)
    coeffs[genus + 1] = np.diag([-1j, 1j])
    coeffs[genus] += np.array([[0, 2j * np.conj(jet.q)],
                               [2j * jet.q, 0]], dtype=complex)
    for j, (beta, pi) in enumerate(_block_data(jet, constants, genus)):
        coeffs[genus - 1 - j] += _blk(beta, pi)
    return KillingField(genus, coeffs, constants, jet.y)


def connection_matrix(q: complex, a: complex) -> np.ndarray:
    """L(a, y) = [[-ia, 2i conj(q)], [2i q, ia]]."""
    return np.array([[-1j * a, 2j * np.conj(q)],
                     [2j * q, 1j * a]], dtype=complex)


def lax_residual(traj: Trajectory, constants: GenusConstants,
                 genus: int) -> float:
    """Max defect of X' = [X, L] over the trajectory and a small a-grid.

    dX/dy is taken by central differences of the constructed fields.
    """
    n = len(traj)
    if n < 5:
        raise ValueError("need at least 5 samples")
    fields = [build_killing_field(traj.jet(i), constants, genus)
              for i in range(n)]
    worst = 0.0
    for a in LAX_A_GRID:
        X = np.array([f(a) for f in fields])
        # 4th-order central differences on the interior
        dX = (-X[4:] + 8 * X[3:-1] - 8 * X[1:-3] + X[:-4]) / (12 * traj.step)
        for i in range(2, n - 2):
            L = connection_matrix(complex(traj.q[i]), a)
            res = dX[i - 2] - (X[i] @ L - L @ X[i])
            worst = max(worst, float(np.abs(res).max()))
    return worst


def _g3_lhs(q, qp, qpp, qppp, q4, c, e):
    return (q4 + 96 * np.abs(q) ** 4 * q + 16 * np.conj(qp) * qp * q
            + 24 * qp**2 * np.conj(q) + 8 * np.conj(qpp) * q**2
            + 32 * np.abs(q) ** 2 * qpp
            + 8 * c * (qpp + 8 * np.abs(q) ** 2 * q) + 16 * e * q)


def flow_residuals(jet: HopfJet, constants: GenusConstants,
                   q4: complex = 0.0) -> dict:
    """Pointwise defects of the genus-0..3 flow equations and the
    sigma-symmetry quantities.  q4 must be supplied for a meaningful g3
    value (see trajectory_flow_residuals)."""
    q, qp, qpp, qppp = jet.q, jet.qp, jet.qpp, jet.qppp
    c, d, e = constants.c, constants.d, constants.e
    g0 = abs(qp)
    g1 = abs(qpp + 8 * (abs(q) ** 2 + c) * q)
    g2 = abs(qppp + 24 * abs(q) ** 2 * qp + 8 * c * qp + d)
    g3 = abs(_g3_lhs(q, qp, qpp, qppp, q4, c, e))
    sym1 = abs((qp * np.conj(q)).imag)
    # genus-2 sigma symmetry: beta_1 - 2 Im(conj(q) q') = d must vanish
    sym2 = abs(d)
    sym3 = abs((qppp * np.conj(q) + 24 * abs(q) ** 2 * np.conj(q) * qp
                + 8 * c * np.conj(q) * qp + np.conj(qpp) * qp).imag)
    return {"g0": g0, "g1": g1, "g2": g2, "g3": g3,
            "sym1": sym1, "sym2": sym2, "sym3": sym3}


def _q4_fd(traj: Trajectory) -> np.ndarray:
    """Fourth derivative of q: analytic jet completion when the
    trajectory carries EL parameters, otherwise central differences of
    q''' (one-sided at the ends)."""
    if traj.params is not None:
        from .elflow import el_derivatives
        q4 = np.empty_like(traj.qppp)
        for i in range(len(traj)):
            q4[i] = el_derivatives(complex(traj.q[i]), complex(traj.qp[i]),
                                   float(traj.r[i]), traj.params)[2]
        return q4
    q4 = np.empty_like(traj.qppp)
    q4[1:-1] = (traj.qppp[2:] - traj.qppp[:-2]) / (2 * traj.step)
    q4[0] = (traj.qppp[1] - traj.qppp[0]) / traj.step
    q4[-1] = (traj.qppp[-1] - traj.qppp[-2]) / traj.step
    return q4


def trajectory_flow_residuals(traj: Trajectory,
                              constants: GenusConstants) -> dict:
    """Max of each flow residual over all samples; q'''' by finite
    differences along the trajectory (interior samples for g3)."""
    c, d, e = constants.c, constants.d, constants.e
    q, qp, qpp, qppp = traj.q, traj.qp, traj.qpp, traj.qppp
    q4 = _q4_fd(traj)
    out = {
        "g0": np.abs(qp).max(),
        "g1": np.abs(qpp + 8 * (np.abs(q) ** 2 + c) * q).max(),
        "g2": np.abs(qppp + 24 * np.abs(q) ** 2 * qp + 8 * c * qp + d).max(),
        "g3": np.abs(_g3_lhs(q, qp, qpp, qppp, q4, c, e)[1:-1]).max(),
        "sym1": np.abs((qp * np.conj(q)).imag).max(),
        "sym2": abs(d),
        "sym3": np.abs((qppp * np.conj(q)
                        + 24 * np.abs(q) ** 2 * np.conj(q) * qp
                        + 8 * c * np.conj(q) * qp
                        + np.conj(qpp) * qp).imag).max(),
    }
    return {k: float(v) for k, v in out.items()}


def _lstsq_real(columns: list[np.ndarray], rhs: np.ndarray):
    """Real least squares for complex-valued column equations."""
    A = np.column_stack([np.concatenate([col.real, col.imag])
                         for col in columns])
    b = np.concatenate([rhs.real, rhs.imag])
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[0] < 1e-12 or sv[-1] < 1e-10 * sv[0]:
        raise UnidentifiableConstantsError("constants unidentifiable")
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    rms = float(np.sqrt(np.mean((A @ x - b) ** 2)))
    return x, rms


def fit_constants(traj: Trajectory, genus: int):
    """Least-squares inversion of the genus-g flow equation for its
    constants.  Returns (GenusConstants, rms residual)."""
    if len(traj) < 100:
        raise ValueError("trajectory too short (need >= 100 samples)")
    q, qp, qpp, qppp = traj.q, traj.qp, traj.qpp, traj.qppp
    dtilde = 0.0
    if traj.params is not None and traj.params.lam_is_real:
        dtilde = first_integral(traj.jet(0), traj.params)
    if genus == 0:
        return GenusConstants(0.0, 0.0, 0.0, dtilde), float(np.abs(qp).max())
    if genus == 1:
        x, rms = _lstsq_real([8 * q], -(qpp + 8 * np.abs(q) ** 2 * q))
        return GenusConstants(float(x[0]), 0.0, 0.0, dtilde), rms
    if genus == 2:
        ones = np.ones(len(q), dtype=complex)
        x, rms = _lstsq_real([8 * qp, ones],
                             -(qppp + 24 * np.abs(q) ** 2 * qp))
        return GenusConstants(float(x[0]), float(x[1]), 0.0, dtilde), rms
    if genus == 3:
        q4 = _q4_fd(traj)
        sl = slice(1, -1)
        base = _g3_lhs(q, qp, qpp, qppp, q4, 0.0, 0.0)[sl]
        x, rms = _lstsq_real(
            [8 * (qpp + 8 * np.abs(q) ** 2 * q)[sl], 16 * q[sl]], -base)
        return GenusConstants(float(x[0]), 0.0, float(x[1]), dtilde), rms
    raise ValueError("genus must be in {0,1,2,3}")


def genus_classify(traj: Trajectory, tol: float = 1e-6):
    """Smallest genus whose flow equation (with fitted constants) and
    sigma-symmetry residuals hold along the trajectory.

    Returns (label, evidence) with label in {0,1,2,3,'above3'}; tolerances
    are scaled by max(1, |q|_inf^4).
    """
    if np.abs(traj.q).max() < DEGENERATE_Q_TOL:
        raise DegenerateImmersionError("degenerate (totally umbilic)")
    scale = max(1.0, float(np.abs(traj.q).max()) ** 4)
    evidence: dict = {"scale": scale}
    for genus in (0, 1, 2, 3):
        try:
            constants, rms = fit_constants(traj, genus)
        except UnidentifiableConstantsError:
            evidence[f"genus{genus}"] = {"fit": "unidentifiable"}
            continue
        res = trajectory_flow_residuals(traj, constants)
        entry = {"constants": constants, "fit_rms": rms, **res}
        evidence[f"genus{genus}"] = entry
        flow_ok = res[f"g{genus}"] < tol * scale
        sym_ok = (genus == 0
                  or res[f"sym{genus}"] < max(tol, 1e-8 * scale))
        if flow_ok and sym_ok:
            return genus, evidence
    return "above3", evidence


def constants_from_el(params: ELParams, dtilde: float):
    """(c, e) matching a trajectory of the EL flow with real lambda."""
    if not params.lam_is_real:
        raise ValueError("lambda must be real")
    lam = complex(params.lam).real
    c = (8 * params.C - lam) / 4
    e = -(dtilde + 8 * params.C**2 + 8 * c * params.C) / 2
    return c, e


def integrate_flow(genus: int, q0: complex, qp0: complex, qpp0: complex,
                   constants: GenusConstants, length: float,
                   step: float) -> Trajectory:
    """RK4 run of the genus-1/2 flow ODE, for building test trajectories.

    genus 1: q'' = -8(|q|^2 + c) q           (state q, q')
    genus 2: q''' = -24|q|^2 q' - 8c q' - d  (state q, q', q'')
    """
    if genus not in (1, 2):
        raise ValueError("only genus 1 and 2 flows are integrated directly")
    c, d = constants.c, constants.d
    n = int(round(length / step))
    dt = length / n

    if genus == 1:
        def rhs(y):
            q, qp = y
            return np.array([qp, -8 * (abs(q) ** 2 + c) * q])
        y = np.array([q0, qp0], dtype=complex)
    else:
        def rhs(y):
            q, qp, qpp = y
            return np.array([qp, qpp, -24 * abs(q) ** 2 * qp - 8 * c * qp - d])
        y = np.array([q0, qp0, qpp0], dtype=complex)

    states = np.empty((n + 1, len(y)), dtype=complex)
    states[0] = y
    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(n):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * dt * k1)
            k3 = rhs(y + 0.5 * dt * k2)
            k4 = rhs(y + dt * k3)
            y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(y.view(float))):
                raise OverflowError(f"blow-up at y={(s + 1) * dt:.6g}")
            states[s + 1] = y

    q = states[:, 0]
    qp = states[:, 1]
    if genus == 1:
        qpp = -8 * (np.abs(q) ** 2 + c) * q
        dqq = qp * np.conj(q) + q * np.conj(qp)
        qppp = -8 * dqq * q - 8 * (np.abs(q) ** 2 + c) * qp
    else:
        qpp = states[:, 2]
        qppp = -24 * np.abs(q) ** 2 * qp - 8 * c * qp - d
    ys = dt * np.arange(n + 1)
    return Trajectory(ys, q, qp, qpp, qppp, np.zeros(n + 1), dt, None)
