"""Pure-python (numpy) implementations of the hot integration kernels.

Selected by :mod:`ewlab.kernels` when the compiled extension is not
available.  The transfer-matrix kernel is vectorized over the spectral
parameter grid; the other two are sequential by nature.

Mid-step values of coefficient functions are taken from arrays sampled at
half-step resolution (index 2s, 2s+1, 2s+2 for step s), which keeps the
classical Runge-Kutta scheme at full 4th order.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def el_rk4(q0: complex, qp0: complex, r0: float, lam: complex, C: float,
           n_steps: int, dt: float):
    """Integrate the constrained-Willmore potential equation.

    State (q, q', r) with xi = i*r:
        q''  = 2 Re(lam q) - 8 (|q|^2 + C) q + 8 i r q
        r'   = Im(conj(q') q)
    Returns arrays of length n_steps + 1.
    """
    q = np.empty(n_steps + 1, dtype=complex)
    qp = np.empty(n_steps + 1, dtype=complex)
    r = np.empty(n_steps + 1, dtype=float)
    q[0], qp[0], r[0] = q0, qp0, r0

    def rhs(y_q, y_qp, y_r):
        acc = (2.0 * (lam * y_q).real
               - 8.0 * ((y_q.real**2 + y_q.imag**2) + C) * y_q
               + 8j * y_r * y_q)
        return y_qp, acc, (np.conj(y_qp) * y_q).imag

    a, b, c = q0, qp0, r0
    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(n_steps):
            k1 = rhs(a, b, c)
            k2 = rhs(a + 0.5 * dt * k1[0], b + 0.5 * dt * k1[1],
                     c + 0.5 * dt * k1[2])
            k3 = rhs(a + 0.5 * dt * k2[0], b + 0.5 * dt * k2[1],
                     c + 0.5 * dt * k2[2])
            k4 = rhs(a + dt * k3[0], b + dt * k3[1], c + dt * k3[2])
            a = a + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            b = b + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            c = c + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
            if not (np.isfinite(a.real) and np.isfinite(a.imag)
                    and np.isfinite(b.real) and np.isfinite(b.imag)):
                raise OverflowError(f"blow-up at y={(s + 1) * dt:.6g}")
            q[s + 1], qp[s + 1], r[s + 1] = a, b, c
    return q, qp, r


def transfer_rk4(q_half: np.ndarray, a_values: np.ndarray, dt: float):
    """Fundamental solution of Phi' = -M(y) Phi over the sampled period.

    M(y) = [[-i a, 2i conj(q)], [2i q, i a]]; q_half holds q at half-step
    resolution (length 2*n_steps + 1).  Returns H with shape (K, 2, 2) for
    the K values in a_values.
    """
    q_half = np.asarray(q_half, dtype=complex)
    a_values = np.atleast_1d(np.asarray(a_values, dtype=complex))
    n_steps = (len(q_half) - 1) // 2
    K = len(a_values)

    phi = np.zeros((K, 2, 2), dtype=complex)
    phi[:, 0, 0] = 1.0
    phi[:, 1, 1] = 1.0

    ia = 1j * a_values
    M = np.zeros((K, 2, 2), dtype=complex)

    def deriv(qv, p):
        # -M @ p with M = [[-ia, 2i conj(qv)], [2i qv, ia]]
        M[:, 0, 0] = ia
        M[:, 0, 1] = -2j * np.conj(qv)
        M[:, 1, 0] = -2j * qv
        M[:, 1, 1] = -ia
        return M @ p

    for s in range(n_steps):
        q0, qm, q1 = q_half[2 * s], q_half[2 * s + 1], q_half[2 * s + 2]
        k1 = deriv(q0, phi)
        k2 = deriv(qm, phi + 0.5 * dt * k1)
        k3 = deriv(qm, phi + 0.5 * dt * k2)
        k4 = deriv(q1, phi + dt * k3)
        phi += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return phi


def _qmul(p, q):
    return np.array([
        p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
        p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
        p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
        p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0],
    ])


_QI = np.array([0.0, 1.0, 0.0, 0.0])


def _profile_rhs(gam, dgam, re_q, m, n, l1, l2):
    g1s = gam[0]**2 + gam[1]**2
    g2s = gam[2]**2 + gam[3]**2
    h = m * m * g1s + n * n * g2s
    if h < 1e-12:
        raise ZeroDivisionError("singular fiber")
    sh = np.sqrt(h)
    # h' from the complex split of gamma and gamma'
    hp = 2.0 * m * m * (gam[0] * dgam[0] + gam[1] * dgam[1]) \
        + 2.0 * n * n * (gam[2] * dgam[2] + gam[3] * dgam[3])
    shp = hp / (2.0 * sh)
    T = dgam / sh
    B = (l1 * _qmul(_QI, gam) + l2 * _qmul(gam, _QI)) / sh
    gbar = np.array([gam[0], -gam[1], -gam[2], -gam[3]])
    N = _qmul(_qmul(B, gbar), T)
    igi = _qmul(_qmul(_QI, gam), _QI)
    kappa_s3 = (4.0 * re_q + (2.0 * l1 * l2 / sh) * (N @ igi)) / sh
    ddgam = shp * T + h * kappa_s3 * N - h * gam
    return ddgam


def profile_rk4(gamma0, dgamma0, re_q_half, m, n, dt, renorm_every=1):
    """Second-order frame ODE for the profile curve gamma in S^3.

    gamma'' = (sqrt h)' T + h kappa_{S^3} N - h gamma, with the S^3
    curvature prescribed through Re q.  Unit norm, tangency and conformal
    speed are re-imposed every `renorm_every` steps.
    Returns (gam, dgam) with shapes (n_steps + 1, 4).
    """
    re_q_half = np.asarray(re_q_half, dtype=float)
    n_steps = (len(re_q_half) - 1) // 2
    l1 = 0.5 * (m + n)
    l2 = 0.5 * (m - n)

    gam = np.empty((n_steps + 1, 4))
    dgam = np.empty((n_steps + 1, 4))
    g = np.asarray(gamma0, dtype=float).copy()
    dg = np.asarray(dgamma0, dtype=float).copy()
    gam[0], dgam[0] = g, dg

    for s in range(n_steps):
        r0, rm, r1 = re_q_half[2 * s], re_q_half[2 * s + 1], re_q_half[2 * s + 2]
        k1g, k1d = dg, _profile_rhs(g, dg, r0, m, n, l1, l2)
        g2_, d2_ = g + 0.5 * dt * k1g, dg + 0.5 * dt * k1d
        k2g, k2d = d2_, _profile_rhs(g2_, d2_, rm, m, n, l1, l2)
        g3_, d3_ = g + 0.5 * dt * k2g, dg + 0.5 * dt * k2d
        k3g, k3d = d3_, _profile_rhs(g3_, d3_, rm, m, n, l1, l2)
        g4_, d4_ = g + dt * k3g, dg + dt * k3d
        k4g, k4d = d4_, _profile_rhs(g4_, d4_, r1, m, n, l1, l2)
        g = g + dt / 6.0 * (k1g + 2 * k2g + 2 * k3g + k4g)
        dg = dg + dt / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d)

        if (s + 1) % renorm_every == 0:
            nrm = np.sqrt(g @ g)
            if not np.isfinite(nrm) or abs(nrm - 1.0) > 1e-4:
                raise OverflowError(f"reconstruction diverged at y={(s + 1) * dt:.6g}")
            g = g / nrm
            # project gamma' to the horizontal tangent space, speed sqrt(h)
            dg = dg - (dg @ g) * g
            g1s = g[0]**2 + g[1]**2
            g2s = g[2]**2 + g[3]**2
            h = m * m * g1s + n * n * g2s
            if h < 1e-12:
                raise ZeroDivisionError("singular fiber")
            sh = np.sqrt(h)
            B = (l1 * _qmul(_QI, g) + l2 * _qmul(g, _QI)) / sh
            dg = dg - (dg @ B) * B
            dg = dg * (sh / np.sqrt(dg @ dg))
        gam[s + 1], dgam[s + 1] = g, dg
    return gam, dgam
