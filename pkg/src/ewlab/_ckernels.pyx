# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled integration kernels (see _pykernels for the reference twin)."""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def el_rk4(double complex q0, double complex qp0, double r0,
           double complex lam, double C, Py_ssize_t n_steps, double dt):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] q = np.empty(n_steps + 1, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] qp = np.empty(n_steps + 1, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] r = np.empty(n_steps + 1, dtype=np.float64)

    cdef double complex a = q0, b = qp0
    cdef double c = r0
    cdef double complex k1a, k2a, k3a, k4a, k1b, k2b, k3b, k4b
    cdef double k1c, k2c, k3c, k4c
    cdef double complex ta, tb
    cdef double tc
    cdef Py_ssize_t s

    q[0] = a; qp[0] = b; r[0] = c
    for s in range(n_steps):
        k1a = b
        k1b = _el_acc(a, b, c, lam, C)
        k1c = _el_dr(a, b)
        ta = a + 0.5 * dt * k1a; tb = b + 0.5 * dt * k1b; tc = c + 0.5 * dt * k1c
        k2a = tb; k2b = _el_acc(ta, tb, tc, lam, C); k2c = _el_dr(ta, tb)
        ta = a + 0.5 * dt * k2a; tb = b + 0.5 * dt * k2b; tc = c + 0.5 * dt * k2c
        k3a = tb; k3b = _el_acc(ta, tb, tc, lam, C); k3c = _el_dr(ta, tb)
        ta = a + dt * k3a; tb = b + dt * k3b; tc = c + dt * k3c
        k4a = tb; k4b = _el_acc(ta, tb, tc, lam, C); k4c = _el_dr(ta, tb)
        a = a + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        b = b + dt / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        c = c + dt / 6.0 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)
        if not (a.real == a.real and a.imag == a.imag
                and b.real == b.real and b.imag == b.imag
                and abs(a.real) < 1e150 and abs(b.real) < 1e150):
            raise OverflowError(f"blow-up at y={(s + 1) * dt:.6g}")
        q[s + 1] = a; qp[s + 1] = b; r[s + 1] = c
    return q, qp, r


cdef inline double complex _el_acc(double complex q, double complex qp,
                                   double r, double complex lam, double C):
    cdef double qq = q.real * q.real + q.imag * q.imag
    cdef double re_lq = lam.real * q.real - lam.imag * q.imag
    return 2.0 * re_lq - 8.0 * (qq + C) * q + 8.0j * r * q


cdef inline double _el_dr(double complex q, double complex qp):
    # Im(conj(qp) * q)
    return qp.real * q.imag - qp.imag * q.real


def transfer_rk4(cnp.ndarray[cnp.complex128_t, ndim=1] q_half,
                 cnp.ndarray[cnp.complex128_t, ndim=1] a_values, double dt):
    cdef Py_ssize_t n_steps = (q_half.shape[0] - 1) // 2
    cdef Py_ssize_t K = a_values.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] H = np.empty((K, 2, 2), dtype=np.complex128)

    cdef double complex p00, p01, p10, p11
    cdef double complex k00, k01, k10, k11
    cdef double complex s00, s01, s10, s11
    cdef double complex t00, t01, t10, t11
    cdef double complex ia, q0, qm, q1
    cdef Py_ssize_t ik, s, stage
    cdef double complex u, v, w
    cdef double wgt

    for ik in range(K):
        ia = 1j * a_values[ik]
        p00 = 1.0; p01 = 0.0; p10 = 0.0; p11 = 1.0
        for s in range(n_steps):
            q0 = q_half[2 * s]; qm = q_half[2 * s + 1]; q1 = q_half[2 * s + 2]
            # accumulate RK4 increment in s??
            s00 = 0.0; s01 = 0.0; s10 = 0.0; s11 = 0.0
            t00 = p00; t01 = p01; t10 = p10; t11 = p11
            for stage in range(4):
                if stage == 0:
                    v = q0
                elif stage == 3:
                    v = q1
                else:
                    v = qm
                # k = -M @ t, M = [[-ia, 2i conj(v)], [2i v, ia]]
                u = -2.0j * (v.real - 1j * v.imag)
                w = -2.0j * v
                k00 = ia * t00 + u * t10
                k01 = ia * t01 + u * t11
                k10 = w * t00 - ia * t10
                k11 = w * t01 - ia * t11
                if stage == 0 or stage == 3:
                    wgt = 1.0
                else:
                    wgt = 2.0
                s00 = s00 + wgt * k00; s01 = s01 + wgt * k01
                s10 = s10 + wgt * k10; s11 = s11 + wgt * k11
                if stage == 0 or stage == 1:
                    t00 = p00 + 0.5 * dt * k00; t01 = p01 + 0.5 * dt * k01
                    t10 = p10 + 0.5 * dt * k10; t11 = p11 + 0.5 * dt * k11
                elif stage == 2:
                    t00 = p00 + dt * k00; t01 = p01 + dt * k01
                    t10 = p10 + dt * k10; t11 = p11 + dt * k11
            p00 = p00 + dt / 6.0 * s00; p01 = p01 + dt / 6.0 * s01
            p10 = p10 + dt / 6.0 * s10; p11 = p11 + dt / 6.0 * s11
        H[ik, 0, 0] = p00; H[ik, 0, 1] = p01
        H[ik, 1, 0] = p10; H[ik, 1, 1] = p11
    return H


cdef inline void _qmul(double* p, double* q, double* out) nogil:
    out[0] = p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3]
    out[1] = p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2]
    out[2] = p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1]
    out[3] = p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0]


cdef int _profile_rhs(double* gam, double* dgam, double re_q,
                      double m, double n, double l1, double l2,
                      double* out) nogil:
    cdef double g1s = gam[0] * gam[0] + gam[1] * gam[1]
    cdef double g2s = gam[2] * gam[2] + gam[3] * gam[3]
    cdef double h = m * m * g1s + n * n * g2s
    if h < 1e-12:
        return 1
    cdef double sh = h ** 0.5
    cdef double hp = 2.0 * m * m * (gam[0] * dgam[0] + gam[1] * dgam[1]) \
        + 2.0 * n * n * (gam[2] * dgam[2] + gam[3] * dgam[3])
    cdef double shp = hp / (2.0 * sh)
    cdef double qi[4], tmp1[4], tmp2[4], B[4], gbar[4], N[4], T[4], igi[4]
    cdef int i
    qi[0] = 0.0; qi[1] = 1.0; qi[2] = 0.0; qi[3] = 0.0
    for i in range(4):
        T[i] = dgam[i] / sh
    _qmul(qi, gam, tmp1)
    _qmul(gam, qi, tmp2)
    for i in range(4):
        B[i] = (l1 * tmp1[i] + l2 * tmp2[i]) / sh
    gbar[0] = gam[0]; gbar[1] = -gam[1]; gbar[2] = -gam[2]; gbar[3] = -gam[3]
    _qmul(B, gbar, tmp2)
    _qmul(tmp2, T, N)
    _qmul(qi, gam, tmp1)
    _qmul(tmp1, qi, igi)
    cdef double dot = N[0] * igi[0] + N[1] * igi[1] + N[2] * igi[2] + N[3] * igi[3]
    cdef double kappa_s3 = (4.0 * re_q + (2.0 * l1 * l2 / sh) * dot) / sh
    for i in range(4):
        out[i] = shp * T[i] + h * kappa_s3 * N[i] - h * gam[i]
    return 0


def profile_rk4(cnp.ndarray[cnp.float64_t, ndim=1] gamma0,
                cnp.ndarray[cnp.float64_t, ndim=1] dgamma0,
                cnp.ndarray[cnp.float64_t, ndim=1] re_q_half,
                double m, double n, double dt, int renorm_every=1):
    cdef Py_ssize_t n_steps = (re_q_half.shape[0] - 1) // 2
    cdef double l1 = 0.5 * (m + n), l2 = 0.5 * (m - n)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] gam = np.empty((n_steps + 1, 4))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dgam = np.empty((n_steps + 1, 4))

    cdef double g[4], dg[4]
    cdef double kg[4][4], kd[4][4]
    cdef double tg[4], td[4]
    cdef double r0, rm, r1, rq, nrm, h, sh, dot, g1s, g2s
    cdef double qi[4], tmp1[4], tmp2[4], B[4]
    cdef Py_ssize_t s
    cdef int i, stage, bad
    qi[0] = 0.0; qi[1] = 1.0; qi[2] = 0.0; qi[3] = 0.0

    for i in range(4):
        g[i] = gamma0[i]; dg[i] = dgamma0[i]
        gam[0, i] = g[i]; dgam[0, i] = dg[i]

    for s in range(n_steps):
        r0 = re_q_half[2 * s]; rm = re_q_half[2 * s + 1]; r1 = re_q_half[2 * s + 2]
        for i in range(4):
            tg[i] = g[i]; td[i] = dg[i]
        for stage in range(4):
            if stage == 0:
                rq = r0
            elif stage == 3:
                rq = r1
            else:
                rq = rm
            for i in range(4):
                kg[stage][i] = td[i]
            bad = _profile_rhs(tg, td, rq, m, n, l1, l2, kd[stage])
            if bad:
                raise ZeroDivisionError("singular fiber")
            if stage < 2:
                for i in range(4):
                    tg[i] = g[i] + 0.5 * dt * kg[stage][i]
                    td[i] = dg[i] + 0.5 * dt * kd[stage][i]
            elif stage == 2:
                for i in range(4):
                    tg[i] = g[i] + dt * kg[stage][i]
                    td[i] = dg[i] + dt * kd[stage][i]
        for i in range(4):
            g[i] = g[i] + dt / 6.0 * (kg[0][i] + 2.0 * kg[1][i] + 2.0 * kg[2][i] + kg[3][i])
            dg[i] = dg[i] + dt / 6.0 * (kd[0][i] + 2.0 * kd[1][i] + 2.0 * kd[2][i] + kd[3][i])

        if (s + 1) % renorm_every == 0:
            nrm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + g[3] * g[3]) ** 0.5
            if not (nrm == nrm) or abs(nrm - 1.0) > 1e-4:
                raise OverflowError(f"reconstruction diverged at y={(s + 1) * dt:.6g}")
            for i in range(4):
                g[i] = g[i] / nrm
            dot = dg[0] * g[0] + dg[1] * g[1] + dg[2] * g[2] + dg[3] * g[3]
            for i in range(4):
                dg[i] = dg[i] - dot * g[i]
            g1s = g[0] * g[0] + g[1] * g[1]
            g2s = g[2] * g[2] + g[3] * g[3]
            h = m * m * g1s + n * n * g2s
            if h < 1e-12:
                raise ZeroDivisionError("singular fiber")
            sh = h ** 0.5
            _qmul(qi, g, tmp1)
            _qmul(g, qi, tmp2)
            for i in range(4):
                B[i] = (l1 * tmp1[i] + l2 * tmp2[i]) / sh
            dot = dg[0] * B[0] + dg[1] * B[1] + dg[2] * B[2] + dg[3] * B[3]
            for i in range(4):
                dg[i] = dg[i] - dot * B[i]
            nrm = (dg[0] * dg[0] + dg[1] * dg[1] + dg[2] * dg[2] + dg[3] * dg[3]) ** 0.5
            for i in range(4):
                dg[i] = dg[i] * (sh / nrm)
        for i in range(4):
            gam[s + 1, i] = g[i]; dgam[s + 1, i] = dg[i]
    return gam, dgam
