"""The Euler-Lagrange flow of the conformal Hopf differential.

State is the jet (q, q', xi) with xi purely imaginary (stored as the real
number r, xi = i r):

    q''  = 2 Re(lam q) - 8 (|q|^2 + C) q + 8 xi q
    2 xi' = conj(q') q - q' conj(q)

plus its conserved quantity, the associated family, isothermic detection
and the elastic-curve special cases.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels

DEGENERATE_Q_TOL = 1e-10


class DegenerateImmersionError(ValueError):
    pass


@dataclass(frozen=True)
class ELParams:
    """Lagrange multiplier and integration constant of the EL equation."""

    lam: complex
    C: float

    @property
    def lam_is_real(self) -> bool:
        return abs(complex(self.lam).imag) <= 1e-12 * (1 + abs(self.lam))


@dataclass(frozen=True)
class HopfJet:
    """Value of q and its derivatives plus xi = i*xi_im at parameter y."""

    q: complex
    qp: complex = 0.0
    qpp: complex = 0.0
    qppp: complex = 0.0
    xi_im: float = 0.0
    y: float = 0.0

    @property
    def xi(self) -> complex:
        return 1j * self.xi_im


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled jets along a flow; arrays indexed by sample."""

    y: np.ndarray
    q: np.ndarray
    qp: np.ndarray
    qpp: np.ndarray
    qppp: np.ndarray
    r: np.ndarray  # xi = i r
    step: float
    params: ELParams | None = None

    def __len__(self) -> int:
        return len(self.y)

    @property
    def length(self) -> float:
        return float(self.y[-1] - self.y[0])

    def jet(self, i: int) -> HopfJet:
        return HopfJet(complex(self.q[i]), complex(self.qp[i]),
                       complex(self.qpp[i]), complex(self.qppp[i]),
                       float(self.r[i]), float(self.y[i]))

    def q_at(self, ys) -> np.ndarray:
        """q off the grid by jet Taylor expansion around the nearest sample."""
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        idx = np.clip(np.round((ys - self.y[0]) / self.step).astype(int),
                      0, len(self.y) - 1)
        d = ys - self.y[idx]
        return (self.q[idx] + self.qp[idx] * d + 0.5 * self.qpp[idx] * d**2
                + self.qppp[idx] * d**3 / 6.0)

    def q_half_grid(self) -> np.ndarray:
        """q at half-step resolution, for the transfer-matrix kernel."""
        n = len(self.y) - 1
        out = np.empty(2 * n + 1, dtype=complex)
        out[0::2] = self.q
        d = 0.5 * self.step
        out[1::2] = (self.q[:-1] + self.qp[:-1] * d + 0.5 * self.qpp[:-1] * d**2
                     + self.qppp[:-1] * d**3 / 6.0)
        return out


def el_derivatives(q: complex, qp: complex, r: float, params: ELParams):
    """Analytic jet completion along the EL flow.

    Returns (qpp, qppp, q4, rp, rpp) obtained by differentiating the
    equation twice; valid wherever (q, q', r) evolves by the flow.
    """
    lam, C = params.lam, params.C
    xi = 1j * r
    qq = abs(q) ** 2
    qpp = 2 * (lam * q).real - 8 * (qq + C) * q + 8 * xi * q
    rp = (np.conj(qp) * q).imag
    dqq = qp * np.conj(q) + q * np.conj(qp)
    qppp = (2 * (lam * qp).real - 8 * (qq + C) * qp - 8 * dqq * q
            + 8j * rp * q + 8 * xi * qp)
    rpp = (np.conj(qpp) * q).imag
    ddqq = qpp * np.conj(q) + 2 * abs(qp) ** 2 + q * np.conj(qpp)
    q4 = (2 * (lam * qpp).real - 8 * (qq + C) * qpp - 16 * dqq * qp
          - 8 * ddqq * q + 8j * rpp * q + 16j * rp * qp + 8 * xi * qpp)
    return complex(qpp), complex(qppp), complex(q4), float(rp), float(rpp)


def el_rhs(jet: HopfJet, params: ELParams):
    """Right-hand side (q', q'', xi') of the first-order EL system."""
    qpp, _, _, rp, _ = el_derivatives(jet.q, jet.qp, jet.xi_im, params)
    return jet.qp, qpp, 1j * rp


def integrate_el(initial: HopfJet, params: ELParams, length: float,
                 step: float) -> Trajectory:
    """Classical fixed-step RK4 run of the EL flow over [0, length]."""
    if step <= 0 or length <= 0:
        raise ValueError("step and length must be positive")
    if step > length / 100:
        raise ValueError("step too coarse (need step <= length/100)")
    n = int(round(length / step))
    dt = length / n
    q, qp, r = kernels.el_rk4(complex(initial.q), complex(initial.qp),
                              float(initial.xi_im), complex(params.lam),
                              float(params.C), n, dt)
    qpp = np.empty_like(q)
    qppp = np.empty_like(q)
    for i in range(len(q)):
        qpp[i], qppp[i], _, _, _ = el_derivatives(q[i], qp[i], r[i], params)[:5]
    ys = initial.y + dt * np.arange(n + 1)
    return Trajectory(ys, q, qp, qpp, qppp, r, dt, params)


def first_integral(jet: HopfJet, params: ELParams) -> float:
    """Conserved constant d~ of the EL flow (lambda rotated to be real).

    Normalized (by the constant offset 4*lam*C - 32*C^2) so that the
    genus-3 matching relations c = (8C - lam)/4 and
    e = -(d~ + 8C^2 + 8cC)/2 hold exactly.
    """
    if not params.lam_is_real:
        raise ValueError("rotate lambda first")
    lam = complex(params.lam).real
    C = params.C
    q, qp, r = jet.q, jet.qp, jet.xi_im
    return float(-abs(qp) ** 2 - 4 * abs(q) ** 4 - 8 * r**2
                 - 8 * C * abs(q) ** 2 + 2 * lam * q.real**2
                 + 4 * lam * C - 32 * C**2)


def _transformed_params(params: ELParams, mu: complex):
    shift = (mu**2 - 1) * np.conj(params.lam) / 8.0
    return ELParams(np.conj(mu) ** 2 * params.lam,
                    params.C + shift.real), shift.imag


def associated_family(traj: Trajectory, params: ELParams, mu: complex):
    """q -> q mu with the constants moved along the associated family.

    Returns (trajectory, params_mu, xi_shift); the new trajectory solves the
    EL equation with the transformed data.
    """
    mu = complex(mu)
    if abs(abs(mu) - 1.0) > 1e-12:
        raise ValueError("|mu| must be 1")
    params_mu, xi_shift = _transformed_params(params, mu)
    out = Trajectory(traj.y.copy(), traj.q * mu, traj.qp * mu,
                     traj.qpp * mu, traj.qppp * mu, traj.r + xi_shift,
                     traj.step, params_mu)
    return out, params_mu, xi_shift


def associated_family_jet(jet: HopfJet, params: ELParams, mu: complex):
    mu = complex(mu)
    if abs(abs(mu) - 1.0) > 1e-12:
        raise ValueError("|mu| must be 1")
    params_mu, xi_shift = _transformed_params(params, mu)
    out = HopfJet(jet.q * mu, jet.qp * mu, jet.qpp * mu, jet.qppp * mu,
                  jet.xi_im + xi_shift, jet.y)
    return out, params_mu, xi_shift


def el_residual(traj: Trajectory, params: ELParams) -> float:
    """Max pointwise defect of the EL equation along a trajectory."""
    xi = 1j * traj.r
    res = (traj.qpp + 8 * (np.abs(traj.q) ** 2 + params.C) * traj.q
           - 8 * xi * traj.q - 2 * (params.lam * traj.q).real)
    return float(np.abs(res).max())


def canonicalize_lambda(traj: Trajectory, params: ELParams):
    """Rotate by mu in S^1 so that the transformed lambda is real >= 0."""
    lam = complex(params.lam)
    if abs(lam) < 1e-300 or params.lam_is_real and lam.real >= 0:
        return traj, params, 1.0 + 0.0j
    theta = np.angle(lam)
    mu = np.exp(1j * theta / 2)
    out, params_mu, _ = associated_family(traj, params, mu)
    # clean the rounding residue; lambda_mu is real by construction
    params_mu = ELParams(complex(params_mu.lam).real, params_mu.C)
    return out, params_mu, mu


def isothermic_detect(traj: Trajectory, tol: float = 1e-8):
    """The unit mu with q*mu real, if the samples lie on a real line through 0.

    mu is normalized so that Re(q mu) >= 0 at the first sample of maximal
    |q|.  Returns None for genuinely complex traces.
    """
    mags = np.abs(traj.q)
    top = mags.max()
    if top < DEGENERATE_Q_TOL:
        raise DegenerateImmersionError("degenerate (totally umbilic)")
    k = int(np.argmax(mags))
    mu = np.exp(-1j * np.angle(traj.q[k]))
    if np.abs((traj.q * mu).imag).max() < tol:
        return complex(mu)
    return None


def cmc_family_shift(params: tuple[float, float], r: float):
    """CMC associated family (C, H) -> (C + r, H + r)."""
    C, H = params
    return (C + r, H + r)


def elastic_residual(kind: str, kappa: np.ndarray, lam1: float, lam2: float,
                     dy: float) -> float:
    """Max defect of the elastic-curve equation over interior samples.

    hyperbolic: kappa'' + kappa^3/2 - kappa = lam1 kappa
    sphere:     kappa'' + kappa^3/2 + 2 kappa = lam1 kappa + lam2
    """
    kappa = np.asarray(kappa, dtype=float)
    if len(kappa) < 5:
        raise ValueError("need at least 5 samples")
    kpp = (kappa[:-2] - 2 * kappa[1:-1] + kappa[2:]) / dy**2
    k = kappa[1:-1]
    if kind == "hyperbolic":
        res = kpp + 0.5 * k**3 - k - lam1 * k
    elif kind == "sphere":
        res = kpp + 0.5 * k**3 + 2 * k - lam1 * k - lam2
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return float(np.abs(res).max())


def _fd_derivative(arr: np.ndarray, dy: float, periodic: bool) -> np.ndarray:
    """4th-order first derivative (one-sided 2nd order at open ends)."""
    if periodic:
        return (-np.roll(arr, -2) + 8 * np.roll(arr, -1)
                - 8 * np.roll(arr, 1) + np.roll(arr, 2)) / (12 * dy)
    out = np.empty_like(arr)
    out[2:-2] = (-arr[4:] + 8 * arr[3:-1] - 8 * arr[1:-3] + arr[:-4]) / (12 * dy)
    out[0] = (-3 * arr[0] + 4 * arr[1] - arr[2]) / (2 * dy)
    out[1] = (arr[2] - arr[0]) / (2 * dy)
    out[-2] = (arr[-1] - arr[-3]) / (2 * dy)
    out[-1] = (3 * arr[-1] - 4 * arr[-2] + arr[-3]) / (2 * dy)
    return out


def trajectory_from_samples(y: np.ndarray, q: np.ndarray,
                            r: np.ndarray | None = None,
                            params: ELParams | None = None) -> Trajectory:
    """Trajectory from raw uniform q samples; derivatives by finite
    differences (periodic stencils when the endpoints match)."""
    y = np.asarray(y, dtype=float)
    q = np.asarray(q, dtype=complex)
    if len(y) < 5:
        raise ValueError("need at least 5 samples")
    dy = y[1] - y[0]
    if not np.allclose(np.diff(y), dy, rtol=1e-8, atol=1e-12):
        raise ValueError("samples not uniformly spaced")
    periodic = bool(abs(q[0] - q[-1]) < 1e-9)
    if periodic:
        core = q[:-1]

        def diff(arr):
            d = _fd_derivative(arr, dy, periodic=True)
            return d
        qp_c = diff(core)
        qpp_c = diff(qp_c)
        qppp_c = diff(qpp_c)
        qp = np.append(qp_c, qp_c[0])
        qpp = np.append(qpp_c, qpp_c[0])
        qppp = np.append(qppp_c, qppp_c[0])
    else:
        qp = _fd_derivative(q, dy, periodic=False)
        qpp = _fd_derivative(qp, dy, periodic=False)
        qppp = _fd_derivative(qpp, dy, periodic=False)
    if r is None:
        r = np.zeros(len(y))
    return Trajectory(y, q, qp, qpp, qppp, np.asarray(r, dtype=float),
                      float(dy), params)


def find_period(traj: Trajectory, tol: float = 1e-5) -> float:
    """First return time of the full jet (q, q', r) to its initial value.

    Locates local minima of the state distance and refines them with a
    parabola through the neighbouring samples; a minimum qualifies when
    the refined distance is below tol (relative to the state scale).
    """
    d2 = (np.abs(traj.q - traj.q[0]) ** 2 + np.abs(traj.qp - traj.qp[0]) ** 2
          + (traj.r - traj.r[0]) ** 2)
    scale2 = max(1.0, float(np.abs(traj.q).max() ** 2
                            + np.abs(traj.qp).max() ** 2))
    # skip the initial segment until the state has clearly escaped
    escaped = np.nonzero(d2 > 1e-4 * scale2)[0]
    if len(escaped) == 0:
        # constant trajectory: any length is a period
        return float(traj.length)
    k0 = int(escaped[0])
    for i in range(max(k0, 1) + 1, len(d2) - 1):
        if d2[i] <= d2[i - 1] and d2[i] < d2[i + 1]:
            a, b, c = d2[i - 1], d2[i], d2[i + 1]
            denom = a - 2 * b + c
            t = 0.5 * (a - c) / denom if denom > 0 else 0.0
            t = min(max(t, -1.0), 1.0)
            val = b - 0.25 * (a - c) * t if denom > 0 else b
            if val < (tol**2) * scale2:
                return float(traj.y[i] + t * traj.step - traj.y[0])
    raise ValueError("no period found within the trajectory")
