"""Profile-curve reconstruction, torus meshing, closure and energy.

The profile curve solves the frame ODE

    gamma'' = (sqrt h)' T + h kappa_{S3} N - h gamma,
    kappa_{S3} = (4 Re q + (2 l1 l2 / sqrt h) <N, i gamma i>) / sqrt h,

closed algebraically in (gamma, gamma') plus Re q.  The torus is the
orbit f(x, y) = e^{i l1 x} gamma(y) e^{i l2 x}; on the complex split
gamma = p1 + j p2 the action is p1 -> e^{i m x} p1, p2 -> e^{-i n x} p2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import minimize_scalar

from . import kernels
from .algebra import Quaternion
from .elflow import Trajectory
from .seifert import CurveSampleS3, SeifertType, SingularFiberError

CLOSURE_TOL = 1e-6


class ReconstructionDivergedError(RuntimeError):
    pass


class MonodromyError(ValueError):
    pass


def _split(v: np.ndarray):
    """Complex split p1 = w + ix, p2 = y - iz along the last axis."""
    return v[..., 0] + 1j * v[..., 1], v[..., 2] - 1j * v[..., 3]


def _unsplit(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    return np.stack([p1.real, p1.imag, p2.real, -p2.imag], axis=-1)


def _h_of(v: np.ndarray, st: SeifertType) -> np.ndarray:
    p1, p2 = _split(v)
    return st.m**2 * np.abs(p1) ** 2 + st.n**2 * np.abs(p2) ** 2


def apply_action(v: np.ndarray, st: SeifertType, theta) -> np.ndarray:
    """e^{i l1 theta} v e^{i l2 theta} on quaternion 4-vectors."""
    p1, p2 = _split(v)
    return _unsplit(p1 * np.exp(1j * st.m * np.asarray(theta)),
                    p2 * np.exp(-1j * st.n * np.asarray(theta)))


@dataclass(frozen=True)
class ProfileCurve:
    """Sampled horizontal profile curve gamma(y) with velocity."""

    gamma: np.ndarray  # (n, 4)
    dgamma: np.ndarray  # (n, 4)
    y: np.ndarray
    st: SeifertType
    source: Trajectory | None = None

    def __len__(self) -> int:
        return len(self.y)

    @property
    def step(self) -> float:
        return float(self.y[1] - self.y[0])

    def sample(self, i: int) -> CurveSampleS3:
        return CurveSampleS3(Quaternion.from_array(self.gamma[i]),
                             Quaternion.from_array(self.dgamma[i]),
                             float(self.y[i]))

    def samples(self):
        return [self.sample(i) for i in range(len(self.y))]

    @property
    def closed(self) -> bool:
        return bool(np.linalg.norm(self.gamma[0] - self.gamma[-1]) < CLOSURE_TOL
                    and np.linalg.norm(self.dgamma[0] - self.dgamma[-1])
                    < CLOSURE_TOL)


@dataclass(frozen=True)
class TorusMesh:
    """Quad mesh of the equivariant torus in S^3."""

    vertices: np.ndarray  # (n_x, n_y, 4)
    faces: np.ndarray  # (n_faces, 4) flat vertex indices
    st: SeifertType
    x: np.ndarray
    y: np.ndarray
    wrap_y: bool


def init_profile(q0: complex, st: SeifertType, branch: str = "plus",
                 h0: float | None = None) -> CurveSampleS3:
    """Deterministic initial sample compatible with q(0).

    For mn != 0 the speed is pinned by Im q0 through
    h0 = (mn / (2 Im q0))^2, which must lie between min(m,n)^2 and
    max(m,n)^2; for mn = 0 the caller supplies h0.
    """
    m, n = st.m, st.n
    if m * n != 0:
        if q0.imag <= 0:
            raise ValueError("incompatible Im q for (m,n)")
        h0 = (m * n / (2 * q0.imag)) ** 2
        lo, hi = min(m * m, n * n), max(m * m, n * n)
        if not (lo - 1e-12 <= h0 <= hi + 1e-12):
            raise ValueError("incompatible Im q for (m,n)")
        h0 = min(max(h0, lo), hi)
    elif h0 is None:
        raise ValueError("h0 required when mn = 0")

    if m == n:
        cos2 = 1.0
    else:
        cos2 = (h0 - n * n) / (m * m - n * n)
        cos2 = min(max(cos2, 0.0), 1.0)
    ct = math.sqrt(cos2)
    st_ = math.sqrt(1.0 - cos2)
    gam = np.array([ct, 0.0, st_, 0.0])

    # horizontal unit directions: orthogonal to gamma and the fiber B
    p1, p2 = _split(gam)
    sh = math.sqrt(st.m**2 * abs(p1) ** 2 + st.n**2 * abs(p2) ** 2)
    b = np.array([-st.l1 * gam[1] - st.l2 * gam[1],
                  st.l1 * gam[0] + st.l2 * gam[0],
                  -st.l1 * gam[3] + st.l2 * gam[3],
                  st.l1 * gam[2] - st.l2 * gam[2]]) / sh
    t = None
    for cand in (np.array([0.0, 0.0, 0.0, 1.0]), np.array([0.0, 0.0, 1.0, 0.0]),
                 np.array([0.0, 1.0, 0.0, 0.0])):
        v = cand - (cand @ gam) * gam - (cand @ b) * b
        if np.linalg.norm(v) > 1e-6:
            t = v / np.linalg.norm(v)
            break
    assert t is not None
    if branch == "minus":
        t = -t
    elif branch != "plus":
        raise ValueError("branch must be 'plus' or 'minus'")
    return CurveSampleS3(Quaternion.from_array(gam),
                         Quaternion.from_array(sh * t), 0.0)


def integrate_profile(traj: Trajectory, st: SeifertType,
                      init: CurveSampleS3, step: float | None = None,
                      length: float | None = None) -> ProfileCurve:
    """Frame-ODE reconstruction of gamma over the trajectory's range."""
    if step is None:
        step = traj.step
    if length is None:
        length = traj.length
    if st.m * st.n != 0:
        q0 = complex(traj.q[0])
        h0 = init.dgamma.dot(init.dgamma)
        want = st.m * st.n / (2 * q0.imag) if q0.imag > 0 else float("inf")
        if not np.isfinite(want) or abs(math.sqrt(h0) - want) > 1e-5 * want:
            raise ValueError("initial sample inconsistent with q(0)")

    n = int(round(length / step))
    dt = length / n
    ys_half = traj.y[0] + 0.5 * dt * np.arange(2 * n + 1)
    re_q_half = traj.q_at(ys_half).real
    try:
        gam, dgam = kernels.profile_rk4(init.gamma.as_array(),
                                        init.dgamma.as_array(),
                                        re_q_half, st.m, st.n, dt)
    except ZeroDivisionError as exc:
        raise SingularFiberError(str(exc)) from exc
    except OverflowError as exc:
        raise ReconstructionDivergedError(str(exc)) from exc
    ys = traj.y[0] + dt * np.arange(n + 1)
    return ProfileCurve(gam, dgam, ys, st, traj)


def curve_invariants(curve: ProfileCurve) -> dict:
    """Max defects of the unit-norm, conformality and Im-q couplings."""
    norms = np.linalg.norm(curve.gamma, axis=1)
    h = _h_of(curve.gamma, curve.st)
    speed2 = np.einsum("ij,ij->i", curve.dgamma, curve.dgamma)
    out = {
        "unit_norm": float(np.abs(norms - 1.0).max()),
        "conformality": float(np.abs(speed2 - h).max() / h.min()),
    }
    if curve.st.m * curve.st.n != 0 and curve.source is not None:
        q = curve.source.q_at(curve.y)
        coupling = np.abs(np.sqrt(h) - curve.st.m * curve.st.n
                          / (2 * q.imag)) / np.sqrt(h)
        out["im_q_coupling"] = float(coupling.max())
    return out


def _monodromy_residual(curve: ProfileCurve, theta: float) -> float:
    g0 = apply_action(curve.gamma[0], curve.st, theta)
    d0 = apply_action(curve.dgamma[0], curve.st, theta)
    return float(np.linalg.norm(curve.gamma[-1] - g0) ** 2
                 + np.linalg.norm(curve.dgamma[-1] - d0) ** 2)


def rotation_convergents(theta: float, max_den: int = 64):
    """Continued-fraction convergents of theta / (2 pi)."""
    x = (theta / (2 * math.pi)) % 1.0
    out = []
    frac = Fraction(x).limit_denominator(1)
    for den in range(1, max_den + 1):
        cand = Fraction(x).limit_denominator(den)
        if not out or cand != out[-1]:
            out.append(cand)
        frac = cand
    _ = frac
    # deduplicate while keeping increasing accuracy
    uniq = []
    for f in out:
        if not uniq or abs(float(f) - x) < abs(float(uniq[-1]) - x):
            if not uniq or f != uniq[-1]:
                uniq.append(f)
    return [(f.numerator, f.denominator) for f in uniq]


def profile_monodromy(curve: ProfileCurve) -> tuple[float, float]:
    """Fiber-rotation angle theta relating gamma(L) to gamma(0).

    Minimizes the endpoint defect over theta in [0, 2pi); raises if the
    minimum is not a genuine fiber rotation.
    """
    grid = np.linspace(0.0, 2 * math.pi, 2048, endpoint=False)
    vals = [_monodromy_residual(curve, t) for t in grid]
    k = int(np.argmin(vals))
    lo = grid[k] - 2 * math.pi / 2048
    hi = grid[k] + 2 * math.pi / 2048
    res = minimize_scalar(lambda t: _monodromy_residual(curve, t),
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-14})
    theta = float(res.x) % (2 * math.pi)
    residual = float(math.sqrt(max(res.fun, 0.0)))
    if residual > 1e-3:
        raise MonodromyError("monodromy not a fiber rotation")
    return theta, residual


def build_torus_mesh(curve: ProfileCurve, n_x: int) -> TorusMesh:
    """Vertex grid f(x_i, y_j) of the orbit torus with quad faces."""
    if n_x < 8:
        raise ValueError("n_x must be >= 8")
    xs = 2 * math.pi * np.arange(n_x) / n_x
    wrap_y = curve.closed
    gam = curve.gamma[:-1] if wrap_y else curve.gamma
    ys = curve.y[:-1] if wrap_y else curve.y
    n_y = len(gam)
    verts = np.empty((n_x, n_y, 4))
    for i, x in enumerate(xs):
        verts[i] = apply_action(gam, curve.st, x)

    faces = []
    jmax = n_y if wrap_y else n_y - 1
    for i in range(n_x):
        i2 = (i + 1) % n_x
        for j in range(jmax):
            j2 = (j + 1) % n_y
            faces.append((i * n_y + j, i2 * n_y + j,
                          i2 * n_y + j2, i * n_y + j2))
    return TorusMesh(verts, np.array(faces, dtype=int), curve.st,
                     xs, ys, wrap_y)


def _mesh_mean_curvature(mesh: TorusMesh, curve: ProfileCurve):
    """Discrete H, conformal factor h and cell area weights."""
    v = mesh.vertices
    n_x, n_y = v.shape[:2]
    dx = 2 * math.pi / n_x
    dy = curve.step

    # surface normal along the profile, rotated by the action
    from .seifert import surface_normal
    n0 = np.array([surface_normal(
        CurveSampleS3(Quaternion.from_array(curve.gamma[j]),
                      Quaternion.from_array(curve.dgamma[j]),
                      float(curve.y[j])), curve.st).as_array()
        for j in range(n_y)])
    N = np.empty_like(v)
    for i, x in enumerate(mesh.x):
        N[i] = apply_action(n0, curve.st, x)

    fxx = (np.roll(v, -1, axis=0) - 2 * v + np.roll(v, 1, axis=0)) / dx**2
    if mesh.wrap_y:
        fyy = (np.roll(v, -1, axis=1) - 2 * v + np.roll(v, 1, axis=1)) / dy**2
        sl = slice(None)
    else:
        fyy = np.empty_like(v)
        fyy[:, 1:-1] = (v[:, 2:] - 2 * v[:, 1:-1] + v[:, :-2]) / dy**2
        sl = slice(1, -1)
    h = _h_of(v, mesh.st)
    H = np.einsum("ijk,ijk->ij", fxx[:, sl] + fyy[:, sl], N[:, sl]) \
        / (2 * h[:, sl])
    return H, h[:, sl], dx, dy


def willmore_energy(traj: Trajectory, curve: ProfileCurve | None = None,
                    mesh: TorusMesh | None = None):
    """(W_curve, W_mesh): 16 pi int |q|^2 dy, and the discrete
    int (H^2 + 1) dA over the mesh when one is given."""
    w_curve = float(16 * math.pi * simpson(np.abs(traj.q) ** 2, x=traj.y))
    w_mesh = None
    if mesh is not None:
        if curve is None:
            raise ValueError("mesh energy needs the profile curve")
        H, h, dx, dy = _mesh_mean_curvature(mesh, curve)
        w_mesh = float(np.sum((H**2 + 1.0) * h) * dx * dy)
    return w_curve, w_mesh


def export_obj(mesh: TorusMesh, path: str, header: dict | None = None):
    """OBJ export through stereographic projection from (0,0,0,1).

    If a vertex sits within 1e-3 of the pole, the (w, z)-plane is rotated
    until clear and the angle recorded in the header.
    """
    v = mesh.vertices.reshape(-1, 4)
    pole = np.array([0.0, 0.0, 0.0, 1.0])
    if np.linalg.norm(v - pole, axis=1).min() <= 1e-3:
        # pick a deterministic pole away from the surface
        rng = np.random.default_rng(0)
        cands = rng.normal(size=(256, 4))
        cands /= np.linalg.norm(cands, axis=1, keepdims=True)
        dists = np.array([np.linalg.norm(v - c, axis=1).min() for c in cands])
        pole = cands[int(np.argmax(dists))]
        if dists.max() <= 1e-3:
            raise ValueError("no pole-free rotation found")
    if np.allclose(pole, [0, 0, 0, 1]):
        rot = np.eye(4)
    else:
        # orthogonal frame with the chosen pole as its last axis
        basis = [pole]
        for e in np.eye(4):
            w = e - sum((e @ b) * b for b in basis)
            if np.linalg.norm(w) > 1e-6:
                basis.append(w / np.linalg.norm(w))
        rot = np.array([basis[1], basis[2], basis[3], basis[0]])
    v = v @ rot.T

    proj = v[:, :3] / (1.0 - v[:, 3:4])
    lines = [f"# ewlab torus mesh (m,n)=({mesh.st.m},{mesh.st.n})",
             "# projection pole " + " ".join("%.17g" % x for x in pole)]
    for key, val in (header or {}).items():
        lines.append(f"# {key} {val}")
    for p in proj:
        lines.append("v %.17g %.17g %.17g" % tuple(p))
    for f in mesh.faces:
        lines.append("f %d %d %d %d" % tuple(int(i) + 1 for i in f))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def export_curve_csv(curve: ProfileCurve, path: str):
    """CSV columns: y, gamma components, Re q, Im q, h."""
    h = _h_of(curve.gamma, curve.st)
    if curve.source is not None:
        q = curve.source.q_at(curve.y)
    else:
        q = np.zeros(len(curve.y), dtype=complex)
    with open(path, "w") as fh:
        fh.write("y,gamma_w,gamma_x,gamma_y,gamma_z,re_q,im_q,h\n")
        for i in range(len(curve.y)):
            row = (curve.y[i], *curve.gamma[i], q[i].real, q[i].imag, h[i])
            fh.write(",".join("%.17g" % x for x in row) + "\n")
