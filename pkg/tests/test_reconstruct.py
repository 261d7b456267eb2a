import math

import numpy as np
import pytest

from ewlab.elflow import trajectory_from_samples
from ewlab.killing import GenusConstants, integrate_flow
from ewlab.reconstruct import (MonodromyError, ProfileCurve, apply_action,
                               build_torus_mesh, curve_invariants,
                               export_curve_csv, export_obj, init_profile,
                               integrate_profile, profile_monodromy,
                               rotation_convergents, willmore_energy)
from ewlab.seifert import SeifertType, hopf_differential_from_curve
from conftest import make_constant_trajectory

ST11 = SeifertType(1, 1)


@pytest.fixture(scope="module")
def clifford_curve(hopf_traj):
    init = init_profile(0.5j, ST11)
    return integrate_profile(hopf_traj, ST11, init)


def test_init_profile_pins_speed():
    # (2,1), Im q0 = 1/2: h0 = (mn / 2 Im q0)^2 = 4, gamma0 = 1
    s = init_profile(0.3 + 0.5j, SeifertType(2, 1))
    assert np.allclose(s.gamma.as_array(), [1, 0, 0, 0])
    assert s.dgamma.norm() == pytest.approx(2.0)
    s.validate()


def test_init_profile_rejects_bad_im_q():
    with pytest.raises(ValueError, match="incompatible Im q"):
        init_profile(0.1 + 2.0j, SeifertType(2, 1))  # h0 = 0.25 < 1
    with pytest.raises(ValueError, match="incompatible Im q"):
        init_profile(0.5 - 0.1j, ST11)
    with pytest.raises(ValueError, match="h0 required"):
        init_profile(0.5, SeifertType(1, 0))
    with pytest.raises(ValueError, match="branch"):
        init_profile(0.5j, ST11, branch="up")


def test_init_profile_branches():
    p = init_profile(0.5j, ST11, branch="plus")
    m = init_profile(0.5j, ST11, branch="minus")
    assert np.allclose(p.dgamma.as_array(), -m.dgamma.as_array())


def test_clifford_roundtrip(clifford_curve):
    # reconstruct the Clifford torus from q = i/2 and measure q back
    q = hopf_differential_from_curve(clifford_curve.samples(), ST11)
    assert np.abs(q - 0.5j).max() < 1e-8
    inv = curve_invariants(clifford_curve)
    assert inv["unit_norm"] < 1e-10
    assert inv["conformality"] < 1e-9
    assert inv["im_q_coupling"] < 1e-10
    # over length pi the curve closes only up to the fiber rotation
    assert not clifford_curve.closed


def test_revolution_roundtrip():
    # (1,0): real elastic potential, h0 chosen by the caller
    traj = integrate_flow(1, 0.4, 0.0, 0.0, GenusConstants(c=0.2),
                          4.0, 1e-3)
    st = SeifertType(1, 0)
    init = init_profile(complex(traj.q[0]), st, h0=0.25)
    curve = integrate_profile(traj, st, init)
    q = hopf_differential_from_curve(curve.samples(), st)
    assert np.abs(q.imag).max() < 1e-8  # revolution tori have real q
    assert np.abs(q - traj.q).max() < 1e-4
    # the reconstructed curve stays in the S^2 slice it started in
    assert np.abs(curve.gamma[:, 1]).max() < 1e-12


def test_mixed_type_roundtrip():
    # (2,1) curve-first: prescribe q, rebuild, measure
    st = SeifertType(2, 1)
    L = 3.0
    y = np.linspace(0.0, L, 3001)
    q = (0.12 * np.sin(2 * np.pi * y / L) + 0.05) + 0.8j
    traj = trajectory_from_samples(y, q)
    init = init_profile(complex(q[0]), st)
    curve = integrate_profile(traj, st, init)
    q_meas = hopf_differential_from_curve(curve.samples(), st)
    # the ODE propagates Re q; Im q is slaved to the fiber speed and only
    # its initial value is prescribed
    assert np.abs(q_meas.real - q.real).max() < 1e-4
    assert abs(q_meas[0].imag - 0.8) < 1e-6
    # rebuild the trajectory from the measured samples and reconstruct
    # again: the curve reproduces itself
    traj2 = trajectory_from_samples(y, q_meas)
    curve2 = integrate_profile(traj2, st,
                               init_profile(complex(q_meas[0]), st))
    assert np.abs(curve2.gamma - curve.gamma).max() < 1e-5


def test_integrate_profile_checks_coupling(hopf_traj):
    st = SeifertType(2, 1)
    bad = init_profile(0.5j + 0.0, ST11)  # unit speed, but (2,1) wants 2
    with pytest.raises(ValueError, match="inconsistent with q"):
        integrate_profile(hopf_traj, st, bad)


def test_apply_action_isometry(clifford_curve):
    g = apply_action(clifford_curve.gamma, ST11, 0.9)
    assert np.abs(np.linalg.norm(g, axis=1) - 1.0).max() < 1e-12
    # the action commutes with the reconstruction: measured q is unchanged
    rotated = ProfileCurve(g, apply_action(clifford_curve.dgamma, ST11, 0.9),
                           clifford_curve.y, ST11)
    q = hopf_differential_from_curve(rotated.samples(), ST11)
    assert np.abs(q - 0.5j).max() < 1e-8


def test_monodromy_hopf(clifford_curve):
    theta, residual = profile_monodromy(clifford_curve)
    assert theta == pytest.approx(math.pi, abs=1e-6)
    assert residual < 1e-6
    assert (1, 2) in rotation_convergents(theta)


def test_monodromy_rejects_open_endpoint():
    # a curve whose endpoint is off the fiber of gamma(0)
    st = SeifertType(1, 0)
    y = np.linspace(0, 1, 300)
    gam = np.stack([np.cos(y), np.zeros_like(y), np.sin(y),
                    np.zeros_like(y)], axis=1)
    dgam = np.stack([-np.sin(y), np.zeros_like(y), np.cos(y),
                     np.zeros_like(y)], axis=1)
    curve = ProfileCurve(gam, dgam, y, st)
    with pytest.raises(MonodromyError, match="fiber rotation"):
        profile_monodromy(curve)


def test_rotation_convergents():
    convs = rotation_convergents(2 * math.pi / 3)
    assert (1, 3) in convs
    convs = rotation_convergents(2 * math.pi * 0.381966)
    dens = [d for _, d in convs]
    assert dens == sorted(dens)  # increasing accuracy order


def test_mesh_counts_closed():
    # full great circle over 2 pi: endpoint-closed, so y wraps too
    y = np.linspace(0, 2 * np.pi, 201)
    gam = np.stack([np.cos(y), np.zeros_like(y), np.sin(y),
                    np.zeros_like(y)], axis=1)
    dgam = np.stack([-np.sin(y), np.zeros_like(y), np.cos(y),
                     np.zeros_like(y)], axis=1)
    curve = ProfileCurve(gam, dgam, y, ST11)
    assert curve.closed
    mesh = build_torus_mesh(curve, 8)
    assert mesh.wrap_y
    assert mesh.vertices.shape == (8, 200, 4)  # duplicate endpoint dropped
    assert len(mesh.faces) == 8 * 200
    with pytest.raises(ValueError, match="n_x"):
        build_torus_mesh(curve, 4)


def test_mesh_counts_open():
    st = SeifertType(1, 0)
    y = np.linspace(0, 1, 50)
    gam = np.stack([np.cos(y), np.zeros_like(y), np.sin(y),
                    np.zeros_like(y)], axis=1)
    curve = ProfileCurve(gam, gam, y, st)
    mesh = build_torus_mesh(curve, 8)
    assert not mesh.wrap_y
    assert mesh.vertices.shape == (8, 50, 4)
    assert len(mesh.faces) == 8 * 49


def test_energy_clifford(hopf_traj, clifford_curve):
    mesh = build_torus_mesh(clifford_curve, 64)
    w_curve, w_mesh = willmore_energy(hopf_traj, clifford_curve, mesh)
    assert w_curve == pytest.approx(4 * math.pi**2, rel=1e-10)
    assert w_mesh == pytest.approx(2 * math.pi**2, rel=1e-3)
    # the area-form convention factor between the two computations
    assert w_mesh / w_curve == pytest.approx(0.5, rel=1e-3)


def test_energy_zero_potential():
    traj = make_constant_trajectory(0.0, 2.0, 200)
    w_curve, w_mesh = willmore_energy(traj)
    assert w_curve == 0.0
    assert w_mesh is None
    with pytest.raises(ValueError, match="profile curve"):
        willmore_energy(traj, None, object())


def test_energy_scales_with_length():
    # q = i/2 over length L: W_curve = 4 pi L
    for L in (1.0, 2.5):
        traj = make_constant_trajectory(0.5j, L, 400)
        w_curve, _ = willmore_energy(traj)
        assert w_curve == pytest.approx(4 * math.pi * L, rel=1e-10)


def test_export_obj(tmp_path, clifford_curve):
    mesh = build_torus_mesh(clifford_curve, 8)
    path = tmp_path / "torus.obj"
    export_obj(mesh, str(path), header={"energy": 1.0})
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    assert any("energy" in ln for ln in lines if ln.startswith("#"))
    vlines = [ln for ln in lines if ln.startswith("v ")]
    flines = [ln for ln in lines if ln.startswith("f ")]
    assert len(vlines) == 8 * mesh.vertices.shape[1]
    assert len(flines) == len(mesh.faces)
    # all projected vertices finite (pole avoided)
    for ln in vlines:
        vals = [float(t) for t in ln.split()[1:]]
        assert all(np.isfinite(vals))
    # indices are 1-based and in range
    idx = [int(t) for ln in flines for t in ln.split()[1:]]
    assert min(idx) == 1 and max(idx) == len(vlines)


def test_export_curve_csv(tmp_path, clifford_curve):
    path = tmp_path / "curve.csv"
    export_curve_csv(clifford_curve, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "y,gamma_w,gamma_x,gamma_y,gamma_z,re_q,im_q,h"
    assert len(lines) == 1 + len(clifford_curve)
    row = lines[1].split(",")
    assert len(row) == 8
    assert float(row[6]) == pytest.approx(0.5)  # Im q
    assert float(row[7]) == pytest.approx(1.0)  # h
    # 17 significant digits survive a write/read roundtrip
    assert float(lines[2].split(",")[1]) == clifford_curve.gamma[1, 0]
