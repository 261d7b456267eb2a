import numpy as np
import pytest

from ewlab.elflow import (DegenerateImmersionError, ELParams, HopfJet,
                          first_integral, integrate_el)
from ewlab.killing import (GenusConstants, UnidentifiableConstantsError,
                           build_killing_field, connection_matrix,
                           constants_from_el, fit_constants, flow_residuals,
                           genus_classify, integrate_flow, lax_residual,
                           trajectory_flow_residuals)
from conftest import EL_JET, EL_PARAMS, make_constant_trajectory


def test_build_field_genus0_hopf():
    # constant q = i/2: X(a) = diag(-i,i) a + offdiag(2i conj(q), 2i q)
    X = build_killing_field(HopfJet(0.5j, 0.0), GenusConstants(), 0)
    assert X.coeffs.shape == (2, 2, 2)
    got = X(2.0)
    want = np.array([[-2j, 1.0], [-1.0, 2j]])
    assert np.abs(got - want).max() < 1e-14


def test_build_field_traceless():
    X = build_killing_field(EL_JET, GenusConstants(0.1, 0.2, 0.3), 3)
    for k in range(X.coeffs.shape[0]):
        assert abs(np.trace(X.coeffs[k])) < 1e-14


def test_build_field_genus1_blocks():
    # at a real critical point (q' = 0): pi_0 = 0, beta_0 = -2q^2 - 2c
    c = 0.25
    X = build_killing_field(HopfJet(0.5, 0.0), GenusConstants(c=c), 1)
    blk = X.coeffs[0]
    assert abs(blk[0, 1]) < 1e-14 and abs(blk[1, 0]) < 1e-14
    assert blk[0, 0] == pytest.approx(-1j * (-2 * 0.25 - 2 * c))


def test_build_field_rejects_genus():
    with pytest.raises(ValueError, match="genus"):
        build_killing_field(EL_JET, GenusConstants(), 4)


def test_connection_matrix():
    L = connection_matrix(1.0 + 1.0j, 2.0j)
    assert np.abs(L - np.array([[2.0, 2j * (1 - 1j)],
                                [2j * (1 + 1j), -2.0]])).max() < 1e-15


def test_lax_residual_genus1(g1_traj):
    assert lax_residual(g1_traj, GenusConstants(c=0.25), 1) < 1e-9


def test_lax_residual_genus2(g2_traj):
    assert lax_residual(g2_traj, GenusConstants(c=0.1), 2) < 1e-9


def test_lax_residual_genus3(el_traj):
    dtilde = first_integral(el_traj.jet(0), EL_PARAMS)
    c, e = constants_from_el(EL_PARAMS, dtilde)
    assert lax_residual(el_traj, GenusConstants(c=c, e=e, dtilde=dtilde),
                        3) < 1e-9


def test_lax_residual_detects_wrong_constants(g1_traj):
    assert lax_residual(g1_traj, GenusConstants(c=1.0), 1) > 1e-2


def test_flow_residuals_keys():
    res = flow_residuals(EL_JET, GenusConstants())
    assert set(res) == {"g0", "g1", "g2", "g3", "sym1", "sym2", "sym3"}


def test_genus3_flow_holds_on_el(el_traj):
    dtilde = first_integral(el_traj.jet(0), EL_PARAMS)
    c, e = constants_from_el(EL_PARAMS, dtilde)
    res = trajectory_flow_residuals(el_traj, GenusConstants(c=c, e=e))
    assert res["g3"] < 1e-10
    assert res["sym3"] < 1e-10
    # but not the lower flows
    assert res["g1"] > 1e-2 and res["g2"] > 1e-2


def test_fit_constants_genus1(g1_traj):
    consts, rms = fit_constants(g1_traj, 1)
    assert consts.c == pytest.approx(0.25, abs=1e-8)
    assert rms < 1e-10


def test_fit_constants_genus2(g2_traj):
    consts, rms = fit_constants(g2_traj, 2)
    assert consts.c == pytest.approx(0.1, abs=1e-8)
    assert consts.d == pytest.approx(0.0, abs=1e-8)
    assert rms < 1e-10


def test_fit_constants_genus3_closed_loop(el_traj):
    dtilde = first_integral(el_traj.jet(0), EL_PARAMS)
    c_ref, e_ref = constants_from_el(EL_PARAMS, dtilde)
    consts, rms = fit_constants(el_traj, 3)
    assert consts.c == pytest.approx(c_ref, abs=1e-8)
    assert consts.e == pytest.approx(e_ref, abs=1e-8)
    assert rms < 1e-10


def test_fit_constants_unidentifiable_for_constant_q():
    traj = make_constant_trajectory(0.5j, 2.0, 500)
    with pytest.raises(UnidentifiableConstantsError):
        fit_constants(traj, 2)


def test_fit_constants_needs_samples():
    traj = make_constant_trajectory(0.5j, 1.0, 10)
    with pytest.raises(ValueError, match="too short"):
        fit_constants(traj, 1)


def test_constants_from_el_consistency(el_traj):
    # c = (8C - lam)/4 and e = -(dtilde + 8C^2 + 8cC)/2 must reproduce the
    # genus-3 flow exactly: cross-check c against the fitted one
    dtilde = first_integral(el_traj.jet(0), EL_PARAMS)
    c, e = constants_from_el(EL_PARAMS, dtilde)
    assert c == pytest.approx((8 * 0.1 - 1.0) / 4)
    with pytest.raises(ValueError, match="real"):
        constants_from_el(ELParams(1.0j, 0.0), 0.0)


def test_genus_classify_constant():
    traj = make_constant_trajectory(0.3 + 0.4j, 5.0, 600)
    label, ev = genus_classify(traj)
    assert label == 0
    assert "scale" in ev


def test_genus_classify_elastic(g1_traj):
    label, ev = genus_classify(g1_traj)
    assert label == 1
    assert ev["genus1"]["constants"].c == pytest.approx(0.25, abs=1e-6)


def test_genus_classify_hopf_type(g2_traj):
    label, _ = genus_classify(g2_traj)
    assert label == 2


def test_genus_classify_el_generic(el_traj):
    label, ev = genus_classify(el_traj)
    assert label == 3
    assert ev["genus2"]["g2"] > 1e-3  # genus 2 genuinely rejected


def test_genus_classify_degenerate():
    traj = make_constant_trajectory(0.0, 2.0, 300)
    with pytest.raises(DegenerateImmersionError):
        genus_classify(traj)


def test_integrate_flow_matches_el():
    # a real elastic solution of the EL equation with r = 0 solves the
    # genus-1 flow with c = C - lam/4
    params = ELParams(0.8, 0.2)
    jet = HopfJet(0.45, 0.0)
    el = integrate_el(jet, params, 6.0, 1e-3)
    c = params.C - 0.8 / 4
    flow = integrate_flow(1, 0.45, 0.0, 0.0, GenusConstants(c=c), 6.0, 1e-3)
    assert np.abs(el.q - flow.q).max() < 1e-9


def test_integrate_flow_validates():
    with pytest.raises(ValueError, match="genus 1 and 2"):
        integrate_flow(3, 0.5, 0.0, 0.0, GenusConstants(), 1.0, 1e-3)


def test_integrate_flow_blowup():
    with pytest.raises(OverflowError, match="blow-up"):
        integrate_flow(1, 1.0, 0.0, 0.0, GenusConstants(c=-50.0), 100.0, 0.5)
