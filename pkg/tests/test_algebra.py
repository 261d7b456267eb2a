import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ewlab.algebra import (CPoly, DegeneratePolynomialError, QUAT_I, QUAT_J,
                           QUAT_K, QUAT_ONE, Quaternion, commutator, det2,
                           mat2, poly_odd_order_roots, poly_roots, quat_mul,
                           tr2)

finite = st.floats(min_value=-10, max_value=10, allow_nan=False,
                   allow_infinity=False)
quat = st.builds(Quaternion, finite, finite, finite, finite)


def test_quaternion_units():
    assert QUAT_I * QUAT_I == -QUAT_ONE
    assert QUAT_J * QUAT_J == -QUAT_ONE
    assert QUAT_K * QUAT_K == -QUAT_ONE
    assert QUAT_I * QUAT_J == QUAT_K
    assert QUAT_J * QUAT_K == QUAT_I
    assert QUAT_K * QUAT_I == QUAT_J
    assert QUAT_J * QUAT_I == -QUAT_K


def test_quaternion_conjugate_norm():
    q = Quaternion(1, 2, 3, 4)
    prod = q * q.conj()
    assert prod.w == pytest.approx(q.norm() ** 2)
    assert (prod.x, prod.y, prod.z) == (0, 0, 0)


@given(quat, quat)
@settings(max_examples=50, deadline=None)
def test_norm_multiplicative(p, q):
    assert (p * q).norm() == pytest.approx(p.norm() * q.norm(), abs=1e-6)


@given(quat, quat, quat)
@settings(max_examples=50, deadline=None)
def test_mul_associative(p, q, r):
    lhs = ((p * q) * r).as_array()
    rhs = (p * (q * r)).as_array()
    assert np.allclose(lhs, rhs, atol=1e-6)


def test_complex_split_roundtrip():
    q = Quaternion(1.5, -2.0, 0.25, 3.0)
    p1, p2 = q.complex_split()
    assert p1 == 1.5 - 2.0j
    assert p2 == 0.25 - 3.0j
    assert Quaternion.from_complex_split(p1, p2) == q


def test_split_respects_left_i_multiplication():
    # i * (p1 + j p2) = (i p1) + j (conj? no: -i p2)... check concretely
    q = Quaternion(0.3, 0.7, -0.2, 0.9)
    p1, p2 = q.complex_split()
    ip1, ip2 = (QUAT_I * q).complex_split()
    assert ip1 == pytest.approx(1j * p1)
    assert ip2 == pytest.approx(-1j * p2)


def test_quat_mul_matches_operator():
    p = Quaternion(0.5, -1.0, 0.25, 2.0)
    q = Quaternion(1.0, 2.0, 3.0, 4.0)
    assert np.allclose(quat_mul(p, q).as_array(), (p * q).as_array())


def test_mat2_helpers():
    A = mat2(1, 2, 3, 4)
    B = mat2(0, 1, -1, 0)
    assert det2(A) == pytest.approx(-2)
    assert tr2(A) == pytest.approx(5)
    assert np.allclose(commutator(A, B), A @ B - B @ A)


def test_cpoly_eval_and_derivative():
    p = CPoly([1.0, 2.0, 3.0])  # 1 + 2a + 3a^2
    assert p(2.0) == pytest.approx(17.0)
    assert p.degree == 2
    d = p.derivative()
    assert np.allclose(d.coeffs[: d.degree + 1], [2.0, 6.0])


def test_cpoly_product():
    p = CPoly([1.0, 1.0]) * CPoly([1.0, -1.0])
    assert np.allclose(p.coeffs, [1.0, 0.0, -1.0])


def test_cpoly_degree_truncates_noise():
    assert CPoly([1.0, 1e-14]).degree == 0


def test_poly_roots_simple_pair():
    roots = poly_roots(CPoly([1.0, 0.0, 1.0]))  # 1 + a^2
    assert len(roots) == 2
    assert sorted(m for _, m in roots) == [1, 1]
    vals = sorted(z.imag for z, _ in roots)
    assert vals == pytest.approx([-1.0, 1.0], abs=1e-9)


def test_poly_roots_multiplicity():
    # a^2 (a^2 + 1): double root at 0, simple at +-i
    roots = poly_roots(CPoly([0.0, 0.0, 1.0, 0.0, 1.0]))
    mults = {np.round(z, 6): m for z, m in roots}
    assert mults[0j] == 2
    odd = poly_odd_order_roots(CPoly([0.0, 0.0, 1.0, 0.0, 1.0]))
    assert len(odd) == 2
    assert all(abs(abs(z) - 1) < 1e-8 for z in odd)


def test_poly_roots_triple():
    # (a - 1)^3
    p = CPoly([-1.0, 3.0, -3.0, 1.0])
    roots = poly_roots(p)
    assert len(roots) == 1
    z, m = roots[0]
    assert m == 3
    assert z == pytest.approx(1.0, abs=1e-4)


def test_poly_roots_degenerate():
    with pytest.raises(DegeneratePolynomialError):
        poly_roots(CPoly([3.0]))


@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False,
                                   allow_infinity=False),
                min_size=1, max_size=5))
@settings(max_examples=30, deadline=None)
def test_poly_roots_reconstruct(zs):
    # product of (a - z_k) has exactly those roots with multiplicity
    coeffs = np.array([1.0 + 0j])
    for z in zs:
        coeffs = np.convolve(coeffs, np.array([-z, 1.0]))
    roots = poly_roots(CPoly(coeffs), tol=1e-6)
    assert sum(m for _, m in roots) == len(zs)
