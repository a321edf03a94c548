import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracle
from polsar_regions import linalg
from polsar_regions.errors import (
    DimensionMismatchError,
    DomainError,
    NotPositiveDefiniteError,
    SingularMatrixError,
)
from polsar_regions.scenes import preset


def random_hpd(rng, q=3, scale=1.0):
    a = rng.standard_normal((q, q)) + 1j * rng.standard_normal((q, q))
    return scale * (a @ a.conj().T + q * np.eye(q))


@st.composite
def hpd_matrices(draw, q=3):
    seed = draw(st.integers(0, 2**32 - 1))
    scale = draw(st.floats(1e-4, 1e2))
    return random_hpd(np.random.default_rng(seed), q, scale)


def test_det_identity():
    assert linalg.det(linalg.identity(3)) == 1 + 0j


def test_det_diagonal_is_product():
    d = np.diag([2.98e-3, 3.40e-4, 1.19e-2]).astype(complex)
    assert linalg.det(d).real == pytest.approx(1.2058e-8, rel=1e-4)
    assert linalg.det(d).real == pytest.approx(2.98e-3 * 3.40e-4 * 1.19e-2, rel=1e-14)


def test_det_river_matches_cofactor_oracle():
    ref = oracle.det(oracle.preset_matrix("River"))
    got = linalg.det(preset("River").sigma)
    assert got.real == pytest.approx(float(oracle.mp.re(ref)), rel=1e-10)
    assert abs(got.imag) < 1e-20


def test_inverse_identity_and_diagonal():
    np.testing.assert_array_equal(linalg.inverse(linalg.identity(3)), linalg.identity(3))
    d = np.diag([2.0, 4.0, 8.0]).astype(complex)
    np.testing.assert_allclose(linalg.inverse(d), np.diag([0.5, 0.25, 0.125]), rtol=0, atol=1e-15)


def test_inverse_caatinga_residual():
    s = preset("Caatinga").sigma
    residual = np.linalg.norm(s @ linalg.inverse(s) - np.eye(3))
    assert residual < 1e-10


def test_inverse_is_hermitian():
    s = preset("Corn 1").sigma
    inv = linalg.inverse(s)
    np.testing.assert_array_equal(inv, inv.conj().T)


def test_inverse_singular_raises():
    s = np.array([[1, 1], [1, 1]], dtype=complex)
    with pytest.raises(SingularMatrixError):
        linalg.inverse(s)
    assert linalg.is_singular(s)
    assert linalg.rcond(np.zeros((2, 2))) == 0.0


def test_trace_cases():
    assert linalg.trace(linalg.identity(4)) == 4
    # 2.98e-3 + 3.40e-4 + 1.19e-2
    assert linalg.trace(preset("River").sigma).real == pytest.approx(1.522e-2, rel=1e-12)


@given(hpd_matrices())
@settings(max_examples=50, deadline=None)
def test_trace_of_inverse_product_is_q(a):
    assert linalg.trace(linalg.inverse(a) @ a).real == pytest.approx(3, rel=1e-10)


def test_matmul_identities():
    a = preset("Tillage").sigma
    np.testing.assert_array_equal(linalg.matmul(a, linalg.identity(3)), a)
    np.testing.assert_array_equal(linalg.matmul(np.diag([2, 3]), np.diag([5, 7])), np.diag([10, 21]))
    with pytest.raises(DimensionMismatchError):
        linalg.matmul(np.eye(2), np.eye(3))


def test_matmul_trace_river_caatinga_against_oracle():
    a, b = preset("River").sigma, preset("Caatinga").sigma
    got = linalg.trace(linalg.matmul(linalg.inverse(a), b)).real
    ref = oracle.tr(oracle.inv(oracle.mpmatrix(a)) * oracle.mpmatrix(b))
    assert got == pytest.approx(float(oracle.mp.re(ref)), rel=1e-10)


def test_cholesky_simple_cases():
    np.testing.assert_array_equal(linalg.cholesky_hpd(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(linalg.cholesky_hpd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_cholesky_tillage_reconstruction():
    s = preset("Tillage").sigma
    f = linalg.cholesky_hpd(s)
    assert np.linalg.norm(f @ f.conj().T - s) / np.linalg.norm(s) < 1e-12


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefiniteError):
        linalg.cholesky_hpd(np.diag([1.0, -1.0]))


@given(hpd_matrices())
@settings(max_examples=50, deadline=None)
def test_logdet_agrees_with_det(a):
    assert linalg.logdet_hpd(a) == pytest.approx(np.log(linalg.det(a).real), rel=1e-10, abs=1e-10)
    assert linalg.logabsdet(a) == pytest.approx(linalg.logdet_hpd(a), rel=1e-10, abs=1e-10)


def test_hermitian_symmetrizes_and_validates():
    m = linalg.hermitian([[1, 2 + 1j], [2 - 1j + 1e-17j, 3]])
    np.testing.assert_array_equal(m, m.conj().T)
    with pytest.raises(DomainError):
        linalg.hermitian([[np.nan, 0], [0, 1]])
    with pytest.raises(DomainError):
        linalg.hermitian([[-1, 0], [0, 1]])
    with pytest.raises(DimensionMismatchError):
        linalg.hermitian([[1, 2, 3]])


def test_from_upper_layout():
    m = linalg.from_upper([1, 2, 3], [1j, 2, 3 - 1j])
    assert m[0, 1] == 1j and m[1, 0] == -1j
    assert m[1, 2] == 3 - 1j and m[2, 1] == 3 + 1j
    with pytest.raises(DimensionMismatchError):
        linalg.from_upper([1, 2], [1, 2])


def test_batched_operations():
    rng = np.random.default_rng(3)
    stack = np.stack([random_hpd(rng) for _ in range(5)])
    assert linalg.det(stack).shape == (5,)
    assert linalg.inverse(stack).shape == (5, 3, 3)
    assert linalg.is_singular(stack).shape == (5,)
