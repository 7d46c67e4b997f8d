import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from staglab.arnoldi import arnoldi_init, arnoldi_step, matvec
from staglab.errors import ExhaustedSpaceError, ZeroRhsError

from conftest import crandn

A_EX = np.array([[1, 1, 1], [1, 0, 1], [0, 1, 1]], dtype=float)


def run(A, b, steps):
    st_ = arnoldi_init(matvec(A), b)
    for _ in range(steps):
        st_ = arnoldi_step(st_)
    return st_


def test_example_hessenberg():
    dec = run(A_EX, np.array([1.0, 0, 0]), 2)
    np.testing.assert_allclose(dec.htilde(2), [[1, 1], [1, 0], [0, 1]], atol=1e-15)
    np.testing.assert_allclose(dec.V(3), np.eye(3), atol=1e-15)
    assert dec.beta == 1.0 and not dec.breakdown


def test_zero_rhs():
    with pytest.raises(ZeroRhsError):
        arnoldi_init(matvec(np.eye(2)), np.zeros(2))


def test_identity_breaks_down_at_once():
    dec = run(np.eye(4), np.ones(4), 1)
    assert dec.breakdown
    assert dec.subdiag(1) == 0.0
    assert dec.basis.shape == (4, 1)
    with pytest.raises(ExhaustedSpaceError):
        arnoldi_step(dec)


def test_cyclic_shift_basis_is_unit_vectors():
    S = np.roll(np.eye(4), 1, axis=0)
    dec = run(S, np.array([1.0, 0, 0, 0]), 4)
    np.testing.assert_allclose(np.abs(dec.V(4)), np.eye(4), atol=1e-15)
    np.testing.assert_allclose(np.diag(dec.H(4), -1), np.ones(3))
    with pytest.raises(ExhaustedSpaceError):
        arnoldi_step(dec)


def test_bad_operator_shape():
    dec = arnoldi_init(lambda v: np.ones(3), np.ones(2))
    with pytest.raises(ValueError):
        arnoldi_step(dec)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 10), seed=st.integers(0, 2**32 - 1))
def test_arnoldi_relation_property(n, seed):
    rng = np.random.default_rng(seed)
    A, b = crandn(rng, n, n), crandn(rng, n)
    dec = arnoldi_init(matvec(A), b)
    while not dec.breakdown and dec.steps < n:
        dec = arnoldi_step(dec)
    m = dec.steps
    V = dec.basis
    assert np.linalg.norm(V.conj().T @ V - np.eye(V.shape[1])) <= 1e-12 * n
    assert np.linalg.norm(A @ V[:, :m] - V @ dec.hessenberg_ext[: V.shape[1]]) <= 1e-12 * n * np.linalg.norm(A)
    sub = np.diag(dec.hessenberg_ext[: m + 1, :m], -1)
    assert np.all(sub.imag == 0) and np.all(sub.real >= 0)
