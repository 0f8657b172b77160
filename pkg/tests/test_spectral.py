import numpy as np
import pytest
from scipy.linalg import expm

from conftest import random_hermitian
from fermigibbs.majorana import build_majorana_matrices
from fermigibbs.models import build_fermi_hubbard, build_spinless_chain, free_heisenberg
from fermigibbs.spectral import (
    bohr_decompose,
    cluster_values,
    eigendecompose,
    gibbs_state,
    imaginary_time_conjugate,
    kms_inner,
)


def test_eigendecompose_rejects_non_hermitian():
    with pytest.raises(ValueError):
        eigendecompose(np.array([[0, 1], [0, 0]]))


def test_bohr_identity_single_component():
    eig = eigendecompose(np.diag([0.0, 1.0, 2.5]))
    b = bohr_decompose(np.eye(3), eig, drop_tol=1e-14)
    assert len(b) == 1 and b.frequencies[0] == pytest.approx(0)


def test_bohr_two_level_flip():
    eig = eigendecompose(np.diag([0.0, 1.0]))
    b = bohr_decompose(np.array([[0, 1], [1, 0]]), eig, drop_tol=1e-14)
    np.testing.assert_allclose(sorted(b.frequencies), [-1, 1])
    np.testing.assert_allclose(b.total(), [[0, 1], [1, 0]])


def test_bohr_components_reproduce_free_evolution():
    m = build_spinless_chain(2)
    H = m.dense()
    g = build_majorana_matrices(2)
    b = bohr_decompose(g[0], eigendecompose(H), drop_tol=1e-13)
    for t in (0.1, 0.4, 0.9, 1.7, 3.0):
        lhs = sum(np.exp(1j * nu * t) * A for nu, A in b)
        coef = free_heisenberg(m.quadratic, 1, t)
        np.testing.assert_allclose(lhs, np.einsum("j,jab->ab", coef, g), atol=1e-12)


def test_cluster_merges_degenerate_values():
    labels, centers, amb = cluster_values(np.array([0.0, 1e-12, 1.0]), 1e-9)
    assert labels[0] == labels[1] != labels[2] and not amb


def test_gibbs_cases():
    s = gibbs_state(np.diag([0.3, -0.2, 1.0, 0.0]), 0.0)
    np.testing.assert_allclose(s.sigma, np.eye(4) / 4, atol=1e-15)
    E, beta = 0.8, 1.7
    s = gibbs_state(np.diag([0.0, E]), beta)
    np.testing.assert_allclose(np.diag(s.sigma).real, np.array([1, np.exp(-beta * E)]) / (1 + np.exp(-beta * E)))
    H = build_fermi_hubbard((1,), 1.0).dense()
    s = gibbs_state(H, 2.0)
    ref = expm(-2.0 * H)
    np.testing.assert_allclose(s.sigma, ref / np.trace(ref), atol=1e-14)


def test_gibbs_large_beta_no_overflow():
    s = gibbs_state(np.diag([0.0, 1.0, 2000.0]), 50.0)
    assert np.isfinite(s.log_Z) and s.sigma[0, 0] == pytest.approx(1.0)


def test_kms_inner_cases(rng):
    assert kms_inner(np.eye(4), np.eye(4), gibbs_state(np.diag([0, 1, 2, 3.0]), 1.0)) == pytest.approx(1)
    X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    Y = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    s0 = gibbs_state(np.zeros((4, 4)), 0.0)
    assert kms_inner(X, Y, s0) == pytest.approx(np.trace(X.conj().T @ Y) / 4)
    s = gibbs_state(random_hermitian(4, rng), 1.0)
    assert kms_inner(X, Y, s) == pytest.approx(np.conj(kms_inner(Y, X, s)), abs=1e-12)
    assert kms_inner(X, Y, s) == pytest.approx(kms_inner(X, Y, s.sigma), abs=1e-12)


def test_imaginary_time_conjugate(rng):
    H = random_hermitian(4, rng)
    s = gibbs_state(H, 1.3)
    assert np.allclose(imaginary_time_conjugate(np.eye(4), s, 0.25), np.eye(4))
    b = bohr_decompose(rng.normal(size=(4, 4)), s.eig)
    for nu, A in b:
        np.testing.assert_allclose(imaginary_time_conjugate(A, s, 0.25), np.exp(-1.3 * nu * 0.25) * A, atol=1e-10)
    X = rng.normal(size=(4, 4))
    back = imaginary_time_conjugate(imaginary_time_conjugate(X, s, 0.25), s, -0.25)
    np.testing.assert_allclose(back, X, atol=1e-11)


def test_imaginary_time_overflow_guard():
    s = gibbs_state(np.diag([0.0, 3000.0]), 1.0)
    with pytest.raises(OverflowError):
        imaginary_time_conjugate(np.array([[0, 1], [1, 0]]), s, 0.5)
