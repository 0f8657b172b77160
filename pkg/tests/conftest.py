import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def jw_oracle(n):
    """Jordan-Wigner Majoranas assembled directly from Kronecker strings."""
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    Z = np.diag([1.0, -1.0]).astype(complex)
    I = np.eye(2, dtype=complex)
    out = []
    for j in range(n):
        for P in (X, Y):
            M = np.array([[1.0 + 0j]])
            for k in range(n):
                M = np.kron(M, Z if k < j else (P if k == j else I))
            out.append(M)
    return out


def random_hermitian(d, rng):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (A + A.conj().T) / 2
