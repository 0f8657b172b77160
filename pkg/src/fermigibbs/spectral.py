"""Eigendecompositions, Bohr frequencies, Gibbs states and the KMS inner product."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

DEGENERACY_TOL = 1e-9
OVERFLOW_EXPONENT = 700.0


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    degeneracy_tol: float = DEGENERACY_TOL

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def to_eigenbasis(self, A: np.ndarray) -> np.ndarray:
        U = self.eigenvectors
        return U.conj().T @ A @ U

    def from_eigenbasis(self, A: np.ndarray) -> np.ndarray:
        U = self.eigenvectors
        return U @ A @ U.conj().T

    def bohr_matrix(self) -> np.ndarray:
        """``E_a - E_b`` as a matrix."""
        E = self.eigenvalues
        return E[:, None] - E[None, :]


def eigendecompose(H: np.ndarray, degeneracy_tol: float = DEGENERACY_TOL) -> EigenDecomposition:
    H = np.asarray(H)
    herm = np.linalg.norm(H - H.conj().T)
    if herm > 1e-10 * max(1.0, np.linalg.norm(H)):
        raise ValueError(f"matrix is not Hermitian (residual {herm:.2e})")
    E, U = np.linalg.eigh((H + H.conj().T) / 2)
    return EigenDecomposition(E, U, degeneracy_tol)


@dataclass(frozen=True)
class BohrDecomposition:
    frequencies: np.ndarray
    components: tuple
    ambiguous: bool = False

    def total(self) -> np.ndarray:
        return sum(self.components)

    def __iter__(self):
        return iter(zip(self.frequencies, self.components))

    def __len__(self):
        return len(self.frequencies)


def cluster_values(values: np.ndarray, tol: float):
    """Single-linkage clustering of sorted reals; returns (labels, centers, ambiguous)."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    labels = np.empty(len(values), dtype=int)
    gaps = np.diff(values[order])
    new = np.concatenate([[True], gaps > tol])
    labels[order] = np.cumsum(new) - 1
    centers = np.array([values[labels == k].mean() for k in range(labels.max() + 1)])
    ambiguous = bool(np.any((gaps > tol) & (gaps < 10 * tol)))
    return labels, centers, ambiguous


def bohr_decompose(A: np.ndarray, eig: EigenDecomposition, drop_tol: float = 0.0) -> BohrDecomposition:
    """Split ``A`` into components ``A_nu = sum_{E_a - E_b = nu} P_a A P_b``."""
    A_e = eig.to_eigenbasis(np.asarray(A, dtype=complex))
    nu = eig.bohr_matrix()
    span = max(1.0, float(np.ptp(eig.eigenvalues)))
    labels, centers, ambiguous = cluster_values(nu.ravel(), eig.degeneracy_tol * span)
    labels = labels.reshape(nu.shape)
    freqs, comps = [], []
    for k, c in enumerate(centers):
        block = np.where(labels == k, A_e, 0)
        if np.abs(block).max() <= drop_tol:
            continue
        freqs.append(c)
        comps.append(eig.from_eigenbasis(block))
    return BohrDecomposition(np.array(freqs), tuple(comps), ambiguous)


@dataclass(frozen=True)
class GibbsState:
    sigma: np.ndarray
    beta: float
    log_Z: float
    sigma_min: float
    eig: EigenDecomposition

    @property
    def populations(self) -> np.ndarray:
        return np.exp(-self.beta * self.eig.eigenvalues - self.log_Z)

    def power(self, p: float) -> np.ndarray:
        """``sigma^p`` through the shared eigenbasis."""
        w = np.exp(p * (-self.beta * self.eig.eigenvalues - self.log_Z))
        return self.eig.from_eigenbasis(np.diag(w))

    def expectation(self, X: np.ndarray) -> complex:
        return complex(np.trace(self.sigma @ X))


def gibbs_state(H, beta: float) -> GibbsState:
    eig = H if isinstance(H, EigenDecomposition) else eigendecompose(H)
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    logw = -beta * eig.eigenvalues
    log_Z = float(logsumexp(logw))
    p = np.exp(logw - log_Z)
    sigma = eig.from_eigenbasis(np.diag(p))
    return GibbsState(sigma, float(beta), log_Z, float(p.min()), eig)


def kms_inner(X: np.ndarray, Y: np.ndarray, sigma) -> complex:
    """``Tr[sigma^{1/2} X^dag sigma^{1/2} Y]``."""
    if isinstance(sigma, GibbsState):
        if sigma.sigma_min < 1e-14:
            raise ValueError("Gibbs state is numerically rank deficient")
        s = sigma.power(0.5)
    else:
        w, V = np.linalg.eigh(sigma)
        if w.min() < 1e-14:
            raise ValueError("state is numerically rank deficient")
        s = (V * np.sqrt(w)) @ V.conj().T
    return complex(np.trace(s @ X.conj().T @ s @ Y))


def imaginary_time_conjugate(A: np.ndarray, state: GibbsState, p: float) -> np.ndarray:
    """``sigma^p A sigma^{-p}``, computed elementwise in the eigenbasis."""
    if p not in (0.25, -0.25, 0.5, -0.5):
        raise ValueError(f"power must be one of +-1/4, +-1/2, got {p}")
    expo = -state.beta * p * state.eig.bohr_matrix()
    if np.abs(expo).max() > OVERFLOW_EXPONENT:
        raise OverflowError("imaginary-time factor overflows; reduce beta or the energy scale")
    A_e = state.eig.to_eigenbasis(A)
    return state.eig.from_eigenbasis(np.exp(expo) * A_e)
