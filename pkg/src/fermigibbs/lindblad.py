"""Gaussian-filtered Majorana Lindbladian with its coherent correction.

All superoperators are returned in the orthonormal monomial basis (see
:mod:`fermigibbs.majorana`), so that the even and odd operator sectors are
index aligned.  Internally everything is assembled elementwise in the
eigenbasis of ``H``; no Bohr-frequency clustering is needed there because the
weights depend smoothly on the frequencies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.linalg import expm

from . import kernels as K
from .majorana import (
    build_majorana_matrices,
    even_indices,
    monomial_devectorize,
    monomial_vectorize,
    odd_indices,
    operator_parity,
    superop_from_monomial,
    superop_to_monomial,
    _n_from_dim,
)
from .spectral import (
    EigenDecomposition,
    GibbsState,
    cluster_values,
    eigendecompose,
    gibbs_state,
)


# ---------------------------------------------------------------- jump operators

def jump_operator(j: int, omega: float, eig: EigenDecomposition, beta: float,
                  gammas: np.ndarray | None = None) -> np.ndarray:
    """``A_j(omega) = sum_nu f_hat(omega - nu) (gamma_j)_nu`` (``j`` 1-based)."""
    if gammas is None:
        gammas = build_majorana_matrices(_n_from_dim(eig.dim))
    G = eig.to_eigenbasis(gammas[j - 1])
    return eig.from_eigenbasis(K.f_hat(omega - eig.bohr_matrix(), beta) * G)


def jump_operator_time_quad(j: int, omega: float, H: np.ndarray, beta: float,
                            points: int = 4001) -> np.ndarray:
    """Time-domain oracle: ``(2 pi)^{-1/2} int gamma_j(t) e^{-i w t} f(t) dt`` on ``|t| <= 8 beta``."""
    n = _n_from_dim(H.shape[0])
    g = build_majorana_matrices(n)[j - 1]
    E, U = np.linalg.eigh(H)
    G = U.conj().T @ g @ U
    ts = np.linspace(-8 * beta, 8 * beta, points)
    nu = E[:, None] - E[None, :]
    w = K.f_time(ts, beta) * np.exp(-1j * omega * ts)
    phases = np.exp(1j * nu[None, :, :] * ts[:, None, None])
    A_e = integrate.simpson(w[:, None, None] * phases, x=ts, axis=0) * G / K.SQRT2PI
    return U @ A_e @ U.conj().T


# ---------------------------------------------------------------- dissipator weights

@dataclass(frozen=True)
class DissipatorCoefficients:
    """``g[k, l] = int eta(w) f_hat(w - nu_k) f_hat(w - nu_l) dw`` on a frequency grid."""

    frequencies: np.ndarray
    g: np.ndarray
    method: str


def dissipator_coefficients(frequencies, kernels: K.KernelBundle, method: str = "closed_form",
                            shift: float = 1.0) -> DissipatorCoefficients:
    nu = np.asarray(frequencies, dtype=float)
    if method == "closed_form":
        g = kernels.g(nu[:, None], nu[None, :], shift)
    elif method == "quadrature":
        g = np.empty((len(nu), len(nu)))
        for a in range(len(nu)):
            for b in range(a, len(nu)):
                g[a, b] = g[b, a] = kernels.g_quad(nu[a], nu[b], shift)
    else:
        raise ValueError(f"unknown dissipator method {method!r}")
    return DissipatorCoefficients(nu, np.asarray(g, dtype=float), method)


def _bohr_grid(eig: EigenDecomposition):
    """Cluster the Bohr matrix into distinct frequencies; returns (labels, freqs)."""
    nu = eig.bohr_matrix()
    span = max(1.0, float(np.ptp(eig.eigenvalues)))
    labels, centers, _ = cluster_values(nu.ravel(), eig.degeneracy_tol * span)
    return labels.reshape(nu.shape), centers


def _weight_lookup(eig, kernels, method, shift=1.0):
    """Return a function ``(i1, i2) -> g(nu[i1], nu[i2])`` for Bohr index arrays."""
    labels, freqs = _bohr_grid(eig)
    coeff = dissipator_coefficients(freqs, kernels, method, shift)
    return labels, coeff


# ---------------------------------------------------------------- coherent term

def coherent_term(j: int, eig: EigenDecomposition, beta: float, method: str = "bohr_product",
                  gammas: np.ndarray | None = None, pairing: str = "collected") -> np.ndarray:
    """``B_j`` for Majorana ``j`` (1-based).

    ``bohr_product`` sums ``2 pi b1_hat(beta (nu + nu')) b2_hat(beta (nu' - nu))
    gamma_nu gamma_nu'``; ``pairing='swapped'`` uses the alternative argument
    assignment for comparison.  ``double_quadrature`` integrates the defining
    time-domain expression on a truncated grid.
    """
    if gammas is None:
        gammas = build_majorana_matrices(_n_from_dim(eig.dim))
    G = eig.to_eigenbasis(gammas[j - 1])
    nu = eig.bohr_matrix()
    # nu1 = E_a - E_b on the left factor, nu2 = E_b - E_c on the right factor
    nu1 = nu[:, :, None]
    nu2 = nu[None, :, :]
    if method == "bohr_product":
        if pairing == "collected":
            w = K.coherent_weight(nu1, nu2, beta)
        elif pairing == "swapped":
            w = K.coherent_weight_swapped(nu1, nu2, beta)
        else:
            raise ValueError(f"unknown pairing {pairing!r}")
    elif method == "double_quadrature":
        w = _coherent_weight_double_quad(nu1 + 0 * nu2, nu2 + 0 * nu1, beta)
    else:
        raise ValueError(f"unknown coherent-term method {method!r}")
    B_e = np.einsum("ab,bc,abc->ac", G, G, w)
    return eig.from_eigenbasis(B_e)


def _coherent_weight_double_quad(nu1, nu2, beta, half_width: float = 6.0, points: int = 801):
    """2-D grid integral ``int b1(t) b2(t') e^{i beta (nu1 (t'-t) - nu2 (t+t'))} dt dt'``."""
    ts = np.linspace(-half_width, half_width, points)
    b1 = K.b1_time(ts)
    b2 = K.b2_time(ts)
    wts = integrate.simpson(np.eye(points), x=ts, axis=1)
    flat1, flat2 = nu1.ravel(), nu2.ravel()
    pairs = np.round(np.stack([flat1, flat2], axis=1), 12)
    uniq, inv = np.unique(pairs, axis=0, return_inverse=True)
    out = np.empty(len(uniq), dtype=complex)
    wb1 = wts * b1
    wb2 = wts * b2
    # the tensor-product rule factorizes because the phase is separable in (t, t')
    for k, (a, c) in enumerate(uniq):
        out[k] = (wb1 @ np.exp(-1j * beta * (a + c) * ts)) * (wb2 @ np.exp(1j * beta * (a - c) * ts))
    return out[inv.ravel()].reshape(nu1.shape)


# ---------------------------------------------------------------- assembly

@dataclass(frozen=True)
class Lindbladian:
    """Assembled generator in the monomial basis.

    ``L`` acts on states (Schrodinger picture), ``L_dagger`` on observables.
    """

    L: np.ndarray
    L_dagger: np.ndarray
    state: GibbsState
    B: np.ndarray
    n_modes: int
    beta: float

    @property
    def sigma(self) -> np.ndarray:
        return self.state.sigma

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return monomial_devectorize(self.L @ monomial_vectorize(rho))

    def apply_dagger(self, X: np.ndarray) -> np.ndarray:
        return monomial_devectorize(self.L_dagger @ monomial_vectorize(X))


def _eig_to_vec_superop(S_eig: np.ndarray, eig: EigenDecomposition) -> np.ndarray:
    W = np.kron(eig.eigenvectors, eig.eigenvectors.conj())
    return W @ S_eig @ W.conj().T


def dissipator_superop_eig(eig: EigenDecomposition, beta: float, gammas, jumps,
                           method: str = "closed_form", eta_on: bool = True) -> np.ndarray:
    """Eigenbasis row-major superoperator of ``sum_j int eta (A rho A^dag - 1/2 {A^dag A, rho})``."""
    d = eig.dim
    kern = K.KernelBundle(beta, eta_on)
    labels, coeff = _weight_lookup(eig, kern, method)
    g_ab_cd = coeff.g[labels[:, :, None, None], labels[None, None, :, :]]  # g(E_a-E_b, E_c-E_d)
    S = np.zeros((d, d, d, d), dtype=complex)  # indices a, c, b, d
    I = np.eye(d)
    for j in jumps:
        G = eig.to_eigenbasis(gammas[j - 1])
        # (A rho A^dag)_ac = sum_bd G_ab rho_bd conj(G_cd) g(E_a-E_b, E_c-E_d)
        T = np.einsum("ab,cd,abcd->acbd", G, G.conj(), g_ab_cd)
        # K_ac = sum_b conj(G_ba) G_bc g(E_b-E_c, E_b-E_a)
        Kmat = np.einsum("ba,bc,bcba->ac", G.conj(), G, g_ab_cd)
        S += T
        S -= 0.5 * np.einsum("ab,cd->acbd", Kmat, I)
        S -= 0.5 * np.einsum("ab,dc->acbd", I, Kmat)
    return S.reshape(d * d, d * d)


def assemble_lindbladian(H: np.ndarray, beta: float, jumps=None, method: str = "closed_form",
                         coherent_method: str = "bohr_product", eta_on: bool = True,
                         coherent_scale: float = 2.0, pairing: str = "collected") -> Lindbladian:
    """Build ``L`` and ``L^dagger`` for Hamiltonian ``H`` at inverse temperature ``beta``.

    ``B`` is the sum of :func:`coherent_term` over jumps times ``coherent_scale``.
    The default 2 is the normalization that makes ``L`` detailed balanced;
    ``1`` reproduces the bare pairing sum and other values serve as negative controls.
    """
    H = np.asarray(H, dtype=complex)
    n = _n_from_dim(H.shape[0])
    gammas = build_majorana_matrices(n)
    if jumps is None:
        jumps = range(1, 2 * n + 1)
    jumps = list(jumps)
    eig = eigendecompose(H)
    state = gibbs_state(eig, beta)
    d = eig.dim
    S = dissipator_superop_eig(eig, beta, gammas, jumps, method, eta_on)
    B = sum(coherent_term(j, eig, beta, coherent_method, gammas, pairing) for j in jumps)
    B = coherent_scale * B
    B_e = eig.to_eigenbasis(B)
    I = np.eye(d)
    S = S - 1j * (np.kron(B_e, I) - np.kron(I, B_e.T))
    L_mon = superop_to_monomial(_eig_to_vec_superop(S, eig), n)
    # monomial basis is orthonormal, so the Hilbert-Schmidt adjoint is the conjugate transpose
    return Lindbladian(L_mon, L_mon.conj().T, state, B, n, float(beta))


# ---------------------------------------------------------------- verifiers

def stationarity_residual(lind: Lindbladian) -> float:
    """``||L(sigma)||_F``."""
    return float(np.linalg.norm(lind.apply(lind.sigma)))


def trace_annihilation_residual(lind: Lindbladian) -> float:
    # Tr X = 2^n c_0, so Tr o L = 0 means row 0 of L vanishes
    return float(np.abs(lind.L[0]).max() * 2 ** lind.n_modes)


def unitality_residual(lind: Lindbladian) -> float:
    return float(np.abs(lind.L_dagger[:, 0]).max())


def parity_offblock_mass(S: np.ndarray, n: int) -> float:
    ev, od = even_indices(n), odd_indices(n)
    return float(max(np.abs(S[np.ix_(ev, od)]).max(), np.abs(S[np.ix_(od, ev)]).max()))


def gamma_superop(state: GibbsState, p: float = 0.25) -> np.ndarray:
    """Monomial-basis matrix of ``X -> sigma^p X sigma^p``."""
    n = _n_from_dim(state.eig.dim)
    s = state.power(p)
    return superop_to_monomial(np.kron(s, s.T), n)


def kms_adjoint(S: np.ndarray, state: GibbsState) -> np.ndarray:
    """Adjoint of ``S`` under ``<X, Y> = Tr[sigma^{1/2} X^dag sigma^{1/2} Y]``."""
    G = gamma_superop(state, 0.5)
    Ginv = gamma_superop(state, -0.5)
    return Ginv @ S.conj().T @ G


def kms_dbc_residual(L_dagger: np.ndarray, state: GibbsState) -> float:
    """Spectral norm of ``L^dag - (L^dag)^{*KMS}``."""
    return float(np.linalg.norm(L_dagger - kms_adjoint(L_dagger, state), 2))


def hermiticity_preservation_residual(lind: Lindbladian, rng: np.random.Generator, samples: int = 5) -> float:
    d = 2 ** lind.n_modes
    worst = 0.0
    for _ in range(samples):
        X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        worst = max(worst, float(np.abs(lind.apply(X.conj().T) - lind.apply(X).conj().T).max()))
    return worst


# ---------------------------------------------------------------- dynamics

class ParityError(ValueError):
    pass


def evolve(lind: Lindbladian, rho0: np.ndarray, t) -> np.ndarray:
    """``e^{tL} rho0``; ``t`` may be a scalar or a 1-D array of times."""
    if operator_parity(rho0) != 0:
        raise ParityError("initial state must have even parity")
    c0 = monomial_vectorize(rho0)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    w, V = np.linalg.eig(lind.L)
    # fall back to expm when the eigenvector basis is badly conditioned
    if np.linalg.cond(V) > 1e8:
        out = [monomial_devectorize(expm(s * lind.L) @ c0) for s in ts]
    else:
        coef = np.linalg.solve(V, c0)
        out = [monomial_devectorize(V @ (np.exp(w * s) * coef)) for s in ts]
    return out[0] if np.ndim(t) == 0 else np.array(out)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """``||rho - sigma||_1`` (no factor 1/2)."""
    diff = rho - sigma
    return float(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2)).sum())


def even_basis_states(n: int) -> list:
    """Even-parity computational basis projectors."""
    d = 2 ** n
    out = []
    for k in range(d):
        if bin(k).count("1") % 2 == 0:
            P = np.zeros((d, d), dtype=complex)
            P[k, k] = 1
            out.append(P)
    return out


def random_even_pure_states(n: int, count: int, rng: np.random.Generator) -> list:
    d = 2 ** n
    even = [k for k in range(d) if bin(k).count("1") % 2 == 0]
    out = []
    for _ in range(count):
        psi = np.zeros(d, dtype=complex)
        psi[even] = rng.normal(size=len(even)) + 1j * rng.normal(size=len(even))
        psi /= np.linalg.norm(psi)
        out.append(np.outer(psi, psi.conj()))
    return out


def mixing_time_empirical(lind: Lindbladian, epsilon: float, rng: np.random.Generator | None = None,
                          n_random: int = 10, t_max: float | None = None, rtol: float = 1e-3) -> dict:
    """Bisection estimate of ``t_mix(epsilon)`` over even basis and random even pure states.

    The worst-case trace distance is non-increasing in ``t`` only approximately,
    so the search brackets on a log grid first and then bisects the last
    crossing.
    """
    if epsilon >= 2:
        return {"t_mix": 0.0, "converged": True}
    rng = np.random.default_rng(0) if rng is None else rng
    states = even_basis_states(lind.n_modes) + random_even_pure_states(lind.n_modes, n_random, rng)
    sigma = lind.sigma

    def worst(t):
        return max(trace_distance(evolve(lind, r, t), sigma) for r in states)

    if worst(0.0) <= epsilon:
        return {"t_mix": 0.0, "converged": True}
    if t_max is None:
        t_max = 1e4
    hi = 1e-3
    while worst(hi) > epsilon:
        hi *= 2
        if hi > t_max:
            return {"t_mix": float("inf"), "converged": False}
    lo = hi / 2 if hi > 1e-3 else 0.0
    while hi - lo > rtol * hi:
        mid = (lo + hi) / 2
        if worst(mid) > epsilon:
            lo = mid
        else:
            hi = mid
    return {"t_mix": hi, "converged": True}


def even_sector_spectrum(S: np.ndarray, n: int) -> np.ndarray:
    ev = even_indices(n)
    return np.linalg.eigvals(S[np.ix_(ev, ev)])


def superop_apply_dense(S_mon: np.ndarray, X: np.ndarray) -> np.ndarray:
    return monomial_devectorize(S_mon @ monomial_vectorize(X))


def vec_superop(S_mon: np.ndarray, n: int) -> np.ndarray:
    """Back to the row-major vec representation."""
    return superop_from_monomial(S_mon, n)
