"""Third quantization: operators on operator space as a-fermion operators.

The enlarged space has basis ``v_alpha = phi(gamma^alpha)``, identical to the
monomial coordinates produced by :func:`fermigibbs.majorana.monomial_vectorize`.
There is one a-Dirac mode per source Majorana, so ``4n`` a-Majoranas act on a
``4^n``-dimensional space.  Matrices of a-fermion operators are kept sparse
where they are signed permutations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .lindblad import (
    Lindbladian,
    _bohr_grid,
    assemble_lindbladian,
    coherent_term,
    gamma_superop,
)
from . import kernels as K
from .majorana import (
    ModeLayout,
    bits_to_indices,
    build_majorana_matrices,
    check_capacity,
    monomial_degrees,
    monomial_devectorize,
    monomial_vectorize,
    operator_parity,
    product_sign,
    sign_table,
    _n_from_dim,
)
from .spectral import eigendecompose, gibbs_state


# ---------------------------------------------------------------- a-fermions

@dataclass(frozen=True)
class AFermionSpace:
    n_source: int
    hat_gammas: tuple
    parity_op: sp.csr_matrix
    site_map: tuple

    @property
    def dim(self) -> int:
        return 4 ** self.n_source

    def hat(self, k: int) -> sp.csr_matrix:
        """a-Majorana ``k`` (1-based)."""
        return self.hat_gammas[k - 1]

    def annihilation(self, j: int) -> sp.csr_matrix:
        """``c_hat_j = (gamma_hat_{2j-1} + i gamma_hat_{2j}) / 2``."""
        return (self.hat(2 * j - 1) + 1j * self.hat(2 * j)) / 2

    def number_operator(self) -> sp.csr_matrix:
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for j in range(1, 2 * self.n_source + 1):
            c = self.annihilation(j)
            out = out + c.conj().T @ c
        return out


def _left_perm(a: int, n: int) -> sp.csr_matrix:
    """Monomial-basis matrix of ``X -> gamma^a X`` as a signed permutation."""
    cols = np.arange(4 ** n)
    return sp.csr_matrix((product_sign(a, cols).astype(complex), (cols ^ a, cols)), shape=(4 ** n,) * 2)


@lru_cache(maxsize=8)
def _a_space(n: int) -> AFermionSpace:
    check_capacity(n)
    dim = 4 ** n
    alpha = np.arange(dim)
    hats = []
    for j in range(1, 2 * n + 1):
        lg = _left_perm(1 << (j - 1), n)
        occ = ((alpha >> (j - 1)) & 1).astype(float)
        # c_hat_j v_alpha = [alpha_j = 1] phi(gamma_j gamma^alpha); its adjoint acts when alpha_j = 0
        ann = lg @ sp.diags(occ)
        cre = lg @ sp.diags(1 - occ)
        hats.append((ann + cre).tocsr())
        hats.append((1j * (cre - ann)).tocsr())
    parity = sp.diags(np.where(monomial_degrees(n) % 2, -1.0, 1.0).astype(complex)).tocsr()
    return AFermionSpace(n, tuple(hats), parity, ())


def build_a_fermion_space(layout_or_n) -> AFermionSpace:
    if isinstance(layout_or_n, ModeLayout):
        n = layout_or_n.n_modes
        base = _a_space(n)
        # a-Majoranas 2j-1 and 2j descend from source Majorana j
        sites = tuple(layout_or_n.majorana_site((k + 1) // 2) for k in range(1, 4 * n + 1))
        return AFermionSpace(base.n_source, base.hat_gammas, base.parity_op, sites)
    return _a_space(int(layout_or_n))


def phi_map(X: np.ndarray) -> np.ndarray:
    return monomial_vectorize(X)


def phi_inverse(v: np.ndarray) -> np.ndarray:
    return monomial_devectorize(v)


# ---------------------------------------------------------------- Phi on L_W, R_W

def right_coefficient(k: int) -> complex:
    """Scalar in ``phi R_{gamma_{j1}...gamma_{jk}} phi^{-1} = c_k gamma_hat_{2jk}...gamma_hat_{2j1} (-1)^{k n_hat}``.

    Equals ``-i`` for odd ``k`` and ``+1`` for even ``k``.
    """
    return (-1j) ** k * (-1) ** (k * (k - 1) // 2)


@lru_cache(maxsize=4096)
def _hat_left_monomial(a: int, n: int) -> sp.csr_matrix:
    space = _a_space(n)
    out = sp.identity(4 ** n, dtype=complex, format="csr")
    for j in bits_to_indices(a):
        out = out @ space.hat(2 * j - 1)
    return out.tocsr()


@lru_cache(maxsize=4096)
def _hat_right_monomial(b: int, n: int) -> sp.csr_matrix:
    space = _a_space(n)
    idx = bits_to_indices(b)
    out = sp.identity(4 ** n, dtype=complex, format="csr")
    for j in reversed(idx):
        out = out @ space.hat(2 * j)
    return (right_coefficient(len(idx)) * out).tocsr()


def _significant(c: np.ndarray, rel: float = 1e-13) -> np.ndarray:
    """Indices of coefficients above round-off relative to the largest one."""
    scale = np.abs(c).max(initial=0.0)
    return np.flatnonzero(np.abs(c) > rel * scale) if scale > 0 else np.array([], dtype=int)


def _perm_arrays(M: sp.csr_matrix):
    """Row index and value per column of a signed-permutation matrix."""
    coo = M.tocoo()
    rows = np.empty(M.shape[1], dtype=np.int64)
    vals = np.empty(M.shape[1], dtype=complex)
    rows[coo.col] = coo.row
    vals[coo.col] = coo.data
    return rows, vals


@lru_cache(maxsize=16384)
def _cached_perm(side: str, a: int, n: int):
    factory = _hat_left_monomial if side == "left" else _hat_right_monomial
    return _perm_arrays(factory(a, n))


def _accumulate(c: np.ndarray, idx, side: str, n: int, sparse: bool):
    dim = 4 ** n
    out = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for a in idx:
        rows, vals = _cached_perm(side, int(a), n)
        out[rows, cols] += c[a] * vals
    return sp.csr_matrix(out) if sparse else out


def phi_left(W: np.ndarray, sparse: bool = False):
    """``Phi(L_W)``: each monomial maps to the product of left-copy a-Majoranas."""
    n = _n_from_dim(W.shape[0])
    c = monomial_vectorize(W)
    return _accumulate(c, _significant(c), "left", n, sparse)


def phi_right(W: np.ndarray, sparse: bool = False):
    """``Phi(R_W)`` for parity-homogeneous ``W``."""
    n = _n_from_dim(W.shape[0])
    c = monomial_vectorize(W)
    nz = _significant(c)
    if len(nz) and len({int(monomial_degrees(n)[a]) % 2 for a in nz}) > 1:
        raise ValueError("phi_right needs a parity-homogeneous operator")
    return _accumulate(c, nz, "right", n, sparse)


def phi_right_raw(W: np.ndarray) -> np.ndarray:
    """``phi o R_W o phi^{-1}`` (no parity twist), in the monomial basis."""
    n = _n_from_dim(W.shape[0])
    c = monomial_vectorize(W)
    S = sign_table(n)
    dim = 4 ** n
    cols = np.arange(dim)
    out = np.zeros((dim, dim), dtype=complex)
    for b in np.flatnonzero(np.abs(c) > 1e-15):
        out[cols ^ b, cols] += c[b] * S[cols, b]
    return out


# ---------------------------------------------------------------- Phi on superoperators

def lr_decompose(S: np.ndarray, n: int):
    """Coefficients ``c[a, b]`` with ``S = sum_ab c_ab L_{gamma^a} R_{gamma^b}``.

    The ``L_a R_b`` are signed permutations, orthogonal under the
    Hilbert-Schmidt pairing with norm ``4^n``.
    """
    dim = 4 ** n
    T = sign_table(n).astype(float)
    a = np.arange(dim)
    coeff = np.empty((dim, dim), dtype=complex)
    for b in range(dim):
        cb = a ^ b  # index of gamma^c gamma^b for every c
        rows = a[:, None] ^ cb[None, :]  # row a^b^c for (a, c)
        signs = T[a[:, None], cb[None, :]] * T[a, b][None, :]
        coeff[:, b] = (signs * S[rows, a[None, :]]).sum(axis=1) / dim
    return coeff


def lr_reassemble(coeff: np.ndarray, n: int, b_mask=None) -> np.ndarray:
    dim = 4 ** n
    T = sign_table(n).astype(float)
    a = np.arange(dim)
    out = np.zeros((dim, dim), dtype=complex)
    for b in range(dim):
        if b_mask is not None and not b_mask[b]:
            continue
        cb = a ^ b
        rows = a[:, None] ^ cb[None, :]
        signs = T[a[:, None], cb[None, :]] * T[a, b][None, :]
        out[rows, a[None, :]] += coeff[:, b][:, None] * signs
    return out


def phi_superop(S: np.ndarray, n: int, residual_tol: float = 1e-9) -> np.ndarray:
    """``Phi(S)``: decompose into ``L_a R_b`` and twist the odd-``b`` part by the a-parity."""
    coeff = lr_decompose(S, n)
    odd_b = monomial_degrees(n) % 2 == 1
    S_even = lr_reassemble(coeff, n, ~odd_b)
    S_odd = lr_reassemble(coeff, n, odd_b)
    resid = np.abs(S_even + S_odd - S).max()
    if resid > residual_tol * max(1.0, np.abs(S).max()):
        raise ArithmeticError(f"L/R decomposition residual {resid:.2e}")
    parity = np.where(odd_b, -1.0, 1.0)
    return S_even + S_odd * parity[None, :]


def naive_vectorization_counterexample() -> dict:
    """Left and right multiplication commute; naive doubled-space images do not.

    On two source modes, ``C1: X -> gamma_1 X`` and ``C2: X -> X gamma_2``
    commute.  On a four-mode doubled space the naive images ``gamma_1`` and
    ``gamma_4`` anticommute, while ``gamma_1`` and ``gamma_4 (-1)^N`` commute
    but the latter is supported on every mode.
    """
    n = 2
    g = build_majorana_matrices(n)
    c1 = _left_perm(1, n).toarray()
    c2 = phi_right_raw(g[1])
    big = build_majorana_matrices(2 * n)
    parity = np.diag([(-1) ** bin(k).count("1") for k in range(2 ** (2 * n))]).astype(complex)
    corrected = big[3] @ parity
    support = _support_modes(corrected, 2 * n)
    return {
        "superop_commutator": float(np.abs(c1 @ c2 - c2 @ c1).max()),
        "naive_anticommutator": float(np.abs(big[0] @ big[3] + big[3] @ big[0]).max()),
        "naive_commutator": float(np.abs(big[0] @ big[3] - big[3] @ big[0]).max()),
        "corrected_commutator": float(np.abs(big[0] @ corrected - corrected @ big[0]).max()),
        "corrected_support": support,
    }


def _support_modes(X: np.ndarray, n: int) -> list:
    """Dirac modes on which the monomial expansion of ``X`` acts nontrivially."""
    c = monomial_vectorize(X) if n <= 5 else None
    modes = set()
    for a in np.flatnonzero(np.abs(c) > 1e-12):
        for j in bits_to_indices(int(a)):
            modes.add((j - 1) // 2 + 1)
    return sorted(modes)


def norm_preservation_check(A: np.ndarray) -> dict:
    par = operator_parity(A)
    if par is None:
        raise ValueError("operator must have definite parity")
    PL = phi_left(A)
    PR = phi_right(A)
    nA = float(np.linalg.norm(A, 2))
    report = {
        "parity": par,
        "norm_A": nA,
        "norm_left": float(np.linalg.norm(PL, 2)),
        "norm_right": float(np.linalg.norm(PR, 2)),
    }
    if par == 1:
        report["adjoint_rule"] = float(np.abs(phi_right(A.conj().T) + PR.conj().T).max())
    return report


# ---------------------------------------------------------------- parent Hamiltonian

@dataclass(frozen=True)
class ParentHamiltonian:
    total: np.ndarray
    parts: dict
    n_modes: int
    beta: float
    U: float = 0.0
    meta: dict = field(default_factory=dict)

    def hermitian(self) -> np.ndarray:
        return (self.total + self.total.conj().T) / 2

    @property
    def hermiticity_residual(self) -> float:
        return float(np.abs(self.total - self.total.conj().T).max())

    @property
    def H0_parent(self) -> np.ndarray:
        return self.parts["C_free"] + self.parts["D_free"]

    @property
    def V_parent(self) -> np.ndarray:
        return self.parts["C_int"] + self.parts["D_int"]


def parent_from_lindbladian(lind: Lindbladian) -> np.ndarray:
    """``Phi(Gamma o L^dag o Gamma^{-1})`` with ``Gamma(X) = sigma^{1/4} X sigma^{1/4}``."""
    G = gamma_superop(lind.state, 0.25)
    Ginv = gamma_superop(lind.state, -0.25)
    return phi_superop(G @ lind.L_dagger @ Ginv, lind.n_modes)


def parent_explicit(H: np.ndarray, beta: float, method: str = "closed_form",
                    coherent_scale: float = 2.0, jumps=None) -> dict:
    """Explicit route through tilded Bohr components and per-operator Phi rules.

    Returns the coherent part ``C`` and the dissipative part ``D``.
    """
    H = np.asarray(H, dtype=complex)
    n = _n_from_dim(H.shape[0])
    gammas = build_majorana_matrices(n)
    jumps = range(1, 2 * n + 1) if jumps is None else jumps
    eig = eigendecompose(H)
    state = gibbs_state(eig, beta)
    labels, freqs = _bohr_grid(eig)
    kern = K.KernelBundle(beta)
    dim = 4 ** n
    D = np.zeros((dim, dim), dtype=complex)
    C = np.zeros((dim, dim), dtype=complex)
    for j in jumps:
        G = eig.to_eigenbasis(gammas[j - 1])
        ks = [k for k in range(len(freqs)) if np.abs(np.where(labels == k, G, 0)).max() > 0]
        nu = freqs[ks]
        # tilded Bohr components Y_k = sigma^{1/4} (gamma_j)_nu sigma^{-1/4} = e^{-beta nu/4} (gamma_j)_nu
        Y = [eig.from_eigenbasis(np.exp(-beta * freqs[k] / 4) * np.where(labels == k, G, 0)) for k in ks]
        Ydag = [y.conj().T for y in Y]
        PL = [phi_left(y, sparse=True) for y in Y]
        PRd = np.array([phi_right(yd) for yd in Ydag])
        g_mm = kern.g(-nu[:, None], -nu[None, :])   # int eta f_hat(w + nu_k) f_hat(w + nu_l)
        g_mp = kern.g(-nu[:, None], nu[None, :])    # int eta f_hat(w + nu_k) f_hat(w - nu_l)
        g_pm = kern.g(nu[:, None], -nu[None, :])
        Ys, Yds = np.array(Y), np.array(Ydag)
        left_prod = np.einsum("ab,aij,bjk->ik", g_mp, Ys, Ys)
        right_prod = np.einsum("ab,aij,bjk->ik", g_pm, Yds, Yds)
        acc = np.tensordot(g_mm, PRd, axes=(1, 0))
        for a in range(len(ks)):
            D += PL[a] @ acc[a]
        D -= 0.5 * phi_left(left_prod)
        D -= 0.5 * phi_right(right_prod)
        B = coherent_scale * coherent_term(j, eig, beta, gammas=gammas)
        Bt = eig.from_eigenbasis(np.exp(-beta * eig.bohr_matrix() / 4) * eig.to_eigenbasis(B))
        C += 1j * (phi_left(Bt) - phi_right(Bt.conj().T))
    return {"C": C, "D": D, "state": state}


def build_parent_hamiltonian(H: np.ndarray, beta: float, H0: np.ndarray | None = None,
                             lind: Lindbladian | None = None, coherent_scale: float = 2.0,
                             U: float = 0.0, method: str = "closed_form", jumps=None) -> ParentHamiltonian:
    """Assemble ``H^parent`` by the superoperator route and split it into four parts.

    The total comes from ``Phi(Gamma L^dag Gamma^{-1})``; the parts come from the
    explicit tilded-jump route applied to ``H`` and to its quadratic part ``H0``.
    ``meta['route_difference']`` records the disagreement between the two routes.
    """
    if lind is None:
        lind = assemble_lindbladian(H, beta, jumps, method=method, coherent_scale=coherent_scale)
    total = parent_from_lindbladian(lind)
    full = parent_explicit(H, beta, method, coherent_scale, jumps)
    free = parent_explicit(H if H0 is None else H0, beta, method, coherent_scale, jumps)
    parts = {
        "C_free": free["C"],
        "D_free": free["D"],
        "C_int": full["C"] - free["C"],
        "D_int": full["D"] - free["D"],
    }
    diff = float(np.abs(total - (full["C"] + full["D"])).max())
    return ParentHamiltonian(total, parts, lind.n_modes, float(beta), float(U),
                             {"route_difference": diff, "lindbladian": lind})


# ---------------------------------------------------------------- closed forms

def _dense(x):
    return x.toarray() if sp.issparse(x) else np.asarray(x)


def rotated_hat_majoranas(Q: np.ndarray, space: AFermionSpace) -> list:
    """a-Majoranas of the canonical modes ``zeta_k = sum_j Q_jk gamma_j``.

    Index ``2k-1`` is the left copy and ``2k`` the right copy of ``zeta_k``.
    """
    m = Q.shape[0]
    left = [_dense(space.hat(2 * j + 1)) for j in range(m)]
    right = [_dense(space.hat(2 * j + 2)) for j in range(m)]
    out = []
    for k in range(m):
        out.append(sum(Q[j, k] * left[j] for j in range(m)))
        out.append(sum(Q[j, k] * right[j] for j in range(m)))
    return out


def single_mode_block(zeta_hats: list, epsilon: float, beta: float, C: float, k: int = 1) -> np.ndarray:
    """Closed-form free parent block for canonical mode ``k`` with single-mode ``epsilon``.

    ``d1 = (zeta_{4k-3} + i zeta_{4k-1}) / 2`` and ``d2 = (zeta_{4k-2} + i zeta_{4k}) / 2``.
    """
    z = zeta_hats
    d1 = (z[4 * k - 4] + 1j * z[4 * k - 2]) / 2
    d2 = (z[4 * k - 3] + 1j * z[4 * k - 1]) / 2
    s, c = np.sinh(2 * beta * epsilon), np.cosh(2 * beta * epsilon)
    I = np.eye(d1.shape[0])
    body = (-1j * d1.conj().T @ d2 + 1j * d2.conj().T @ d1
            - s * d1.conj().T @ d1 + s * d2.conj().T @ d2 - c * I)
    return C * np.exp(-4 * beta ** 2 * epsilon ** 2) * body


def single_mode_closed_form(epsilon: float, beta: float, C: float) -> np.ndarray:
    """Closed form on the 4-dimensional a-space of one source mode."""
    space = build_a_fermion_space(1)
    return single_mode_block(rotated_hat_majoranas(np.eye(2), space), epsilon, beta, C)


def decouple_free_parent(H0, beta: float, C: float) -> dict:
    """Sum of per-mode closed forms in the rotated a-Majorana frame.

    ``H0`` is a :class:`~fermigibbs.models.QuadraticHamiltonian`.  The canonical
    energies ``eps_k`` of ``H0 = i sum eps_k zeta zeta`` enter the single-mode
    formula as ``eps_k / 2``.
    """
    from .models import canonical_form

    cf = canonical_form(H0)
    space = build_a_fermion_space(H0.n_modes)
    z = rotated_hat_majoranas(cf.Q, space)
    blocks = [single_mode_block(z, e / 2, beta, C, k + 1) for k, e in enumerate(cf.epsilons)]
    gaps = [C * np.exp(-4 * beta ** 2 * (e / 2) ** 2) * np.cosh(2 * beta * e / 2) for e in cf.epsilons]
    return {"blocks": blocks, "total": sum(blocks), "gap": float(min(gaps)), "canonical": cf}


def expectation_via_parent(X: np.ndarray, v: np.ndarray) -> complex:
    """``<v, X_sharp v>`` with ``X_sharp = Phi(L_X)``."""
    return complex(np.vdot(v, phi_left(X) @ v))


def top_eigenvector(Hp: np.ndarray, rel_tol: float = 1e-9):
    """Normalised top eigenvector with the ``v_0`` coordinate made real positive."""
    w, V = np.linalg.eigh((Hp + Hp.conj().T) / 2)
    span = max(float(w[-1] - w[0]), 1e-300)
    degenerate = bool(w[-1] - w[-2] < rel_tol * span)
    v = V[:, -1]
    if abs(v[0]) > 1e-14:
        v = v * (abs(v[0]) / v[0])
    return {"vector": v, "eigenvalue": float(w[-1]), "degenerate": degenerate, "spectrum": w}
