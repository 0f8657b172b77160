"""Majorana operator algebra on a few Dirac modes.

Dense representation uses the Jordan-Wigner chain: for Dirac mode ``j``
(1-based) the pair ``gamma_{2j-1}, gamma_{2j}`` is ``Z...Z X I...I`` and
``Z...Z Y I...I``.  Monomials ``gamma_1^{a_1} ... gamma_{2n}^{a_{2n}}`` are
addressed by the integer ``sum_j a_j 2^{j-1}`` (bit ``j-1`` <-> Majorana ``j``),
so index 0 is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

MAX_MODES = 7
PRUNE_TOL = 1e-14

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class CapacityError(ValueError):
    """Requested system exceeds the dense desk-scale capacity."""


def check_capacity(n_modes: int, max_modes: int = MAX_MODES) -> None:
    if n_modes < 1:
        raise ValueError(f"need at least one Dirac mode, got {n_modes}")
    if n_modes > max_modes:
        raise CapacityError(
            f"{n_modes} Dirac modes exceeds the configured maximum of {max_modes}")


@dataclass(frozen=True)
class ModeLayout:
    """Placement of Dirac modes on a lattice.

    Each Dirac mode ``m`` (0-based) sits on site ``mode_site[m]``; Majoranas
    ``2m+1`` and ``2m+2`` (1-based) inherit that site.  Several modes may share
    one site (e.g. spin up/down of a Hubbard site).
    """

    site_coords: np.ndarray
    mode_site: tuple
    r0: float = 1.0

    def __post_init__(self):
        coords = np.atleast_2d(np.asarray(self.site_coords, dtype=float))
        object.__setattr__(self, "site_coords", coords)
        object.__setattr__(self, "mode_site", tuple(int(s) for s in self.mode_site))
        if any(s < 0 or s >= coords.shape[0] for s in self.mode_site):
            raise ValueError("mode_site refers to a nonexistent site")

    @classmethod
    def chain(cls, n_sites: int, modes_per_site: int = 1, r0: float = 1.0) -> "ModeLayout":
        return cls.lattice((n_sites,), modes_per_site, r0)

    @classmethod
    def lattice(cls, dims: Iterable[int], modes_per_site: int = 1, r0: float = 1.0) -> "ModeLayout":
        dims = tuple(int(d) for d in dims)
        coords = np.array(list(np.ndindex(*dims)), dtype=float)
        mode_site = [s for s in range(len(coords)) for _ in range(modes_per_site)]
        return cls(coords, tuple(mode_site), r0)

    @property
    def n_modes(self) -> int:
        return len(self.mode_site)

    @property
    def n_sites(self) -> int:
        return self.site_coords.shape[0]

    @property
    def lattice_dim(self) -> int:
        return self.site_coords.shape[1]

    def majorana_site(self, j: int) -> int:
        """Site of Majorana ``j`` (1-based)."""
        return self.mode_site[(j - 1) // 2]

    def distance(self, x: int, y: int) -> float:
        return float(np.linalg.norm(self.site_coords[x] - self.site_coords[y]))

    def majorana_distance(self, j: int, k: int) -> float:
        return self.distance(self.majorana_site(j), self.majorana_site(k))

    def majorana_distance_matrix(self) -> np.ndarray:
        sites = [self.majorana_site(j) for j in range(1, 2 * self.n_modes + 1)]
        c = self.site_coords[sites]
        return np.linalg.norm(c[:, None, :] - c[None, :, :], axis=-1)


@lru_cache(maxsize=None)
def _majoranas(n: int) -> np.ndarray:
    out = np.empty((2 * n, 2 ** n, 2 ** n), dtype=complex)
    for j in range(n):
        left = np.eye(1, dtype=complex)
        for _ in range(j):
            left = np.kron(left, _Z)
        right = np.eye(2 ** (n - j - 1), dtype=complex)
        out[2 * j] = np.kron(np.kron(left, _X), right)
        out[2 * j + 1] = np.kron(np.kron(left, _Y), right)
    out.setflags(write=False)
    return out


def build_majorana_matrices(layout_or_n, max_modes: int = MAX_MODES) -> np.ndarray:
    """Dense Majoranas, shape ``(2n, 2^n, 2^n)``; entry ``j-1`` is ``gamma_j``."""
    n = layout_or_n.n_modes if isinstance(layout_or_n, ModeLayout) else int(layout_or_n)
    check_capacity(n, max_modes)
    return _majoranas(n)


def parity_operator(n: int) -> np.ndarray:
    """``i^n gamma_1 gamma_2 ... gamma_{2n}``."""
    g = build_majorana_matrices(n)
    p = np.eye(2 ** n, dtype=complex)
    for gj in g:
        p = p @ gj
    return (1j ** n) * p


# ---------------------------------------------------------------- monomials

def bits_to_indices(bits: int) -> tuple:
    """Majorana indices (1-based, increasing) of the monomial with index ``bits``."""
    out = []
    j = 1
    while bits:
        if bits & 1:
            out.append(j)
        bits >>= 1
        j += 1
    return tuple(out)


def indices_to_bits(indices: Iterable[int]) -> int:
    b = 0
    for j in indices:
        b |= 1 << (j - 1)
    return b


@lru_cache(maxsize=None)
def monomial_degrees(n: int) -> np.ndarray:
    deg = np.array([bin(b).count("1") for b in range(4 ** n)])
    deg.setflags(write=False)
    return deg


def even_indices(n: int) -> np.ndarray:
    return np.flatnonzero(monomial_degrees(n) % 2 == 0)


def odd_indices(n: int) -> np.ndarray:
    return np.flatnonzero(monomial_degrees(n) % 2 == 1)


@lru_cache(maxsize=8)
def monomial_matrices(n: int) -> np.ndarray:
    """All ``4^n`` ordered monomials as dense matrices, indexed by bit pattern."""
    check_capacity(n)
    if n > 5:
        raise CapacityError("materialising every monomial is limited to n <= 5")
    g = _majoranas(n)
    d = 2 ** n
    out = np.empty((4 ** n, d, d), dtype=complex)
    out[0] = np.eye(d)
    for b in range(1, 4 ** n):
        top = b.bit_length() - 1
        out[b] = out[b ^ (1 << top)] @ g[top]
    out.setflags(write=False)
    return out


@lru_cache(maxsize=8)
def _basis_change(n: int):
    # rows of V are vec(M_alpha) in row-major order; X = sum_a c_a M_a  <=>  vec X = V^T c
    m = monomial_matrices(n)
    v = m.reshape(4 ** n, -1)
    to_mon = v.conj() / 2 ** n
    from_mon = np.ascontiguousarray(v.T)
    to_mon.setflags(write=False)
    from_mon.setflags(write=False)
    return to_mon, from_mon


def monomial_vectorize(X: np.ndarray) -> np.ndarray:
    """Coefficients ``c_alpha`` with ``X = sum_alpha c_alpha gamma^alpha``.

    The map is an isometry from ``(1/2^n) Tr[X^dag Y]`` to the Euclidean inner
    product.
    """
    X = np.asarray(X)
    n = _n_from_dim(X.shape[-1])
    to_mon, _ = _basis_change(n)
    return to_mon @ X.reshape(-1)


def monomial_devectorize(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c)
    n = _n_from_dim(int(round(np.sqrt(c.shape[0]))))
    _, from_mon = _basis_change(n)
    d = 2 ** n
    return (from_mon @ c).reshape(d, d)


def superop_to_monomial(S_vec: np.ndarray, n: int) -> np.ndarray:
    """Convert a row-major vec superoperator (``vec(AXB) = (A kron B^T) vec X``)."""
    to_mon, from_mon = _basis_change(n)
    return to_mon @ S_vec @ from_mon


def superop_from_monomial(S_mon: np.ndarray, n: int) -> np.ndarray:
    to_mon, from_mon = _basis_change(n)
    # from_mon @ to_mon == identity on operator space
    return from_mon @ S_mon @ to_mon


def left_superop(A: np.ndarray) -> np.ndarray:
    """``L_A`` in the monomial basis."""
    n = _n_from_dim(A.shape[0])
    return superop_to_monomial(np.kron(A, np.eye(A.shape[0])), n)


def right_superop(A: np.ndarray) -> np.ndarray:
    """``R_A`` in the monomial basis."""
    n = _n_from_dim(A.shape[0])
    return superop_to_monomial(np.kron(np.eye(A.shape[0]), A.T), n)


def _n_from_dim(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if 2 ** n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def operator_norm(X: np.ndarray) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(np.asarray(X), 2))


def linear_combination_norm(x, y) -> float:
    """Closed-form norm of ``sum_j x_j gamma_j + i sum_j y_j gamma_j`` for real x, y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    xx, yy, xy = x @ x, y @ y, x @ y
    cross = max(xx * yy - xy ** 2, 0.0)
    return float(np.sqrt(xx + yy + 2 * np.sqrt(cross)))


def parity_split(X: np.ndarray):
    """Split ``X`` into its even- and odd-degree monomial parts."""
    c = monomial_vectorize(X)
    n = _n_from_dim(np.asarray(X).shape[0])
    odd = monomial_degrees(n) % 2 == 1
    ce = np.where(odd, 0, c)
    co = np.where(odd, c, 0)
    return monomial_devectorize(ce), monomial_devectorize(co)


def operator_parity(X: np.ndarray, tol: float = 1e-12):
    """Return 0 (even), 1 (odd) or None (mixed or zero)."""
    even, odd = parity_split(X)
    ne, no = np.linalg.norm(even), np.linalg.norm(odd)
    if no <= tol and ne > tol:
        return 0
    if ne <= tol and no > tol:
        return 1
    return None


# ---------------------------------------------------------------- polynomials

def canonicalize_monomial(indices: Iterable[int]):
    """Sort a Majorana word into increasing order using ``gamma_j^2 = 1``.

    Returns ``(sign, canonical_indices)``.
    """
    word = list(indices)
    sign = 1
    # bubble sort; each adjacent swap of distinct Majoranas flips the sign
    for i in range(len(word)):
        for k in range(len(word) - 1 - i):
            if word[k] > word[k + 1]:
                word[k], word[k + 1] = word[k + 1], word[k]
                sign = -sign
    out = []
    for j in word:
        if out and out[-1] == j:
            out.pop()
        else:
            out.append(j)
    return sign, tuple(out)


@dataclass(frozen=True)
class MajoranaPolynomial:
    """Sparse sum of canonical Majorana monomials with complex coefficients."""

    n_modes: int
    terms: Mapping = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for mono, coeff in dict(self.terms).items():
            sign, canon = canonicalize_monomial(mono)
            if any(j < 1 or j > 2 * self.n_modes for j in canon):
                raise IndexError(f"monomial {mono} out of range for {self.n_modes} modes")
            clean[canon] = clean.get(canon, 0) + sign * complex(coeff)
        clean = {m: c for m, c in clean.items() if abs(c) > PRUNE_TOL}
        object.__setattr__(self, "terms", clean)

    @classmethod
    def from_matrix(cls, X: np.ndarray, tol: float = PRUNE_TOL) -> "MajoranaPolynomial":
        c = monomial_vectorize(X)
        n = _n_from_dim(np.asarray(X).shape[0])
        return cls(n, {bits_to_indices(b): c[b] for b in np.flatnonzero(np.abs(c) > tol)})

    def __add__(self, other):
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return MajoranaPolynomial(self.n_modes, terms)

    def __mul__(self, other):
        if isinstance(other, MajoranaPolynomial):
            terms = {}
            for m1, c1 in self.terms.items():
                for m2, c2 in other.terms.items():
                    s, m = canonicalize_monomial(m1 + m2)
                    terms[m] = terms.get(m, 0) + s * c1 * c2
            return MajoranaPolynomial(self.n_modes, terms)
        return MajoranaPolynomial(self.n_modes, {m: c * other for m, c in self.terms.items()})

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (-1) * other

    def dagger(self) -> "MajoranaPolynomial":
        # (gamma_{j1}...gamma_{jk})^dag = gamma_{jk}...gamma_{j1} = (-1)^{k(k-1)/2} gamma_{j1}...gamma_{jk}
        return MajoranaPolynomial(self.n_modes, {
            m: np.conj(c) * (-1) ** (len(m) * (len(m) - 1) // 2) for m, c in self.terms.items()})

    def degrees(self) -> set:
        return {len(m) for m in self.terms}

    @property
    def parity(self):
        par = {d % 2 for d in self.degrees()}
        return par.pop() if len(par) == 1 else None

    def support(self) -> set:
        return {j for m in self.terms for j in m}

    def to_matrix(self, gammas: np.ndarray | None = None) -> np.ndarray:
        return polynomial_to_matrix(self, gammas)


def polynomial_to_matrix(p: MajoranaPolynomial, gammas: np.ndarray | None = None) -> np.ndarray:
    if gammas is None:
        gammas = build_majorana_matrices(p.n_modes)
    d = gammas.shape[-1]
    out = np.zeros((d, d), dtype=complex)
    for mono, coeff in p.terms.items():
        if mono and max(mono) > len(gammas):
            raise IndexError(f"monomial {mono} exceeds {len(gammas)} Majoranas")
        term = np.eye(d, dtype=complex)
        for j in mono:
            term = term @ gammas[j - 1]
        out += coeff * term
    return out


# ---------------------------------------------------------------- signed permutations

def product_sign(a, b):
    """Sign ``s`` in ``gamma^a gamma^b = s gamma^{a xor b}`` for bit-pattern indices."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    a, b = np.broadcast_arrays(a, b)
    width = int(max(a.max(initial=0), b.max(initial=0))).bit_length()
    swaps = np.zeros(a.shape, dtype=np.int64)
    for i in range(width):
        # each gamma_i of the right factor passes the left factor's gammas with larger index
        swaps += ((b >> i) & 1) * np.bitwise_count(a >> (i + 1))
    return np.where(swaps % 2, -1, 1).astype(np.int8)


@lru_cache(maxsize=4)
def sign_table(n: int) -> np.ndarray:
    """``sign_table(n)[a, b] = product_sign(a, b)`` for all monomials on ``n`` modes."""
    check_capacity(n)
    idx = np.arange(4 ** n)
    t = product_sign(idx[:, None], idx[None, :])
    t.setflags(write=False)
    return t
