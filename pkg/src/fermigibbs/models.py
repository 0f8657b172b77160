"""Quadratic and interacting fermionic Hamiltonians in Majorana form."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.linalg import expm, schur

from .majorana import (
    MajoranaPolynomial,
    ModeLayout,
    build_majorana_matrices,
    check_capacity,
    polynomial_to_matrix,
)

HERMITIAN_TOL = 1e-12


class ModelValidationError(ValueError):
    """Raised when a Hamiltonian specification violates its invariants."""

    def __init__(self, message, offending=()):
        super().__init__(message)
        self.offending = list(offending)


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """``H0 = sum_jk h_jk gamma_j gamma_k + offset``.

    ``h`` is imaginary antisymmetric (hence Hermitian) with zero diagonal.
    """

    h: np.ndarray
    layout: ModeLayout
    offset: float = 0.0

    @property
    def n_modes(self) -> int:
        return self.layout.n_modes

    def dense(self) -> np.ndarray:
        g = build_majorana_matrices(self.n_modes)
        H = np.einsum("jk,jab,kbc->ac", self.h, g, g)
        return H + self.offset * np.eye(H.shape[0])

    def polynomial(self) -> MajoranaPolynomial:
        terms = {(): self.offset}
        m = self.h.shape[0]
        for j in range(m):
            for k in range(m):
                if j != k and self.h[j, k] != 0:
                    terms[(j + 1, k + 1)] = terms.get((j + 1, k + 1), 0) + self.h[j, k]
        return MajoranaPolynomial(self.n_modes, terms)


def build_quadratic(h, layout: ModeLayout, offset: float = 0.0, r0: float | None = None,
                    tol: float = HERMITIAN_TOL) -> QuadraticHamiltonian:
    h = np.asarray(h, dtype=complex)
    m = 2 * layout.n_modes
    check_capacity(layout.n_modes)
    if h.shape != (m, m):
        raise ModelValidationError(f"h must be {m}x{m}, got {h.shape}")
    if np.abs(h - h.conj().T).max(initial=0) > tol:
        bad = np.argwhere(np.abs(h - h.conj().T) > tol)
        raise ModelValidationError("h is not Hermitian", [tuple(b + 1) for b in bad])
    if np.abs(h.real).max(initial=0) > tol:
        bad = np.argwhere(np.abs(h.real) > tol)
        raise ModelValidationError("h has real parts", [tuple(b + 1) for b in bad])
    if np.abs(np.diag(h)).max(initial=0) > tol:
        raise ModelValidationError("h must have zero diagonal")
    r0 = layout.r0 if r0 is None else r0
    dist = layout.majorana_distance_matrix()
    bad = np.argwhere((np.abs(h) > tol) & (dist > r0 + 1e-12))
    if len(bad):
        raise ModelValidationError("h violates locality", [tuple(b + 1) for b in bad])
    return QuadraticHamiltonian(1j * h.imag, layout, float(offset))


@dataclass(frozen=True)
class InteractionSpec:
    terms: MajoranaPolynomial
    U: float
    r0: float

    def __post_init__(self):
        if self.terms.terms and any(len(m) % 2 for m in self.terms.terms):
            raise ModelValidationError("interaction must be parity even")
        if self.U < 0:
            raise ModelValidationError("interaction strength U must be nonnegative")

    def dense(self) -> np.ndarray:
        return polynomial_to_matrix(self.terms)


@dataclass(frozen=True)
class Model:
    """A Hamiltonian ``H = H0 + V`` with its layout."""

    quadratic: QuadraticHamiltonian
    interaction: InteractionSpec | None = None
    name: str = "model"
    params: dict = field(default_factory=dict)

    @property
    def layout(self) -> ModeLayout:
        return self.quadratic.layout

    @property
    def n_modes(self) -> int:
        return self.quadratic.n_modes

    def free_dense(self) -> np.ndarray:
        return self.quadratic.dense()

    def dense(self) -> np.ndarray:
        H = self.quadratic.dense()
        if self.interaction is not None and self.interaction.terms.terms:
            H = H + self.interaction.dense()
        return H

    def polynomial(self) -> MajoranaPolynomial:
        p = self.quadratic.polynomial()
        if self.interaction is not None:
            p = p + self.interaction.terms
        return p


@dataclass(frozen=True)
class CanonicalForm:
    """``gamma = Q zeta`` and ``H0 - offset = i sum_j eps_j zeta_{2j-1} zeta_{2j}``."""

    Q: np.ndarray
    epsilons: np.ndarray


def canonical_form(H0: QuadraticHamiltonian) -> CanonicalForm:
    a = H0.h.imag
    m = a.shape[0]
    T, Z = schur(a, output="real")
    cols, lams, zero_cols = [], [], []
    k = 0
    while k < m:
        if k + 1 < m and abs(T[k + 1, k]) > 1e-14:
            lam = T[k, k + 1]
            if abs(T[k, k + 1] + T[k + 1, k]) > 1e-8 * max(1.0, abs(lam)):
                raise np.linalg.LinAlgError("antisymmetric reduction failed; Schur block not skew")
            c1, c2 = Z[:, k], Z[:, k + 1]
            if lam < 0:
                c1, c2, lam = c2, c1, -lam
            cols += [c1, c2]
            lams.append(lam)
            k += 2
        else:
            zero_cols.append(Z[:, k])
            k += 1
    if len(zero_cols) % 2:
        raise np.linalg.LinAlgError("odd number of zero modes in antisymmetric reduction")
    for i in range(0, len(zero_cols), 2):
        cols += [zero_cols[i], zero_cols[i + 1]]
        lams.append(0.0)
    Q = np.column_stack(cols)
    # sum_jk a_jk gamma_j gamma_k = 2 sum_k lam_k zeta_{2k-1} zeta_{2k}
    return CanonicalForm(Q, 2 * np.array(lams))


def free_heisenberg(H0: QuadraticHamiltonian, l: int, t: float) -> np.ndarray:
    """Coefficients of ``e^{i H0 t} gamma_l e^{-i H0 t}`` over ``gamma_j`` (``l`` 1-based)."""
    return expm(4j * H0.h * t)[:, l - 1]


# ---------------------------------------------------------------- model families

def _hop(i: int, j: int, amp: float) -> dict:
    # c_i^dag c_j + h.c. = (i/2)(a_i b_j - b_i a_j), Majoranas a = 2m+1, b = 2m+2
    ai, bi, aj, bj = 2 * i + 1, 2 * i + 2, 2 * j + 1, 2 * j + 2
    return {(ai, bj): 0.5j * amp, (bi, aj): -0.5j * amp}


def _number(i: int, amp: float) -> dict:
    # n_i = (1 + i a_i b_i) / 2
    return {(): 0.5 * amp, (2 * i + 1, 2 * i + 2): 0.5j * amp}


def _merge(target: dict, extra: dict):
    for k, v in extra.items():
        target[k] = target.get(k, 0) + v


def _split_polynomial(p: MajoranaPolynomial, layout: ModeLayout, U: float, r0: float, name, params):
    m = 2 * layout.n_modes
    h = np.zeros((m, m), dtype=complex)
    offset = 0.0
    quartic = {}
    for mono, c in p.terms.items():
        if len(mono) == 0:
            offset += c.real
        elif len(mono) == 2:
            j, k = mono
            h[j - 1, k - 1] += c / 2
            h[k - 1, j - 1] -= c / 2
        else:
            quartic[mono] = c
    quad = build_quadratic(h, layout, offset, r0=r0)
    inter = InteractionSpec(MajoranaPolynomial(layout.n_modes, quartic), U, r0) if quartic else None
    return Model(quad, inter, name, params)


def _neighbors(layout: ModeLayout, cyclic_dims=None):
    pairs = []
    for x, y in combinations(range(layout.n_sites), 2):
        if abs(layout.distance(x, y) - 1.0) < 1e-12:
            pairs.append((x, y))
    return pairs


def build_fermi_hubbard(dims, U: float, mu: float = 0.0, hopping: float = 1.0) -> Model:
    """Spinful Hubbard model on an open rectangular lattice.

    Modes are ordered site-major ``(site, up), (site, down)``; both spins share
    the site coordinate.
    """
    dims = tuple(int(d) for d in np.atleast_1d(dims))
    n_sites = int(np.prod(dims))
    check_capacity(2 * n_sites)
    layout = ModeLayout.lattice(dims, modes_per_site=2, r0=1.0)
    terms = {}
    for x, y in _neighbors(layout):
        for s in range(2):
            _merge(terms, _hop(2 * x + s, 2 * y + s, -hopping))
    for x in range(n_sites):
        for s in range(2):
            _merge(terms, _number(2 * x + s, -mu))
        up, dn = 2 * x, 2 * x + 1
        # U (n_up - 1/2)(n_dn - 1/2) = -(U/4) a_up b_up a_dn b_dn
        _merge(terms, {(2 * up + 1, 2 * up + 2, 2 * dn + 1, 2 * dn + 2): -U / 4})
    p = MajoranaPolynomial(layout.n_modes, terms)
    return _split_polynomial(p, layout, abs(U), 1.0, "hubbard", {"dims": dims, "U": U, "mu": mu})


def build_spinless_chain(n_sites: int, U: float = 0.0, mu: float = 0.0, hopping: float = 1.0) -> Model:
    """Open spinless chain with nearest-neighbour density interaction.

    ``H = -t sum (c_i^dag c_{i+1} + h.c.) - mu sum n_i + U sum (n_i - 1/2)(n_{i+1} - 1/2)``.
    """
    check_capacity(n_sites)
    layout = ModeLayout.chain(n_sites, r0=1.0)
    terms = {}
    for i in range(n_sites - 1):
        _merge(terms, _hop(i, i + 1, -hopping))
        # (n_i - 1/2)(n_j - 1/2) = -(1/4) a_i b_i a_j b_j
        _merge(terms, {(2 * i + 1, 2 * i + 2, 2 * i + 3, 2 * i + 4): -U / 4})
    for i in range(n_sites):
        _merge(terms, _number(i, -mu))
    p = MajoranaPolynomial(layout.n_modes, terms)
    return _split_polynomial(p, layout, abs(U), 1.0, "chain", {"n_sites": n_sites, "U": U, "mu": mu})


def build_single_mode(epsilon: float) -> Model:
    """``H0 = i eps (gamma_1 gamma_2 - gamma_2 gamma_1)`` on one Dirac mode."""
    layout = ModeLayout.chain(1)
    h = np.array([[0, 1j * epsilon], [-1j * epsilon, 0]])
    return Model(build_quadratic(h, layout), None, "single_mode", {"epsilon": epsilon})


def build_custom(layout: ModeLayout, polynomial: MajoranaPolynomial, r0: float | None = None) -> Model:
    r0 = layout.r0 if r0 is None else r0
    quartic_norm = 0.0
    for mono, c in polynomial.terms.items():
        if len(mono) > 2:
            quartic_norm = max(quartic_norm, abs(c))
    return _split_polynomial(polynomial, layout, quartic_norm, r0, "custom", {})


def random_quadratic(layout: ModeLayout, rng: np.random.Generator, r0: float | None = None) -> QuadraticHamiltonian:
    """Random local imaginary-antisymmetric ``h`` with entries of order one."""
    r0 = layout.r0 if r0 is None else r0
    m = 2 * layout.n_modes
    a = rng.normal(size=(m, m))
    a = (a - a.T) / 2
    a[layout.majorana_distance_matrix() > r0 + 1e-12] = 0
    return build_quadratic(1j * a, layout, r0=r0)


# ---------------------------------------------------------------- locality

def _enclosing_ball(sites, layout: ModeLayout):
    best = None
    for x in range(layout.n_sites):
        r = max(layout.distance(x, s) for s in sites)
        if best is None or r < best[1] - 1e-12:
            best = (x, r)
    return best


def locality_audit(p: MajoranaPolynomial, layout: ModeLayout, r0: float | None = None) -> dict:
    """Group monomials by smallest enclosing site-centred ball and report norms.

    The identity monomial is ignored.
    """
    r0 = layout.r0 if r0 is None else r0
    balls, violations = {}, []
    for mono, c in p.terms.items():
        if not mono:
            continue
        sites = {layout.majorana_site(j) for j in mono}
        center, radius = _enclosing_ball(sites, layout)
        if radius > r0 + 1e-12:
            violations.append({"monomial": mono, "radius": radius})
        key = (center, tuple(sorted(sites)))
        balls.setdefault(key, {})[mono] = c
    report = []
    for (center, sites), terms in balls.items():
        norm = float(np.linalg.norm(polynomial_to_matrix(MajoranaPolynomial(p.n_modes, terms)), 2))
        radius = _enclosing_ball(set(sites), layout)[1]
        report.append({"center": center, "sites": sites, "radius": radius, "norm": norm})
    return {
        "balls": report,
        "max_ball_norm": max((b["norm"] for b in report), default=0.0),
        "violations": violations,
    }
