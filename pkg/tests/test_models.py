import numpy as np
import pytest
from scipy.linalg import expm

from conftest import jw_oracle
from fermigibbs.majorana import MajoranaPolynomial, ModeLayout, polynomial_to_matrix
from fermigibbs.models import (
    ModelValidationError,
    build_custom,
    build_fermi_hubbard,
    build_quadratic,
    build_single_mode,
    build_spinless_chain,
    canonical_form,
    free_heisenberg,
    locality_audit,
    random_quadratic,
)


def annihilators(n):
    g = jw_oracle(n)
    return [(g[2 * j] + 1j * g[2 * j + 1]) / 2 for j in range(n)]


def hubbard_oracle(n_sites, U, mu, t=1.0):
    c = annihilators(2 * n_sites)
    d = 4 ** n_sites
    num = [ci.conj().T @ ci for ci in c]
    H = np.zeros((d, d), dtype=complex)
    for x in range(n_sites - 1):
        for s in range(2):
            a, b = c[2 * x + s], c[2 * (x + 1) + s]
            H -= t * (a.conj().T @ b + b.conj().T @ a)
    I = np.eye(d)
    for x in range(n_sites):
        H -= mu * (num[2 * x] + num[2 * x + 1])
        H += U * (num[2 * x] - I / 2) @ (num[2 * x + 1] - I / 2)
    return H


def test_annihilator_convention():
    c = annihilators(1)[0]
    np.testing.assert_allclose(c, [[0, 1], [0, 0]])


def test_zero_quadratic():
    q = build_quadratic(np.zeros((4, 4)), ModeLayout.chain(2))
    assert np.abs(q.dense()).max() == 0


def test_single_mode_spectrum():
    eps = 0.7
    m = build_single_mode(eps)
    np.testing.assert_allclose(np.linalg.eigvalsh(m.dense()), [-2 * eps, 2 * eps], atol=1e-14)


def test_quadratic_validation_names_entries():
    lay = ModeLayout.chain(1)
    with pytest.raises(ModelValidationError):
        build_quadratic(np.array([[0, 1], [1, 0]]), lay)
    with pytest.raises(ModelValidationError):
        build_quadratic(np.array([[1j, 0], [0, -1j]]), lay)
    lay3 = ModeLayout.chain(3)
    h = np.zeros((6, 6), dtype=complex)
    h[0, 5], h[5, 0] = 1j, -1j
    with pytest.raises(ModelValidationError) as exc:
        build_quadratic(h, lay3)
    assert (1, 6) in exc.value.offending


@pytest.mark.parametrize("U,mu", [(1.0, 0.0), (0.0, 1.0), (0.4, 0.3)])
def test_single_site_hubbard_matches_oracle(U, mu):
    m = build_fermi_hubbard((1,), U, mu)
    np.testing.assert_allclose(m.dense(), hubbard_oracle(1, U, mu), atol=1e-14)


def test_single_site_hubbard_spectra():
    np.testing.assert_allclose(np.linalg.eigvalsh(build_fermi_hubbard((1,), 1.0).dense()),
                               [-0.25, -0.25, 0.25, 0.25], atol=1e-14)
    np.testing.assert_allclose(np.linalg.eigvalsh(build_fermi_hubbard((1,), 0.0, 1.0).dense()),
                               [-2, -1, -1, 0], atol=1e-14)


def test_two_site_hubbard_matches_oracle():
    m = build_fermi_hubbard((2,), 0.5, 0.3)
    np.testing.assert_allclose(m.dense(), hubbard_oracle(2, 0.5, 0.3), atol=1e-13)
    # quadratic block of the U=0 model equals the hopping plus chemical potential part
    m0 = build_fermi_hubbard((2,), 0.0, 0.3)
    np.testing.assert_allclose(m.free_dense(), m0.dense(), atol=1e-13)


def test_two_site_single_particle_energies():
    m = build_fermi_hubbard((2,), 0.0)
    c = annihilators(4)
    one = [c[0].conj().T @ c[0], c[2].conj().T @ c[2]]
    # one up-electron sector: spectrum of the hopping matrix is {-1, 1}
    E, V = np.linalg.eigh(m.dense())
    N_up = one[0] + one[1]
    N_dn = sum(ci.conj().T @ ci for ci in (c[1], c[3]))
    mask = (np.abs(np.diag(V.conj().T @ N_up @ V) - 1) < 1e-9) & (np.abs(np.diag(V.conj().T @ N_dn @ V)) < 1e-9)
    np.testing.assert_allclose(np.sort(E[mask]), [-1, 1], atol=1e-12)


def test_spinless_chain_oracle():
    U, mu = 0.3, 0.2
    m = build_spinless_chain(3, U, mu)
    c = annihilators(3)
    n = [ci.conj().T @ ci for ci in c]
    I = np.eye(8)
    H = sum(-(c[i].conj().T @ c[i + 1] + c[i + 1].conj().T @ c[i]) for i in range(2))
    H = H - mu * sum(n) + U * sum((n[i] - I / 2) @ (n[i + 1] - I / 2) for i in range(2))
    np.testing.assert_allclose(m.dense(), H, atol=1e-14)


def test_canonical_form_zero_and_single_mode():
    cf = canonical_form(build_quadratic(np.zeros((2, 2)), ModeLayout.chain(1)))
    np.testing.assert_allclose(cf.epsilons, [0.0])
    eps = 0.4
    cf = canonical_form(build_single_mode(eps).quadratic)
    assert cf.epsilons[0] == pytest.approx(2 * eps)
    assert abs(abs(np.linalg.det(cf.Q)) - 1) < 1e-12


def test_canonical_form_reconstructs_and_bounds(rng):
    lay = ModeLayout.chain(3)
    q = random_quadratic(lay, rng)
    cf = canonical_form(q)
    np.testing.assert_allclose(cf.Q.T @ cf.Q, np.eye(6), atol=1e-12)
    # many-body spectrum of i sum eps zeta zeta is {sum +-eps_k}, symmetric around the offset
    E = np.linalg.eigvalsh(q.dense())
    signs = np.array([[(-1) ** ((k >> i) & 1) for i in range(3)] for k in range(8)])
    np.testing.assert_allclose(np.sort(E), np.sort(signs @ cf.epsilons), atol=1e-12)
    assert np.max(np.abs(cf.epsilons)) <= np.linalg.norm(q.dense(), 2) + 1e-12


def test_free_heisenberg_cases():
    m = build_spinless_chain(2)
    np.testing.assert_allclose(free_heisenberg(m.quadratic, 2, 0.0), np.eye(4)[1])
    q0 = build_quadratic(np.zeros((4, 4)), ModeLayout.chain(2))
    np.testing.assert_allclose(free_heisenberg(q0, 3, 1.3), np.eye(4)[2])
    g = jw_oracle(2)
    H = m.dense()
    t = 0.7
    for l in range(1, 5):
        U = expm(1j * H * t)
        target = U @ g[l - 1] @ U.conj().T
        coef = free_heisenberg(m.quadratic, l, t)
        np.testing.assert_allclose(sum(c * gj for c, gj in zip(coef, g)), target, atol=1e-10)


def test_locality_audit_cases():
    lay = ModeLayout.chain(3)
    rep = locality_audit(MajoranaPolynomial(3, {(1, 2): 1j}), lay)
    assert len(rep["balls"]) == 1 and rep["balls"][0]["radius"] == 0 and not rep["violations"]
    rep = locality_audit(MajoranaPolynomial(3, {(1, 5): 1j}), lay, r0=0.5)
    assert rep["violations"]
    m = build_fermi_hubbard((2,), 0.8)
    rep = locality_audit(m.interaction.terms, m.layout)
    assert rep["max_ball_norm"] == pytest.approx(0.8 / 4, rel=1e-12)


def test_custom_model_splits_quadratic_and_quartic():
    lay = ModeLayout.chain(2)
    p = MajoranaPolynomial(2, {(1, 2): 0.5j, (3, 4): -0.2j, (1, 2, 3, 4): 0.1})
    m = build_custom(lay, p)
    np.testing.assert_allclose(m.dense(), polynomial_to_matrix(p), atol=1e-14)
    np.testing.assert_allclose(m.interaction.dense(), polynomial_to_matrix(MajoranaPolynomial(2, {(1, 2, 3, 4): 0.1})))


def test_interaction_must_be_even():
    from fermigibbs.models import InteractionSpec

    with pytest.raises(ModelValidationError):
        InteractionSpec(MajoranaPolynomial(2, {(1, 2, 3): 1.0}), 1.0, 1.0)
    with pytest.raises(ModelValidationError):
        InteractionSpec(MajoranaPolynomial(2, {(1, 2, 3, 4): 1.0}), -1.0, 1.0)
