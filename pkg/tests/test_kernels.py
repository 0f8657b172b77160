import numpy as np
import pytest
from scipy import integrate

from fermigibbs import kernels as K


def ft(func, omega, half_width=40.0, points=40001):
    """Reference transform (2 pi)^{-1/2} int e^{-i w t} f(t) dt on a grid."""
    t = np.linspace(-half_width, half_width, points)
    return integrate.simpson(func(t) * np.exp(-1j * omega * t), x=t) / np.sqrt(2 * np.pi)


def test_f_hat_symmetry_and_normalization():
    w = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(K.f_hat(w, 1.3), K.f_hat(-w, 1.3))
    beta = 0.8
    grid = np.linspace(-40, 40, 40001)
    assert integrate.simpson(K.f_hat(grid, beta) ** 2, x=grid) == pytest.approx(1, abs=1e-10)
    assert integrate.simpson(K.f_time(grid, beta) ** 2, x=grid) == pytest.approx(1, abs=1e-10)


@pytest.mark.parametrize("omega", [0.0, 0.7, -1.5])
def test_f_hat_matches_quadrature(omega):
    t = np.linspace(-8, 8, 4001)
    val = integrate.simpson(K.f_time(t, 1.0) * np.exp(-1j * omega * t), x=t) / np.sqrt(2 * np.pi)
    assert abs(val - K.f_hat(omega, 1.0)) < 1e-10


def test_eta_unit_at_minus_inverse_beta():
    for beta in (0.5, 1.0, 2.0):
        assert K.eta(-1 / beta, beta) == 1.0


@pytest.mark.parametrize("omega", [0.0, 0.5, -2.0, 3.0])
def test_b2_hat_matches_quadrature(omega):
    assert abs(ft(K.b2_time, omega, 8, 8001) - K.b2_hat(omega)) < 1e-12


@pytest.mark.parametrize("omega", [0.0, 0.6, -1.4])
def test_b1_hat_matches_quadrature(omega):
    val = ft(lambda t: K.b1_time(t), omega, 12, 2401)
    assert abs(val - K.b1_hat(omega)) < 1e-8


def test_b1_hat_zero_and_integral_of_b1():
    assert abs(K.b1_hat(0.0)) < 1e-15
    t = np.linspace(-12, 12, 2401)
    assert abs(integrate.simpson(K.b1_time(t), x=t)) < 1e-10


def test_dissipator_weight_eta_off_unit_diagonal():
    assert K.dissipator_weight(0.4, 0.4, 1.0, eta_on=False) == pytest.approx(1)
    assert K.dissipator_weight_quad(0.4, 0.4, 1.0, eta_on=False) == pytest.approx(1, abs=1e-10)


def test_dissipator_weight_symmetric_and_matches_quadrature(rng):
    for _ in range(5):
        a, b = rng.normal(size=2) * 2
        beta = rng.uniform(0.5, 2)
        assert K.dissipator_weight(a, b, beta) == pytest.approx(np.conj(K.dissipator_weight(b, a, beta)))
        assert abs(K.dissipator_weight(a, b, beta) - K.dissipator_weight_quad(a, b, beta)) < 1e-8
    assert abs(K.dissipator_weight(0.5, -0.5, 1.0) - K.dissipator_weight_quad(0.5, -0.5, 1.0)) < 1e-8


def test_coherent_weight_against_time_domain():
    # 2-D integral of b1(t) b2(t') e^{i beta (nu1 (t'-t) - nu2 (t+t'))} evaluated as an outer product
    t = np.linspace(-8, 8, 1601)
    b1 = K.b1_time(t)
    b2 = K.b2_time(t)
    for nu1, nu2, beta in [(0.3, -0.2, 1.0), (0.5, 0.5, 2.0), (-1.0, 0.25, 0.5)]:
        phase = np.exp(1j * beta * (nu1 * (t[None, :] - t[:, None]) - nu2 * (t[:, None] + t[None, :])))
        val = integrate.simpson(integrate.simpson(b1[:, None] * b2[None, :] * phase, x=t, axis=1), x=t)
        assert abs(val - K.coherent_weight(nu1, nu2, beta)) < 1e-8


def test_F1_check_closed_vs_quadrature():
    for beta in (0.5, 1.0, 2.0):
        for t in (-1.0, 0.0, 0.8):
            for w in (-1.0, 0.0, 1.5):
                assert abs(K.F1_check_closed(t, w, beta) - K.F1_check_quad(t, w, beta)) < 1e-7


def test_kernel_bundle_rejects_bad_beta():
    with pytest.raises(ValueError):
        K.KernelBundle(-1.0)
    kb = K.KernelBundle(1.0, eta_on=False)
    np.testing.assert_allclose(kb.eta(np.array([0.3, -2])), 1.0)
