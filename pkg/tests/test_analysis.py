import numpy as np
import pytest

from fermigibbs import analysis as A
from fermigibbs.lindblad import assemble_lindbladian
from fermigibbs.majorana import build_majorana_matrices
from fermigibbs.models import build_fermi_hubbard, build_spinless_chain
from fermigibbs.thirdquant import build_parent_hamiltonian, decouple_free_parent

C_SINGLE = np.sqrt(2) * np.exp(-0.25)


def test_spectral_gap_trivial():
    r = A.spectral_gap(np.diag([0.0, -1.0]))
    assert r.gap == 1 and r.top_eigenvalue == 0 and not r.degenerate
    assert A.spectral_gap(np.diag([0.0, 0.0, -1.0])).degenerate
    with pytest.raises(ValueError):
        A.spectral_gap(np.array([[0, 1], [0, 0]]))


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_free_parent_gap_formula(beta):
    m = build_spinless_chain(2)
    ph = build_parent_hamiltonian(m.dense(), beta)
    eps = decouple_free_parent(m.quadratic, beta, C_SINGLE)["canonical"].epsilons / 2
    formula = min(C_SINGLE * np.exp(-4 * beta ** 2 * e ** 2) * np.cosh(2 * beta * e) for e in eps)
    assert A.spectral_gap(ph.hermitian()).gap == pytest.approx(formula, rel=1e-6, abs=1e-12)


def test_parent_even_gap_equals_lindbladian_even_gap():
    m = build_fermi_hubbard((1,), 0.2)
    ph = build_parent_hamiltonian(m.dense(), 1.0)
    lind = ph.meta["lindbladian"]
    assert A.spectral_gap(ph.hermitian(), "even").gap == pytest.approx(
        A.lindbladian_gap(lind.L_dagger, "even").gap, abs=1e-10)
    assert A.spectral_gap(ph.hermitian()).gap <= A.spectral_gap(ph.hermitian(), "even").gap + 1e-12


def test_calibrated_constant():
    assert A.calibrate_C(1.0) == pytest.approx(C_SINGLE, rel=1e-12)


def test_sweep_endpoint_and_envelope():
    grid = np.linspace(0, 0.3, 7)
    s = A.gap_vs_U_sweep((1,), 1.0, grid)
    m0 = build_fermi_hubbard((1,), 0.0)
    ref = decouple_free_parent(m0.quadratic, 1.0, C_SINGLE)["gap"]
    assert s.gaps[0] == pytest.approx(ref, rel=1e-6)
    assert np.all(np.abs(s.tops) < 1e-8) and not s.degenerate.any()
    assert s.envelope_ok and s.slope > 0
    assert np.max(np.abs(np.diff(s.gaps))) < 0.01


def test_sweep_single_point_has_no_fit():
    s = A.gap_vs_U_sweep((1,), 1.0, [0.1])
    assert len(s.rows) == 1 and s.slope is None and s.envelope_ok is None


def test_sweep_parallel_matches_serial(monkeypatch):
    serial = A.gap_vs_U_sweep((1,), 1.0, [0.0, 0.1, 0.2], workers=1)
    parallel = A.gap_vs_U_sweep((1,), 1.0, [0.0, 0.1, 0.2], workers=2)
    np.testing.assert_array_equal(serial.gaps, parallel.gaps)
    monkeypatch.setenv(A.WORKERS_ENV, "3")
    assert A.worker_count() == 3


def test_mixing_bound_cases(rng):
    m = build_fermi_hubbard((1,), 0.2)
    lind = assemble_lindbladian(m.dense(), 1.0)
    g = A.lindbladian_gap(lind.L_dagger, "even").gap
    r = A.mixing_bound_verify(lind, g, rng)
    assert r["passed"] and r["points"] == 200
    assert np.all(r["curves"][:, 0] <= 2 + 1e-12)
    # stationary start stays put
    from fermigibbs.lindblad import evolve, trace_distance

    assert max(trace_distance(r_, lind.sigma) for r_ in evolve(lind, lind.sigma, r["times"])) < 1e-12
    assert A.empirical_decay_rate(lind, g, rng) >= g - 1e-6


def test_correlation_decay_cases():
    m = build_spinless_chain(5, 0.1)
    zero = A.correlation_decay(m, 0.0)
    assert zero.rate is None and zero.note == "below noise floor"
    assert max(zero.values) < 1e-14
    fit = A.correlation_decay(m, 1.0)
    assert [d for d, _ in fit.samples] == [1, 2, 3, 4]
    assert fit.monotone and fit.rate > 0 and fit.residual is not None
    assert np.all(fit.values <= 2 * 1 * 1)


def test_correlation_same_site_variance():
    m = build_spinless_chain(3, 0.1)
    n0 = A.density(m, 0)
    fit = A.correlation_decay(m, 1.0, y_modes=[0])
    assert fit.samples == []
    from fermigibbs.spectral import gibbs_state

    s = gibbs_state(m.dense(), 1.0)
    var = s.expectation(n0 @ n0) - s.expectation(n0) ** 2
    assert var.real > 0


def test_quasi_locality_profiles():
    m = build_spinless_chain(5, 0.0)
    prof = A.quasi_locality_profile(m, 1, 0.0, 1.0, [1, 2, 3])
    assert prof.monotone and prof.rate > 0
    full = A.quasi_locality_profile(m, 1, 0.0, 1.0, [4, 5])
    assert max(full.values) <= 1e-9
    hot = A.quasi_locality_profile(m, 1, 2.0, 1.0, [1, 2, 3])
    ratio = prof.values[-1] / hot.values[-1]
    assert np.exp(0.5) / 3 <= ratio <= 3 * np.exp(0.5)
    with pytest.raises(ValueError):
        A.quasi_locality_profile(m, 1, 0.0, 1.0, [1])


def test_restrict_to_ball_keeps_inner_terms():
    m = build_spinless_chain(3, 0.2)
    H = A.restrict_to_ball(m, 0, 0.0)
    g = build_majorana_matrices(3)
    np.testing.assert_allclose(H, m.polynomial().terms.get((), 0) * np.eye(8) + 0 * H
                               + sum(c * g[j - 1] @ g[k - 1] for (j, k), c in
                                     ((mono, c) for mono, c in m.polynomial().terms.items()
                                      if len(mono) == 2 and max(mono) <= 2)), atol=1e-14)


def test_kernel_diagnostics():
    kd = A.kernel_diagnostics(1.0)
    assert kd["F1_check_max_error"] < 1e-7
    assert kd["F1_modulus_spread"] < 1e-12
    assert kd["b1_hat_at_zero"] < 1e-10
    assert kd["eta_at_minus_inverse_beta"] == 1.0
    assert kd["F2_rate"] > 0 and kd["F2_ratio_r4_r2"] <= np.exp(-2 * kd["F2_rate"])


def test_fit_decay_discards_floor():
    fit = A.fit_decay([(1, 1e-2), (2, 1e-3), (3, 1e-20)])
    assert fit.rate == pytest.approx(np.log(10))
