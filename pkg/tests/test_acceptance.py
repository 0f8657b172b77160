"""Acceptance criteria 1 to 13; each test prints one pass/fail line."""

import numpy as np
import pytest

from fermigibbs import checks as CK
from fermigibbs.config import DEFAULT_TOLERANCES as TOL
from fermigibbs.models import build_fermi_hubbard, build_single_mode, build_spinless_chain

BETAS = (0.5, 1.0, 2.0)
SWEEP_GRID = list(np.linspace(0.0, 0.3, 7))


def _models():
    return [
        ("1-mode quadratic", build_single_mode(0.5)),
        ("2-mode chain", build_spinless_chain(2)),
        ("1-site Hubbard U=0", build_fermi_hubbard((1,), 0.0)),
        ("1-site Hubbard U=0.2", build_fermi_hubbard((1,), 0.2)),
    ]


@pytest.fixture(scope="module")
def matrix():
    return [CK.build_case(m, b, f"{name}, beta={b}") for name, m in _models() for b in BETAS]


@pytest.fixture(scope="module")
def reference():
    # 2-site Hubbard: the smallest model here with a nonvanishing coherent term
    return CK.build_case(CK.reference_interacting_model(), 1.0, "2-site Hubbard U=0.5, mu=0.3")


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def _report(capsys, result):
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()


def test_01_algebra(capsys):
    _report(capsys, CK.check_algebra(TOL["algebra"]))


def test_02_stationarity(capsys, matrix, reference):
    _report(capsys, CK.check_stationarity(matrix + [reference], TOL["stationarity"]))


def test_03_kms_with_negative_control(capsys, matrix, reference):
    _report(capsys, CK.check_kms(matrix + [reference], TOL["kms"], TOL["kms_negative_control"]))


def test_04_spectrum(capsys, matrix, reference):
    _report(capsys, CK.check_spectrum(matrix + [reference], TOL["spectrum"]))


def test_05_hermiticity_and_gap_order(capsys, matrix, reference):
    _report(capsys, CK.check_hermiticity(matrix + [reference], TOL["hermiticity"], TOL["gap_order"]))


def test_06_free_sector(capsys, matrix):
    _report(capsys, CK.check_free_sector(matrix, TOL["free_parent"], TOL["single_mode_gap"], TOL["decoupling"]))


def test_07_mixing(capsys, matrix, rng):
    _report(capsys, CK.check_mixing(matrix, TOL["mixing_slack"], TOL["mixing_rate"], rng))


def test_08_gibbs_correspondence(capsys, matrix, reference, rng):
    _report(capsys, CK.check_correspondence(matrix + [reference], TOL["correspondence"], rng))


def test_09_counterexample(capsys):
    _report(capsys, CK.check_counterexample(TOL["counterexample"]))


def test_10_norm_preservation(capsys, rng):
    _report(capsys, CK.check_norm_preservation(TOL["norm"], rng))


def test_11_dual_methods(capsys, matrix):
    _report(capsys, CK.check_dual_methods(matrix, TOL["dissipator_dual"], TOL["coherent_dual"],
                                          CK.reference_interacting_model()))


def test_12_stability_sweep(capsys):
    result, sweep = CK.check_sweep(SWEEP_GRID, 1.0, TOL["top_eigenvalue"], TOL["v_ratio_spread"])
    assert len(sweep.rows) == 7
    _report(capsys, result)


def test_13_decay(capsys):
    result, _ = CK.check_decay(1.0, TOL["F1"], TOL["b1_zero"])
    _report(capsys, result)
