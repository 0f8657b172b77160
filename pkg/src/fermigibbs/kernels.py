"""Filter functions, their Fourier transforms and time-domain oracles.

Fourier convention: ``F[f](w) = (2 pi)^{-1/2} int e^{-i w t} f(t) dt``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

SQRT2PI = np.sqrt(2 * np.pi)
B1_PREFACTOR = 2 * np.sqrt(np.pi) * np.exp(1 / 8)


def f_time(t, beta: float):
    return np.exp(-(np.asarray(t) / beta) ** 2) / np.sqrt(beta * np.sqrt(np.pi / 2))


def f_hat(omega, beta: float):
    """Closed-form transform of ``f``; L2-normalised Gaussian of width ``2/beta``."""
    _check_beta(beta)
    k = np.sqrt(beta / SQRT2PI)
    return k * np.exp(-(beta * np.asarray(omega)) ** 2 / 4)


def eta(omega, beta: float, shift: float = 1.0):
    return np.exp(-(beta * np.asarray(omega) + shift) ** 2 / 2)


def b1_hat(omega):
    """Transform of ``b1``: product of the sech and sine-Gaussian transforms."""
    w = np.asarray(omega, dtype=float)
    sech_hat = 0.5 / np.cosh(w / 4) / SQRT2PI
    sin_hat = (0.5j * np.sqrt(np.pi / 2) / SQRT2PI) * (
        np.exp(-(w - 1) ** 2 / 8) - np.exp(-(w + 1) ** 2 / 8))
    return B1_PREFACTOR * SQRT2PI * sech_hat * sin_hat


def b2_time(t):
    t = np.asarray(t)
    return np.exp(-4 * t ** 2 - 2j * t) / (2 * np.pi ** 1.5)


def b2_hat(omega):
    w = np.asarray(omega, dtype=float)
    return np.sqrt(np.pi / 4) / (2 * np.pi ** 1.5) / SQRT2PI * np.exp(-(w + 2) ** 2 / 16)


def b1_time(t, half_width: float = 10.0, points: int = 4001):
    """``b1`` by direct convolution quadrature on ``[-half_width, half_width]``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s = np.linspace(-half_width, half_width, points)
    sech = 1 / np.cosh(2 * np.pi * s)
    diff = t[:, None] - s[None, :]
    vals = sech[None, :] * np.sin(-diff) * np.exp(-2 * diff ** 2)
    return B1_PREFACTOR * integrate.simpson(vals, x=s, axis=1)


def dissipator_weight(nu, nu_p, beta: float, shift: float = 1.0, eta_on: bool = True):
    """Closed form of ``int eta(w) f_hat(w - nu) f_hat(w - nu') dw``.

    ``shift`` selects ``eta(w) = exp(-(beta w + shift)^2 / 2)``; ``eta_on=False``
    replaces ``eta`` by 1.
    """
    nu = np.asarray(nu, dtype=float)
    nu_p = np.asarray(nu_p, dtype=float)
    if not eta_on:
        return np.exp(-beta ** 2 * (nu - nu_p) ** 2 / 8)
    m = beta * (nu + nu_p) / 2
    return np.exp(-(m + shift) ** 2 / 4 - beta ** 2 * (nu - nu_p) ** 2 / 8) / np.sqrt(2)


def dissipator_weight_quad(nu: float, nu_p: float, beta: float, shift: float = 1.0,
                           eta_on: bool = True) -> float:
    """Adaptive-quadrature path for :func:`dissipator_weight`."""
    def integrand(w):
        e = eta(w, beta, shift) if eta_on else 1.0
        return e * f_hat(w - nu, beta) * f_hat(w - nu_p, beta)

    width = 2.0 / beta
    lo = min(nu, nu_p, -shift / beta) - 12 * width
    hi = max(nu, nu_p, -shift / beta) + 12 * width
    centers = sorted({nu, nu_p, (nu + nu_p) / 2, -shift / beta})
    pts = [c for c in centers if lo < c < hi]
    val, _ = integrate.quad(integrand, lo, hi, points=pts, epsabs=1e-14, epsrel=1e-12, limit=400)
    return float(val)


def coherent_weight(nu, nu_p, beta: float):
    """Bohr-pair coefficient of ``gamma_nu gamma_nu'`` in the coherent term."""
    return 2 * np.pi * b1_hat(beta * (np.asarray(nu) + nu_p)) * b2_hat(beta * (np.asarray(nu_p) - nu))


def coherent_weight_swapped(nu, nu_p, beta: float):
    """Alternative pairing with the frequency arguments exchanged (kept for comparison)."""
    nu = np.asarray(nu)
    return (2 * np.pi * np.exp(beta * (nu - nu_p) / 4)
            * b1_hat(beta * (nu - nu_p)) * b2_hat(beta * (nu_p + nu)))


def F1(t, omega, nu, beta: float):
    """Frequency-domain kernel of the tilded jump before Fourier inversion."""
    return np.exp(-beta * nu / 4) * np.exp(1j * (nu - omega) * t) * f_time(t, beta)


def F1_check_closed(t, omega, beta: float):
    """Inverse transform in ``nu`` of ``F1``: ``(2 pi)^{-1/2} int F1(nu, omega) e^{-i nu t} dnu``."""
    _check_beta(beta)
    t = np.asarray(t, dtype=float)
    return (np.exp(1 / 16) / np.sqrt(beta * np.sqrt(np.pi / 2)) * np.exp(-(t / beta) ** 2)
            * np.exp(-1j * t * (omega - 1 / (2 * beta))) * np.exp(-beta * omega / 4))


def F1_check_quad(t: float, omega: float, beta: float, half_width: float | None = None,
                  points: int = 20001) -> complex:
    """Grid quadrature of the same inverse transform, with ``F1(nu, omega) = e^{-beta nu/4} f_hat(omega - nu)``."""
    if half_width is None:
        half_width = 16.0 / beta + abs(omega)
    nu = np.linspace(omega - half_width, omega + half_width, points)
    vals = f_hat(omega - nu, beta) * np.exp(-beta * nu / 4) * np.exp(-1j * nu * t)
    return complex(integrate.simpson(vals, x=nu) / SQRT2PI)


@dataclass(frozen=True)
class KernelBundle:
    beta: float
    eta_on: bool = True

    def __post_init__(self):
        _check_beta(self.beta)

    def f_hat(self, omega):
        return f_hat(omega, self.beta)

    def eta(self, omega):
        return eta(omega, self.beta) if self.eta_on else np.ones_like(np.asarray(omega, dtype=float))

    def b1_hat(self, omega):
        return b1_hat(omega)

    def b2_hat(self, omega):
        return b2_hat(omega)

    def g(self, nu, nu_p, shift: float = 1.0):
        return dissipator_weight(nu, nu_p, self.beta, shift, self.eta_on)

    def g_quad(self, nu, nu_p, shift: float = 1.0):
        return dissipator_weight_quad(nu, nu_p, self.beta, shift, self.eta_on)

    def coherent(self, nu, nu_p):
        return coherent_weight(nu, nu_p, self.beta)


def _check_beta(beta):
    if not np.isfinite(beta) or beta <= 0:
        raise ValueError(f"beta must be positive and finite, got {beta}")
