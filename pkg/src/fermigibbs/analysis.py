"""Gaps, sweeps, mixing checks, correlation decay and kernel diagnostics."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import os

import numpy as np
from scipy import integrate

from . import kernels as K
from .lindblad import (
    Lindbladian,
    assemble_lindbladian,
    even_basis_states,
    evolve,
    jump_operator,
    random_even_pure_states,
    trace_distance,
)
from .majorana import (
    MajoranaPolynomial,
    build_majorana_matrices,
    even_indices,
    monomial_devectorize,
    monomial_vectorize,
    odd_indices,
    polynomial_to_matrix,
)
from .models import Model, build_fermi_hubbard, build_spinless_chain
from .spectral import eigendecompose, gibbs_state, imaginary_time_conjugate, kms_inner
from .thirdquant import build_parent_hamiltonian, decouple_free_parent, top_eigenvector

WORKERS_ENV = "FERMIGIBBS_WORKERS"


# ---------------------------------------------------------------- gaps

@dataclass(frozen=True)
class GapReport:
    top_eigenvalue: float
    second_eigenvalue: float
    gap: float
    degenerate: bool
    sector: str
    eigenvalues: np.ndarray = field(repr=False, default=None)


def _sector_indices(n: int, sector: str):
    if sector == "full":
        return np.arange(4 ** n)
    if sector == "even":
        return even_indices(n)
    if sector == "odd":
        return odd_indices(n)
    raise ValueError(f"unknown sector {sector!r}")


def _n_modes_from_superop(M: np.ndarray) -> int:
    n = int(round(np.log(M.shape[0]) / np.log(4)))
    if 4 ** n != M.shape[0]:
        raise ValueError(f"dimension {M.shape[0]} is not a power of 4")
    return n


def _report(w: np.ndarray, sector: str, rel_tol: float = 1e-9) -> GapReport:
    w = np.sort(w)
    span = max(float(w[-1] - w[0]), 1e-300)
    gap = float(w[-1] - w[-2]) if len(w) > 1 else float("inf")
    return GapReport(float(w[-1]), float(w[-2]) if len(w) > 1 else float("-inf"), gap,
                     bool(gap < rel_tol * span), sector, w)


def spectral_gap(M: np.ndarray, sector: str = "full", n: int | None = None) -> GapReport:
    """Gap of a Hermitian matrix, optionally restricted to a monomial parity sector."""
    M = np.asarray(M)
    if sector != "full":
        n = _n_modes_from_superop(M) if n is None else n
        idx = _sector_indices(n, sector)
        M = M[np.ix_(idx, idx)]
    herm = np.abs(M - M.conj().T).max(initial=0)
    if herm > 1e-8 * max(1.0, np.abs(M).max()):
        raise ValueError(f"matrix is not Hermitian (residual {herm:.2e})")
    return _report(np.linalg.eigvalsh((M + M.conj().T) / 2), sector)


def lindbladian_gap(L_dagger: np.ndarray, sector: str = "even") -> GapReport:
    """Gap from the real parts of the generator spectrum restricted to a sector."""
    n = _n_modes_from_superop(L_dagger)
    idx = _sector_indices(n, sector)
    w = np.linalg.eigvals(L_dagger[np.ix_(idx, idx)])
    return _report(w.real, sector)


# ---------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepResult:
    grid: list
    gaps: np.ndarray
    tops: np.ndarray
    degenerate: np.ndarray
    v_parent_norms: np.ndarray
    slope: float | None
    intercept: float | None
    envelope_ok: bool | None
    rows: list = field(default_factory=list)


def _family_model(family: str, dims, U: float, mu: float) -> Model:
    if family == "hubbard":
        return build_fermi_hubbard(dims, U, mu)
    if family == "chain":
        return build_spinless_chain(int(np.prod(dims)), U, mu)
    raise ValueError(f"unknown model family {family!r}")


def _sweep_point(args):
    family, dims, beta, U, mu = args
    model = _family_model(family, dims, U, mu)
    ph = build_parent_hamiltonian(model.dense(), beta, H0=model.free_dense(), U=abs(U))
    rep = spectral_gap(ph.hermitian())
    return {
        "beta": beta,
        "U": U,
        "gap": rep.gap,
        "top": rep.top_eigenvalue,
        "degenerate": rep.degenerate,
        "v_parent_norm": float(np.linalg.norm(ph.V_parent, 2)),
        "route_difference": ph.meta["route_difference"],
    }


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def gap_vs_U_sweep(dims, beta: float, U_grid, mu: float = 0.0, workers: int | None = None,
                   family: str = "hubbard") -> SweepResult:
    """Parent gap along ``U`` for a model family with an affine envelope fit.

    The envelope is ``|gap(U) - gap(0)| <= c U``; ``c`` is the smallest slope
    that bounds every grid point (fit only when there are at least 2 points).
    """
    U_grid = [float(u) for u in U_grid]
    if not U_grid:
        raise ValueError("U grid must be nonempty")
    workers = worker_count() if workers is None else workers
    jobs = [(family, tuple(int(d) for d in np.atleast_1d(dims)), float(beta), u, mu) for u in U_grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    gaps = np.array([r["gap"] for r in rows])
    slope = intercept = envelope_ok = None
    if len(rows) >= 2:
        Us = np.array(U_grid)
        i0 = int(np.argmin(np.abs(Us)))
        intercept = float(gaps[i0])
        pos = np.abs(Us) > 0
        slope = float(np.max(np.abs(gaps[pos] - intercept) / np.abs(Us[pos]))) if pos.any() else 0.0
        envelope_ok = bool(np.all(np.abs(gaps - intercept) <= slope * np.abs(Us) + 1e-12))
    return SweepResult(
        grid=[(beta, u) for u in U_grid],
        gaps=gaps,
        tops=np.array([r["top"] for r in rows]),
        degenerate=np.array([r["degenerate"] for r in rows]),
        v_parent_norms=np.array([r["v_parent_norm"] for r in rows]),
        slope=slope,
        intercept=intercept,
        envelope_ok=envelope_ok,
        rows=rows,
    )


# ---------------------------------------------------------------- mixing

def mixing_bound_verify(lind: Lindbladian, gap: float, rng: np.random.Generator,
                        n_states: int = 10, n_times: int = 20, slack: float = 1e-7,
                        t_max: float | None = None) -> dict:
    """Check ``||rho(t) - sigma||_1 <= e^{-g t} / sqrt(sigma_min)`` and the KMS observable bound."""
    n = lind.n_modes
    sigma = lind.sigma
    smin = lind.state.sigma_min
    if t_max is None:
        t_max = 30.0 / gap
    times = np.concatenate([[0.0], np.logspace(np.log10(t_max) - 4, np.log10(t_max), n_times - 1)])
    basis = even_basis_states(n)
    states = (basis + random_even_pure_states(n, max(0, n_states - len(basis)), rng))[:n_states]
    worst_margin = np.inf
    violations = 0
    curves = []
    for rho in states:
        traj = evolve(lind, rho, times)
        dist = np.array([trace_distance(r, sigma) for r in traj])
        bound = np.exp(-gap * times) / np.sqrt(smin)
        worst_margin = min(worst_margin, float(np.min(bound + slack - dist)))
        violations += int(np.sum(dist > bound + slack))
        curves.append(dist)
    # observables with zero mean: ||e^{t L^dag} Y||_KMS <= e^{-g t} ||Y||_KMS
    obs_violations = 0
    ev = even_indices(n)
    w, V = np.linalg.eig(lind.L_dagger)
    Vinv = np.linalg.inv(V)
    for _ in range(n_states):
        c = np.zeros(4 ** n, dtype=complex)
        c[ev] = rng.normal(size=len(ev)) + 1j * rng.normal(size=len(ev))
        Y = monomial_devectorize(c)
        Y = Y - np.trace(sigma @ Y) * np.eye(2 ** n)
        y0 = np.sqrt(kms_inner(Y, Y, lind.state).real)
        cy = Vinv @ monomial_vectorize(Y)
        for t in times:
            Yt = monomial_devectorize(V @ (np.exp(w * t) * cy))
            yt = np.sqrt(max(kms_inner(Yt, Yt, lind.state).real, 0.0))
            if yt > np.exp(-gap * t) * y0 + slack:
                obs_violations += 1
    return {
        "times": times,
        "curves": np.array(curves),
        "violations": violations,
        "observable_violations": obs_violations,
        "worst_margin": worst_margin,
        "points": len(states) * len(times),
        "passed": violations == 0 and obs_violations == 0,
    }


def empirical_decay_rate(lind: Lindbladian, gap: float, rng: np.random.Generator,
                         n_random: int = 10, window=(1e-4, 1e-8)) -> float:
    """Fitted exponential rate of the worst-case trace distance tail.

    Fit window covers times where ``e^{-g t}`` falls from ``window[0]`` to ``window[1]``.
    """
    n = lind.n_modes
    states = even_basis_states(n) + random_even_pure_states(n, n_random, rng)
    t1, t2 = -np.log(window[0]) / gap, -np.log(window[1]) / gap
    times = np.linspace(t1, t2, 12)
    worst = np.zeros(len(times))
    for rho in states:
        traj = evolve(lind, rho, times)
        worst = np.maximum(worst, [trace_distance(r, lind.sigma) for r in traj])
    slope = np.polyfit(times, np.log(worst), 1)[0]
    return float(-slope)


def mixing_time_bound(gap: float, sigma_min: float, epsilon: float) -> float:
    """``(1/gap) (log(1/sigma_min)/2 + log(1/epsilon))``."""
    return (0.5 * np.log(1 / sigma_min) + np.log(1 / epsilon)) / gap


# ---------------------------------------------------------------- correlations

@dataclass(frozen=True)
class DecayFit:
    samples: list
    rate: float | None
    residual: float | None
    note: str = ""

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.samples])

    @property
    def monotone(self) -> bool:
        v = self.values
        return bool(np.all(np.diff(v) <= 1e-12))


def fit_decay(samples, floor: float = 1e-13) -> DecayFit:
    xs = np.array([s[0] for s in samples], dtype=float)
    ys = np.array([s[1] for s in samples], dtype=float)
    keep = ys > floor
    if keep.sum() < 2:
        return DecayFit(list(samples), None, None, "below noise floor")
    coef, res, *_ = np.polyfit(xs[keep], np.log(ys[keep]), 1, full=True)
    resid = float(np.sqrt(res[0] / keep.sum())) if len(res) else 0.0
    return DecayFit(list(samples), float(-coef[0]), resid)


def density(model_or_n, mode: int) -> np.ndarray:
    """Number operator ``(1 + i gamma_{2m+1} gamma_{2m+2}) / 2`` of Dirac mode ``mode`` (0-based)."""
    n = model_or_n.n_modes if isinstance(model_or_n, Model) else int(model_or_n)
    g = build_majorana_matrices(n)
    return (np.eye(2 ** n) + 1j * g[2 * mode] @ g[2 * mode + 1]) / 2


def correlation_decay(model: Model, beta: float, x_mode: int = 0, y_modes=None, X=None, Y=None) -> DecayFit:
    """Connected correlations ``|Tr[sigma X Y] - Tr[sigma X] Tr[sigma Y]|`` against distance."""
    state = gibbs_state(model.dense(), beta)
    layout = model.layout
    if y_modes is None:
        y_modes = [m for m in range(model.n_modes) if m != x_mode]
    Xop = density(model, x_mode) if X is None else X
    samples = []
    for m in y_modes:
        Yop = density(model, m) if Y is None else Y(m)
        c = state.expectation(Xop @ Yop) - state.expectation(Xop) * state.expectation(Yop)
        d = layout.distance(layout.mode_site[x_mode], layout.mode_site[m])
        samples.append((d, float(abs(c))))
    samples.sort()
    positive = [(d, v) for d, v in samples if d > 0]
    return fit_decay(positive)


# ---------------------------------------------------------------- quasi-locality

def restrict_to_ball(model: Model, center_site: int, radius: float) -> np.ndarray:
    """Dense ``H'`` keeping only terms whose Majoranas all lie within ``radius`` of the center."""
    layout = model.layout
    p = model.polynomial()
    kept = {}
    for mono, c in p.terms.items():
        if all(layout.distance(center_site, layout.majorana_site(j)) <= radius + 1e-12 for j in mono):
            kept[mono] = c
    return polynomial_to_matrix(MajoranaPolynomial(model.n_modes, kept))


def tilded_jump(H: np.ndarray, j: int, omega: float, beta: float) -> np.ndarray:
    """``e^{-beta H/4} A_j(omega) e^{beta H/4}``."""
    eig = eigendecompose(H)
    A = jump_operator(j, omega, eig, beta)
    state = gibbs_state(eig, beta)
    return imaginary_time_conjugate(A, state, 0.25)


def quasi_locality_profile(model: Model, j: int, omega: float, beta: float, radii) -> DecayFit:
    """``||A~_j(omega) - A~_j^loc(omega)||`` with ``A^loc`` built from the ball-restricted Hamiltonian."""
    radii = list(radii)
    full = tilded_jump(model.dense(), j, omega, beta)
    center = model.layout.majorana_site(j)
    samples = []
    for r in radii:
        loc = tilded_jump(restrict_to_ball(model, center, r), j, omega, beta)
        samples.append((float(r), float(np.linalg.norm(full - loc, 2))))
    if len(samples) < 2:
        raise ValueError("need at least two radii")
    return fit_decay(samples)


# ---------------------------------------------------------------- kernels

def F2(x, xp):
    """Coherent kernel in scaled frequencies: ``B~_j = sum F2(beta nu, beta nu') (gamma_j)_nu (gamma_j)_nu'``."""
    x = np.asarray(x)
    xp = np.asarray(xp)
    return 2 * np.pi * np.exp(-(x + xp) / 4) * K.b1_hat(x + xp) * K.b2_hat(xp - x)


def F2_check(t, tp, half_width: float = 40.0, points: int = 1601) -> complex:
    """``(1/2 pi) int int F2(x, x') e^{i x t} e^{i x' t'} dx dx'`` by grid quadrature."""
    xs = np.linspace(-half_width, half_width, points)
    F = F2(xs[:, None], xs[None, :])
    w = integrate.simpson(np.eye(points), x=xs, axis=1)
    return complex((w * np.exp(1j * xs * t)) @ F @ (w * np.exp(1j * xs * tp)) / (2 * np.pi))


def kernel_diagnostics(beta: float, n_grid: int = 7) -> dict:
    ts = np.linspace(-3 * beta, 3 * beta, n_grid)
    omegas = np.array([-1.0, 0.0, 0.5, 2.0]) / beta
    f1_err = max(abs(K.F1_check_closed(t, w, beta) - K.F1_check_quad(t, w, beta))
                 for t in ts for w in omegas)
    # modulus of F1_check(0, w) e^{beta w / 4} is independent of w
    mods = [abs(K.F1_check_closed(0.0, w, beta)) * np.exp(beta * w / 4) for w in omegas]
    radii = np.array([1.0, 2.0, 3.0, 4.0])
    angles = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    f2_env = [max(abs(F2_check(r * np.cos(a), r * np.sin(a))) for a in angles) for r in radii]
    fit = fit_decay(list(zip(radii, f2_env)))
    return {
        "F1_check_max_error": float(f1_err),
        "F1_modulus_spread": float(np.ptp(mods)),
        "F2_envelope": list(map(float, f2_env)),
        "F2_rate": fit.rate,
        "F2_ratio_r4_r2": float(f2_env[3] / f2_env[1]),
        "b1_hat_at_zero": float(abs(K.b1_hat(0.0))),
        "eta_at_minus_inverse_beta": float(K.eta(-1.0 / beta, beta)),
        "f_hat_at_zero": float(K.f_hat(0.0, beta)),
    }


def free_gap_formula(model: Model, beta: float, C: float) -> float:
    return decouple_free_parent(model.quadratic, beta, C)["gap"]


def calibrate_C(beta: float = 1.0) -> float:
    """Gap of the built single-mode free parent at ``epsilon = 0``."""
    from .models import build_single_mode

    m = build_single_mode(0.0)
    ph = build_parent_hamiltonian(m.dense(), beta, H0=m.free_dense())
    return spectral_gap(ph.hermitian()).gap


def gibbs_expectation_check(ph_total: np.ndarray, state, X: np.ndarray) -> dict:
    from .thirdquant import expectation_via_parent

    top = top_eigenvector(ph_total)
    return {"direct": state.expectation(X), "parent": expectation_via_parent(X, top["vector"]),
            "degenerate": top["degenerate"]}
