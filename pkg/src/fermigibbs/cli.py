"""Command-line entry point: ``fermigibbs <subcommand> --config FILE``."""

from __future__ import annotations

import argparse
import csv
import io
import json
from pathlib import Path
import platform
import sys

import numpy as np
import scipy
import yaml

from . import __version__
from . import analysis as A
from . import checks as CK
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .lindblad import (
    assemble_lindbladian,
    kms_dbc_residual,
    stationarity_residual,
)
from .majorana import CapacityError, even_indices, odd_indices
from .models import ModelValidationError

SUBCOMMANDS = ("build", "gap", "mix", "sweep", "correlations", "kernels", "validate")
METHOD_MAP = {"closed": "closed_form", "quadrature": "quadrature", "both": "closed_form"}


# ---------------------------------------------------------------- serialization

def _plain(x):
    """Convert numpy scalars/arrays and dataclass-like values for serialization."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, complex):
        return [float(x.real), float(x.imag)]
    return x


def dump_report(report: dict, fmt: str) -> str:
    report = _plain(report)
    if fmt == "yaml":
        return yaml.safe_dump(report, sort_keys=True)
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_csv(path: Path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    path.write_text(buf.getvalue())


# ---------------------------------------------------------------- subcommands

def _check_dict(c: CK.CheckResult) -> dict:
    return {"passed": c.passed, "measured": c.measured, "note": c.note}


def _case(cfg: ExperimentConfig):
    model = cfg.build_model()
    return CK.build_case(model, cfg.beta, model.name, METHOD_MAP[cfg.method], cfg.jumps)


def _method_agreement(cfg: ExperimentConfig, model) -> dict:
    a = assemble_lindbladian(model.dense(), cfg.beta, cfg.jumps, method="closed_form")
    b = assemble_lindbladian(model.dense(), cfg.beta, cfg.jumps, method="quadrature")
    diff = float(np.abs(a.L - b.L).max())
    return {"passed": diff <= cfg.tolerances["dissipator_dual"], "measured": {"max_difference": diff},
            "note": "closed form vs quadrature generator"}


def cmd_build(cfg, out):
    case = _case(cfg)
    lind, parent = case["lind"], case["parent"]
    n = lind.n_modes
    rows = []
    for sector, idx in (("even", even_indices(n)), ("odd", odd_indices(n))):
        w = np.linalg.eigvals(lind.L_dagger[np.ix_(idx, idx)])
        w = w[np.lexsort((np.round(w.imag, 10), np.round(w.real, 10)))]
        rows += [("L_dagger", sector, k, v.real, v.imag) for k, v in enumerate(w)]
    for sector in ("full", "even", "odd"):
        g = A.spectral_gap(parent.hermitian(), sector)
        rows += [("parent", sector, k, v, 0.0) for k, v in enumerate(g.eigenvalues)]
    write_csv(out / "spectra.csv", ["operator", "sector", "index", "real", "imag"], rows)
    tol = cfg.tolerances
    stat = stationarity_residual(lind)
    kms = kms_dbc_residual(lind.L_dagger, lind.state)
    checks = {
        "stationarity": {"passed": stat <= tol["stationarity"], "measured": {"residual": stat}},
        "kms": {"passed": kms <= tol["kms"], "measured": {"residual": kms}},
        "parent_hermiticity": {"passed": parent.hermiticity_residual <= tol["hermiticity"],
                               "measured": {"residual": parent.hermiticity_residual}},
        "route_agreement": {"passed": parent.meta["route_difference"] <= tol["spectrum"],
                            "measured": {"difference": parent.meta["route_difference"]}},
    }
    return {"n_modes": n, "coherent_norm": CK.coherent_norm(lind)}, checks


def cmd_gap(cfg, out):
    case = _case(cfg)
    lind, parent = case["lind"], case["parent"]
    reports = {s: A.spectral_gap(parent.hermitian(), s) for s in ("full", "even", "odd")}
    lg = A.lindbladian_gap(lind.L_dagger, "even")
    table = {s: {"gap": r.gap, "top": r.top_eigenvalue, "degenerate": r.degenerate} for s, r in reports.items()}
    table["lindbladian_even"] = {"gap": lg.gap, "top": lg.top_eigenvalue, "degenerate": lg.degenerate}
    tol = cfg.tolerances
    spec = CK.check_spectrum([case], tol["spectrum"])
    herm = CK.check_hermiticity([case], tol["hermiticity"], tol["gap_order"])
    diff = abs(lg.gap - reports["even"].gap)
    checks = {
        "spectrum_correspondence": _check_dict(spec),
        "hermiticity_and_order": _check_dict(herm),
        "even_gap_identity": {"passed": diff <= tol["spectrum"], "measured": {"difference": diff}},
        "top_eigenvalue_zero": {"passed": abs(reports["full"].top_eigenvalue) <= tol["top_eigenvalue"],
                                "measured": {"top": reports["full"].top_eigenvalue}},
    }
    return {"gaps": table}, checks


def cmd_mix(cfg, out):
    case = _case(cfg)
    lind = case["lind"]
    rng = np.random.default_rng(cfg.seed)
    g = A.lindbladian_gap(lind.L_dagger, "even").gap
    r = A.mixing_bound_verify(lind, g, rng, slack=cfg.tolerances["mixing_slack"])
    rate = A.empirical_decay_rate(lind, g, rng)
    rows = [("mixing", f"state{s}", t, v) for s, curve in enumerate(r["curves"]) for t, v in zip(r["times"], curve)]
    write_csv(out / "decay.csv", ["kind", "series", "x", "value"], rows)
    bound = A.mixing_time_bound(g, lind.state.sigma_min, 1e-2)
    checks = {
        "trace_distance_bound": {"passed": r["violations"] == 0,
                                 "measured": {"violations": r["violations"], "worst_margin": r["worst_margin"]}},
        "observable_bound": {"passed": r["observable_violations"] == 0,
                             "measured": {"violations": r["observable_violations"]}},
        "empirical_rate": {"passed": rate >= g - cfg.tolerances["mixing_rate"],
                           "measured": {"rate": rate, "even_gap": g}},
    }
    return {"even_gap": g, "sigma_min": lind.state.sigma_min, "t_mix_bound_eps_0.01": bound}, checks


def cmd_sweep(cfg, out):
    spec = cfg.model
    if spec["kind"] not in ("hubbard", "chain"):
        raise ConfigError("model.kind", "sweep needs an interacting family (hubbard or chain)")
    dims = spec.get("dims", [1]) if spec["kind"] == "hubbard" else [spec.get("sites", 2)]
    s = A.gap_vs_U_sweep(dims, cfg.beta, cfg.U_grid, spec.get("mu", 0.0), family=spec["kind"])
    rows = [(r["beta"], r["U"], r["gap"], r["top"], int(r["degenerate"]), r["v_parent_norm"]) for r in s.rows]
    write_csv(out / "sweep.csv", ["beta", "U", "gap", "top", "degenerate", "v_parent_norm"], rows)
    top = float(np.abs(s.tops).max())
    checks = {
        "top_eigenvalue_zero": {"passed": top <= cfg.tolerances["top_eigenvalue"], "measured": {"max_abs_top": top}},
        "non_degenerate": {"passed": not bool(s.degenerate.any()),
                           "measured": {"degenerate_points": int(s.degenerate.sum())}},
    }
    if s.envelope_ok is not None:
        checks["affine_envelope"] = {"passed": s.envelope_ok, "measured": {"slope": s.slope, "intercept": s.intercept}}
    return {"points": len(s.rows), "fit": None if s.slope is None else {"slope": s.slope, "intercept": s.intercept}}, checks


def cmd_correlations(cfg, out):
    model = cfg.build_model()
    corr = A.correlation_decay(model, cfg.beta)
    rows = [("correlation", "mode0", d, v) for d, v in corr.samples]
    quasi = None
    if model.layout.n_sites >= 3:
        radii = list(range(1, model.layout.n_sites))
        quasi = A.quasi_locality_profile(model, 1, 0.0, cfg.beta, radii)
        rows += [("quasi_locality", "j1_omega0", r, v) for r, v in quasi.samples]
    write_csv(out / "decay.csv", ["kind", "series", "x", "value"], rows)
    checks = {"correlation_bounded": {"passed": bool(all(v <= 2 for v in corr.values)),
                                      "measured": {"max": float(corr.values.max(initial=0))}}}
    result = {"correlation": {"rate": corr.rate, "residual": corr.residual, "monotone": corr.monotone,
                              "note": corr.note}}
    if quasi is not None:
        result["quasi_locality"] = {"rate": quasi.rate, "monotone": quasi.monotone}
        checks["quasi_locality_monotone"] = {"passed": quasi.monotone, "measured": {"rate": quasi.rate}}
    return result, checks


def cmd_kernels(cfg, out):
    kd = A.kernel_diagnostics(cfg.beta)
    tol = cfg.tolerances
    checks = {
        "F1_closed_vs_quadrature": {"passed": kd["F1_check_max_error"] <= tol["F1"],
                                    "measured": {"error": kd["F1_check_max_error"]}},
        "b1_hat_zero": {"passed": kd["b1_hat_at_zero"] <= tol["b1_zero"], "measured": {"value": kd["b1_hat_at_zero"]}},
        "eta_unit": {"passed": abs(kd["eta_at_minus_inverse_beta"] - 1) <= 1e-15,
                     "measured": {"value": kd["eta_at_minus_inverse_beta"]}},
        "F2_decay": {"passed": kd["F2_rate"] is not None and kd["F2_rate"] > 0
                     and kd["F2_ratio_r4_r2"] <= np.exp(-2 * kd["F2_rate"]),
                     "measured": {"rate": kd["F2_rate"], "ratio": kd["F2_ratio_r4_r2"]}},
    }
    model = cfg.build_model()
    dual = CK.check_dual_methods([{"model": model, "beta": cfg.beta}], tol["dissipator_dual"], tol["coherent_dual"])
    checks["dual_methods"] = _check_dict(dual)
    return {"kernels": kd}, checks


def cmd_validate(cfg, out):
    case = _case(cfg)
    rng = np.random.default_rng(cfg.seed)
    results, tables = CK.run_suite([case], cfg.tolerances, rng, cfg.U_grid, 1.0)
    s = tables["sweep"]
    write_csv(out / "sweep.csv", ["beta", "U", "gap", "top", "degenerate", "v_parent_norm"],
              [(r["beta"], r["U"], r["gap"], r["top"], int(r["degenerate"]), r["v_parent_norm"]) for r in s.rows])
    rows = [("correlation", "chain5", d, v) for d, v in tables["correlation"].samples]
    rows += [("quasi_locality", "chain5_j1", r, v) for r, v in tables["quasi_locality"].samples]
    write_csv(out / "decay.csv", ["kind", "series", "x", "value"], rows)
    for r in results:
        print(r.line())
    checks = {f"{r.id:02d}_{r.name.replace(' ', '_')}": _check_dict(r) for r in results}
    return {"calibrated_C": results[5].measured["C_calibrated"]}, checks


COMMANDS = {
    "build": cmd_build,
    "gap": cmd_gap,
    "mix": cmd_mix,
    "sweep": cmd_sweep,
    "correlations": cmd_correlations,
    "kernels": cmd_kernels,
    "validate": cmd_validate,
}


def run(subcommand: str, cfg: ExperimentConfig, out: Path) -> tuple[dict, int]:
    """Execute one subcommand, write ``report.<ext>`` and CSV tables, return (report, exit code)."""
    out.mkdir(parents=True, exist_ok=True)
    result, checks = COMMANDS[subcommand](cfg, out)
    if cfg.method == "both" and subcommand in ("build", "gap", "mix", "validate"):
        checks["method_agreement"] = _method_agreement(cfg, cfg.build_model())
    passed = all(c["passed"] for c in checks.values())
    report = {
        "subcommand": subcommand,
        "passed": passed,
        "checks": checks,
        "result": result,
        "provenance": {
            "config_hash": cfg.hash,
            "config": cfg.payload(),
            "versions": {"fermigibbs": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                         "python": platform.python_version()},
        },
    }
    (out / f"report.{cfg.format}").write_text(dump_report(report, cfg.format))
    return report, 0 if passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fermigibbs", description=__doc__)
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="JSON or YAML experiment file (defaults: single mode, beta 1)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    p.add_argument("--method", choices=("closed", "quadrature", "both"))
    p.add_argument("--max-modes", type=int, dest="max_modes", help="capacity limit in Dirac modes")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "method": args.method, "max_modes": args.max_modes, "out": args.out}
    try:
        if args.config:
            cfg = load_config(args.config, overrides)
        else:
            cfg = parse_config({k: v for k, v in overrides.items() if v is not None})
        _, code = run(args.subcommand, cfg, Path(cfg.out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CapacityError, ModelValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{args.subcommand}: {'all checks passed' if code == 0 else 'checks failed'} -> {cfg.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
