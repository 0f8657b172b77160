"""Experiment configuration: parsing, validation and hashing."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
import hashlib
import json
from pathlib import Path

import numpy as np
import yaml

from .majorana import CapacityError, MajoranaPolynomial, ModeLayout
from .models import (
    Model,
    build_custom,
    build_fermi_hubbard,
    build_quadratic,
    build_single_mode,
    build_spinless_chain,
)

MODEL_KINDS = ("quadratic", "single_mode", "chain", "hubbard", "custom")
METHODS = ("closed", "quadrature", "both")

DEFAULT_TOLERANCES = {
    "algebra": 1e-13,
    "stationarity": 1e-7,
    "kms": 1e-7,
    "kms_negative_control": 1e-3,
    "spectrum": 1e-8,
    "hermiticity": 1e-9,
    "gap_order": 1e-9,
    "free_parent": 1e-8,
    "single_mode_gap": 1e-6,
    "decoupling": 1e-8,
    "mixing_slack": 1e-7,
    "mixing_rate": 1e-6,
    "correspondence": 1e-7,
    "counterexample": 1e-13,
    "norm": 1e-10,
    "dissipator_dual": 1e-8,
    "coherent_dual": 1e-6,
    "top_eigenvalue": 1e-8,
    "v_ratio_spread": 0.1,
    "F1": 1e-7,
    "b1_zero": 1e-10,
}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key path."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class ExperimentConfig:
    model: dict
    beta: float = 1.0
    U_grid: list = field(default_factory=lambda: [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3])
    jumps: list | None = None
    method: str = "closed"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0
    max_modes: int = 6
    format: str = "json"
    out: str = "out"

    def build_model(self) -> Model:
        return model_from_spec(self.model, self.max_modes)

    def payload(self) -> dict:
        """Canonical content used for hashing; excludes output location."""
        d = asdict(self)
        d.pop("out")
        d.pop("format")
        return d

    @property
    def hash(self) -> str:
        text = json.dumps(self.payload(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _number(value, name: str, positive: bool = False, nonnegative: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, f"expected a number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise ConfigError(name, "must be finite")
    if positive and value <= 0:
        raise ConfigError(name, f"must be positive, got {value:g}")
    if nonnegative and value < 0:
        raise ConfigError(name, f"must be nonnegative, got {value:g}")
    return value


def _count_modes(spec: dict) -> int:
    kind = spec["kind"]
    if kind == "single_mode":
        return 1
    if kind == "chain":
        return int(spec.get("sites", 2))
    if kind == "hubbard":
        return 2 * int(np.prod(spec.get("dims", [1])))
    if kind == "quadratic":
        return len(spec["h"]) // 2
    return int(spec["modes"])


def _check_model(spec, max_modes: int) -> dict:
    if not isinstance(spec, dict):
        raise ConfigError("model", "expected a mapping")
    kind = spec.get("kind")
    if kind not in MODEL_KINDS:
        raise ConfigError("model.kind", f"expected one of {', '.join(MODEL_KINDS)}, got {kind!r}")
    spec = dict(spec)
    for key in ("U", "mu", "hopping", "epsilon"):
        if key in spec:
            spec[key] = _number(spec[key], f"model.{key}", nonnegative=(key == "U"))
    if kind == "chain":
        sites = spec.get("sites", 2)
        if not isinstance(sites, int) or sites < 1:
            raise ConfigError("model.sites", f"expected a positive integer, got {sites!r}")
    if kind == "hubbard":
        dims = spec.get("dims", [1])
        if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d > 0 for d in dims):
            raise ConfigError("model.dims", f"expected a list of positive integers, got {dims!r}")
    if kind == "quadratic":
        h = spec.get("h")
        if not isinstance(h, list) or not h or len(h) % 2:
            raise ConfigError("model.h", "expected a square matrix of even size")
    if kind == "custom":
        if not isinstance(spec.get("modes"), int) or spec["modes"] < 1:
            raise ConfigError("model.modes", "expected a positive integer")
        if not isinstance(spec.get("terms"), list):
            raise ConfigError("model.terms", "expected a list of {indices, coeff} entries")
    n = _count_modes(spec)
    if n > max_modes:
        raise CapacityError(f"model has {n} Dirac modes; maximum is {max_modes}")
    return spec


def _complex_entry(x, name):
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    if isinstance(x, str):
        try:
            return complex(x.replace(" ", ""))
        except ValueError:
            pass
    if isinstance(x, list) and len(x) == 2:
        return complex(_number(x[0], name), _number(x[1], name))
    raise ConfigError(name, f"cannot read {x!r} as a complex number")


def model_from_spec(spec: dict, max_modes: int = 6) -> Model:
    """Build a :class:`Model` from a validated model mapping."""
    spec = _check_model(spec, max_modes)
    kind = spec["kind"]
    if kind == "single_mode":
        return build_single_mode(spec.get("epsilon", 0.5))
    if kind == "chain":
        return build_spinless_chain(spec.get("sites", 2), spec.get("U", 0.0), spec.get("mu", 0.0),
                                    spec.get("hopping", 1.0))
    if kind == "hubbard":
        return build_fermi_hubbard(tuple(spec.get("dims", [1])), spec.get("U", 0.0), spec.get("mu", 0.0),
                                   spec.get("hopping", 1.0))
    if kind == "quadratic":
        h = np.array([[_complex_entry(x, f"model.h[{i}][{j}]") for j, x in enumerate(row)]
                      for i, row in enumerate(spec["h"])])
        layout = ModeLayout.chain(h.shape[0] // 2, r0=float(spec.get("r0", 1.0)))
        q = build_quadratic(h, layout, spec.get("offset", 0.0), r0=float(spec.get("r0", layout.r0)))
        return Model(q, None, "quadratic", {})
    terms = {}
    for k, t in enumerate(spec["terms"]):
        name = f"model.terms[{k}]"
        if not isinstance(t, dict) or "indices" not in t or "coeff" not in t:
            raise ConfigError(name, "expected {indices, coeff}")
        mono = tuple(int(i) for i in t["indices"])
        terms[mono] = terms.get(mono, 0) + _complex_entry(t["coeff"], f"{name}.coeff")
    layout = ModeLayout.chain(spec["modes"], r0=float(spec.get("r0", 1.0)))
    try:
        p = MajoranaPolynomial(spec["modes"], terms)
    except IndexError as exc:
        raise ConfigError("model.terms", str(exc)) from None
    return build_custom(layout, p)


def parse_config(data: dict, fmt: str = "json") -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a mapping")
    known = {"model", "beta", "U_grid", "jumps", "method", "tolerances", "seed", "max_modes", "out"}
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown field")
    max_modes = data.get("max_modes", 6)
    if not isinstance(max_modes, int) or max_modes < 1:
        raise ConfigError("max_modes", f"expected a positive integer, got {max_modes!r}")
    model = _check_model(data.get("model", {"kind": "single_mode", "epsilon": 0.5}), max_modes)
    beta = _number(data.get("beta", 1.0), "beta", positive=True)
    grid = data.get("U_grid", [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3])
    if not isinstance(grid, list) or not grid:
        raise ConfigError("U_grid", "must be a nonempty list")
    grid = [_number(u, f"U_grid[{i}]", nonnegative=True) for i, u in enumerate(grid)]
    jumps = data.get("jumps")
    n = _count_modes(model)
    if jumps is not None:
        if not isinstance(jumps, list) or not jumps or not all(
                isinstance(j, int) and 1 <= j <= 2 * n for j in jumps):
            raise ConfigError("jumps", f"expected a nonempty list of Majorana indices in 1..{2 * n}")
    method = data.get("method", "closed")
    if method not in METHODS:
        raise ConfigError("method", f"expected one of {', '.join(METHODS)}, got {method!r}")
    tol = dict(DEFAULT_TOLERANCES)
    user_tol = data.get("tolerances", {})
    if not isinstance(user_tol, dict):
        raise ConfigError("tolerances", "expected a mapping")
    for key, val in user_tol.items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"tolerances.{key}", "unknown tolerance")
        tol[key] = _number(val, f"tolerances.{key}", positive=True)
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64:
        raise ConfigError("seed", f"expected an unsigned 64-bit integer, got {seed!r}")
    return ExperimentConfig(model, beta, grid, jumps, method, tol, seed, max_modes, fmt,
                            str(data.get("out", "out")))


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Read a JSON or YAML file; parse errors report line and column."""
    path = Path(path)
    text = path.read_text()
    fmt = "yaml" if path.suffix.lower() in (".yaml", ".yml") else "json"
    try:
        data = yaml.safe_load(text) if fmt == "yaml" else json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(where, str(getattr(exc, "problem", exc))) from None
    if data is None:
        data = {}
    if overrides:
        data = {**data, **{k: v for k, v in overrides.items() if v is not None}}
    return parse_config(data, fmt)
