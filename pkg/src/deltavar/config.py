"""Problem configuration files (TOML).

Example::

    order = 1
    seed = 0

    [timescale]
    explicit = [0, 1, 2, 3, 4]

    [lagrangian]
    expr = "y1^2"

    [boundary]
    left = [0]
    right = [4]

Exactly one of ``explicit``, ``integer_range``, ``h_grid`` or ``random`` is
allowed under ``[timescale]``; the lagrangian is given by ``expr`` or
``builtin``.  ``[tolerances]`` is optional.
"""

from __future__ import annotations

import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import DeltaVarError
from .euler_lagrange import STATIONARY_TOL
from .lagrangian import BUILTINS, make_lagrangian
from .timescale import TimeScale, h_grid, integer_window, make_timescale, random_timescale
from .variational import ADMISSIBLE_TOL, VariationalProblem

SEED_ENV = "DELTAVAR_SEED"
TIMESCALE_KINDS = ("explicit", "integer_range", "h_grid", "random")
_TOLERANCE_KEYS = {"stationary", "gradient", "admissible", "max_iterations"}


class ConfigError(DeltaVarError, ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class Tolerances:
    stationary: float = STATIONARY_TOL
    gradient: float = 1e-10
    admissible: float = ADMISSIBLE_TOL
    max_iterations: int = 500


@dataclass
class ProblemConfig:
    timescale_kind: str
    timescale_spec: Any
    order: int
    lagrangian_source: str
    lagrangian_kind: str
    left: list[float]
    right: list[float]
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: Optional[int] = None
    direction: str = "newton"

    def echo(self) -> dict:
        return {
            "order": self.order,
            "timescale": {self.timescale_kind: self.timescale_spec},
            "lagrangian": {self.lagrangian_kind: self.lagrangian_source},
            "boundary": {"left": self.left, "right": self.right},
            "tolerances": {
                "stationary": self.tolerances.stationary,
                "gradient": self.tolerances.gradient,
                "admissible": self.tolerances.admissible,
                "max_iterations": self.tolerances.max_iterations,
            },
            "direction": self.direction,
        }

    def build_timescale(self) -> TimeScale:
        spec = self.timescale_spec
        try:
            if self.timescale_kind == "explicit":
                return make_timescale(spec)
            if self.timescale_kind == "integer_range":
                return integer_window(spec["a"], spec["b"])
            if self.timescale_kind == "h_grid":
                return h_grid(spec["a"], spec["b"], spec["h"])
            rng = np.random.default_rng(spec["seed"])
            return random_timescale(spec["n"], rng, span=spec["span"])
        except DeltaVarError as exc:
            raise ConfigError(f"timescale.{self.timescale_kind}", str(exc)) from None

    def build_problem(self) -> VariationalProblem:
        ts = self.build_timescale()
        try:
            lag = make_lagrangian(self.lagrangian_source, self.order)
        except DeltaVarError as exc:
            raise ConfigError(f"lagrangian.{self.lagrangian_kind}", str(exc)) from None
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return VariationalProblem(ts, lag, self.left, self.right)
        except DeltaVarError as exc:
            raise ConfigError("timescale", str(exc)) from None


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, f"expected a number, got {value!r}")
    if not np.isfinite(value):
        raise ConfigError(name, "must be finite")
    return float(value)


def _integer(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(name, f"expected an integer, got {value!r}")
    return value


def _table(data: dict, name: str) -> dict:
    value = data.get(name)
    if not isinstance(value, dict):
        raise ConfigError(name, "missing section")
    return value


def _reject_unknown(section: dict, allowed, prefix: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{prefix}{key}", "unknown key")


def _parse_timescale(data: dict) -> tuple[str, Any]:
    section = _table(data, "timescale")
    kinds = [k for k in section if k in TIMESCALE_KINDS]
    _reject_unknown(section, TIMESCALE_KINDS, "timescale.")
    if len(kinds) != 1:
        raise ConfigError("timescale", f"exactly one of {', '.join(TIMESCALE_KINDS)} is required")
    kind = kinds[0]
    spec = section[kind]
    name = f"timescale.{kind}"
    if kind == "explicit":
        if not isinstance(spec, list):
            raise ConfigError(name, "expected a list of numbers")
        return kind, [_number(v, name) for v in spec]
    if not isinstance(spec, dict):
        raise ConfigError(name, "expected a table")
    keys = {"integer_range": ("a", "b"), "h_grid": ("a", "b", "h"),
            "random": ("n", "seed", "span")}[kind]
    _reject_unknown(spec, keys, name + ".")
    for key in keys:
        if key not in spec and not (kind == "random" and key == "span"):
            raise ConfigError(f"{name}.{key}", "missing")
    if kind == "integer_range":
        return kind, {k: _integer(spec[k], f"{name}.{k}") for k in keys}
    if kind == "h_grid":
        return kind, {k: _number(spec[k], f"{name}.{k}") for k in keys}
    return kind, {
        "n": _integer(spec["n"], f"{name}.n"),
        "seed": _integer(spec["seed"], f"{name}.seed"),
        "span": _number(spec.get("span", 1.0), f"{name}.span"),
    }


def parse_config(data: dict) -> ProblemConfig:
    _reject_unknown(data, {"order", "seed", "timescale", "lagrangian", "boundary",
                           "tolerances", "direction"}, "")
    if "order" not in data:
        raise ConfigError("order", "missing")
    order = _integer(data["order"], "order")
    if order < 1:
        raise ConfigError("order", "must be at least 1")
    kind, spec = _parse_timescale(data)

    lag = _table(data, "lagrangian")
    _reject_unknown(lag, ("expr", "builtin"), "lagrangian.")
    if ("expr" in lag) == ("builtin" in lag):
        raise ConfigError("lagrangian", "exactly one of expr or builtin is required")
    lag_kind = "expr" if "expr" in lag else "builtin"
    source = lag[lag_kind]
    if not isinstance(source, str):
        raise ConfigError(f"lagrangian.{lag_kind}", "expected a string")
    if lag_kind == "builtin" and source not in BUILTINS:
        raise ConfigError("lagrangian.builtin", f"unknown builtin {source!r}")

    boundary = _table(data, "boundary")
    _reject_unknown(boundary, ("left", "right"), "boundary.")
    sides = {}
    for side in ("left", "right"):
        values = boundary.get(side)
        name = f"boundary.{side}"
        if not isinstance(values, list):
            raise ConfigError(name, "expected a list of numbers")
        if len(values) != order:
            raise ConfigError(name, f"expected {order} values, got {len(values)}")
        sides[side] = [_number(v, name) for v in values]

    tol = Tolerances()
    tsec = data.get("tolerances", {})
    if not isinstance(tsec, dict):
        raise ConfigError("tolerances", "expected a table")
    _reject_unknown(tsec, _TOLERANCE_KEYS, "tolerances.")
    for key, value in tsec.items():
        name = f"tolerances.{key}"
        if key == "max_iterations":
            v = _integer(value, name)
            if v < 1:
                raise ConfigError(name, "must be positive")
        else:
            v = _number(value, name)
            if v <= 0:
                raise ConfigError(name, "must be positive")
        setattr(tol, key, v)

    seed = data.get("seed")
    if seed is not None:
        seed = _integer(seed, "seed")
    direction = data.get("direction", "newton")
    if direction not in ("newton", "gradient"):
        raise ConfigError("direction", f"expected 'newton' or 'gradient', got {direction!r}")
    return ProblemConfig(kind, spec, order, source, lag_kind, sides["left"], sides["right"],
                         tol, seed, direction)


def load_config(path) -> ProblemConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("path", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("syntax", str(exc)) from None
    return parse_config(data)


def resolve_seed(flag: Optional[int], config: Optional[ProblemConfig] = None) -> int:
    """Flag beats config beats ``DELTAVAR_SEED`` beats 0."""
    if flag is not None:
        return flag
    if config is not None and config.seed is not None:
        return config.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(SEED_ENV, f"not an integer: {env!r}") from None
    return 0
