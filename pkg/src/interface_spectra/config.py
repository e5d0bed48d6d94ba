"""TOML run configuration: both fluids, the physical constants, solver overrides and grids.

Example::

    spec_version = 1

    [physics]
    rho_plus = 0.1
    rho_minus = 1.0
    g = 9.8
    sigma = 0.07

    [upper]
    depth = 1.0
    kind = "poly"          # poly, exp, table or constant
    coeffs = [1.0]

    [lower]
    depth = 1.0
    kind = "constant"
    value = 0.0

    [grid]
    k_min = 0.0
    k_max = 10.0
    k_step = 0.5
    eps = [0.1]            # optional; defaults to rho_plus / rho_minus
    g = [9.8]              # optional; defaults to physics.g

    [solver]               # any Tolerances field
    root_scale = 1e-10
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, SpectraError
from .profile import LOWER, UPPER, InterfaceConfig, ShearProfile
from .spectrum import Tolerances

SPEC_VERSION = 1
PROFILE_KINDS = ("poly", "exp", "table", "constant")


@dataclass
class Grid:
    k_min: float = 0.0
    k_max: float = 10.0
    k_step: float = 0.5
    eps: Optional[List[float]] = None
    g: Optional[List[float]] = None

    def ks(self) -> List[float]:
        """k values from k_max down to k_min (inclusive), descending."""
        if not (self.k_step > 0):
            raise ConfigError("grid.k_step must be positive")
        if self.k_max < self.k_min:
            raise ConfigError("grid.k_max must not be below grid.k_min")
        n = int(math.floor((self.k_max - self.k_min) / self.k_step + 1e-9))
        ks = [round(self.k_min + i * self.k_step, 12) for i in range(n + 1)]
        return ks[::-1]


@dataclass
class RunSpec:
    interface: InterfaceConfig
    grid: Grid
    tol: Tolerances
    validate: Dict[str, object] = field(default_factory=dict)
    dispersion: Dict[str, object] = field(default_factory=dict)
    source: str = ""


def _need(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing field '{where}.{key}'")
    return table[key]


def _number(table: dict, key: str, where: str, default=None) -> float:
    v = table.get(key, default) if default is not None else _need(table, key, where)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"field '{where}.{key}' must be a number, got {v!r}")
    return float(v)


def _profile(table: dict, side: str) -> ShearProfile:
    depth = _number(table, "depth", side)
    kind = _need(table, "kind", side)
    if kind not in PROFILE_KINDS:
        raise ConfigError(f"field '{side}.kind' must be one of {PROFILE_KINDS}, got {kind!r}")
    try:
        if kind == "constant":
            return ShearProfile.constant(side, depth, _number(table, "value", side))
        if kind == "poly":
            coeffs = _need(table, "coeffs", side)
            return ShearProfile.poly(side, depth, [float(x) for x in coeffs])
        if kind == "exp":
            return ShearProfile.exp(side, depth, *(_number(table, n, side) for n in ("a", "b", "c")))
        return ShearProfile.table(side, depth, _need(table, "x", side), _need(table, "u", side))
    except SpectraError as exc:
        raise ConfigError(f"section '{side}': {exc}") from exc


def parse_config(data: dict, source: str = "<config>") -> RunSpec:
    version = _need(data, "spec_version", "<root>")
    if version != SPEC_VERSION:
        raise ConfigError(f"field 'spec_version' must be {SPEC_VERSION}, got {version!r}")
    phys = _need(data, "physics", "<root>")
    try:
        interface = InterfaceConfig(
            _number(phys, "rho_plus", "physics"),
            _number(phys, "rho_minus", "physics"),
            _number(phys, "g", "physics"),
            _number(phys, "sigma", "physics"),
            _profile(_need(data, UPPER, "<root>"), UPPER),
            _profile(_need(data, LOWER, "<root>"), LOWER),
        )
    except ConfigError:
        raise
    except SpectraError as exc:
        raise ConfigError(f"section 'physics': {exc}") from exc
    gt = data.get("grid", {})
    grid = Grid(
        _number(gt, "k_min", "grid", 0.0),
        _number(gt, "k_max", "grid", 10.0),
        _number(gt, "k_step", "grid", 0.5),
        [float(x) for x in gt["eps"]] if "eps" in gt else None,
        [float(x) for x in gt["g"]] if "g" in gt else None,
    )
    grid.ks()
    tol = apply_overrides(Tolerances(), data.get("solver", {}), "solver")
    return RunSpec(interface, grid, tol, dict(data.get("validate", {})), dict(data.get("dispersion", {})), source)


def load_config(path) -> RunSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # the decoder message carries "(at line L, column C)"
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data, str(path))


def apply_overrides(tol: Tolerances, overrides: dict, where: str = "tol-override") -> Tolerances:
    names = {f.name: f.type for f in dataclasses.fields(Tolerances)}
    changes = {}
    for key, val in overrides.items():
        if key not in names:
            raise ConfigError(f"unknown tolerance '{where}.{key}'; known: {sorted(names)}")
        try:
            v = int(val) if key == "max_iter" else float(val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"tolerance '{where}.{key}' must be numeric, got {val!r}") from exc
        if not v > 0:
            raise ConfigError(f"tolerance '{where}.{key}' must be positive, got {val!r}")
        changes[key] = v
    return dataclasses.replace(tol, **changes)
