"""Scenario files: line-based ``key = value`` pairs, ``#`` comments.

Parsing is strict.  Unknown keys, duplicate keys, values of the wrong
type and missing required keys are errors that carry the line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

REQUIRED = object()


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(text: str) -> int:
    val = float(text)
    if not val.is_integer():
        raise ValueError(f"not an integer: {text!r}")
    return int(val)


def _float(text: str) -> float:
    val = float(text)
    if math.isnan(val):
        raise ValueError("nan is not allowed")
    return val


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(_float(p) for p in text.split(",") if p.strip())


@dataclass(frozen=True)
class Key:
    kind: type | str
    default: object = REQUIRED
    choices: tuple = ()
    doc: str = ""

    def convert(self, text: str):
        conv = {float: _float, int: _int, bool: _bool, str: str, "floats": _float_list}[self.kind]
        val = conv(text)
        if self.choices and val not in self.choices:
            raise ValueError(f"expected one of {', '.join(map(str, self.choices))}, got {val!r}")
        return val


COMMON = {
    "kind": Key(str),
    "name": Key(str, ""),
    "seed": Key(int, 0),
}

GRID = {
    "dim": Key(int, 1, (1, 2, 3)),
    "n": Key(int),
    "length": Key(float),
}

BUMP = {
    "bump_amp": Key(float, 0.3),
    "bump_center": Key(float, 1.0),
    "bump_width": Key(float, 0.8),
}

SCHEMAS: dict[str, dict[str, Key]] = {
    "tau": {
        "mode": Key(str, "logarithmic", ("logarithmic", "polytropic")),
        "lambda": Key(float, 1.0),
        "alpha": Key(float, 1.0),
        "t_end": Key(float),
        "samples": Key(int, 201),
        "tol": Key(float, 1e-13),
        "residual_tol": Key(float, 1e-9),
    },
    "gaussian": {
        "lambda": Key(float),
        "alpha0": Key(float, 1.0),
        "beta0": Key(float, 0.0),
        "b0": Key(float, 1.0),
        "t_end": Key(float),
        "samples": Key(int, 201),
        "tol": Key(float, 1e-11),
        "residual_tol": Key(float, 1e-8),
        "period_tol": Key(float, 1e-6),
    },
    "evolve": {
        **GRID,
        "nonlinearity": Key(str, "logarithmic", ("logarithmic", "power")),
        "lambda": Key(float),
        "sigma": Key(float, 1.0),
        "reg_eps": Key(float, 1e-10),
        "dt": Key(float, 1e-3),
        "t_end": Key(float),
        "every": Key(int, 100),
        "datum": Key(str, "gaussian", ("gaussian", "gausson", "bump")),
        "alpha0": Key(float, 1.0),
        "beta0": Key(float, 0.0),
        "b0": Key(float, 1.0),
        "omega": Key(float, 0.0),
        "noise": Key(float, 0.0),
        "snapshots": Key(bool, False),
        "oracle_tol": Key(float, 1e-4),
        "mass_tol": Key(float, 1e-12),
        **BUMP,
    },
    "rescaled": {
        **GRID,
        "lambda": Key(float, 1.0),
        "reg_eps": Key(float, 1e-10),
        "dt": Key(float, 1e-3),
        "dt_max": Key(float, 0.05),
        "t_end": Key(float),
        "samples": Key(int, 25),
        "datum": Key(str, "bump", ("gaussian", "bump")),
        "alpha0": Key(float, 1.0),
        "beta0": Key(float, 0.0),
        "snapshots": Key(bool, False),
        "mass_tol": Key(float, 1e-10),
        "center_tol": Key(float, 1e-6),
        **BUMP,
    },
    "solitons": {
        "mode": Key(str, "stationary", ("stationary", "superposition")),
        "lambda": Key(float, -1.0),
        "omega": Key(float, 0.0),
        "n": Key(int, 1024),
        "length": Key(float, 40.0),
        "dt": Key(float, 1e-3),
        "t_end": Key(float, 1.0),
        "reg_eps": Key(float, 1e-12),
        "radii": Key("floats", (4.0, 8.0, 12.0)),  # Gaussons at +-R
        "distance_tol": Key(float, 1e-6),
    },
    "fluids": {
        "eps": Key(float, 0.0),
        "nu": Key(float, 0.0),
        "gamma": Key(float, 1.0),
        "beta0": Key(float, 0.5),
        "omega0": Key(float, 0.0),
        "mass": Key(float, math.sqrt(math.pi)),
        "t_end": Key(float),
        "samples": Key(int, 101),
        "n": Key(int, 1024),
        "trend_from": Key(float, 10.0),
        "residual_tol": Key(float, 1e-8),
    },
    "verify": {
        "pairs": Key(int, 1_000_000),
        "fields": Key(int, 1000),
        "n": Key(int, 256),
        "length": Key(float, 40.0),
        "eta": Key(float, 0.5),
        "alpha": Key(float, 1.0),
    },
}

KINDS = tuple(SCHEMAS)


@dataclass
class Scenario:
    name: str
    kind: str
    params: dict = field(default_factory=dict)
    out_dir: Path | None = None
    source: str = ""

    def __getitem__(self, key):
        return self.params[key]

    @property
    def seed(self) -> int:
        return self.params["seed"]


def parse_config(text: str, source: str = "<config>") -> Scenario:
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"empty key or value in {body!r}", lineno)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r} (first set on line {raw[key][1]})", lineno)
        raw[key] = (value, lineno)

    if "kind" not in raw:
        raise ConfigError("missing required key 'kind'")
    kind, kline = raw["kind"]
    if kind not in SCHEMAS:
        raise ConfigError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}", kline)
    schema = {**COMMON, **SCHEMAS[kind]}

    params = {}
    for key, (value, lineno) in raw.items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} for kind {kind!r}", lineno)
        try:
            params[key] = schema[key].convert(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
    for key, spec in schema.items():
        if key not in params:
            if spec.default is REQUIRED:
                raise ConfigError(f"missing required key {key!r} for kind {kind!r}")
            params[key] = spec.default
    name = params["name"] or kind
    return Scenario(name=name, kind=kind, params=params, source=source)


def load_config(path) -> Scenario:
    path = Path(path)
    scen = parse_config(path.read_text(encoding="utf-8"), str(path))
    if not scen.params["name"]:
        scen.name = path.stem
    return scen


def default_scenario(kind: str, **overrides) -> Scenario:
    """Scenario with defaults only; required keys must come in ``overrides``."""
    lines = [f"kind = {kind}"] + [f"{k} = {_render(v)}" for k, v in overrides.items()]
    return parse_config("\n".join(lines))


def _render(v) -> str:
    if isinstance(v, (tuple, list)):
        return ",".join(repr(float(x)) for x in v)
    return str(v)


def render_params(params: dict) -> list[str]:
    return [f"{k} = {_render(v)}" for k, v in params.items()]
