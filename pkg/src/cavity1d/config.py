"""Experiment configuration files.

INI-style documents with flat ``[section]`` blocks. Length-like values may be
written as arithmetic expressions in ``L`` (cavity length), ``lambda`` (the
emitter's resonant wavelength) and ``pi``, e.g. ``position = L/2 + lambda/8``.
Parsing resolves every value to a number, so the serialised form is exact.
"""

from __future__ import annotations

import ast
import configparser
import dataclasses
import math
import operator
import re
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ConfigError

KINDS = ("decay", "sweep", "crystal", "ensemble", "spectrum", "analyzer", "master-eq")
BACKENDS = ("eig", "rk")

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def eval_expression(text: str, names: dict[str, float]) -> float:
    """Evaluate a small arithmetic expression over ``names``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name):
            name = "lambda" if node.id == "lambda_" else node.id
            if name not in names:
                raise ConfigError(f"unknown name {name!r} in expression {text!r}")
            return float(names[name])
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        raise ConfigError(f"unsupported syntax in expression {text!r}")

    try:
        # 'lambda' is a Python keyword; rename it before parsing.
        source = re.sub(r"\blambda\b", "lambda_", text.strip().replace("^", "**"))
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}") from exc
    try:
        value = ev(tree)
    except ZeroDivisionError as exc:
        raise ConfigError(f"division by zero in {text!r}") from exc
    if not math.isfinite(value):
        raise ConfigError(f"expression {text!r} is not finite")
    return value


def _opt(section: str, default=None, kind: str = "float"):
    return field(default=default, metadata={"section": section, "kind": kind})


@dataclass
class ExperimentConfig:
    kind: str = _opt("experiment", "decay", "choice")

    length: float = _opt("cavity", 2 * math.pi)
    cutoff: float = _opt("cavity", 200.0)
    coupling_model: str = _opt("cavity", "broadband", "str")

    frequency: float = _opt("atom", 100.0)
    coupling_sq: float = _opt("atom", 0.5)
    position: float = _opt("atom", None)

    offsets: list = _opt("sweep", None, "list")

    count: int = _opt("crystal", None, "int")
    lattice: float = _opt("crystal", None)
    placement: str = _opt("crystal", None, "str")
    pin_emitter: bool = _opt("crystal", True, "bool")
    drop_mirror_atoms: bool = _opt("crystal", True, "bool")

    t_max: float = _opt("time", None)
    n_samples: int = _opt("time", None, "int")

    backend: str = _opt("backend", "eig", "choice")
    dt: float = _opt("backend", 1e-4)

    n_configs: int = _opt("ensemble", None, "int")
    seed: int = _opt("ensemble", 0, "int")

    spectrum_times: list = _opt("spectrum", None, "list")

    analyzer_count: int = _opt("analyzer", 100, "int")
    analyzer_offset: float = _opt("analyzer", 0.5)
    gamma_ratio: float = _opt("analyzer", 1e-4)
    span: float = _opt("analyzer", 3.0)
    readout_time: float = _opt("analyzer", 2.0)

    density_times: list = _opt("density", (), "list")
    grid_points: int = _opt("density", 2048, "int")

    threshold: float = _opt("master_eq", 1e-6)
    frame: str = _opt("master_eq", "interaction", "str")

    out: str = _opt("output", "out", "str")

    @property
    def wavelength(self) -> float:
        return 2 * math.pi / self.frequency

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_samples)


# Keys as they appear in files: section -> {key: field name}.
_FILE_KEYS = {
    "experiment": {"kind": "kind"},
    "cavity": {"length": "length", "cutoff": "cutoff", "model": "coupling_model"},
    "atom": {"frequency": "frequency", "coupling_sq": "coupling_sq", "position": "position"},
    "sweep": {"offsets": "offsets"},
    "crystal": {
        "count": "count",
        "lattice": "lattice",
        "placement": "placement",
        "pin_emitter": "pin_emitter",
        "drop_mirror_atoms": "drop_mirror_atoms",
    },
    "time": {"t_max": "t_max", "n_samples": "n_samples"},
    "backend": {"name": "backend", "dt": "dt"},
    "ensemble": {"n_configs": "n_configs", "seed": "seed"},
    "spectrum": {"times": "spectrum_times"},
    "analyzer": {
        "count": "analyzer_count",
        "offset": "analyzer_offset",
        "gamma_ratio": "gamma_ratio",
        "span": "span",
        "readout_time": "readout_time",
    },
    "density": {"times": "density_times", "points": "grid_points"},
    "master_eq": {"threshold": "threshold", "frame": "frame"},
    "output": {"dir": "out"},
}
# Sections parse_config tolerates and ignores (written alongside run outputs).
_IGNORED_SECTIONS = {"manifest"}

_FIELD_KEY = {name: (section, key) for section, keys in _FILE_KEYS.items() for key, name in keys.items()}

# Order of evaluation: names used in expressions must be resolved first.
_EVAL_ORDER = ["length", "cutoff", "frequency"]

_KIND_DEFAULTS = {
    "decay": dict(t_max=4 * math.pi, n_samples=4001),
    "sweep": dict(t_max=4 * math.pi, n_samples=4001),
    "crystal": dict(count=101, lattice="lambda/8", placement="regular", t_max=4 * math.pi, n_samples=2001),
    "ensemble": dict(count=101, lattice="lambda/4", placement="random_per_cell", t_max=4 * math.pi, n_samples=2001, n_configs=100),
    "spectrum": dict(t_max=3.0, n_samples=301),
    "analyzer": dict(t_max=3.0, n_samples=301),
    "master-eq": dict(t_max=4 * math.pi, n_samples=12567),
}
_GENERIC_DEFAULTS = dict(
    count=1,
    lattice="lambda/8",
    placement="regular",
    n_configs=100,
    offsets="0, lambda/16, lambda/8, lambda/4",
    spectrum_times="0.3, 0.7, 1, 3",
    position="L/2",
)


def _parse_bool(text: str, where: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{where}: expected a boolean, got {text!r}")


def _parse_int(text: str, where: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(f"{where}: expected an integer, got {text!r}") from None


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse a config document, apply defaults and validate it.

    ``overrides`` maps field names to values that replace whatever the file
    says (used for command-line flags).
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source="<config>")
    except configparser.Error as exc:
        raise ConfigError(f"parse error: {exc}") from exc

    raw: dict[str, str] = {}
    for section in parser.sections():
        if section in _IGNORED_SECTIONS:
            continue
        if section not in _FILE_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        for key, value in parser.items(section):
            if key not in _FILE_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            raw[_FILE_KEYS[section][key]] = value

    overrides = dict(overrides or {})
    kind = str(overrides.get("kind", raw.get("kind", "decay"))).strip()
    if kind not in KINDS:
        raise ConfigError(f"[experiment] kind: unknown experiment kind {kind!r}; expected one of {', '.join(KINDS)}")

    defaults = {**_GENERIC_DEFAULTS, **_KIND_DEFAULTS[kind]}
    names = {"pi": math.pi}
    values = {"kind": kind}

    def where(name):
        section, key = _FIELD_KEY[name]
        return f"[{section}] {key}"

    ordered = _EVAL_ORDER + [f.name for f in fields(ExperimentConfig) if f.name not in _EVAL_ORDER and f.name != "kind"]
    meta = {f.name: f for f in fields(ExperimentConfig)}
    for name in ordered:
        f = meta[name]
        if name in overrides:
            values[name] = overrides[name]
        else:
            source = raw.get(name, defaults.get(name, f.default))
            values[name] = _convert(source, f.metadata["kind"], names, where(name))
        if name == "length":
            names["L"] = values[name]
        elif name == "frequency":
            if not values[name] > 0:
                raise ConfigError(f"{where(name)}: transition frequency must be positive")
            names["lambda"] = 2 * math.pi / values[name]

    cfg = ExperimentConfig(**values)
    validate(cfg)
    return cfg


def _convert(source, kind, names, where):
    if source is None:
        return None
    if not isinstance(source, str):
        return list(source) if kind == "list" else source
    if kind == "float":
        return eval_expression(source, names)
    if kind == "int":
        return _parse_int(source, where)
    if kind == "bool":
        return _parse_bool(source, where)
    if kind == "list":
        parts = [p for p in source.split(",") if p.strip()]
        return [eval_expression(p, names) for p in parts]
    return source.strip()


def validate(cfg: ExperimentConfig) -> None:
    """Cheap structural checks; physical validation happens when the system is built."""
    from .model import CouplingModel

    if cfg.backend not in BACKENDS:
        raise ConfigError(f"[backend] name: unknown backend {cfg.backend!r}")
    try:
        CouplingModel(cfg.coupling_model)
    except ValueError:
        raise ConfigError(f"[cavity] model: unknown coupling model {cfg.coupling_model!r}") from None
    if cfg.frame not in ("lab", "interaction"):
        raise ConfigError(f"[master_eq] frame: expected 'lab' or 'interaction', got {cfg.frame!r}")
    if cfg.placement not in ("regular", "random_per_cell", "stacked"):
        raise ConfigError(f"[crystal] placement: unknown placement {cfg.placement!r}")
    if not (0.0 < cfg.position < cfg.length):
        what = "atom at mirror" if cfg.position in (0.0, cfg.length) else "atom outside cavity"
        raise ConfigError(f"[atom] position: {what} (position {cfg.position!r}, cavity (0, {cfg.length!r}))")
    if cfg.n_samples is None or cfg.n_samples < 1:
        raise ConfigError("[time] n_samples must be at least 1")
    if cfg.t_max is None or cfg.t_max < 0:
        raise ConfigError("[time] t_max must be non-negative")
    if not cfg.dt > 0:
        raise ConfigError("[backend] dt must be positive")
    if cfg.count < 1:
        raise ConfigError("[crystal] count must be at least 1")
    if cfg.n_configs < 1:
        raise ConfigError("[ensemble] n_configs must be at least 1")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("[ensemble] seed must be an unsigned 64-bit integer")
    if cfg.grid_points < 2:
        raise ConfigError("[density] points must be at least 2")


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_format(float(v)) for v in value)
    return str(value)


def to_text(cfg: ExperimentConfig) -> str:
    """Serialise a resolved config; ``parse_config(to_text(c)) == c``."""
    lines = []
    for section, keys in _FILE_KEYS.items():
        lines.append(f"[{section}]")
        for key, name in keys.items():
            lines.append(f"{key} = {_format(getattr(cfg, name))}")
        lines.append("")
    return "\n".join(lines)


def replace(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    new = dataclasses.replace(cfg, **changes)
    validate(new)
    return new
