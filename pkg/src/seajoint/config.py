"""Experiment configuration: dotted-key TOML (or JSON) with defaults <- file <- --set.

Every key lives in a section (``gains.c``, ``plant.k``, ...). Unknown keys,
wrong types and invariant violations raise :class:`ConfigError` naming the
key and where its value came from.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .controller import ControllerConfig, ControllerGains
from .errors import ConfigError, GeometryError, SeaJointError
from .plant import DisturbanceProfile, MotorParams, PlantParams, PlantState
from .reference import ReferenceSpec
from .simulator import GAIN_AXES, SimConfig

FLOAT, OPT_FLOAT, INT, STR, OPT_STR, BOOL, PAIRS, FLOAT_LIST = (
    "float", "float|none", "int", "str", "str|none", "bool", "pairs", "floats")

_DEFAULT_SIM = SimConfig()
_DEFAULT_MOTOR = MotorParams()

# section -> {key: (kind, default)}
SCHEMA: dict[str, dict[str, tuple[str, Any]]] = {
    "sim": {
        "dt_plant": (FLOAT, _DEFAULT_SIM.dt_plant),
        "duration": (FLOAT, _DEFAULT_SIM.duration),
        "decimation": (INT, _DEFAULT_SIM.decimation),
        "mode": (STR, _DEFAULT_SIM.mode),
        "theta_range": (FLOAT_LIST, list(_DEFAULT_SIM.theta_range)),
        "transient_window": (FLOAT, _DEFAULT_SIM.transient_window),
    },
    "initial": {name: (FLOAT, 0.0) for name in PlantState._fields},
    "plant": {
        "m": (FLOAT, PlantParams.m), "B": (FLOAT, PlantParams.B),
        "k": (FLOAT, PlantParams.k), "g": (FLOAT, PlantParams.g),
        "m_sea": (OPT_FLOAT, None),
    },
    "geometry": {f"d{i + 1}": (FLOAT, v) for i, v in enumerate(_DEFAULT_SIM.links)},
    "gains": {name: (FLOAT, getattr(ControllerGains, name)) for name in GAIN_AXES},
    "controller": {
        "update_period": (FLOAT, ControllerConfig.update_period),
        "deriv_filter_tau": (OPT_FLOAT, None),
        "boundary_layer": (FLOAT, ControllerConfig.boundary_layer),
        "nominal_tau_D": (FLOAT, ControllerConfig.nominal_tau_D),
        "coupling_rate": (OPT_FLOAT, None),
        "hold_compensation": (BOOL, ControllerConfig.hold_compensation),
        "u_clamp": (OPT_FLOAT, None),
    },
    "disturbance": {
        "kind": (STR, "none"), "amplitude": (FLOAT, 0.0), "frequency": (FLOAT, 0.0),
        "start": (FLOAT, 0.0), "duration": (FLOAT, 0.0),
    },
    "reference": {
        "kind": (STR, ReferenceSpec.kind),
        "period": (FLOAT, ReferenceSpec.period),
        "harmonics": (PAIRS, [list(h) for h in ReferenceSpec().harmonics]),
        "step_size": (FLOAT, ReferenceSpec.step_size),
        "step_time": (FLOAT, ReferenceSpec.step_time),
        "smoothing": (FLOAT, ReferenceSpec.smoothing),
        "initial": (FLOAT, ReferenceSpec.initial),
        "amplitude": (FLOAT, ReferenceSpec.amplitude),
        "frequency": (FLOAT, ReferenceSpec.frequency),
        "offset": (FLOAT, ReferenceSpec.offset),
        "value": (FLOAT, ReferenceSpec.value),
        "path": (OPT_STR, None),
    },
    "motor": {
        "R": (FLOAT, _DEFAULT_MOTOR.R), "L_ind": (FLOAT, _DEFAULT_MOTOR.L_ind),
        "K_T": (FLOAT, _DEFAULT_MOTOR.K_T), "K_EMF": (FLOAT, _DEFAULT_MOTOR.K_EMF),
        "J_M": (FLOAT, _DEFAULT_MOTOR.J_M), "B_M": (FLOAT, _DEFAULT_MOTOR.B_M),
        "J_eq": (OPT_FLOAT, _DEFAULT_MOTOR.J_eq),
        **{name: (OPT_FLOAT, None) for name in MotorParams._DRIVETRAIN},
    },
    "sweep": {
        "axis": (STR, "c"),
        "values": (FLOAT_LIST, [10.0, 20.0]),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved configuration: the simulation plus motor constants and sweep plan."""

    sim: SimConfig = field(default_factory=SimConfig)
    motor: MotorParams = field(default_factory=MotorParams)
    sweep_axis: str = "c"
    sweep_values: tuple = (10.0, 20.0)


def default_values() -> dict[str, Any]:
    """Flat ``{dotted.key: default}`` map."""
    return {f"{sec}.{key}": _copy(default) for sec, keys in SCHEMA.items() for key, (_, default) in keys.items()}


def _copy(value):
    if isinstance(value, list):
        return [_copy(v) for v in value]
    return value


def _kind(dotted: str) -> str:
    section, _, key = dotted.partition(".")
    try:
        return SCHEMA[section][key][0]
    except KeyError:
        raise ConfigError(dotted, "unknown key") from None


def _coerce(dotted: str, value, where: str):
    try:
        kind = _kind(dotted)
    except ConfigError:
        raise ConfigError(dotted, "unknown key", where) from None

    def bad(expected):
        return ConfigError(dotted, f"expected {expected}, got {type(value).__name__} {value!r}", where)

    def num(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise bad("a number")
        return float(v)

    if value is None:
        if kind in (OPT_FLOAT, OPT_STR):
            return None
        raise bad(kind)
    if kind in (FLOAT, OPT_FLOAT):
        return num(value)
    if kind == INT:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or float(value) != int(value):
            raise bad("an integer")
        return int(value)
    if kind in (STR, OPT_STR):
        if not isinstance(value, str):
            raise bad("a string")
        return value
    if kind == BOOL:
        if not isinstance(value, bool):
            raise bad("true or false")
        return value
    if kind == FLOAT_LIST:
        if not isinstance(value, (list, tuple)):
            raise bad("a list of numbers")
        return [num(v) for v in value]
    # PAIRS
    if not isinstance(value, (list, tuple)) or any(not isinstance(p, (list, tuple)) or len(p) != 2 for p in value):
        raise bad("a list of [amplitude, phase] pairs")
    return [[num(a), num(b)] for a, b in value]


def flatten(tree: dict, where: str, prefix: str = "") -> dict[str, Any]:
    """Nested sections -> dotted keys. Top-level scalars are rejected (every key has a section)."""
    flat = {}
    for key, value in tree.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            if prefix:
                raise ConfigError(dotted, "unexpected nested table", where)
            if key not in SCHEMA:
                raise ConfigError(dotted, "unknown section", where)
            flat.update(flatten(value, where, f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def load_config_file(path) -> tuple[dict[str, Any], str]:
    """Read a TOML or JSON config (a run manifest also works). Returns (flat dict, sha256)."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror or exc}") from exc
    digest = hashlib.sha256(raw).hexdigest()
    where = str(path)
    try:
        if path.suffix.lower() == ".json":
            tree = json.loads(raw.decode("utf-8"))
            if isinstance(tree, dict) and "config" in tree and "tool" in tree:
                tree = tree["config"]
        else:
            tree = tomllib.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError("--config", f"parse error: {exc}", where) from exc
    if not isinstance(tree, dict):
        raise ConfigError("--config", "top level must be a table of sections", where)
    return flatten(tree, where), digest


def parse_override(text: str) -> tuple[str, Any]:
    """``key=value`` with a TOML-literal value; bare words are strings, ``none`` is null."""
    key, sep, value = text.partition("=")
    key, value = key.strip(), value.strip()
    if not sep or not key:
        raise ConfigError("--set", f"expected key=value, got {text!r}")
    if value.lower() in ("none", "null"):
        return key, None
    try:
        return key, tomllib.loads(f"v = {value}")["v"]
    except tomllib.TOMLDecodeError:
        return key, value


def resolve(file_values: Optional[dict] = None, overrides: Sequence[str] = (),
            file_label: str = "config file") -> tuple[dict[str, Any], dict[str, str]]:
    """Merge defaults <- file <- overrides. Returns (values, key -> origin)."""
    values = default_values()
    origin = {key: "default" for key in values}
    for key, value in (file_values or {}).items():
        values[key] = _coerce(key, value, file_label)
        origin[key] = file_label
    for text in overrides:
        key, value = parse_override(text)
        values[key] = _coerce(key, value, f"--set {text}")
        origin[key] = "--set"
    return values, origin


def build(values: dict[str, Any], origin: Optional[dict[str, str]] = None) -> ExperimentConfig:
    origin = origin or {}

    def section(name):
        return {key.split(".", 1)[1]: v for key, v in values.items() if key.startswith(name + ".")}

    try:
        try:
            sim_v = section("sim")
            ref = section("reference")
            ref["harmonics"] = tuple(tuple(h) for h in ref["harmonics"])
            sim = SimConfig(
                dt_plant=sim_v["dt_plant"], duration=sim_v["duration"], decimation=sim_v["decimation"],
                mode=sim_v["mode"], theta_range=tuple(_pair("sim.theta_range", sim_v["theta_range"])),
                transient_window=sim_v["transient_window"],
                initial=PlantState(**section("initial")),
                params=PlantParams(**section("plant")),
                links=tuple(section("geometry")[f"d{i}"] for i in range(1, 6)),
                gains=ControllerGains(**section("gains")),
                controller=ControllerConfig(**section("controller")),
                disturbance=DisturbanceProfile(**section("disturbance")),
                reference=ReferenceSpec(**ref),
            )
        except GeometryError as exc:
            key = f"geometry.{exc.field}" if exc.field in ("d1", "d2", "d3", "d4", "d5") else "sim.theta_range"
            raise ConfigError(key, str(exc)) from exc
        except SeaJointError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("sim.theta_range", str(exc)) from exc
        motor = MotorParams(**section("motor"))
        sweep = section("sweep")
        if sweep["axis"] not in GAIN_AXES:
            raise ConfigError("sweep.axis", f"unknown gain {sweep['axis']!r}; expected one of {GAIN_AXES}")
        if not sweep["values"] or any(not v > 0 for v in sweep["values"]):
            raise ConfigError("sweep.values", "need at least one value, all > 0")
    except ConfigError as exc:
        if exc.location is None and exc.key in origin and origin[exc.key] != "default":
            raise ConfigError(exc.key, exc.message, origin[exc.key]) from exc
        raise
    return ExperimentConfig(sim, motor, sweep["axis"], tuple(sweep["values"]))


def _pair(key, value):
    if len(value) != 2:
        raise ConfigError(key, f"expected [low, high], got {value!r}")
    return value


def parse_config(path=None, overrides: Sequence[str] = ()) -> ExperimentConfig:
    file_values, label = None, "config file"
    if path is not None:
        file_values, _ = load_config_file(path)
        label = str(path)
    values, origin = resolve(file_values, overrides, label)
    return build(values, origin)


def config_digest(path) -> Optional[str]:
    if path is None:
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --------------------------------------------------------------------------
# Echo back to a nested dict (manifest) and TOML text

def to_nested(cfg: ExperimentConfig) -> dict[str, dict[str, Any]]:
    sim = cfg.sim
    ref = sim.reference
    flat = {
        "sim.dt_plant": sim.dt_plant, "sim.duration": sim.duration, "sim.decimation": sim.decimation,
        "sim.mode": sim.mode, "sim.theta_range": list(sim.theta_range),
        "sim.transient_window": sim.transient_window,
        **{f"initial.{k}": v for k, v in sim.initial._asdict().items()},
        **{f"plant.{k}": getattr(sim.params, k) for k in SCHEMA["plant"]},
        **{f"geometry.d{i + 1}": v for i, v in enumerate(sim.links)},
        **{f"gains.{k}": getattr(sim.gains, k) for k in SCHEMA["gains"]},
        **{f"controller.{k}": getattr(sim.controller, k) for k in SCHEMA["controller"]},
        **{f"disturbance.{k}": getattr(sim.disturbance, k) for k in SCHEMA["disturbance"]},
        **{f"reference.{k}": getattr(ref, k) for k in SCHEMA["reference"]},
        **{f"motor.{k}": getattr(cfg.motor, k) for k in SCHEMA["motor"]},
        "sweep.axis": cfg.sweep_axis, "sweep.values": list(cfg.sweep_values),
    }
    flat["reference.harmonics"] = [list(h) for h in ref.harmonics]
    nested: dict[str, dict[str, Any]] = {}
    for key, value in flat.items():
        section, _, name = key.partition(".")
        nested.setdefault(section, {})[name] = value
    return nested


def from_nested(tree: dict) -> ExperimentConfig:
    values, origin = resolve(flatten(tree, "manifest"), (), "manifest")
    return build(values, origin)


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    return repr(value)


def to_toml(cfg: ExperimentConfig) -> str:
    """TOML text of the resolved config; optional keys that are unset are omitted."""
    lines = []
    for section, keys in to_nested(cfg).items():
        lines.append(f"[{section}]")
        lines += [f"{k} = {_toml_value(v)}" for k, v in keys.items() if v is not None]
        lines.append("")
    return "\n".join(lines)
