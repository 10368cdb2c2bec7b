"""YAML run configuration: parsing, unit conversion and validation.

A config file has nested sections; only ``input``, ``medium`` and
``schedule`` are required::

    schema: tripodgate.config/1
    units: {system: sim}          # or {system: si, length_m: 0.02}
    medium: {kappa: 400, n_z: 512}
    input: {c_plus: 1, c_minus: 0}
    envelope: {center: 0.25, width: 0.05}
    schedule: {velocity: 0.5, t_off: 0.3, hold: null, ramp_time: null}
    manipulations:
      - raman: {chi: pi, beta: pi}
      - zeeman: {phi: pi/2}
    engine: full
    output: {snapshot_every: 64}
    seed: 0

Angles accept numbers or simple expressions in ``pi`` ("pi/2", "-3*pi/4").
Complex amplitudes accept numbers, ``[re, im]`` pairs or strings such as
"0.6j".  With ``units.system: si`` rates are rad/s and times seconds.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .core import MediumParams, PolarizationQubit, SimUnits, make_qubit
from .gates import GatePulse, ZeemanPulse
from .propagation import ControlSchedule, control_for_velocity
from .protocol import Envelope, ProtocolSpec, default_ramp_time

CONFIG_SCHEMA = "tripodgate.config/1"
REQUIRED = ("input", "medium", "schedule")


class ConfigParseError(ValueError):
    """Malformed file or missing/ill-typed field."""


class ConfigValidationError(ValueError):
    """Well-formed config describing an impossible run."""


_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg,
        ast.UAdd: operator.pos}


def _eval_expr(node):
    if isinstance(node, ast.Expression):
        return _eval_expr(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
        return node.value
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval_expr(node.left), _eval_expr(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval_expr(node.operand))
    raise ValueError("unsupported expression")


def parse_number(value: Any, where: str, allow_complex: bool = False):
    """Parse a YAML scalar (or [re, im] pair) into a float or complex."""
    try:
        if isinstance(value, bool):
            raise ValueError
        if isinstance(value, (list, tuple)) and allow_complex and len(value) == 2:
            return complex(parse_number(value[0], where), parse_number(value[1], where))
        if isinstance(value, (int, float)):
            out = value
        elif isinstance(value, str):
            out = _eval_expr(ast.parse(value.strip(), mode="eval"))
        else:
            raise ValueError
        if isinstance(out, complex) and not allow_complex:
            raise ValueError
        return complex(out) if allow_complex else float(out)
    except (ValueError, SyntaxError, TypeError, ZeroDivisionError):
        kind = "complex number" if allow_complex else "number"
        raise ConfigParseError(f"field `{where}`: expected a {kind}, got {value!r}") from None


def _section(raw: dict, name: str, required: bool = False) -> dict:
    if name not in raw or raw[name] is None:
        if required:
            raise ConfigParseError(f"config is missing required field `{name}`")
        return {}
    sec = raw[name]
    if not isinstance(sec, dict):
        raise ConfigParseError(f"field `{name}` must be a mapping, got {type(sec).__name__}")
    return sec


def _check_keys(sec: dict, name: str, allowed: set) -> None:
    extra = set(sec) - allowed
    if extra:
        raise ConfigParseError(f"unknown field(s) in `{name}`: {', '.join(sorted(map(str, extra)))}")


@dataclass
class RunConfig:
    """Validated run description plus output options."""

    spec: ProtocolSpec
    seed: int = 0
    snapshot_every: int = 0
    source_text: str = ""
    source_path: Optional[str] = None
    name: str = "run"
    raw: dict = field(default_factory=dict, repr=False)


class _Units:
    def __init__(self, sec: dict):
        _check_keys(sec, "units", {"system", "length_m"})
        system = sec.get("system", "sim")
        if system not in ("sim", "si"):
            raise ConfigParseError(f"field `units.system` must be 'sim' or 'si', got {system!r}")
        self.si = system == "si"
        if self.si and "length_m" not in sec:
            raise ConfigParseError("config is missing required field `units.length_m` (needed for SI input)")
        self.units = SimUnits(parse_number(sec.get("length_m", 1.0), "units.length_m"))

    def rate(self, value, where):
        x = parse_number(value, where)
        return self.units.rate(x) if self.si else x

    def time(self, value, where):
        x = parse_number(value, where)
        return self.units.time(x) if self.si else x


def _parse_input(sec: dict, seed: int) -> PolarizationQubit:
    if sec.get("random"):
        rng = np.random.default_rng(seed)
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        return make_qubit(*v)
    _check_keys(sec, "input", {"c_plus", "c_minus", "random"})
    for k in ("c_plus", "c_minus"):
        if k not in sec:
            raise ConfigParseError(f"config is missing required field `input.{k}`")
    try:
        return make_qubit(parse_number(sec["c_plus"], "input.c_plus", True),
                          parse_number(sec["c_minus"], "input.c_minus", True))
    except ValueError as exc:
        if isinstance(exc, ConfigParseError):
            raise
        raise ConfigValidationError(f"input: {exc}") from None


def _parse_pulse(item: Any, i: int, units: _Units):
    where = f"manipulations[{i}]"
    if not isinstance(item, dict) or len(item) != 1:
        raise ConfigParseError(f"field `{where}` must be a mapping with a single key 'raman' or 'zeeman'")
    (kind, body), = item.items()
    if not isinstance(body, dict):
        raise ConfigParseError(f"field `{where}.{kind}` must be a mapping")
    tau = units.time(body.get("tau", 0.1), f"{where}.{kind}.tau")
    if kind == "raman":
        _check_keys(body, f"{where}.raman", {"chi", "beta", "omega_w", "tau"})
        chi = parse_number(body.get("chi", 0.0), f"{where}.raman.chi")
        if "beta" in body:
            return GatePulse.from_area(chi, parse_number(body["beta"], f"{where}.raman.beta"), tau)
        if "omega_w" in body:
            return GatePulse(chi, units.rate(body["omega_w"], f"{where}.raman.omega_w"), tau)
        raise ConfigParseError(f"config is missing required field `{where}.raman.beta`")
    if kind == "zeeman":
        _check_keys(body, f"{where}.zeeman", {"phi", "b_field", "tau", "g_factor", "rate"})
        if "phi" in body:
            return ZeemanPulse.from_phase(parse_number(body["phi"], f"{where}.zeeman.phi"), tau)
        if "b_field" in body:
            return ZeemanPulse(
                parse_number(body["b_field"], f"{where}.zeeman.b_field"), tau,
                g_factor=parse_number(body.get("g_factor", 1.0), f"{where}.zeeman.g_factor"),
                rate=units.rate(body.get("rate", 1.0), f"{where}.zeeman.rate"),
            )
        raise ConfigParseError(f"config is missing required field `{where}.zeeman.phi`")
    raise ConfigParseError(f"field `{where}`: unknown manipulation {kind!r} (use 'raman' or 'zeeman')")


def _parse_schedule(sec: dict, kappa: float, units: _Units) -> ControlSchedule:
    _check_keys(sec, "schedule", {"velocity", "omega_c0", "t_off", "hold", "ramp_time"})
    if "omega_c0" in sec:
        omega_c0 = units.rate(sec["omega_c0"], "schedule.omega_c0")
    else:
        v = parse_number(sec.get("velocity", 0.5), "schedule.velocity")
        if not 0 < v < 1:
            raise ConfigValidationError("schedule.velocity must lie in (0, 1)")
        omega_c0 = control_for_velocity(v, kappa)
    ramp = sec.get("ramp_time")
    ramp = default_ramp_time(kappa) if ramp is None else units.time(ramp, "schedule.ramp_time")
    hold = sec.get("hold")
    hold = 16 * ramp if hold is None else units.time(hold, "schedule.hold")
    t_off = units.time(sec.get("t_off", 0.3), "schedule.t_off")
    if ramp <= 0 or hold <= 0:
        raise ConfigValidationError("schedule.ramp_time and schedule.hold must be positive")
    return ControlSchedule.storage(kappa, omega_c0, t_off, t_off + hold, ramp)


def parse_config(raw: Any, source_text: str = "", source_path: Optional[str] = None,
                 engine: Optional[str] = None, seed: Optional[int] = None) -> RunConfig:
    """Build a :class:`RunConfig` from already-loaded YAML data."""
    if not isinstance(raw, dict):
        raise ConfigParseError("config must be a mapping at top level")
    _check_keys(raw, "<top level>", {"schema", "name", "units", "medium", "input", "envelope",
                                     "schedule", "manipulations", "engine", "readout_delay",
                                     "cfl", "output", "seed"})
    schema = raw.get("schema", CONFIG_SCHEMA)
    if schema != CONFIG_SCHEMA:
        raise ConfigParseError(f"field `schema`: unsupported version {schema!r} (expected {CONFIG_SCHEMA})")
    for name in REQUIRED:
        _section(raw, name, required=True)
    units = _Units(_section(raw, "units"))
    seed = int(raw.get("seed", 0)) if seed is None else seed

    med = _section(raw, "medium", required=True)
    _check_keys(med, "medium", {"kappa", "n_z", "length", "atom_count"})
    if "kappa" not in med:
        raise ConfigParseError("config is missing required field `medium.kappa`")
    kappa = units.rate(med["kappa"], "medium.kappa")
    n_z = med.get("n_z", 512)
    if not isinstance(n_z, int) or isinstance(n_z, bool):
        raise ConfigParseError(f"field `medium.n_z`: expected an integer, got {n_z!r}")
    atom_count = med.get("atom_count")
    try:
        medium = MediumParams(
            kappa=kappa, n_z=n_z,
            length=parse_number(med.get("length", 1.0), "medium.length"),
            atom_count=None if atom_count is None else parse_number(atom_count, "medium.atom_count"),
        )
    except ValueError as exc:
        raise ConfigValidationError(f"medium: {exc}") from None

    qubit = _parse_input(_section(raw, "input", required=True), seed)
    env = _section(raw, "envelope")
    _check_keys(env, "envelope", {"center", "width"})
    envelope = Envelope(parse_number(env.get("center", 0.25), "envelope.center"),
                        parse_number(env.get("width", 0.05), "envelope.width"))
    schedule = _parse_schedule(_section(raw, "schedule", required=True), kappa, units)

    manips = raw.get("manipulations") or []
    if not isinstance(manips, list):
        raise ConfigParseError("field `manipulations` must be a list")
    pulses = []
    for i, item in enumerate(manips):
        try:
            pulses.append(_parse_pulse(item, i, units))
        except ConfigParseError:
            raise
        except ValueError as exc:
            raise ConfigValidationError(f"manipulations[{i}]: {exc}") from None

    out = _section(raw, "output")
    _check_keys(out, "output", {"snapshot_every"})
    snapshot_every = out.get("snapshot_every", 0)
    if not isinstance(snapshot_every, int) or snapshot_every < 0:
        raise ConfigParseError("field `output.snapshot_every` must be a non-negative integer")
    readout = raw.get("readout_delay")
    try:
        spec = ProtocolSpec(
            input_qubit=qubit,
            medium=medium,
            envelope=envelope,
            schedule=schedule,
            manipulations=tuple(pulses),
            engine=engine or raw.get("engine", "full"),
            readout_delay=None if readout is None else units.time(readout, "readout_delay"),
            cfl=parse_number(raw.get("cfl", 1.0), "cfl"),
            snapshot_every=snapshot_every,
        )
    except ConfigParseError:
        raise
    except ValueError as exc:
        raise ConfigValidationError(str(exc)) from None
    return RunConfig(spec=spec, seed=seed, snapshot_every=snapshot_every, source_text=source_text,
                     source_path=source_path, name=str(raw.get("name", "run")), raw=raw)


def load_text(text: str, source_path: Optional[str] = None, **kw) -> RunConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigParseError(f"YAML syntax error{where}: {problem}") from None
    return parse_config(raw, text, source_path, **kw)


def load_config(path, **kw) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc.strerror}") from None
    return load_text(text, str(path), **kw)


PRESET_DIR = Path(__file__).with_name("presets")


def preset_names() -> list[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.yaml"))


def preset_path(name: str) -> Path:
    path = PRESET_DIR / f"{name}.yaml"
    if not path.exists():
        raise ConfigParseError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return path
