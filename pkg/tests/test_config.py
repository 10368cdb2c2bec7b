import math
import textwrap

import pytest

from tripodgate.config import (
    ConfigParseError,
    ConfigValidationError,
    load_text,
    parse_number,
    preset_names,
    preset_path,
    load_config,
)
from tripodgate.gates import GatePulse, ZeemanPulse

BASE = """
medium: {kappa: 400, n_z: 256}
input: {c_plus: 1, c_minus: 0}
schedule: {velocity: 0.5, t_off: 0.3}
"""


def test_minimal_config_defaults():
    rc = load_text(BASE)
    s = rc.spec
    assert s.engine == "full"
    assert s.medium.n_z == 256
    assert s.schedule.ramp_time == pytest.approx(50 / 400)
    assert s.schedule.t_on - s.schedule.t_off == pytest.approx(16 * 50 / 400)
    assert s.schedule.omega_c0 == pytest.approx(400 / math.sqrt(2))
    assert rc.source_text == BASE


@pytest.mark.parametrize("missing", ["medium", "input", "schedule"])
def test_missing_required_section(missing):
    lines = [ln for ln in BASE.strip().splitlines() if not ln.startswith(missing)]
    with pytest.raises(ConfigParseError, match=f"`{missing}`"):
        load_text("\n".join(lines))


def test_missing_nested_field():
    with pytest.raises(ConfigParseError, match="medium.kappa"):
        load_text(BASE.replace("kappa: 400, ", ""))


def test_yaml_syntax_error_names_line():
    with pytest.raises(ConfigParseError, match="line 2"):
        load_text("medium: {kappa: 400\ninput: [\n")


def test_unknown_field():
    with pytest.raises(ConfigParseError, match="colour"):
        load_text(BASE + "colour: blue\n")


def test_schema_version_checked():
    with pytest.raises(ConfigParseError, match="schema"):
        load_text(BASE + "schema: tripodgate.config/9\n")


def test_angle_expressions_and_pulses():
    text = BASE + textwrap.dedent("""
        manipulations:
          - raman: {chi: pi/2, beta: "3*pi/4"}
          - zeeman: {phi: -pi}
          - raman: {chi: 0, omega_w: 2.0, tau: 0.25}
          - zeeman: {b_field: 1.5, tau: 0.2, rate: 0.5}
    """)
    m = load_text(text).spec.manipulations
    assert isinstance(m[0], GatePulse) and m[0].chi == pytest.approx(math.pi / 2)
    assert m[0].beta == pytest.approx(3 * math.pi / 4)
    assert isinstance(m[1], ZeemanPulse) and m[1].phi == pytest.approx(-math.pi)
    assert m[2].beta == pytest.approx(1.0)
    assert m[3].phi == pytest.approx(0.3)


def test_bad_number_names_field():
    with pytest.raises(ConfigParseError, match=r"manipulations\[0\].raman.beta"):
        load_text(BASE + "manipulations:\n  - raman: {chi: 0, beta: __import__}\n")
    with pytest.raises(ConfigParseError):
        parse_number("2**pi + x", "x")


def test_complex_input_forms():
    rc = load_text(BASE.replace("{c_plus: 1, c_minus: 0}", "{c_plus: [0.6, 0], c_minus: 0.8j}"))
    assert rc.spec.input_qubit.c_minus == pytest.approx(0.8j)


def test_random_input_is_seeded():
    text = BASE.replace("{c_plus: 1, c_minus: 0}", "{random: true}")
    a = load_text(text, seed=3).spec.input_qubit
    b = load_text(text, seed=3).spec.input_qubit
    c = load_text(text, seed=4).spec.input_qubit
    assert a == b and a != c


def test_si_units():
    length = 0.02
    t_unit = length / 299792458.0
    text = f"""
units: {{system: si, length_m: {length}}}
medium: {{kappa: {400 / t_unit}, n_z: 256}}
input: {{c_plus: 1, c_minus: 0}}
schedule: {{velocity: 0.5, t_off: {0.3 * t_unit}, ramp_time: {0.125 * t_unit}}}
"""
    s = load_text(text).spec
    assert s.medium.kappa == pytest.approx(400)
    assert s.schedule.t_off == pytest.approx(0.3)
    assert s.schedule.ramp_time == pytest.approx(0.125)


def test_si_requires_length():
    with pytest.raises(ConfigParseError, match="length_m"):
        load_text(BASE + "units: {system: si}\n")


@pytest.mark.parametrize("edit", [
    ("n_z: 256", "n_z: 8"),
    ("velocity: 0.5", "velocity: 1.5"),
    ("t_off: 0.3", "t_off: 0.3, hold: 0.05"),
])
def test_validation_errors(edit):
    text = BASE.replace(*edit)
    if "hold" in edit[1]:
        text += "manipulations:\n  - raman: {chi: 0, beta: 1}\n"
    with pytest.raises(ConfigValidationError):
        load_text(text)


def test_engine_override():
    assert load_text(BASE, engine="polariton").spec.engine == "polariton"
    with pytest.raises(ConfigValidationError):
        load_text(BASE + "engine: warp\n")


def test_presets_all_load():
    names = preset_names()
    assert {"identity", "not-gate", "sqrt-not", "h-tilde", "hadamard", "phase", "sigma-y"} <= set(names)
    for name in names:
        assert load_config(preset_path(name)).spec.validate() is None
    with pytest.raises(ConfigParseError):
        preset_path("nope")
