import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tripodgate.core import (
    BlochVector,
    Grid1D,
    MediumParams,
    NormalizationError,
    PolarizationQubit,
    SimUnits,
    bloch_to_qubit,
    fidelity,
    make_qubit,
    qubit_to_bloch,
)

amp = st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False)
nonzero_pair = st.tuples(amp, amp).filter(lambda p: abs(p[0]) + abs(p[1]) > 1e-6)
s2 = 1 / math.sqrt(2)


def test_make_qubit_examples():
    q = make_qubit(1, 0)
    assert (q.c_plus, q.c_minus) == (1, 0)
    q = make_qubit(2, 0)
    assert (q.c_plus, q.c_minus) == (1, 0)
    q = make_qubit(1, 1j)
    assert q.c_plus == pytest.approx(s2, abs=1e-15)
    assert q.c_minus == pytest.approx(1j * s2, abs=1e-15)


def test_make_qubit_rejects_zero():
    with pytest.raises(NormalizationError):
        make_qubit(0, 0)


def test_constructor_checks_norm():
    with pytest.raises(NormalizationError):
        PolarizationQubit(1, 1)


@given(nonzero_pair)
def test_normalization_idempotent_and_phase_preserving(pair):
    q = make_qubit(*pair)
    assert abs(q.c_plus) ** 2 + abs(q.c_minus) ** 2 == pytest.approx(1, abs=1e-12)
    q2 = make_qubit(q.c_plus, q.c_minus)
    assert abs(q2.c_plus - q.c_plus) < 1e-15 and abs(q2.c_minus - q.c_minus) < 1e-15
    if abs(pair[0]) > 1e-3 and abs(pair[1]) > 1e-3:
        rel = np.angle(pair[1] * np.conj(pair[0]))
        assert abs(np.angle(np.exp(1j * (q.relative_phase - rel)))) < 1e-9


def test_bloch_examples():
    assert qubit_to_bloch(make_qubit(1, 0)).as_array() == pytest.approx([0, 0, 1])
    assert qubit_to_bloch(make_qubit(1, 1)).as_array() == pytest.approx([1, 0, 0], abs=1e-15)
    # sign of y fixed by the R_Y check in test_gates: R_Y(small) moves (1,0) toward +x
    assert qubit_to_bloch(make_qubit(1, 1j)).as_array() == pytest.approx([0, 1, 0], abs=1e-15)


@given(nonzero_pair)
def test_bloch_unit_length(pair):
    assert qubit_to_bloch(make_qubit(*pair)).length == pytest.approx(1, abs=1e-12)


@given(nonzero_pair, st.floats(-10, 10))
def test_bloch_global_phase_invariance(pair, alpha):
    q = make_qubit(*pair)
    ph = np.exp(1j * alpha)
    q2 = PolarizationQubit(q.c_plus * ph, q.c_minus * ph)
    assert qubit_to_bloch(q2).as_array() == pytest.approx(qubit_to_bloch(q).as_array(), abs=1e-12)


@settings(max_examples=50)
@given(nonzero_pair)
def test_bloch_round_trip(pair):
    q = make_qubit(*pair)
    back = bloch_to_qubit(qubit_to_bloch(q))
    assert fidelity(q, back) == pytest.approx(1, abs=1e-12)


def test_bloch_to_qubit_rejects_zero():
    with pytest.raises(NormalizationError):
        bloch_to_qubit(BlochVector(0, 0, 0))


def test_fidelity_examples():
    a = make_qubit(0.6, 0.8j)
    assert fidelity(a, a) == pytest.approx(1)
    assert fidelity(make_qubit(1, 0), make_qubit(0, 1)) == 0
    assert fidelity(make_qubit(1, 0), make_qubit(1, 1)) == pytest.approx(0.5)


def test_fidelity_rejects_unnormalized():
    bad = object.__new__(PolarizationQubit)
    object.__setattr__(bad, "c_plus", 1.0)
    object.__setattr__(bad, "c_minus", 1.0)
    with pytest.raises(NormalizationError):
        fidelity(bad, make_qubit(1, 0))


def test_linear_basis_round_trip():
    q = make_qubit(0.3 + 0.2j, -0.7)
    back = PolarizationQubit.from_linear(*q.to_linear())
    assert fidelity(q, back) == pytest.approx(1, abs=1e-14)
    # horizontal linear light is an equal superposition of circular states
    h = PolarizationQubit.from_polarization_angles(0.0, 0.0)
    assert abs(h.c_plus) == pytest.approx(abs(h.c_minus))


def test_grid_spacing():
    g = Grid1D(64, 2.0)
    assert g.n * g.dz == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(np.diff(g.z), g.dz)
    assert g.z[0] > 0 and g.z[-1] < 2.0


def test_medium_params_validation():
    with pytest.raises(ValueError):
        MediumParams(kappa=0)
    with pytest.raises(ValueError):
        MediumParams(kappa=1, n_z=8)
    with pytest.raises(ValueError):
        MediumParams(kappa=1, length=-1)
    assert MediumParams(kappa=3).polariton_prefactor == 1.0


def test_units_conversion():
    u = SimUnits(length_m=0.03)
    t_unit = 0.03 / 299792458.0
    assert u.time(t_unit) == pytest.approx(1.0)
    assert u.rate(1 / t_unit) == pytest.approx(1.0)
    assert u.length(0.015) == pytest.approx(0.5)
