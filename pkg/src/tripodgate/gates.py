"""Single-qubit gate algebra for stored-light polarization qubits.

The Raman coupling between the two stored spin coherences realizes the
two-parameter family

    G(chi, beta) = [[cos(beta/2),             i e^{ i chi} sin(beta/2)],
                    [i e^{-i chi} sin(beta/2), cos(beta/2)            ]]

acting on (s_bc, s_b'c) and, after release, on the field pair
(Omega_+, Omega_-).  A magnetic (Zeeman) pulse adds the phase rotation
R_Z(phi).

Two actions on a photon state are provided and kept apart on purpose:

* :func:`act_on_state` multiplies the amplitude vector by G (c -> G c).
  This is what the simulated release produces, and it is the convention
  under which ``rotation_x/y/z`` turn the Bloch vector about +x/+y/+z.
* :func:`apply_to_state` uses the conjugated-entry rule
  c_+' = G11* c_+ + G21* c_-,  c_-' = G12* c_+ + G22* c_-   (c -> G^dagger c).

For the named gates the two agree up to a global phase.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .core import ALGEBRA_TOL, PolarizationQubit, _check_normalized, make_qubit

Envelope = Union[float, Sequence[float], np.ndarray]


class NonUnitaryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Unitary2:
    """A 2x2 unitary, stored as an immutable complex array."""

    matrix: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        if self.check and not is_unitary(m, tol=1e-10):
            raise NonUnitaryError("matrix is not unitary within 1e-10")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def g11(self) -> complex:
        return complex(self.matrix[0, 0])

    @property
    def g12(self) -> complex:
        return complex(self.matrix[0, 1])

    @property
    def g21(self) -> complex:
        return complex(self.matrix[1, 0])

    @property
    def g22(self) -> complex:
        return complex(self.matrix[1, 1])

    @property
    def dagger(self) -> Unitary2:
        return Unitary2(self.matrix.conj().T, check=False)

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.matrix))

    def __matmul__(self, other: Unitary2) -> Unitary2:
        return Unitary2(self.matrix @ other.matrix, check=False)

    def __mul__(self, scalar: complex) -> Unitary2:
        return Unitary2(complex(scalar) * self.matrix, check=False)

    __rmul__ = __mul__

    def allclose(self, other, atol: float = ALGEBRA_TOL) -> bool:
        other = other.matrix if isinstance(other, Unitary2) else np.asarray(other)
        return bool(np.allclose(self.matrix, other, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        rows = ", ".join(
            "[" + ", ".join(f"{v.real:+.6f}{v.imag:+.6f}j" for v in row) + "]"
            for row in self.matrix
        )
        return f"Unitary2([{rows}])"


def is_unitary(m: np.ndarray, tol: float = ALGEBRA_TOL) -> bool:
    m = np.asarray(m, dtype=complex)
    return bool(np.allclose(m.conj().T @ m, np.eye(m.shape[0]), rtol=0.0, atol=tol))


def phase_distance(a, b) -> float:
    """Frobenius distance between two matrices minimized over a global phase."""
    a = a.matrix if isinstance(a, Unitary2) else np.asarray(a, dtype=complex)
    b = b.matrix if isinstance(b, Unitary2) else np.asarray(b, dtype=complex)
    overlap = abs(np.trace(a.conj().T @ b))
    d2 = np.sum(abs(a) ** 2) + np.sum(abs(b) ** 2) - 2 * overlap
    return float(math.sqrt(max(d2, 0.0)))


IDENTITY = Unitary2(np.eye(2))
PAULI_X = Unitary2([[0, 1], [1, 0]])
PAULI_Y = Unitary2([[0, -1j], [1j, 0]])
PAULI_Z = Unitary2([[1, 0], [0, -1]])


def gate_matrix(chi: float, beta: float) -> Unitary2:
    """Raman gate with coupling phase ``chi`` and pulse area ``beta`` = 2|W|tau/hbar."""
    c, s = math.cos(beta / 2), math.sin(beta / 2)
    return Unitary2(
        [[c, 1j * cmath.exp(1j * chi) * s], [1j * cmath.exp(-1j * chi) * s, c]],
        check=False,
    )


def rotation_x(beta: float) -> Unitary2:
    c, s = math.cos(beta / 2), math.sin(beta / 2)
    return Unitary2([[c, -1j * s], [-1j * s, c]], check=False)


def rotation_y(beta: float) -> Unitary2:
    c, s = math.cos(beta / 2), math.sin(beta / 2)
    return Unitary2([[c, -s], [s, c]], check=False)


def rotation_z(phi: float) -> Unitary2:
    return Unitary2([[cmath.exp(-0.5j * phi), 0], [0, cmath.exp(0.5j * phi)]], check=False)


def h_tilde() -> Unitary2:
    """(1/sqrt 2)[[1, 1], [-1, 1]]: the chi = pi/2, beta = pi/2 pulse seen on states.

    Equal to ``rotation_y(pi/2).dagger``, i.e. the action of the
    (chi=pi/2, beta=pi/2) pulse under :func:`apply_to_state`.
    """
    return Unitary2(np.array([[1, 1], [-1, 1]]) / math.sqrt(2), check=False)


def hadamard() -> Unitary2:
    """Hadamard built as e^{i pi/2} R_Z(pi) H~."""
    return 1j * (rotation_z(math.pi) @ h_tilde())


def hadamard_alternative() -> Unitary2:
    """Hadamard built as e^{i pi/2} H~ R_X(pi)."""
    return 1j * (h_tilde() @ rotation_x(math.pi))


def apply_to_state(g: Unitary2, q: PolarizationQubit) -> PolarizationQubit:
    """Transform a photon qubit with the conjugated-entry rule (c -> G^dagger c)."""
    _check_normalized(q)
    c_p = np.conj(g.g11) * q.c_plus + np.conj(g.g21) * q.c_minus
    c_m = np.conj(g.g12) * q.c_plus + np.conj(g.g22) * q.c_minus
    return make_qubit(c_p, c_m)


def act_on_state(g: Unitary2, q: PolarizationQubit) -> PolarizationQubit:
    """Transform a photon qubit as its field amplitudes transform (c -> G c)."""
    _check_normalized(q)
    return make_qubit(*(g.matrix @ q.vector))


def apply_to_fields(g: Unitary2, omega):
    """Apply G to a field pair.

    ``omega`` is either a length-2 complex vector, an array of shape
    (2, n) holding (Omega_+, Omega_-) on a grid, or any object with
    ``omega_plus``/``omega_minus`` attributes and a ``replace`` method
    (e.g. :class:`tripodgate.propagation.FieldState`).
    """
    if hasattr(omega, "omega_plus"):
        pair = np.stack([omega.omega_plus, omega.omega_minus])
        out = np.tensordot(g.matrix, pair, axes=1)
        return omega.replace(omega_plus=out[0], omega_minus=out[1])
    arr = np.asarray(omega, dtype=complex)
    return np.tensordot(g.matrix, arr, axes=1)


# --- physical pulses -------------------------------------------------------


def _area(envelope: Envelope, tau: float) -> float:
    values = np.atleast_1d(np.asarray(envelope, dtype=float))
    if values.size == 1:
        return float(values[0]) * tau
    t = np.linspace(0.0, tau, values.size)
    return float(np.trapezoid(values, t))


@dataclass(frozen=True, eq=False)
class GatePulse:
    """Two-photon Raman pulse with constant phase ``chi`` and envelope |W|(t).

    ``omega_w`` is either a constant |W| or samples on a uniform grid over
    [0, tau].  The rotation angle is beta = 2 * integral |W| dt (hbar = 1).
    """

    chi: float
    omega_w: Envelope
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("pulse duration tau must be positive")
        if np.any(np.asarray(self.omega_w) < 0):
            raise ValueError("|W| envelope must be non-negative")

    @property
    def beta(self) -> float:
        return 2.0 * _area(self.omega_w, self.tau)

    @property
    def unitary(self) -> Unitary2:
        return gate_matrix(self.chi, self.beta)

    @classmethod
    def from_area(cls, chi: float, beta: float, tau: float = 0.1) -> GatePulse:
        """Constant-envelope pulse of area ``beta``; negative areas flip chi by pi."""
        if beta < 0:
            chi, beta = chi + math.pi, -beta
        return cls(chi=chi, omega_w=beta / (2 * tau), tau=tau)

    @classmethod
    def from_coupling(cls, w: complex, tau: float) -> GatePulse:
        return cls(chi=cmath.phase(w), omega_w=abs(w), tau=tau)

    def __repr__(self) -> str:
        return f"GatePulse(chi={self.chi:.6g}, beta={self.beta:.6g}, tau={self.tau:.6g})"


@dataclass(frozen=True, eq=False)
class ZeemanPulse:
    """Magnetic pulse shifting |b> and |b'> in opposite directions.

    ``rate`` is the gyromagnetic factor e/2m expressed in simulation units,
    so that phi/2 = integral g_F * rate * B(t) dt.
    """

    b_field: Envelope
    tau: float
    g_factor: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("pulse duration tau must be positive")
        if not np.all(np.isfinite(np.asarray(self.b_field, dtype=float))):
            raise ValueError("magnetic field samples must be finite")

    @property
    def phi(self) -> float:
        return 2.0 * self.g_factor * self.rate * _area(self.b_field, self.tau)

    @property
    def unitary(self) -> Unitary2:
        return rotation_z(self.phi)

    @classmethod
    def from_phase(cls, phi: float, tau: float = 0.1) -> ZeemanPulse:
        return cls(b_field=phi / (2 * tau), tau=tau)

    def __repr__(self) -> str:
        return f"ZeemanPulse(phi={self.phi:.6g}, tau={self.tau:.6g})"


Pulse = Union[GatePulse, ZeemanPulse]


def zeeman_area(pulse: ZeemanPulse) -> float:
    return pulse.phi


def sequence_unitary(pulses: Sequence[Pulse]) -> Unitary2:
    """Product of pulse unitaries; the first pulse in the list acts first."""
    total = IDENTITY
    for p in pulses:
        total = p.unitary @ total
    return total


@dataclass(frozen=True)
class RamanCouplingSpec:
    """Matrix elements <b|U+|f>, <f|U-|b'> and detuning E_b + hbar w_U+ - E_f."""

    u_plus: complex
    u_minus: complex
    detuning: float

    def __post_init__(self):
        if self.detuning == 0:
            raise ValueError("Raman detuning must be non-zero (resonant divergence)")


@dataclass(frozen=True)
class EffectiveCoupling:
    value: complex

    @property
    def magnitude(self) -> float:
        return abs(self.value)

    @property
    def chi(self) -> float:
        """Phase of W in (-pi, pi]."""
        chi = cmath.phase(self.value)
        return math.pi if chi == -math.pi else chi


def effective_coupling(spec: RamanCouplingSpec) -> EffectiveCoupling:
    """Second-order b-b' coupling W through the far-detuned level f."""
    if spec.detuning == 0:
        raise ValueError("Raman detuning must be non-zero (resonant divergence)")
    return EffectiveCoupling(complex(spec.u_plus) * complex(spec.u_minus) / spec.detuning)


# --- synthesis -------------------------------------------------------------


@dataclass(frozen=True)
class EulerSchedule:
    """target = e^{i global_phase} R_Z(phi2) R_Y(beta) R_Z(phi1).

    ``pulses()`` returns the physical sequence in time order: Zeeman
    phi1, Raman (chi = pi/2, beta), Zeeman phi2.
    """

    phi1: float
    beta: float
    phi2: float
    global_phase: float

    def unitary(self) -> Unitary2:
        core = rotation_z(self.phi2) @ gate_matrix(math.pi / 2, self.beta) @ rotation_z(self.phi1)
        return cmath.exp(1j * self.global_phase) * core

    def pulses(self, tau: float = 0.1) -> list[Pulse]:
        seq: list[Pulse] = []
        if self.phi1 != 0:
            seq.append(ZeemanPulse.from_phase(self.phi1, tau))
        if self.beta != 0:
            seq.append(GatePulse.from_area(math.pi / 2, self.beta, tau))
        if self.phi2 != 0:
            seq.append(ZeemanPulse.from_phase(self.phi2, tau))
        return seq


def synthesize(target, tol: float = 1e-10) -> EulerSchedule:
    """Z-Y-Z Euler decomposition of a 2x2 unitary onto Zeeman/Raman controls."""
    m = target.matrix if isinstance(target, Unitary2) else np.asarray(target, dtype=complex)
    if m.shape != (2, 2) or not is_unitary(m, tol=tol):
        raise NonUnitaryError("synthesis target must be a 2x2 unitary within 1e-10")
    alpha = cmath.phase(np.linalg.det(m)) / 2
    v = cmath.exp(-1j * alpha) * m
    beta = 2 * math.atan2(abs(v[1, 0]), abs(v[0, 0]))
    total = -2 * cmath.phase(v[0, 0]) if abs(v[0, 0]) > 1e-12 else 0.0
    diff = 2 * cmath.phase(v[1, 0]) if abs(v[1, 0]) > 1e-12 else 0.0
    sched = EulerSchedule(phi1=(total - diff) / 2, beta=beta, phi2=(total + diff) / 2, global_phase=alpha)
    if not sched.unitary().allclose(m, atol=tol):
        raise ArithmeticError("Euler recomposition failed to reproduce target")
    return sched


# --- named gates -----------------------------------------------------------


@dataclass(frozen=True)
class NamedGate:
    """A named target and the pulse sequence realizing it up to a global phase.

    ``target`` is compared against ``sequence_unitary(pulses)``, i.e. the
    map on the field / coherence amplitudes.
    """

    name: str
    target: Unitary2
    pulses: tuple
    note: str = ""


def named_gates(phi: float = math.pi / 2) -> dict[str, NamedGate]:
    pi = math.pi
    return {
        "identity": NamedGate("identity", IDENTITY, ()),
        "NOT": NamedGate(
            "NOT", PAULI_X, (GatePulse.from_area(pi, pi),), "overall phase factor -i"
        ),
        "sqrtNOT": NamedGate(
            "sqrtNOT",
            Unitary2(np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]]) / 2),
            (GatePulse.from_area(pi, pi / 2),),
            "overall phase factor e^{-i pi/4}",
        ),
        "H~": NamedGate(
            "H~",
            rotation_y(pi / 2),
            (GatePulse.from_area(pi / 2, pi / 2),),
            "R_Y(pi/2); acts on states as H~ under the conjugated rule",
        ),
        "sigma_y": NamedGate(
            "sigma_y", PAULI_Y, (GatePulse.from_area(pi / 2, pi),), "overall phase factor -i"
        ),
        "hadamard": NamedGate(
            "hadamard",
            hadamard(),
            (ZeemanPulse.from_phase(pi), GatePulse.from_area(pi / 2, pi / 2)),
            "R_Y(pi/2) R_Z(pi) with global phase e^{i pi/2}",
        ),
        "phase": NamedGate(
            "phase", rotation_z(phi), (ZeemanPulse.from_phase(phi),), f"R_Z({phi:.6g})"
        ),
    }


def resolve_named(name: str, phi: float = math.pi / 2) -> NamedGate:
    table = named_gates(phi)
    aliases = {k.lower(): k for k in table}
    aliases.update({"not": "NOT", "x": "NOT", "sqrt-not": "sqrtNOT", "h": "hadamard",
                    "htilde": "H~", "h-tilde": "H~", "y": "sigma_y", "z": "phase"})
    key = aliases.get(name.lower())
    if key is None:
        raise KeyError(f"unknown gate {name!r}; known: {', '.join(table)}")
    return table[key]
