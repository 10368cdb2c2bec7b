"""Shared value types, unit conventions and qubit/Bloch helpers.

Everything in the package works in dimensionless simulation units:
hbar = 1, lengths in units of the sample length L, times in units of L/c
(so c = 1).  Rabi frequencies, the coupling constant kappa and |W| are
measured in units of c/L.  Conversion from SI happens only at config
ingestion (:class:`SimUnits`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ALGEBRA_TOL = 1e-12
PDE_TOL = 1e-6

HBAR_SI = 1.054571817e-34
C_SI = 299792458.0


class NormalizationError(ValueError):
    """Raised when a qubit is zero or not normalized where it must be."""


@dataclass(frozen=True)
class SimUnits:
    """Dimensionless unit system anchored on a sample length.

    Parameters
    ----------
    length_m : float
        Physical sample length L in metres.  Only used to convert SI inputs.
    """

    length_m: float = 1.0

    @property
    def time_s(self) -> float:
        """One simulation time unit (L/c) in seconds."""
        return self.length_m / C_SI

    def rate(self, value_per_s: float) -> float:
        """Convert an angular rate in rad/s to units of c/L."""
        return value_per_s * self.time_s

    def time(self, seconds: float) -> float:
        return seconds / self.time_s

    def length(self, metres: float) -> float:
        return metres / self.length_m


@dataclass(frozen=True)
class MediumParams:
    """Static medium description.

    ``kappa`` is the collective probe coupling (kappa^2 = N |d|^2 omega / 2 eps0 hbar)
    already expressed in units of c/L.  ``atom_count`` only sets the constant
    prefactor sqrt(N0 / kappa^2 L) of the polariton fields; ``None`` chooses
    N0 = kappa^2 L so that the prefactor is one.
    """

    kappa: float
    length: float = 1.0
    n_z: int = 512
    atom_count: float | None = None

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")
        if self.n_z < 16:
            raise ValueError(f"n_z must be at least 16, got {self.n_z}")

    @property
    def polariton_prefactor(self) -> float:
        if self.atom_count is None:
            return 1.0
        return math.sqrt(self.atom_count / (self.kappa**2 * self.length))

    def grid(self) -> Grid1D:
        return Grid1D(self.n_z, self.length)


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centred grid on [0, length] with ``n`` cells."""

    n: int
    length: float = 1.0
    z: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("grid needs at least two points")
        if not self.length > 0:
            raise ValueError("grid length must be positive")
        z = (np.arange(self.n) + 0.5) * self.dz
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def dz(self) -> float:
        return self.length / self.n

    def integrate(self, values: np.ndarray) -> complex | float:
        """Midpoint-rule integral over the sample (exact for cell averages)."""
        return np.sum(values, axis=-1) * self.dz

    def norm2(self, values: np.ndarray) -> float:
        return float(np.sum(np.abs(values) ** 2) * self.dz)


@dataclass(frozen=True)
class PolarizationQubit:
    """Pure polarization state c_plus |+> + c_minus |-> in the circular basis.

    Use :func:`make_qubit` to build a normalized instance from arbitrary
    amplitudes; the constructor itself only checks the norm.
    """

    c_plus: complex
    c_minus: complex

    def __post_init__(self):
        object.__setattr__(self, "c_plus", complex(self.c_plus))
        object.__setattr__(self, "c_minus", complex(self.c_minus))
        norm = abs(self.c_plus) ** 2 + abs(self.c_minus) ** 2
        if abs(norm - 1.0) > 1e-9:
            raise NormalizationError(
                f"qubit amplitudes have squared norm {norm:.3e}; use make_qubit"
            )

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.c_plus, self.c_minus], dtype=complex)

    @property
    def relative_phase(self) -> float:
        """arg(c_minus) - arg(c_plus), wrapped to (-pi, pi]."""
        return float(np.angle(self.c_minus * np.conj(self.c_plus)))

    def to_linear(self) -> tuple[complex, complex]:
        """Amplitudes on (e_x, e_y), with e_+- = (e_x +- i e_y)/sqrt(2)."""
        s = 1 / math.sqrt(2)
        return (s * (self.c_plus + self.c_minus), 1j * s * (self.c_plus - self.c_minus))

    @classmethod
    def from_linear(cls, a_x: complex, a_y: complex) -> PolarizationQubit:
        s = 1 / math.sqrt(2)
        return make_qubit(s * (a_x - 1j * a_y), s * (a_x + 1j * a_y))

    @classmethod
    def from_polarization_angles(cls, vartheta: float, varphi: float) -> PolarizationQubit:
        """Build from e = e_x cos(t/2) e^{-i p/2} + e_y sin(t/2) e^{i p/2}.

        Uses the linear/circular convention of :meth:`to_linear`.  The
        resulting circular-basis Bloch vector is *not* (sin t cos p, ...)
        in general; the linear angles describe the Stokes sphere in the
        linear basis.
        """
        a_x = math.cos(vartheta / 2) * np.exp(-0.5j * varphi)
        a_y = math.sin(vartheta / 2) * np.exp(0.5j * varphi)
        return cls.from_linear(a_x, a_y)


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def length(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)


def make_qubit(c_plus: complex, c_minus: complex) -> PolarizationQubit:
    """Normalize two circular-basis amplitudes into a qubit.

    Raises
    ------
    NormalizationError
        If both amplitudes vanish.
    """
    c_plus, c_minus = complex(c_plus), complex(c_minus)
    norm = math.sqrt(abs(c_plus) ** 2 + abs(c_minus) ** 2)
    if norm == 0.0 or not math.isfinite(norm):
        raise NormalizationError("cannot normalize a zero (or non-finite) amplitude pair")
    return PolarizationQubit(c_plus / norm, c_minus / norm)


def _check_normalized(q: PolarizationQubit, tol: float = ALGEBRA_TOL) -> None:
    norm = abs(q.c_plus) ** 2 + abs(q.c_minus) ** 2
    if abs(norm - 1.0) > tol:
        raise NormalizationError(f"qubit not normalized (|c|^2 = {norm!r})")


def qubit_to_bloch(q: PolarizationQubit) -> BlochVector:
    """Bloch vector in the circular basis, with |+> at the north pole.

    The orientation is the one under which ``rotation_z(phi)`` applied as
    c -> R c turns (x, y) by +phi and ``rotation_x``/``rotation_y`` turn
    the vector about +x/+y.
    """
    _check_normalized(q)
    cross = np.conj(q.c_plus) * q.c_minus
    return BlochVector(
        x=float(2 * cross.real),
        y=float(2 * cross.imag),
        z=float(abs(q.c_plus) ** 2 - abs(q.c_minus) ** 2),
    )


def bloch_to_qubit(v: BlochVector) -> PolarizationQubit:
    """Inverse of :func:`qubit_to_bloch` with c_plus chosen real and >= 0."""
    r = v.length
    if r == 0:
        raise NormalizationError("zero Bloch vector does not describe a pure state")
    theta = math.acos(max(-1.0, min(1.0, v.z / r)))
    phi = math.atan2(v.y, v.x)
    return make_qubit(math.cos(theta / 2), math.sin(theta / 2) * np.exp(1j * phi))


def fidelity(a: PolarizationQubit, b: PolarizationQubit) -> float:
    """|<a|b>|^2, insensitive to the global phase of either state."""
    _check_normalized(a)
    _check_normalized(b)
    overlap = np.conj(a.c_plus) * b.c_plus + np.conj(a.c_minus) * b.c_minus
    return float(min(1.0, abs(overlap) ** 2))
