"""Two-mode probe propagation through the tripod medium.

Two engines are provided and serve as oracles for each other:

* the full linearized Maxwell-Bloch stepper (:func:`step_full`), which
  advances

      (d/dt + d/dz) Omega_+- = i kappa^2 s_{ba|b'a}

  together with the Bloch equations by Strang splitting: exact-at-CFL-1
  first-order upwind transport for the field, RK4 for the local
  light-matter coupling;
* the dark-state polariton picture, in which

      psi_+- = P (Omega_+- cos(theta) - sqrt(2) kappa s_{bc|b'c} sin(theta)),
      tan(theta) = kappa / (sqrt(2) Omega_c),

  is rigidly translated at the group velocity cos^2(theta)
  (:func:`analytic_polariton_evolve`), with :func:`adiabatic_step` as the
  time-stepped adiabatic limit in between.

The relative minus sign in psi is the one for which the dark state
s_bc = -Omega_+/(2 Omega_c) of the Bloch equations is transported
without change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .core import Grid1D
from .medium import GridMismatchError, MediumState

OVERFLOW_GUARD = 1e100
SUPPORT_FRACTION = 1e-3


class CFLError(ValueError):
    pass


class SimulationDivergence(FloatingPointError):
    pass


class AdiabaticBreakdown(ValueError):
    pass


class ProfileOffGrid(ValueError):
    pass


# --- state containers ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FieldState:
    """Probe Rabi-frequency envelopes Omega_+(z), Omega_-(z) at one instant."""

    grid: Grid1D
    omega_plus: np.ndarray
    omega_minus: np.ndarray

    def __post_init__(self):
        for name in ("omega_plus", "omega_minus"):
            arr = np.array(getattr(self, name), dtype=complex)
            if arr.shape == ():
                arr = np.full(self.grid.n, complex(arr))
            if arr.shape != (self.grid.n,):
                raise GridMismatchError(f"{name} has shape {arr.shape}, grid has {self.grid.n} points")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def zeros(cls, grid: Grid1D) -> FieldState:
        z = np.zeros(grid.n, dtype=complex)
        return cls(grid, z, z)

    def replace(self, **changes) -> FieldState:
        return replace(self, **changes)

    @property
    def pair(self) -> np.ndarray:
        return np.stack([self.omega_plus, self.omega_minus])

    def energy(self) -> float:
        return self.grid.norm2(self.omega_plus) + self.grid.norm2(self.omega_minus)

    def support_fraction_inside(self, margin: float = 0.0) -> float:
        """Share of the norm lying farther than ``margin`` from both grid edges."""
        z = self.grid.z
        inside = (z >= margin) & (z <= self.grid.length - margin)
        w = np.abs(self.omega_plus) ** 2 + np.abs(self.omega_minus) ** 2
        total = w.sum()
        return float(w[inside].sum() / total) if total > 0 else 1.0


@dataclass(frozen=True, eq=False)
class PolaritonState:
    grid: Grid1D
    psi_plus: np.ndarray
    psi_minus: np.ndarray

    def __post_init__(self):
        for name in ("psi_plus", "psi_minus"):
            arr = np.array(getattr(self, name), dtype=complex)
            if arr.shape != (self.grid.n,):
                raise GridMismatchError(f"{name} has shape {arr.shape}, grid has {self.grid.n} points")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def pair(self) -> np.ndarray:
        return np.stack([self.psi_plus, self.psi_minus])

    def norm(self) -> float:
        return self.grid.norm2(self.psi_plus) + self.grid.norm2(self.psi_minus)


# --- control schedule ------------------------------------------------------


def mixing_angle(omega_c, kappa: float):
    """theta with tan(theta) = kappa / (sqrt(2) Omega_c); pi/2 when the control is off."""
    return np.arctan2(kappa, math.sqrt(2) * np.asarray(omega_c, dtype=float))


def group_velocity(theta):
    """Polariton velocity cos^2(theta) in units of c."""
    return np.cos(theta) ** 2


def control_for_velocity(velocity: float, kappa: float) -> float:
    """Control Rabi frequency giving cos^2(theta) = ``velocity``."""
    if not 0 < velocity < 1:
        raise ValueError("group velocity must lie in (0, 1)")
    return kappa * math.sqrt(velocity / (2 * (1 - velocity)))


def _sech2(x):
    return 1.0 - np.tanh(x) ** 2


@dataclass(frozen=True)
class ControlSchedule:
    """Control Rabi frequency Omega_c(t) over the protocol timeline.

    Built-in shape (``samples`` is None)::

        Omega_c(t) = Omega_c0 * [(1 - tanh((t - t_off)/T_r))/2
                                 + (1 + tanh((t - t_on)/T_r))/2]

    where a missing ``t_off`` keeps the control on and a missing ``t_on``
    never turns it back on.  ``ramp_time == 0`` gives hard switches.
    Alternatively ``samples = (t, omega_c)`` is interpolated linearly.
    """

    kappa: float
    omega_c0: float
    t_off: Optional[float] = None
    t_on: Optional[float] = None
    ramp_time: float = 0.5
    samples: Optional[tuple] = None

    def __post_init__(self):
        if self.omega_c0 < 0:
            raise ValueError("control Rabi frequency must be non-negative")
        if self.ramp_time < 0:
            raise ValueError("ramp time must be non-negative")
        if self.t_off is not None and self.t_on is not None and self.t_on <= self.t_off:
            raise ValueError("t_on must come after t_off")
        if self.samples is not None:
            t, v = (np.asarray(a, dtype=float) for a in self.samples)
            if t.shape != v.shape or t.ndim != 1 or np.any(np.diff(t) < 0):
                raise ValueError("samples must be two equal-length arrays with sorted times")
            if np.any(v < 0):
                raise ValueError("control Rabi frequency must be non-negative")
            object.__setattr__(self, "samples", (t, v))

    @classmethod
    def constant(cls, kappa: float, omega_c: float) -> ControlSchedule:
        return cls(kappa=kappa, omega_c0=omega_c)

    @classmethod
    def storage(cls, kappa: float, omega_c0: float, t_off: float, t_on: Optional[float],
                ramp_time: float) -> ControlSchedule:
        return cls(kappa=kappa, omega_c0=omega_c0, t_off=t_off, t_on=t_on, ramp_time=ramp_time)

    @classmethod
    def sampled(cls, kappa: float, t, omega_c) -> ControlSchedule:
        omega_c = np.asarray(omega_c, dtype=float)
        return cls(kappa=kappa, omega_c0=float(np.max(omega_c)), samples=(t, omega_c))

    @property
    def hold_midpoint(self) -> Optional[float]:
        if self.t_off is None or self.t_on is None:
            return None
        return 0.5 * (self.t_off + self.t_on)

    def _off(self, t):
        if self.ramp_time == 0:
            return np.where(t < self.t_off, 1.0, 0.0)
        return 0.5 * (1 - np.tanh((t - self.t_off) / self.ramp_time))

    def _on(self, t):
        if self.ramp_time == 0:
            return np.where(t >= self.t_on, 1.0, 0.0)
        return 0.5 * (1 + np.tanh((t - self.t_on) / self.ramp_time))

    def omega_c(self, t):
        t = np.asarray(t, dtype=float)
        if self.samples is not None:
            return np.interp(t, *self.samples)
        shape = np.ones_like(t)
        if self.t_off is not None:
            shape = self._off(t)
            if self.t_on is not None:
                shape = shape + self._on(t)
        return self.omega_c0 * shape

    def d_omega_c(self, t):
        """Time derivative of Omega_c; infinite at hard switches."""
        t = np.asarray(t, dtype=float)
        if self.samples is not None:
            ts, vs = self.samples
            slopes = np.diff(vs) / np.maximum(np.diff(ts), 1e-300)
            idx = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(slopes) - 1)
            return slopes[idx]
        out = np.zeros_like(t)
        if self.t_off is None:
            return out
        if self.ramp_time == 0:
            return np.where(np.isclose(t, self.t_off), -np.inf, out)
        out = -0.5 * self.omega_c0 / self.ramp_time * _sech2((t - self.t_off) / self.ramp_time)
        if self.t_on is not None:
            out = out + 0.5 * self.omega_c0 / self.ramp_time * _sech2((t - self.t_on) / self.ramp_time)
        return out

    def theta(self, t):
        return mixing_angle(self.omega_c(t), self.kappa)

    def velocity(self, t):
        om2 = self.omega_c(t) ** 2
        return om2 / (om2 + 0.5 * self.kappa**2)

    def d_theta(self, t):
        om = self.omega_c(t)
        return -(self.kappa / math.sqrt(2)) * self.d_omega_c(t) / (om**2 + 0.5 * self.kappa**2)

    def breakpoints(self) -> list[float]:
        if self.samples is not None:
            return list(self.samples[0])
        return [x for x in (self.t_off, self.t_on) if x is not None]


def displacement(schedule: ControlSchedule, t1: float, t0: float = 0.0) -> float:
    """Distance D = integral_{t0}^{t1} cos^2(theta(t)) dt travelled by the polariton."""
    if t1 == t0:
        return 0.0
    pts = [p for p in schedule.breakpoints() if min(t0, t1) < p < max(t0, t1)]
    val, _ = integrate.quad(
        lambda t: float(schedule.velocity(t)), t0, t1,
        points=pts or None, limit=400, epsabs=1e-13, epsrel=1e-12,
    )
    return float(val)


# --- polariton picture -----------------------------------------------------


def polariton_transform(fields: FieldState, medium: MediumState, theta: float, kappa: float,
                        prefactor: float = 1.0) -> PolaritonState:
    """Dark-state polariton fields psi_+- from probe fields and spin coherences."""
    if fields.grid != medium.grid:
        raise GridMismatchError("fields and medium live on different grids")
    c, s = math.cos(theta), math.sin(theta)
    k = math.sqrt(2) * kappa
    return PolaritonState(
        fields.grid,
        prefactor * (fields.omega_plus * c - k * medium.s_bc * s),
        prefactor * (fields.omega_minus * c - k * medium.s_bpc * s),
    )


def dark_state(polariton: PolaritonState, omega_c: float, kappa: float, prefactor: float = 1.0,
               velocity_gradient: bool = True) -> tuple[FieldState, MediumState]:
    """Fields and coherences of a pure dark-state polariton.

    With ``velocity_gradient`` the optical coherence takes its first-order
    adiabatic value s_ba = -(i/Omega_c) d/dt s_bc for a profile moving at
    the group velocity, which avoids exciting the bright polariton at t = 0.
    """
    grid = polariton.grid
    theta = float(mixing_angle(omega_c, kappa))
    c, s = math.cos(theta), math.sin(theta)
    pair = polariton.pair / prefactor
    omega = pair * c
    spin = -pair * s / (math.sqrt(2) * kappa)
    optical = np.zeros_like(spin)
    if velocity_gradient and omega_c > 0:
        v = c * c
        d_spin_dt = -v * np.gradient(spin, grid.dz, axis=1)
        optical = -1j * d_spin_dt / omega_c
    fields = FieldState(grid, omega[0], omega[1])
    medium = MediumState(grid, optical[0], optical[1], spin[0], spin[1], 0.0)
    return fields, medium


def translate_profile(values: np.ndarray, grid: Grid1D, shift: float) -> np.ndarray:
    """Profile f(z - shift) on the same grid by cubic-spline interpolation.

    Raises
    ------
    ProfileOffGrid
        If more than 0.1% of the norm would be carried past the grid edge.
    """
    values = np.asarray(values, dtype=complex)
    z = grid.z
    weight = np.abs(values) ** 2
    total = weight.sum()
    if shift == 0 or total == 0:
        return values.copy()
    lost = weight[(z + shift > grid.length) | (z + shift < 0)].sum() / total
    if lost > SUPPORT_FRACTION:
        raise ProfileOffGrid(
            f"translation by {shift:.4f} L carries {lost:.2%} of the profile off the grid"
        )
    spline = CubicSpline(z, values, bc_type="natural", extrapolate=False)
    out = spline(z - shift)
    return np.nan_to_num(out, nan=0.0)


def analytic_polariton_evolve(initial: PolaritonState, schedule: ControlSchedule, t: float,
                              t0: float = 0.0) -> PolaritonState:
    """Exact adiabatic solution psi(z, t) = psi(z - D(t), t0)."""
    d = displacement(schedule, t, t0)
    return PolaritonState(
        initial.grid,
        translate_profile(initial.psi_plus, initial.grid, d),
        translate_profile(initial.psi_minus, initial.grid, d),
    )


# --- full Maxwell-Bloch engine ---------------------------------------------

OmegaC = Union[float, Callable[[float], float]]
Inflow = Optional[Callable[[float], tuple]]


def _omega_at(omega_c: OmegaC, t: float) -> float:
    return float(omega_c(t)) if callable(omega_c) else float(omega_c)


class FullStepper:
    """Array-level full-engine stepper.

    The state vector ``y`` has rows (Omega_+, Omega_-, s_ba, s_b'a, s_bc, s_b'c);
    ``s_bbp`` is a fixed parameter profile.
    """

    def __init__(self, grid: Grid1D, kappa: float, omega_c: OmegaC, s_bbp=0.0,
                 inflow: Inflow = None):
        self.grid = grid
        self.kappa2 = kappa * kappa
        self.omega_c = omega_c
        self.s_bbp = np.broadcast_to(np.asarray(s_bbp, dtype=complex), (grid.n,))
        self.s_bpb = np.conj(self.s_bbp)
        self.inflow = inflow

    @staticmethod
    def pack(fields: FieldState, medium: MediumState) -> np.ndarray:
        return np.stack([fields.omega_plus, fields.omega_minus,
                         medium.s_ba, medium.s_bpa, medium.s_bc, medium.s_bpc])

    def unpack(self, y: np.ndarray) -> tuple[FieldState, MediumState]:
        g = self.grid
        return (FieldState(g, y[0], y[1]),
                MediumState(g, y[2], y[3], y[4], y[5], self.s_bbp))

    def local_rhs(self, y: np.ndarray, omega_c: float) -> np.ndarray:
        om_p, om_m, ba, bpa, bc, bpc = y
        out = np.empty_like(y)
        out[0] = 1j * self.kappa2 * ba
        out[1] = 1j * self.kappa2 * bpa
        out[2] = 1j * (0.5 * om_p + omega_c * bc + om_m * self.s_bbp)
        out[3] = 1j * (0.5 * om_m + omega_c * bpc + om_p * self.s_bpb)
        out[4] = 1j * omega_c * ba
        out[5] = 1j * omega_c * bpa
        return out

    def _rk4(self, y, t, h):
        oc0 = _omega_at(self.omega_c, t)
        ocm = _omega_at(self.omega_c, t + 0.5 * h)
        oc1 = _omega_at(self.omega_c, t + h)
        k1 = self.local_rhs(y, oc0)
        k2 = self.local_rhs(y + 0.5 * h * k1, ocm)
        k3 = self.local_rhs(y + 0.5 * h * k2, ocm)
        k4 = self.local_rhs(y + h * k3, oc1)
        return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    def _advect(self, y, t, dt):
        courant = dt / self.grid.dz
        ghost = np.zeros(2, dtype=complex)
        if self.inflow is not None:
            ghost[:] = self.inflow(t + 0.5 * self.grid.dz)
        upwind = np.concatenate([ghost[:, None], y[0:2, :-1]], axis=1)
        if courant == 1.0:
            y[0:2] = upwind
        else:
            y[0:2] = y[0:2] - courant * (y[0:2] - upwind)
        return y

    def step(self, y: np.ndarray, t: float, dt: float) -> np.ndarray:
        if dt > self.grid.dz * (1 + 1e-12):
            raise CFLError(f"dt = {dt:.3e} exceeds dz = {self.grid.dz:.3e} (c = 1)")
        y = self._rk4(y, t, 0.5 * dt)
        y = self._advect(y, t, dt)
        y = self._rk4(y, t + 0.5 * dt, 0.5 * dt)
        self._guard(y, t + dt)
        return y

    def _guard(self, y, t):
        bad = ~np.isfinite(y) | (np.abs(y) > OVERFLOW_GUARD)
        if bad.any():
            cell = int(np.argmax(bad.any(axis=0)))
            raise SimulationDivergence(
                f"solution diverged at t = {t:.6g}, earliest bad cell {cell} (z = {self.grid.z[cell]:.6g})"
            )


def step_full(fields: FieldState, medium: MediumState, omega_c: OmegaC, dt: float, kappa: float,
              t: float = 0.0, inflow: Inflow = None) -> tuple[FieldState, MediumState]:
    """Advance fields and coherences by one time step of the full engine.

    ``omega_c`` may be a number or a callable of time; ``inflow(t)`` gives
    (Omega_+, Omega_-) entering at z = 0 (default: nothing enters).
    """
    if fields.grid != medium.grid:
        raise GridMismatchError("fields and medium live on different grids")
    stepper = FullStepper(fields.grid, kappa, omega_c, medium.s_bbp, inflow)
    y = stepper.step(FullStepper.pack(fields, medium), t, dt)
    return stepper.unpack(y)


# --- adiabatic engine ------------------------------------------------------


def _spectral_shift(values: np.ndarray, grid: Grid1D, shift: float) -> np.ndarray:
    """Translate rows of ``values`` by ``shift`` using a zero-padded FFT."""
    n = grid.n
    padded = np.zeros(values.shape[:-1] + (2 * n,), dtype=complex)
    padded[..., :n] = values
    k = 2 * np.pi * np.fft.fftfreq(2 * n, d=grid.dz)
    out = np.fft.ifft(np.fft.fft(padded, axis=-1) * np.exp(-1j * k * shift), axis=-1)
    return out[..., :n]


def _spectral_derivative(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    n = grid.n
    padded = np.zeros(values.shape[:-1] + (2 * n,), dtype=complex)
    padded[..., :n] = values
    k = 2 * np.pi * np.fft.fftfreq(2 * n, d=grid.dz)
    return np.fft.ifft(np.fft.fft(padded, axis=-1) * (1j * k), axis=-1)[..., :n]


def adiabatic_threshold(kappa: float) -> float:
    return 1e-3 * kappa


def adiabatic_spin_update(spin: np.ndarray, grid: Grid1D, schedule: ControlSchedule,
                          t: float, dt: float) -> np.ndarray:
    """Exact step of d_t s + v(t) d_z s + r(t) s = 0 for the stored-spin profile.

    v = cos^2(theta) and r = Omega_c dOmega_c/dt / (Omega_c^2 + kappa^2/2),
    both uniform in z.
    """
    d = displacement(schedule, t + dt, t)
    k2 = 0.5 * schedule.kappa**2
    o0, o1 = float(schedule.omega_c(t)), float(schedule.omega_c(t + dt))
    decay = math.sqrt((o0**2 + k2) / (o1**2 + k2))
    return _spectral_shift(spin, grid, d) * decay


def adiabatic_step(fields: FieldState, medium: MediumState, schedule: ControlSchedule,
                   dt: float, t: float = 0.0) -> tuple[FieldState, MediumState]:
    """Advance the adiabatic-limit propagation equation (s_bb' = 0) by ``dt``.

    The spin coherences carry the state; the probe follows as
    Omega = -2 Omega_c s_bc and the optical coherence as
    s_ba = -i (d_t s_bc) / Omega_c.

    Raises
    ------
    AdiabaticBreakdown
        If Omega_c falls below 1e-3 kappa during the step; the stored phase
        must then be handled in the polariton picture.
    """
    if fields.grid != medium.grid:
        raise GridMismatchError("fields and medium live on different grids")
    if medium.max_cross_coherence() != 0:
        raise ValueError("the adiabatic engine assumes s_bb' = 0")
    grid = fields.grid
    times = np.linspace(t, t + dt, 5)
    floor = adiabatic_threshold(schedule.kappa)
    if np.min(schedule.omega_c(times)) < floor:
        raise AdiabaticBreakdown(
            f"Omega_c < {floor:.3g} during [{t:.4g}, {t + dt:.4g}]; "
            "use the polariton engine across storage"
        )
    spin = adiabatic_spin_update(medium.spin_pair, grid, schedule, t, dt)
    return _adiabatic_fill(spin, grid, schedule, t + dt)


def _adiabatic_fill(spin: np.ndarray, grid: Grid1D, schedule: ControlSchedule,
                    t: float) -> tuple[FieldState, MediumState]:
    oc = float(schedule.omega_c(t))
    v = float(schedule.velocity(t))
    k2 = 0.5 * schedule.kappa**2
    rate = oc * float(schedule.d_omega_c(t)) / (oc**2 + k2)
    d_spin_dt = -v * _spectral_derivative(spin, grid) - rate * spin
    omega = -2 * oc * spin
    optical = -1j * d_spin_dt / oc if oc > 0 else np.zeros_like(spin)
    return (FieldState(grid, omega[0], omega[1]),
            MediumState(grid, optical[0], optical[1], spin[0], spin[1], 0.0))


def gaussian_profile(grid: Grid1D, center: float, width: float) -> np.ndarray:
    """Unit-norm Gaussian exp(-(z - center)^2 / (2 width^2)) on the grid."""
    g = np.exp(-((grid.z - center) ** 2) / (2 * width**2)).astype(complex)
    return g / math.sqrt(grid.norm2(g))


@dataclass(frozen=True)
class TransitResult:
    delay: float
    expected_delay: float
    transmission: float
    times: np.ndarray
    output: np.ndarray

    @property
    def relative_error(self) -> float:
        return abs(self.delay - self.expected_delay) / self.expected_delay


def transit_delay(kappa: float, omega_c: float, n_z: int = 512, duration: float = 0.15,
                  length: float = 1.0, cfl: float = 1.0) -> TransitResult:
    """Group delay of a Gaussian pulse injected at z = 0 under a constant control.

    The pulse exp(-(t - t0)^2 / 2 duration^2) enters an initially empty
    medium; the delay is the shift of the intensity centroid at the exit
    relative to vacuum propagation, scaled to the full sample length.
    """
    grid = Grid1D(n_z, length)
    v = float(omega_c**2 / (omega_c**2 + 0.5 * kappa**2))
    t0 = 5 * duration
    t_end = t0 + length / v + 6 * duration

    def inflow(t):
        a = math.exp(-((t - t0) ** 2) / (2 * duration**2))
        return (a, 0.0)

    stepper = FullStepper(grid, kappa, omega_c, 0.0, inflow)
    y = np.zeros((6, grid.n), dtype=complex)
    dt = cfl * grid.dz
    n = int(math.ceil(t_end / dt))
    times = np.arange(1, n + 1) * dt
    out = np.empty(n, dtype=complex)
    t = 0.0
    for i in range(n):
        y = stepper.step(y, t, dt)
        t += dt
        out[i] = y[0, -1]
    w = np.abs(out) ** 2
    z_exit = grid.z[-1]
    t_in = t0
    t_out = float(np.sum(w * times) / np.sum(w))
    delay = (t_out - t_in - z_exit) * length / z_exit
    transmission = float(np.sum(w) * dt / (math.sqrt(math.pi) * duration))
    return TransitResult(delay, (1 / v - 1) * length, transmission, times, out)
