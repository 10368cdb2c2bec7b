"""Store - manipulate - release protocol and realized-gate measurement."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import propagation as prop
from .core import (
    Grid1D,
    MediumParams,
    PolarizationQubit,
    fidelity,
    make_qubit,
)
from .gates import (
    GatePulse,
    Pulse,
    Unitary2,
    ZeemanPulse,
    act_on_state,
    phase_distance,
    sequence_unitary,
)
from .medium import MediumState, apply_raman, apply_zeeman, ground_block_after

log = logging.getLogger(__name__)

ENGINES = ("full", "polariton", "hybrid")
ADIABATICITY_THRESHOLD = 0.05
METRIC_CAP = 1e12
RESULT_SCHEMA = "tripodgate.protocol-result/1"


class ReleaseFailed(RuntimeError):
    pass


class ProtocolError(ValueError):
    pass


def default_ramp_time(kappa: float) -> float:
    return 50.0 / kappa


def storage_schedule(kappa: float, velocity: float = 0.5, t_off: float = 0.3,
                     hold: Optional[float] = None, ramp_time: Optional[float] = None) -> prop.ControlSchedule:
    """tanh off/on schedule; ``hold`` is the time between the two ramp centres."""
    ramp_time = default_ramp_time(kappa) if ramp_time is None else ramp_time
    hold = 16 * ramp_time if hold is None else hold
    return prop.ControlSchedule.storage(
        kappa, prop.control_for_velocity(velocity, kappa), t_off, t_off + hold, ramp_time
    )


@dataclass(frozen=True)
class Envelope:
    """Gaussian input profile exp(-(z - center)^2 / 2 width^2) inside the medium."""

    center: float = 0.25
    width: float = 0.05


@dataclass(frozen=True)
class ProtocolSpec:
    input_qubit: PolarizationQubit
    medium: MediumParams = MediumParams(kappa=400.0, n_z=512)
    envelope: Envelope = Envelope()
    schedule: Optional[prop.ControlSchedule] = None
    manipulations: tuple = ()
    engine: str = "full"
    readout_delay: Optional[float] = None
    cfl: float = 1.0
    snapshot_every: int = 0

    def __post_init__(self):
        if self.schedule is None:
            object.__setattr__(self, "schedule", storage_schedule(self.medium.kappa))
        object.__setattr__(self, "manipulations", tuple(self.manipulations))
        self.validate()

    @property
    def grid(self) -> Grid1D:
        return self.medium.grid()

    @property
    def t_end(self) -> float:
        s = self.schedule
        delay = 5 * s.ramp_time if self.readout_delay is None else self.readout_delay
        return s.t_on + delay

    @property
    def dt(self) -> float:
        return self.cfl * self.grid.dz

    def validate(self) -> None:
        s = self.schedule
        if self.engine not in ENGINES:
            raise ProtocolError(f"unknown engine {self.engine!r}; choose from {ENGINES}")
        if s.t_off is None or s.t_on is None:
            raise ProtocolError("schedule must switch the control off and back on")
        if not 0 < self.cfl <= 1:
            raise ProtocolError("cfl must be in (0, 1]")
        if abs(s.kappa - self.medium.kappa) > 1e-12 * self.medium.kappa:
            raise ProtocolError("schedule and medium disagree on kappa")
        for p in self.manipulations:
            if not isinstance(p, (GatePulse, ZeemanPulse)):
                raise ProtocolError(f"manipulation {p!r} is not a GatePulse or ZeemanPulse")
        busy = sum(p.tau for p in self.manipulations)
        if busy >= s.t_on - s.t_off:
            raise ProtocolError(
                f"manipulations last {busy:.3g} but the control is off for only {s.t_on - s.t_off:.3g}"
            )
        grid = self.grid
        profile = prop.gaussian_profile(grid, self.envelope.center, self.envelope.width)
        tails = grid.norm2(profile[:1]) + grid.norm2(profile[-1:])
        if tails > 1e-8 or not 0 < self.envelope.center < grid.length:
            raise ProtocolError("input envelope is clipped by the grid")
        end = self.envelope.center + prop.displacement(s, self.t_end)
        if end + 4 * self.envelope.width > grid.length:
            raise ProtocolError(
                f"released pulse would reach z = {end + 4 * self.envelope.width:.3f} > L; "
                "shorten the schedule or start the pulse earlier"
            )

    def with_input(self, q: PolarizationQubit) -> ProtocolSpec:
        return replace(self, input_qubit=q)

    @property
    def gate(self) -> Unitary2:
        return sequence_unitary(self.manipulations)

    def expected_output(self) -> PolarizationQubit:
        return act_on_state(self.gate, self.input_qubit)


@dataclass(frozen=True)
class Diagnostics:
    max_cross_coherence: float
    max_population_deviation: float
    polariton_norm_drift: float
    adiabaticity: float
    peak_delay: float
    retrieval_efficiency: float
    mode_purity: float
    warnings: tuple = ()


@dataclass(frozen=True)
class Snapshot:
    t: float
    fields: prop.FieldState
    medium: MediumState
    polariton: prop.PolaritonState


@dataclass(frozen=True, eq=False)
class ProtocolResult:
    output_qubit: PolarizationQubit
    target_qubit: PolarizationQubit
    fidelity_to_target: float
    diagnostics: Diagnostics
    realized_gate: Optional[Unitary2] = None
    reconstruction_residual: Optional[float] = None
    snapshots: tuple = field(default=(), repr=False)
    final_fields: Optional[prop.FieldState] = field(default=None, repr=False)

    def record(self) -> dict:
        """Flat, documented key/value view (schema ``RESULT_SCHEMA``)."""
        q, t, d = self.output_qubit, self.target_qubit, self.diagnostics
        rec = {
            "schema": RESULT_SCHEMA,
            "output.c_plus.re": q.c_plus.real,
            "output.c_plus.im": q.c_plus.imag,
            "output.c_minus.re": q.c_minus.real,
            "output.c_minus.im": q.c_minus.imag,
            "output.relative_phase": q.relative_phase,
            "target.c_plus.re": t.c_plus.real,
            "target.c_plus.im": t.c_plus.imag,
            "target.c_minus.re": t.c_minus.real,
            "target.c_minus.im": t.c_minus.imag,
            "fidelity": self.fidelity_to_target,
            "diag.max_cross_coherence": d.max_cross_coherence,
            "diag.max_population_deviation": d.max_population_deviation,
            "diag.polariton_norm_drift": d.polariton_norm_drift,
            "diag.adiabaticity": d.adiabaticity,
            "diag.peak_delay": d.peak_delay,
            "diag.retrieval_efficiency": d.retrieval_efficiency,
            "diag.mode_purity": d.mode_purity,
            "diag.warnings": ";".join(d.warnings),
        }
        if self.realized_gate is not None:
            for (i, j), v in np.ndenumerate(self.realized_gate.matrix):
                rec[f"gate.g{i + 1}{j + 1}.re"] = float(v.real)
                rec[f"gate.g{i + 1}{j + 1}.im"] = float(v.imag)
            rec["gate.residual"] = self.reconstruction_residual
        return rec


# --- metrics and readout ---------------------------------------------------


def adiabaticity_metric(schedule: prop.ControlSchedule, t_end: Optional[float] = None,
                        samples: int = 20001, eps: float = 1e-3) -> float:
    """max_t |d theta/dt| / (kappa * max(cos theta, eps)); 0 for a constant control."""
    if schedule.samples is None and schedule.t_off is None:
        return 0.0
    if t_end is None:
        pts = schedule.breakpoints()
        pad = 10 * max(schedule.ramp_time, 1e-9)
        lo, hi = min(pts) - pad, max(pts) + pad
    else:
        lo, hi = 0.0, t_end
    t = np.linspace(lo, hi, samples)
    t = np.union1d(t, [p for p in schedule.breakpoints() if lo <= p <= hi])
    if schedule.samples is not None:
        theta = schedule.theta(t)
        ts, _ = schedule.samples
        jumps = np.diff(ts) == 0
        if jumps.any():
            return METRIC_CAP
        dtheta = np.gradient(theta, t)
    else:
        with np.errstate(invalid="ignore"):
            dtheta = schedule.d_theta(t)
        theta = schedule.theta(t)
    ratio = np.abs(dtheta) / (schedule.kappa * np.maximum(np.cos(theta), eps))
    ratio = np.nan_to_num(ratio, nan=METRIC_CAP, posinf=METRIC_CAP)
    return float(min(np.max(ratio), METRIC_CAP))


def common_mode(pair: np.ndarray) -> np.ndarray:
    """Dominant spatial/temporal mode shared by the two rows, unit-norm, phase-fixed.

    The phase is chosen so that sum |m| m is real and positive; a profile
    common to several runs therefore always yields the same mode.
    """
    _, _, vh = np.linalg.svd(np.asarray(pair, dtype=complex), full_matrices=False)
    m = np.conj(vh[0])
    ref = np.sum(np.abs(m) * m)
    return m * np.exp(-1j * np.angle(ref))


def mode_amplitudes(pair: np.ndarray, grid: Grid1D) -> tuple[np.ndarray, float]:
    """Overlaps of (Omega_+, Omega_-) with their common mode and the mode purity."""
    pair = np.asarray(pair, dtype=complex)
    m = common_mode(pair)
    amps = pair @ np.conj(m) * math.sqrt(grid.dz)
    sv = np.linalg.svd(pair, compute_uv=False)
    purity = float(sv[0] ** 2 / np.sum(sv**2)) if np.sum(sv**2) > 0 else 0.0
    return amps, purity


def extract_qubit(fields: prop.FieldState, min_energy: float = 1e-12) -> PolarizationQubit:
    """Polarization qubit carried by released fields (common-mode projection)."""
    if fields.energy() < min_energy:
        raise ReleaseFailed(f"release failed: output energy {fields.energy():.3e} is negligible")
    amps, _ = mode_amplitudes(fields.pair, fields.grid)
    return make_qubit(*amps)


def fit_gate(inputs: Sequence[np.ndarray], outputs: Sequence[np.ndarray]) -> tuple[Unitary2, float]:
    """Least-squares 2x2 matrix with outputs ~ M inputs.

    M is rescaled to unit |det| and gauge-fixed so that its largest entry
    is real and positive.  Returns (M, relative residual).
    """
    a = np.array(inputs, dtype=complex)
    b = np.array(outputs, dtype=complex)
    mt, *_ = np.linalg.lstsq(a, b, rcond=None)
    m = mt.T
    resid = float(np.linalg.norm(a @ mt - b) / np.linalg.norm(b))
    m = m / math.sqrt(abs(np.linalg.det(m)))
    k = np.unravel_index(np.argmax(np.abs(m)), m.shape)
    m = m * np.exp(-1j * np.angle(m[k]))
    return Unitary2(m, check=False), resid


PROBE_STATES = (
    (1.0, 0.0),
    (0.0, 1.0),
    (1 / math.sqrt(2), 1 / math.sqrt(2)),
    (1 / math.sqrt(2), 1j / math.sqrt(2)),
)


# --- engines ---------------------------------------------------------------


def _initial_polariton(spec: ProtocolSpec) -> prop.PolaritonState:
    grid = spec.grid
    prof = prop.gaussian_profile(grid, spec.envelope.center, spec.envelope.width)
    q = spec.input_qubit
    p = spec.medium.polariton_prefactor
    return prop.PolaritonState(grid, p * q.c_plus * prof, p * q.c_minus * prof)


class _Tracker:
    """Checks population and s_bb' invariants at every manipulation."""

    def __init__(self):
        self.max_cross = 0.0
        self.max_pop_dev = 0.0

    def apply(self, medium: MediumState, pulses) -> MediumState:
        for p in pulses:
            p_b, p_bp, s_bbp = ground_block_after(medium, p.unitary)
            self.max_cross = max(self.max_cross, float(np.max(np.abs(s_bbp))))
            dev = max(np.max(np.abs(p_b - medium.p_b)), np.max(np.abs(p_bp - medium.p_bprime)))
            self.max_pop_dev = max(self.max_pop_dev, float(dev))
            if isinstance(p, GatePulse):
                medium = apply_raman(medium, p)
            else:
                medium = apply_zeeman(medium, p.phi)
            self.max_cross = max(self.max_cross, medium.max_cross_coherence())
        return medium


def _stage_steps(span: float, dt_max: float) -> tuple[int, float]:
    """Step count and step size that land exactly on the end of a stage."""
    if span <= 0:
        return 0, dt_max
    n = int(math.ceil(span / dt_max - 1e-9))
    return n, span / n


def _run_full(spec: ProtocolSpec, tracker: _Tracker):
    grid, kappa, sched = spec.grid, spec.medium.kappa, spec.schedule
    psi0 = _initial_polariton(spec)
    fields, medium = prop.dark_state(psi0, float(sched.omega_c(0.0)), kappa, spec.medium.polariton_prefactor)
    stepper = prop.FullStepper(grid, kappa, lambda t: float(sched.omega_c(t)), medium.s_bbp)
    y = stepper.pack(fields, medium)
    snaps = []
    t = 0.0
    t_mid = sched.hold_midpoint

    def snap(y, t):
        f, m = stepper.unpack(y)
        psi = prop.polariton_transform(f, m, float(sched.theta(t)), kappa, spec.medium.polariton_prefactor)
        snaps.append(Snapshot(t, f, m, psi))

    k = 0
    if spec.snapshot_every:
        snap(y, t)
    for stage_end, manip in ((t_mid, spec.manipulations), (spec.t_end, ())):
        n, dt = _stage_steps(stage_end - t, spec.dt)
        t_start = t
        for i in range(n):
            y = stepper.step(y, t, dt)
            t = t_start + (i + 1) * dt
            k += 1
            if spec.snapshot_every and k % spec.snapshot_every == 0:
                snap(y, t)
        if manip:
            f, m = stepper.unpack(y)
            m = tracker.apply(m, manip)
            y = stepper.pack(f, m)
    fields, medium = stepper.unpack(y)
    psi = prop.polariton_transform(fields, medium, float(sched.theta(t)), kappa, spec.medium.polariton_prefactor)
    return t, fields, psi, psi0, snaps


def _pair_map(pair: np.ndarray, pulses) -> np.ndarray:
    return sequence_unitary(pulses).matrix @ pair if pulses else pair


def _run_polariton(spec: ProtocolSpec, tracker: _Tracker):
    grid, sched = spec.grid, spec.schedule
    psi0 = _initial_polariton(spec)
    t_mid, t_end = sched.hold_midpoint, spec.t_end
    mid = prop.analytic_polariton_evolve(psi0, sched, t_mid)
    if spec.manipulations:
        # the stored polariton is purely atomic: psi = -sqrt(2) kappa P s
        spin = -mid.pair / (math.sqrt(2) * spec.medium.kappa * spec.medium.polariton_prefactor)
        medium = tracker.apply(MediumState(grid, 0.0, 0.0, spin[0], spin[1], 0.0), spec.manipulations)
        pair = -medium.spin_pair * math.sqrt(2) * spec.medium.kappa * spec.medium.polariton_prefactor
        mid = prop.PolaritonState(grid, pair[0], pair[1])
    end = prop.analytic_polariton_evolve(mid, sched, t_end, t_mid)
    c = math.cos(float(sched.theta(t_end)))
    fields = prop.FieldState(grid, end.psi_plus * c / spec.medium.polariton_prefactor,
                             end.psi_minus * c / spec.medium.polariton_prefactor)
    return t_end, fields, end, psi0, []


def _run_hybrid(spec: ProtocolSpec, tracker: _Tracker):
    grid, kappa, sched = spec.grid, spec.medium.kappa, spec.schedule
    pref = spec.medium.polariton_prefactor
    psi0 = _initial_polariton(spec)
    fields, medium = prop.dark_state(psi0, float(sched.omega_c(0.0)), kappa, pref, velocity_gradient=False)
    n, dt = _stage_steps(spec.t_end, spec.dt)
    t, t_mid, done = 0.0, sched.hold_midpoint, False
    for i in range(n):
        if not done and t + dt > t_mid:
            medium = tracker.apply(medium, spec.manipulations)
            done = True
        try:
            fields, medium = prop.adiabatic_step(fields, medium, sched, dt, t)
        except prop.AdiabaticBreakdown:
            # across storage the stored spin wave is the whole polariton
            oc = float(sched.omega_c(t))
            th = float(sched.theta(t))
            weight = 2 * oc * math.cos(th) + math.sqrt(2) * kappa * math.sin(th)
            psi = prop.PolaritonState(grid, *(-medium.spin_pair * weight * pref))
            psi = prop.analytic_polariton_evolve(psi, sched, t + dt, t)
            oc1, th1 = float(sched.omega_c(t + dt)), float(sched.theta(t + dt))
            weight1 = 2 * oc1 * math.cos(th1) + math.sqrt(2) * kappa * math.sin(th1)
            spin = -psi.pair / (weight1 * pref)
            omega = -2 * oc1 * spin
            fields = prop.FieldState(grid, omega[0], omega[1])
            medium = MediumState(grid, 0.0, 0.0, spin[0], spin[1], 0.0)
        t = (i + 1) * dt
    assert done or not spec.manipulations
    psi = prop.polariton_transform(fields, medium, float(sched.theta(t)), kappa, pref)
    return t, fields, psi, psi0, []


_ENGINES = {"full": _run_full, "polariton": _run_polariton, "hybrid": _run_hybrid}


def run_protocol(spec: ProtocolSpec, target: Optional[PolarizationQubit] = None,
                 reconstruct: bool = False) -> ProtocolResult:
    """Store the input photon, apply the manipulations, release and read out.

    ``target`` defaults to the gate-algebra prediction c -> G c with G the
    product of the manipulation unitaries.  With ``reconstruct`` the four
    probe inputs are also run and the realized gate is fitted.
    """
    spec.validate()
    tracker = _Tracker()
    t_end, fields, psi_end, psi0, snaps = _ENGINES[spec.engine](spec, tracker)
    grid = spec.grid

    n0, n1 = psi0.norm(), psi_end.norm()
    energy = fields.energy()
    stored = n0 * math.cos(float(spec.schedule.theta(t_end))) ** 2
    efficiency = energy / stored if stored > 0 else 0.0
    if energy < 1e-3 * stored:
        raise ReleaseFailed(f"release failed: only {efficiency:.2e} of the stored norm came out")
    amps, purity = mode_amplitudes(fields.pair, grid)
    out = make_qubit(*amps)

    w0 = np.abs(psi0.pair) ** 2
    w1 = np.abs(psi_end.pair) ** 2
    c0 = float(np.sum(w0.sum(axis=0) * grid.z) / w0.sum())
    c1 = float(np.sum(w1.sum(axis=0) * grid.z) / w1.sum())
    metric = adiabaticity_metric(spec.schedule, t_end)

    warnings = []
    if metric > ADIABATICITY_THRESHOLD:
        warnings.append(f"non-adiabatic schedule (metric {metric:.3g} > {ADIABATICITY_THRESHOLD})")
    if efficiency < 0.99:
        warnings.append(f"retrieval efficiency {efficiency:.4f} < 0.99")
    for w in warnings:
        log.warning(w)

    diag = Diagnostics(
        max_cross_coherence=tracker.max_cross,
        max_population_deviation=tracker.max_pop_dev,
        polariton_norm_drift=abs(n1 - n0) / n0,
        adiabaticity=metric,
        peak_delay=t_end - (c1 - c0),
        retrieval_efficiency=efficiency,
        mode_purity=purity,
        warnings=tuple(warnings),
    )
    target = spec.expected_output() if target is None else target
    result = ProtocolResult(
        output_qubit=out,
        target_qubit=target,
        fidelity_to_target=fidelity(out, target),
        diagnostics=diag,
        snapshots=tuple(snaps),
        final_fields=fields,
    )
    if reconstruct:
        gate, resid = reconstruct_gate(spec)
        result = replace(result, realized_gate=gate, reconstruction_residual=resid)
    return result


def reconstruct_gate(spec: ProtocolSpec) -> tuple[Unitary2, float]:
    """Realized 2x2 gate from four probe runs sharing ``spec`` except the input.

    The residual is logged as a warning when above 0.05.
    """
    inputs, outputs = [], []
    for c in PROBE_STATES:
        q = make_qubit(*c)
        res = run_protocol(spec.with_input(q))
        amps, _ = mode_amplitudes(res.final_fields.pair, spec.grid)
        inputs.append(q.vector)
        outputs.append(amps)
    gate, resid = fit_gate(inputs, outputs)
    if resid > 0.05:
        log.warning("inconsistent probe runs: reconstruction residual %.3g > 0.05", resid)
    return gate, resid


def gate_error(realized: Unitary2, target: Unitary2) -> float:
    """Largest entry deviation after removing the global phase."""
    a, b = realized.matrix, target.matrix
    phase = np.angle(np.trace(b.conj().T @ a))
    return float(np.max(np.abs(a * np.exp(-1j * phase) - b)))


__all__ = [
    "Diagnostics",
    "Envelope",
    "ProtocolResult",
    "ProtocolSpec",
    "ReleaseFailed",
    "adiabaticity_metric",
    "extract_qubit",
    "fit_gate",
    "gate_error",
    "phase_distance",
    "reconstruct_gate",
    "run_protocol",
    "storage_schedule",
]
