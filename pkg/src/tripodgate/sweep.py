"""One-dimensional parameter sweeps over a base protocol."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import MediumParams, fidelity
from .gates import GatePulse, ZeemanPulse
from .propagation import ControlSchedule
from .protocol import ProtocolSpec, run_protocol

AXES = ("beta", "chi", "phi", "ramp_time", "n_z")
COLUMNS = ("axis", "value", "fidelity", "fidelity_to_input", "relative_phase", "efficiency",
           "max_cross", "adiabaticity", "drift", "shape_error", "l2_change", "order")


class SweepError(ValueError):
    pass


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: float
    fidelity: float
    fidelity_to_input: float
    relative_phase: float
    efficiency: float
    max_cross: float
    adiabaticity: float
    drift: float
    shape_error: float
    l2_change: Optional[float] = None
    order: Optional[float] = None

    def as_tuple(self) -> tuple:
        blank = lambda x: "" if x is None else x  # noqa: E731
        return (self.axis, self.value, self.fidelity, self.fidelity_to_input, self.relative_phase,
                self.efficiency, self.max_cross, self.adiabaticity, self.drift, self.shape_error,
                blank(self.l2_change), blank(self.order))


def axis_values(axis: str, start: float, stop: float, points: int) -> np.ndarray:
    """Grid of axis values; ``n_z`` doubles from ``start`` up to ``stop``."""
    if axis not in AXES:
        raise SweepError(f"unknown sweep axis {axis!r}; choose from {', '.join(AXES)}")
    if axis == "n_z":
        lo, hi = int(start), int(stop)
        vals = []
        n = lo
        while lo >= 1 and n <= hi:
            vals.append(n)
            n *= 2
        if not vals:
            raise SweepError(f"empty sweep axis: no doubling of {lo} lies in [{lo}, {hi}]")
        return np.array(vals)
    if points < 1:
        raise SweepError("empty sweep axis: --points must be at least 1")
    return np.linspace(start, stop, points)


def _replace_pulse(manips: tuple, kind, make_new, update) -> tuple:
    for i, p in enumerate(manips):
        if isinstance(p, kind):
            return manips[:i] + (update(p),) + manips[i + 1:]
    return manips + (make_new(),)


def point_spec(base: ProtocolSpec, axis: str, value: float) -> ProtocolSpec:
    """Copy of ``base`` with one parameter set to ``value``.

    beta/chi edit the first Raman pulse and phi the first Zeeman pulse
    (one is appended if absent); ramp_time keeps the control-off instant
    and hold length; n_z changes the grid.
    """
    m = base.manipulations
    if axis == "beta":
        m = _replace_pulse(m, GatePulse, lambda: GatePulse.from_area(math.pi, value),
                           lambda p: GatePulse.from_area(p.chi, value, p.tau))
        return replace(base, manipulations=m)
    if axis == "chi":
        m = _replace_pulse(m, GatePulse, lambda: GatePulse.from_area(value, math.pi),
                           lambda p: GatePulse.from_area(value, p.beta, p.tau))
        return replace(base, manipulations=m)
    if axis == "phi":
        m = _replace_pulse(m, ZeemanPulse, lambda: ZeemanPulse.from_phase(value),
                           lambda p: ZeemanPulse.from_phase(value, p.tau))
        return replace(base, manipulations=m)
    if axis == "ramp_time":
        s = base.schedule
        sched = ControlSchedule.storage(s.kappa, s.omega_c0, s.t_off, s.t_on, float(value))
        return replace(base, schedule=sched, readout_delay=None)
    if axis == "n_z":
        med = base.medium
        medium = MediumParams(kappa=med.kappa, length=med.length, n_z=int(value),
                              atom_count=med.atom_count)
        return replace(base, medium=medium)
    raise SweepError(f"unknown sweep axis {axis!r}; choose from {', '.join(AXES)}")


def _run_point(spec: ProtocolSpec):
    spec = replace(spec, snapshot_every=0)
    res = run_protocol(spec)
    pair = res.final_fields.pair
    # released pulse against the adiabatic (polariton) limit of the same run
    ref = pair if spec.engine == "polariton" else \
        run_protocol(replace(spec, engine="polariton")).final_fields.pair
    shape_error = float(np.linalg.norm(pair - ref) / np.linalg.norm(ref))
    return res.output_qubit, res.fidelity_to_target, res.diagnostics, pair, shape_error


def _restrict(pair: np.ndarray, factor: int) -> np.ndarray:
    """Average blocks of ``factor`` cells onto the coarser cell-centred grid."""
    return pair.reshape(2, -1, factor).mean(axis=2)


def run_sweep(base: ProtocolSpec, axis: str, start: float, stop: float, points: int,
              jobs: int = 1) -> list[SweepRow]:
    """One protocol per grid point; rows come back in grid order."""
    values = axis_values(axis, start, stop, points)
    specs = [point_spec(base, axis, v) for v in values]  # validates every point up front
    if jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_point, specs))
    else:
        outcomes = [_run_point(s) for s in specs]

    rows = []
    prev_pair, prev_err = None, None
    for v, spec, (out, fid, diag, pair, shape_error) in zip(values, specs, outcomes):
        l2, order = None, None
        if axis == "n_z" and prev_pair is not None:
            coarse = _restrict(pair, pair.shape[1] // prev_pair.shape[1])
            l2 = float(np.linalg.norm(coarse - prev_pair) / np.linalg.norm(prev_pair))
            if prev_err is not None and l2 > 0:
                order = math.log2(prev_err / l2)
            prev_err = l2
        prev_pair = pair
        rows.append(SweepRow(
            axis=axis,
            value=float(v),
            fidelity=fid,
            fidelity_to_input=fidelity(out, spec.input_qubit),
            relative_phase=out.relative_phase,
            efficiency=diag.retrieval_efficiency,
            max_cross=diag.max_cross_coherence,
            adiabaticity=diag.adiabaticity,
            drift=diag.polariton_norm_drift,
            shape_error=shape_error,
            l2_change=l2,
            order=order,
        ))
    return rows


def convergence_orders(rows: list[SweepRow]) -> list[float]:
    return [r.order for r in rows if r.order is not None]
