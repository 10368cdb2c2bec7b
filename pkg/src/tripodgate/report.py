"""Serialization of protocol results: text report, key/value record, CSV tables.

Nothing written here contains timestamps or host details, so identical
inputs give byte-identical files.
"""

from __future__ import annotations

import ast
import csv
import io
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .gates import GatePulse, ZeemanPulse
from .protocol import ProtocolResult, ProtocolSpec

SNAPSHOT_SCHEMA = "tripodgate.snapshots/1"
SWEEP_SCHEMA = "tripodgate.sweep/1"
SNAPSHOT_COLUMNS = ("t", "z", "omega_plus.re", "omega_plus.im", "omega_minus.re", "omega_minus.im",
                    "s_bc.re", "s_bc.im", "s_bpc.re", "s_bpc.im", "psi_plus.re", "psi_plus.im",
                    "psi_minus.re", "psi_minus.im", "s_bbp.abs")


def format_kv(record: dict) -> str:
    """One ``key = repr(value)`` line per entry, in insertion order."""
    lines = []
    for key, value in record.items():
        if isinstance(value, (np.floating, np.integer)):
            value = value.item()
        lines.append(f"{key} = {value!r}")
    return "\n".join(lines) + "\n"


def parse_kv(text: str) -> dict:
    """Inverse of :func:`format_kv`."""
    out = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        key, _, value = line.partition(" = ")
        out[key] = ast.literal_eval(value)
    return out


def _describe_pulse(p) -> str:
    if isinstance(p, GatePulse):
        return f"raman  chi = {p.chi:+.6f}  beta = {p.beta:.6f}  tau = {p.tau:.4g}"
    if isinstance(p, ZeemanPulse):
        return f"zeeman phi = {p.phi:+.6f}  tau = {p.tau:.4g}"
    return repr(p)


def _fmt_c(z: complex) -> str:
    return f"{z.real:+.6f}{z.imag:+.6f}i"


def format_report(spec: ProtocolSpec, result: ProtocolResult, config_text: str = "",
                  name: str = "run") -> str:
    """Human-readable summary followed by the verbatim config."""
    s, d = spec.schedule, result.diagnostics
    q, t, q0 = result.output_qubit, result.target_qubit, spec.input_qubit
    lines = [
        f"tripodgate protocol report: {name}",
        "",
        "[setup]",
        f"engine          {spec.engine}",
        f"kappa           {spec.medium.kappa:g}",
        f"n_z             {spec.medium.n_z}",
        f"omega_c0        {s.omega_c0:.6g}  (v = {float(s.velocity(0.0)):.4f})",
        f"control off     t = {s.t_off:.6g}, back on t = {s.t_on:.6g}, ramp {s.ramp_time:.4g}",
        f"readout time    {spec.t_end:.6g}",
        f"input           c+ = {_fmt_c(q0.c_plus)}  c- = {_fmt_c(q0.c_minus)}",
        "manipulations:",
    ]
    lines += [f"  {i + 1}. {_describe_pulse(p)}" for i, p in enumerate(spec.manipulations)]
    if not spec.manipulations:
        lines.append("  (none)")
    g = spec.gate.matrix
    lines += [
        "gate (field map) [[{}, {}], [{}, {}]]".format(*(_fmt_c(x) for x in g.ravel())),
        "",
        "[result]",
        f"output          c+ = {_fmt_c(q.c_plus)}  c- = {_fmt_c(q.c_minus)}",
        f"target          c+ = {_fmt_c(t.c_plus)}  c- = {_fmt_c(t.c_minus)}",
        f"relative phase  {q.relative_phase:+.6f} rad (target {t.relative_phase:+.6f})",
        f"fidelity        {result.fidelity_to_target:.9f}",
        "",
        "[diagnostics]",
        f"max |s_bb'|            {d.max_cross_coherence:.3e}",
        f"max population shift   {d.max_population_deviation:.3e}",
        f"polariton norm drift   {d.polariton_norm_drift:.3e}",
        f"adiabaticity metric    {d.adiabaticity:.4g}",
        f"peak delay             {d.peak_delay:.6g}",
        f"retrieval efficiency   {d.retrieval_efficiency:.6f}",
        f"mode purity            {d.mode_purity:.9f}",
    ]
    if result.realized_gate is not None:
        m = result.realized_gate.matrix
        lines += [
            "realized gate          [[{}, {}], [{}, {}]]".format(*(_fmt_c(x) for x in m.ravel())),
            f"reconstruction resid.  {result.reconstruction_residual:.3e}",
        ]
    lines += ["warnings:"] + ([f"  - {w}" for w in d.warnings] or ["  (none)"])
    if config_text:
        lines += ["", "[config]", config_text.rstrip("\n")]
    return "\n".join(lines) + "\n"


def _table(header: Sequence[str], rows: Iterable[Sequence], schema: str) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {schema}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def snapshots_csv(result: ProtocolResult) -> str:
    rows = []
    for snap in result.snapshots:
        f, m, p = snap.fields, snap.medium, snap.polariton
        for i, z in enumerate(f.grid.z):
            rows.append((
                snap.t, z,
                f.omega_plus[i].real, f.omega_plus[i].imag,
                f.omega_minus[i].real, f.omega_minus[i].imag,
                m.s_bc[i].real, m.s_bc[i].imag, m.s_bpc[i].real, m.s_bpc[i].imag,
                p.psi_plus[i].real, p.psi_plus[i].imag, p.psi_minus[i].real, p.psi_minus[i].imag,
                abs(m.s_bbp[i]),
            ))
    return _table(SNAPSHOT_COLUMNS, rows, SNAPSHOT_SCHEMA)


def sweep_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    return _table(header, rows, SWEEP_SCHEMA)


def read_table(text: str) -> tuple[str, list[str], list[list[str]]]:
    """Inverse of the CSV writers: (schema, header, rows)."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# schema: "):
        raise ValueError("missing schema comment line")
    reader = csv.reader(lines[1:])
    header = next(reader)
    return lines[0][len("# schema: "):], header, [r for r in reader]


def write_outputs(out_dir, spec: ProtocolSpec, result: ProtocolResult, config_text: str = "",
                  name: str = "run") -> dict:
    """Write report.txt, result.kv and snapshots.csv; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out / "report.txt",
        "result": out / "result.kv",
        "snapshots": out / "snapshots.csv",
    }
    paths["report"].write_text(format_report(spec, result, config_text, name), encoding="utf-8")
    paths["result"].write_text(format_kv(result.record()), encoding="utf-8")
    paths["snapshots"].write_text(snapshots_csv(result), encoding="utf-8")
    return paths
