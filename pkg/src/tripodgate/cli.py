"""Command-line front end: ``tripodgate {run,sweep,gates,presets}``.

Exit codes: 0 success, 1 unexpected failure, 2 config parse error,
3 validation error, 4 simulation failure (divergence, failed release).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import config as cfg
from .gates import (GatePulse, NonUnitaryError, Unitary2, is_unitary, resolve_named,
                    sequence_unitary, synthesize)
from .propagation import AdiabaticBreakdown, CFLError, SimulationDivergence
from .protocol import ReleaseFailed, gate_error, run_protocol
from .report import sweep_csv, write_outputs
from .sweep import AXES, COLUMNS, SweepError, run_sweep

EXIT_OK, EXIT_OTHER, EXIT_PARSE, EXIT_VALIDATION, EXIT_SIMULATION = 0, 1, 2, 3, 4

log = logging.getLogger("tripodgate")


def _load(args) -> cfg.RunConfig:
    if bool(args.config) == bool(args.preset):
        raise cfg.ConfigParseError("give exactly one of --config PATH or --preset NAME")
    path = args.config or cfg.preset_path(args.preset)
    return cfg.load_config(path, engine=args.engine, seed=args.seed)


def cmd_run(args) -> int:
    rc = _load(args)
    result = run_protocol(rc.spec, reconstruct=args.reconstruct)
    out = Path(args.out)
    write_outputs(out, rc.spec, result, rc.source_text, rc.name)
    print(f"fidelity {result.fidelity_to_target:.9f}  "
          f"efficiency {result.diagnostics.retrieval_efficiency:.6f}  -> {out}")
    for w in result.diagnostics.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    rc = _load(args)
    rows = run_sweep(rc.spec, args.axis, args.start, args.stop, args.points, jobs=args.jobs)
    text = sweep_csv(COLUMNS, (r.as_tuple() for r in rows))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def _parse_matrix(text: str) -> np.ndarray:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError:
        raw = None
    square = isinstance(raw, list) and len(raw) == 2
    if not (square and all(isinstance(r, list) and len(r) == 2 for r in raw)):
        raise cfg.ConfigParseError(
            f"expected a gate name or a 2x2 matrix like [[0, 1], [1, 0]], got {text!r}"
        )
    return np.array([[cfg.parse_number(x, "matrix", allow_complex=True) for x in row]
                     for row in raw])


def _fmt_matrix(m: np.ndarray) -> str:
    cell = lambda z: f"{z.real:+.6f}{z.imag:+.6f}i"  # noqa: E731
    return "\n".join("  [" + ", ".join(cell(z) for z in row) + "]" for row in m)


def _fmt_pulse(p) -> str:
    if isinstance(p, GatePulse):
        return f"raman   chi = {p.chi / math.pi:+.6f} pi  beta = {p.beta / math.pi:.6f} pi"
    return f"zeeman  phi = {p.phi / math.pi:+.6f} pi"


def cmd_gates(args) -> int:
    try:
        named = resolve_named(args.target, phi=args.phi)
    except KeyError as exc:
        if not args.target.lstrip().startswith("["):
            raise cfg.ConfigParseError(exc.args[0]) from None
        named = None
    if named is not None:
        target = named.target.matrix
        pulses = list(named.pulses)
        title, note = named.name, named.note
    else:
        target = _parse_matrix(args.target)
        if not is_unitary(target, tol=1e-10):
            raise NonUnitaryError("matrix is not unitary within 1e-10")
        pulses = synthesize(target).pulses()
        title, note = "matrix", ""
    realized = sequence_unitary(pulses).matrix
    euler = synthesize(target)
    overlap = np.trace(target.conj().T @ realized)
    phase = float(np.angle(overlap)) if abs(overlap) > 1e-12 else 0.0
    print(f"target {title}:")
    print(_fmt_matrix(target))
    print("pulse schedule (time order):")
    for i, p in enumerate(pulses, 1):
        print(f"  {i}. {_fmt_pulse(p)}")
    if not pulses:
        print("  (none)")
    print("realized matrix:")
    print(_fmt_matrix(realized))
    dist = gate_error(Unitary2(realized), Unitary2(target))
    print(f"distance to target (max entry, global phase removed): {dist:.3e}")
    print(f"global phase of realized gate: e^{{i {phase / math.pi:+.6f} pi}}")
    if note:
        print(f"note: {note}")
    a, p2, b, p1 = (x / math.pi for x in (euler.global_phase, euler.phi2, euler.beta, euler.phi1))
    print(f"Euler form: e^{{i {a:.6f} pi}} R_Z({p2:.6f} pi) R_Y({b:.6f} pi) R_Z({p1:.6f} pi)")
    return EXIT_OK


def cmd_presets(args) -> int:
    for name in cfg.preset_names():
        first = cfg.preset_path(name).read_text(encoding="utf-8").splitlines()[0]
        desc = first.lstrip("# ").strip() if first.startswith("#") else ""
        print(f"{name:12s} {desc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tripodgate", description="Stored-light polarization gate simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--preset", metavar="NAME")
        sp.add_argument("--out", metavar="DIR", default="out")
        sp.add_argument("--engine", choices=("full", "polariton", "hybrid"))
        sp.add_argument("--seed", type=int)

    run = sub.add_parser("run", help="run one protocol and write report files")
    common(run)
    run.add_argument("--reconstruct", action="store_true", help="also fit the realized 2x2 gate")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="sweep one parameter and write sweep.csv")
    common(sw)
    sw.add_argument("--axis", required=True, choices=AXES)
    sw.add_argument("--from", dest="start", type=float, required=True)
    sw.add_argument("--to", dest="stop", type=float, required=True)
    sw.add_argument("--points", type=int, default=11)
    sw.add_argument("--jobs", type=int, default=1)
    sw.set_defaults(func=cmd_sweep)

    g = sub.add_parser("gates", help="print the pulse schedule for a named gate or matrix")
    g.add_argument("target", help="gate name (NOT, sqrtNOT, H~, hadamard, sigma_y, phase, identity) "
                                  "or a matrix such as '[[0, 1], [1, 0]]'")
    g.add_argument("--phi", type=float, default=math.pi / 2, help="angle for the phase gate")
    g.set_defaults(func=cmd_gates)

    pr = sub.add_parser("presets", help="list built-in preset configs")
    pr.set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except cfg.ConfigParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (SimulationDivergence, ReleaseFailed, CFLError, AdiabaticBreakdown) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except (cfg.ConfigValidationError, SweepError, NonUnitaryError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - last-resort reporting
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
