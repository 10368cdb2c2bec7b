"""Polarization-qubit gates on light stored in a tripod EIT medium.

Submodules
----------
core         units, grid, polarization qubit and Bloch-sphere helpers
gates        2x2 gate algebra, pulse parameterizations, synthesis
medium       atomic coherences, Bloch right-hand side, storage-stage maps
propagation  Maxwell-Bloch stepper, dark-state polariton transport
protocol     store / manipulate / release pipeline and readout
config, report, sweep, cli   front end
"""

from .core import BlochVector, MediumParams, PolarizationQubit, SimUnits, fidelity, make_qubit
from .gates import (GatePulse, Unitary2, ZeemanPulse, act_on_state, apply_to_state, gate_matrix,
                    h_tilde, hadamard, rotation_x, rotation_y, rotation_z, synthesize)
from .protocol import ProtocolResult, ProtocolSpec, reconstruct_gate, run_protocol

__version__ = "0.1.0"

__all__ = [
    "BlochVector", "MediumParams", "PolarizationQubit", "SimUnits", "fidelity", "make_qubit",
    "GatePulse", "Unitary2", "ZeemanPulse", "act_on_state", "apply_to_state", "gate_matrix",
    "h_tilde", "hadamard", "rotation_x", "rotation_y", "rotation_z", "synthesize",
    "ProtocolResult", "ProtocolSpec", "reconstruct_gate", "run_protocol",
]
