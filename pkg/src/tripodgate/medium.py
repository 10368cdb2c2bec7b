"""Atomic coherences of the tripod medium and their evolution.

Level labels follow the basis {b, c, b'} for the three ground sublevels
(M = -1, 0, +1) and ``a`` for the common excited level.  The medium is
described by mean-field coherence profiles over z, linearized in the
probe: populations stay at p_b = p_b' = 1/2, p_c = p_a = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import Grid1D
from .gates import GatePulse, Unitary2, gate_matrix, rotation_z

POP_B = 0.5
POP_BPRIME = 0.5
POP_C = 0.0
POP_A = 0.0

COHERENCES = ("s_ba", "s_bpa", "s_bc", "s_bpc")


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MediumState:
    """Coherence profiles on a grid.

    ``s_bc``/``s_bpc`` are the spin coherences sigma_bc, sigma_b'c that hold
    the stored photon, ``s_ba``/``s_bpa`` the optical coherences, and
    ``s_bbp`` the b-b' cross coherence, which only enters as a fixed
    parameter (it is second order in the probe).
    """

    grid: Grid1D
    s_ba: np.ndarray
    s_bpa: np.ndarray
    s_bc: np.ndarray
    s_bpc: np.ndarray
    s_bbp: np.ndarray

    def __post_init__(self):
        for name in COHERENCES + ("s_bbp",):
            arr = np.array(getattr(self, name), dtype=complex)
            if arr.shape == ():
                arr = np.full(self.grid.n, complex(arr))
            if arr.shape != (self.grid.n,):
                raise GridMismatchError(f"{name} has shape {arr.shape}, grid has {self.grid.n} points")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def empty(cls, grid: Grid1D) -> MediumState:
        z = np.zeros(grid.n, dtype=complex)
        return cls(grid, z, z, z, z, z)

    # populations are constants of the first-order theory
    p_b = POP_B
    p_bprime = POP_BPRIME
    p_c = POP_C
    p_a = POP_A

    def replace(self, **changes) -> MediumState:
        return replace(self, **changes)

    @property
    def spin_pair(self) -> np.ndarray:
        return np.stack([self.s_bc, self.s_bpc])

    @property
    def optical_pair(self) -> np.ndarray:
        return np.stack([self.s_ba, self.s_bpa])

    def max_cross_coherence(self) -> float:
        return float(np.max(np.abs(self.s_bbp)))


@dataclass(frozen=True, eq=False)
class MediumDerivative:
    d_ba: np.ndarray
    d_bpa: np.ndarray
    d_bc: np.ndarray
    d_bpc: np.ndarray


def bloch_rhs(state: MediumState, fields, omega_c: float) -> MediumDerivative:
    """Time derivatives of the linearized, resonant, lossless Bloch equations.

    i d/dt s_ba  = -Omega_+/2 - Omega_c s_bc  - Omega_- s_bb'
    i d/dt s_b'a = -Omega_-/2 - Omega_c s_b'c - Omega_+ s_b'b
    i d/dt s_bc  = -Omega_c s_ba
    i d/dt s_b'c = -Omega_c s_b'a

    with s_b'b = conj(s_bb').  ``fields`` needs ``grid``, ``omega_plus`` and
    ``omega_minus``.
    """
    if fields.grid != state.grid:
        raise GridMismatchError("fields and medium live on different grids")
    return _rhs(
        fields.omega_plus, fields.omega_minus,
        state.s_ba, state.s_bpa, state.s_bc, state.s_bpc, state.s_bbp, omega_c,
    )


def _rhs(om_p, om_m, s_ba, s_bpa, s_bc, s_bpc, s_bbp, omega_c):
    return MediumDerivative(
        d_ba=1j * (0.5 * om_p + omega_c * s_bc + om_m * s_bbp),
        d_bpa=1j * (0.5 * om_m + omega_c * s_bpc + om_p * np.conj(s_bbp)),
        d_bc=1j * omega_c * s_ba,
        d_bpc=1j * omega_c * s_bpa,
    )


def _rotate_pairs(state: MediumState, g: Unitary2) -> MediumState:
    m = g.matrix
    bc, bpc = m @ state.spin_pair
    ba, bpa = m @ state.optical_pair
    return state.replace(s_bc=bc, s_bpc=bpc, s_ba=ba, s_bpa=bpa)


def apply_raman(state: MediumState, pulse: GatePulse) -> MediumState:
    """Storage-stage Raman pulse: (s_bc, s_b'c) -> G (s_bc, s_b'c) at every z.

    The coupling V = W|b><b'| + h.c. rotates the b/b' index of every
    coherence, so the optical pair (s_ba, s_b'a) is rotated by the same G.
    With equal b/b' populations the cross coherence s_bb' is untouched.
    """
    return _rotate_pairs(state, gate_matrix(pulse.chi, pulse.beta))


def apply_zeeman(state: MediumState, phi: float) -> MediumState:
    """Opposite Zeeman shifts of b and b': s_bc e^{-i phi/2}, s_b'c e^{+i phi/2}.

    Levels c and a have M = 0 and do not shift, so the optical pair picks
    up the same phases.
    """
    return _rotate_pairs(state, rotation_z(phi))


def raman_unitary_3(chi: float, beta: float) -> np.ndarray:
    """exp(i V tau) on the {b, c, b'} basis for pulse area beta = 2|W|tau."""
    g = gate_matrix(chi, beta).matrix
    u = np.eye(3, dtype=complex)
    idx = np.ix_([0, 2], [0, 2])
    u[idx] = g
    return u


def apply_raman_full_matrix(sigma: np.ndarray, pulse: GatePulse, tol: float = 1e-12) -> np.ndarray:
    """Heisenberg-evolved 3x3 coherence matrix sigma(tau) = e^{iV tau} sigma e^{-iV tau}.

    ``sigma[i, j]`` holds sigma_ij on the basis order (b, c, b').  Valid for
    arbitrary populations; reduces to :func:`apply_raman` on the c column
    when sigma_bb = sigma_b'b'.
    """
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got {sigma.shape}")
    if not np.allclose(sigma, sigma.conj().T, rtol=0.0, atol=tol):
        raise ValueError("coherence matrix must be Hermitian")
    u = raman_unitary_3(pulse.chi, pulse.beta)
    return u @ sigma @ u.conj().T


def coherence_matrix(s_bc: complex = 0.0, s_bpc: complex = 0.0, s_bbp: complex = 0.0,
                     p_b: float = POP_B, p_c: float = POP_C, p_bprime: float = POP_BPRIME) -> np.ndarray:
    """Assemble the Hermitian 3x3 matrix on (b, c, b') from its independent entries."""
    return np.array(
        [
            [p_b, s_bc, s_bbp],
            [np.conj(s_bc), p_c, np.conj(s_bpc)],
            [np.conj(s_bbp), s_bpc, p_bprime],
        ],
        dtype=complex,
    )


def stored_norm(state: MediumState) -> float:
    """Integral of |s_bc|^2 + |s_b'c|^2."""
    return state.grid.norm2(state.s_bc) + state.grid.norm2(state.s_bpc)



def ground_block_after(state: MediumState, g: Unitary2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Populations (p_b, p_b') and cross coherence s_bb' after a b/b' rotation.

    Evaluates the b/b' block of G sigma G^dagger at every z without the
    equal-population shortcut, so it detects any s_bb' the map would create.
    """
    m = g.matrix
    block = np.empty((state.grid.n, 2, 2), dtype=complex)
    block[:, 0, 0] = state.p_b
    block[:, 1, 1] = state.p_bprime
    block[:, 0, 1] = state.s_bbp
    block[:, 1, 0] = np.conj(state.s_bbp)
    out = m @ block @ m.conj().T
    return out[:, 0, 0].real, out[:, 1, 1].real, out[:, 0, 1]
