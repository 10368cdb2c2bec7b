import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from tripodgate.core import Grid1D
from tripodgate.gates import GatePulse, gate_matrix, rotation_z
from tripodgate.medium import (
    GridMismatchError,
    MediumState,
    apply_raman,
    apply_raman_full_matrix,
    apply_zeeman,
    bloch_rhs,
    coherence_matrix,
    ground_block_after,
    raman_unitary_3,
    stored_norm,
)
from tripodgate.propagation import FieldState

pi = math.pi
grid = Grid1D(16, 1.0)
TOL = 1e-12


def random_state(rng, s_bbp=0.0):
    c = lambda: rng.normal(size=grid.n) + 1j * rng.normal(size=grid.n)  # noqa: E731
    return MediumState(grid, c(), c(), c(), c(), s_bbp)


def eig_conjugation(sigma, w, tau):
    """exp(iV tau) sigma exp(-iV tau) via eigen-decomposition of V = W|b><b'| + h.c."""
    v = np.zeros((3, 3), dtype=complex)
    v[0, 2], v[2, 0] = w, np.conj(w)
    vals, vecs = np.linalg.eigh(v)
    u = vecs @ np.diag(np.exp(1j * vals * tau)) @ vecs.conj().T
    return u @ sigma @ u.conj().T


# --- Bloch right-hand side -------------------------------------------------


def test_zero_state_is_fixed_point():
    d = bloch_rhs(MediumState.empty(grid), FieldState.zeros(grid), omega_c=3.0)
    for arr in (d.d_ba, d.d_bpa, d.d_bc, d.d_bpc):
        assert np.all(arr == 0)


def test_rhs_matches_hand_formulas(rng):
    st = random_state(rng, s_bbp=0.3 - 0.1j)
    om_p, om_m = rng.normal(size=grid.n) + 0j, 1j * rng.normal(size=grid.n)
    d = bloch_rhs(st, FieldState(grid, om_p, om_m), 2.5)
    i = 5
    # i ds/dt = -(...)  <=>  ds/dt = i(...)
    assert d.d_ba[i] == pytest.approx(1j * (om_p[i] / 2 + 2.5 * st.s_bc[i] + om_m[i] * (0.3 - 0.1j)))
    assert d.d_bpa[i] == pytest.approx(1j * (om_m[i] / 2 + 2.5 * st.s_bpc[i] + om_p[i] * (0.3 + 0.1j)))
    assert d.d_bc[i] == pytest.approx(1j * 2.5 * st.s_ba[i])
    assert d.d_bpc[i] == pytest.approx(1j * 2.5 * st.s_bpa[i])


def test_dark_state_has_no_optical_drive():
    om = np.linspace(0.1, 1.0, grid.n) + 0.2j
    omega_c = 4.0
    st = MediumState(grid, 0.0, 0.0, -om / (2 * omega_c), 0.0, 0.0)
    d = bloch_rhs(st, FieldState(grid, om, np.zeros(grid.n)), omega_c)
    assert np.max(np.abs(d.d_ba)) < TOL


def test_grid_mismatch():
    with pytest.raises(GridMismatchError):
        bloch_rhs(MediumState.empty(grid), FieldState.zeros(Grid1D(32, 1.0)), 1.0)
    with pytest.raises(GridMismatchError):
        MediumState(grid, np.zeros(3), 0, 0, 0, 0)


def _integrate_rabi(omega_c, s0, t_end):
    zero = FieldState.zeros(grid)

    def f(t, y):
        st = MediumState(grid, y[:16], 0.0, y[16:], 0.0, 0.0)
        d = bloch_rhs(st, zero, omega_c)
        return np.concatenate([d.d_ba, d.d_bc])

    y0 = np.concatenate([np.zeros(16, dtype=complex), s0])
    return solve_ivp(f, (0, t_end), y0, rtol=1e-12, atol=1e-14, dense_output=True)


def test_rabi_oscillation_closed_form_and_conservation():
    omega_c = 2.3
    s0 = np.linspace(0.2, 1.0, 16) * np.exp(0.4j)
    sol = _integrate_rabi(omega_c, s0, 5.0)
    for t in np.linspace(0, 5.0, 11):
        y = sol.sol(t)
        s_ba, s_bc = y[:16], y[16:]
        assert np.allclose(s_bc, s0 * np.cos(omega_c * t), atol=1e-8)
        assert np.allclose(s_ba, 1j * s0 * np.sin(omega_c * t), atol=1e-8)
        energy = np.abs(s_ba) ** 2 + np.abs(s_bc) ** 2
        assert np.allclose(energy, np.abs(s0) ** 2, atol=1e-8)


# --- Raman map -------------------------------------------------------------


def test_apply_raman_examples():
    st = MediumState(grid, 0.0, 0.0, 0.5 + 0.2j, 0.0, 0.0)
    same = apply_raman(st, GatePulse.from_area(0.8, 0.0))
    assert np.allclose(same.s_bc, st.s_bc) and np.allclose(same.s_bpc, 0)
    for chi in (0.0, 0.9, pi):
        out = apply_raman(st, GatePulse.from_area(chi, pi))
        assert np.allclose(out.s_bc, 0, atol=TOL)
        assert np.allclose(out.s_bpc, 1j * np.exp(-1j * chi) * st.s_bc, atol=TOL)
    st = MediumState(grid, 0.0, 0.0, 0.0, 0.3 - 0.6j, 0.0)
    out = apply_raman(st, GatePulse.from_area(0.0, pi / 2))
    r = 1 / math.sqrt(2)
    assert np.allclose(out.s_bc, 1j * st.s_bpc * r, atol=TOL)
    assert np.allclose(out.s_bpc, st.s_bpc * r, atol=TOL)


def test_apply_raman_unitary_and_additive(rng):
    for _ in range(50):
        st = random_state(rng)
        chi, b1, b2 = rng.uniform(-pi, pi, 3)
        out = apply_raman(st, GatePulse.from_area(chi, b1))
        pointwise = np.abs(st.s_bc) ** 2 + np.abs(st.s_bpc) ** 2
        assert np.allclose(np.abs(out.s_bc) ** 2 + np.abs(out.s_bpc) ** 2, pointwise, atol=TOL)
        two = apply_raman(out, GatePulse.from_area(chi, b2))
        one = apply_raman(st, GatePulse.from_area(chi, b1 + b2))
        assert np.allclose(two.s_bc, one.s_bc, atol=TOL)
        assert np.allclose(two.s_bpc, one.s_bpc, atol=TOL)
        assert np.all(out.s_bbp == st.s_bbp)
    assert stored_norm(out) == pytest.approx(stored_norm(st))


def test_raman_then_zeeman_composes(rng):
    st = random_state(rng)
    chi, beta, phi = 0.4, 1.9, -2.2
    out = apply_zeeman(apply_raman(st, GatePulse.from_area(chi, beta)), phi)
    g = (rotation_z(phi) @ gate_matrix(chi, beta)).matrix
    expect = g @ st.spin_pair
    assert np.allclose(out.spin_pair, expect, atol=TOL)


# --- full 3x3 conjugation --------------------------------------------------


def test_full_matrix_equal_populations_diagonal_constant(rng):
    sigma = coherence_matrix(0.2 + 0.1j, -0.3j)
    for beta in np.linspace(0, 2 * pi, 9):
        out = apply_raman_full_matrix(sigma, GatePulse.from_area(rng.uniform(-pi, pi), beta))
        assert out[0, 0].real == pytest.approx(0.5, abs=TOL)
        assert out[2, 2].real == pytest.approx(0.5, abs=TOL)
        assert abs(out[0, 2]) < TOL


def test_full_matrix_corner_entry():
    chi = 0.7
    sigma = coherence_matrix(0.0, 0.0, p_b=1.0, p_bprime=0.0)
    out = apply_raman_full_matrix(sigma, GatePulse.from_area(chi, pi / 2))  # |W| tau = pi/4
    assert out[0, 2] == pytest.approx(-0.5j * np.exp(1j * chi), abs=TOL)


def test_full_matrix_hand_entries_right_polarized(rng):
    """Entries of sigma(tau) written out by hand for an initial s_bc only."""
    for _ in range(20):
        chi, wt = rng.uniform(-pi, pi), rng.uniform(0, 2 * pi)
        pb, pbp = rng.uniform(0, 1, 2)
        s = 0.3 * np.exp(1j * rng.uniform(-pi, pi))
        out = apply_raman_full_matrix(coherence_matrix(s, 0.0, p_b=pb, p_bprime=pbp),
                                      GatePulse.from_area(chi, 2 * wt))
        c, sn = math.cos(wt), math.sin(wt)
        assert out[0, 0] == pytest.approx(pb * c**2 + pbp * sn**2, abs=TOL)
        assert out[2, 2] == pytest.approx(pb * sn**2 + pbp * c**2, abs=TOL)
        assert out[0, 2] == pytest.approx(-1j * np.exp(1j * chi) * sn * c * (pb - pbp), abs=TOL)
        assert out[0, 1] == pytest.approx(c * s, abs=TOL)
        assert out[2, 1] == pytest.approx(1j * np.exp(-1j * chi) * sn * s, abs=TOL)
        assert out[1, 1] == pytest.approx(0, abs=TOL)


def test_full_matrix_hand_entries_left_polarized(rng):
    chi, wt = 1.1, 0.8
    s = 0.25j
    out = apply_raman_full_matrix(coherence_matrix(0.0, s), GatePulse.from_area(chi, 2 * wt))
    assert out[0, 1] == pytest.approx(1j * np.exp(1j * chi) * math.sin(wt) * s, abs=TOL)
    assert out[2, 1] == pytest.approx(math.cos(wt) * s, abs=TOL)


def test_restriction_matches_full_matrix(rng):
    for _ in range(100):
        chi, beta = rng.uniform(-pi, pi), rng.uniform(0, 4 * pi)
        s_bc, s_bpc = rng.normal(size=2) + 1j * rng.normal(size=2)
        pulse = GatePulse.from_area(chi, beta)
        full = apply_raman_full_matrix(coherence_matrix(s_bc, s_bpc), pulse)
        st = apply_raman(MediumState(grid, 0.0, 0.0, s_bc, s_bpc, 0.0), pulse)
        assert abs(full[0, 1] - st.s_bc[0]) < TOL
        assert abs(full[2, 1] - st.s_bpc[0]) < TOL
        assert abs(full[0, 2]) < TOL


def test_full_matrix_matches_eigen_oracle(rng):
    for _ in range(100):
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        sigma = a + a.conj().T
        w = rng.normal() + 1j * rng.normal()
        tau = rng.uniform(0.1, 3)
        pulse = GatePulse.from_coupling(w, tau)
        assert np.allclose(apply_raman_full_matrix(sigma, pulse), eig_conjugation(sigma, w, tau),
                           atol=1e-10)


def test_full_matrix_rejects_non_hermitian():
    with pytest.raises(ValueError):
        apply_raman_full_matrix(np.arange(9).reshape(3, 3), GatePulse.from_area(0, 1))


def test_raman_unitary_3_leaves_c_alone():
    u = raman_unitary_3(0.3, 1.2)
    assert u[1, 1] == 1 and np.all(u[1, [0, 2]] == 0)


def test_ground_block_detects_cross_coherence():
    st = MediumState(grid, 0, 0, 0, 0, 0.0)
    pb, pbp, sbbp = ground_block_after(st, gate_matrix(0.5, 1.0))
    assert np.allclose(pb, 0.5) and np.allclose(pbp, 0.5) and np.allclose(sbbp, 0, atol=TOL)


# --- Zeeman map ------------------------------------------------------------


def test_apply_zeeman_examples(rng):
    st = random_state(rng)
    same = apply_zeeman(st, 0.0)
    assert np.allclose(same.spin_pair, st.spin_pair)
    full = apply_zeeman(st, 2 * pi)
    assert np.allclose(full.spin_pair, -st.spin_pair, atol=TOL)
    ones = MediumState(grid, 0, 0, 1.0, 1.0, 0)
    out = apply_zeeman(ones, pi / 2)
    assert np.allclose(out.s_bc, np.exp(-1j * pi / 4))
    assert np.allclose(out.s_bpc, np.exp(1j * pi / 4))


def test_zeeman_additive_and_magnitude_preserving(rng):
    st = random_state(rng)
    a = apply_zeeman(apply_zeeman(st, 0.7), -1.9)
    b = apply_zeeman(st, 0.7 - 1.9)
    assert np.allclose(a.spin_pair, b.spin_pair, atol=1e-15)
    assert np.allclose(np.abs(a.spin_pair), np.abs(st.spin_pair))


def test_populations_are_constants():
    st = MediumState.empty(grid)
    assert (st.p_b, st.p_bprime, st.p_c, st.p_a) == (0.5, 0.5, 0.0, 0.0)
