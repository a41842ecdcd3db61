import numpy as np
import pytest

from sqzkit.decoherence import DecoherenceSpec, light_scattering
from sqzkit.oat_analytic import (
    SECOND_ORDER_KEYS,
    oat_correlators,
    oat_optimal_time_guess,
    oat_squeezing_trace,
)

from oracles import (
    SM2,
    SP2,
    SZ2,
    dense_xyz,
    integrate_lindblad,
    kitagawa_ueda_xi2,
    per_spin_jumps,
    x_product_state,
)


def dense_oat_correlators(n, chi, times, jumps=()):
    """Moments from direct master-equation integration (or pure phases)."""
    sx, sy, sz = dense_xyz(n)
    sp = sx + 1j * sy
    h = chi * sz @ sz
    ops = {
        (0, 1, 0): sz,
        (0, 2, 0): sz @ sz,
        (1, 0, 0): sp,
        (2, 0, 0): sp @ sp,
        (1, 1, 0): sp @ sz,
        (1, 0, 1): sp @ sp.conj().T,
    }
    psi = x_product_state(n)
    if not jumps:
        # chi S_z^2 is diagonal in the product basis: pure phase evolution
        diag = np.real(np.diag(h))
        out = {}
        for key, op in ops.items():
            vals = []
            for t in times:
                psi_t = np.exp(-1j * diag * t) * psi
                vals.append(np.vdot(psi_t, op @ psi_t))
            out[key] = np.array(vals)
        return out
    rho0 = np.outer(psi, psi.conj())
    rhos = integrate_lindblad(h, jumps, rho0, times)
    return {key: np.array([np.trace(op @ r) for r in rhos]) for key, op in ops.items()}


def test_time_zero_coherent_values():
    n = 14
    corr = oat_correlators(n, 0.7, np.array([0.0]))
    assert abs(corr[(1, 0, 0)][0] - n / 2) < 1e-12  # <S_x> = N/2, <S_y> = 0
    assert abs(corr[(0, 1, 0)][0]) < 1e-12
    assert abs(corr[(0, 2, 0)][0] - n / 4) < 1e-12
    trace = oat_squeezing_trace(n, 0.7, np.array([0.0]))
    assert abs(trace.xi2[0] - 1.0) < 1e-10


@pytest.mark.parametrize("n", [10, 12])
def test_decoherence_free_matches_dense(n):
    chi = 1.0
    times = np.linspace(0.0, 0.25, 7)
    got = oat_correlators(n, chi, times)
    ref = dense_oat_correlators(n, chi, times)
    for key in SECOND_ORDER_KEYS:
        scale = max(1.0, np.abs(ref[key]).max())
        assert np.abs(got[key] - ref[key]).max() / scale < 1e-9, key


def test_decay_and_dephasing_match_dense_lindblad():
    # Gamma = 0.1 per second on both channels, the light-scattering model
    n, chi = 6, 1.0
    times = np.linspace(0.0, 2 / (chi * n), 6)
    dec = light_scattering(0.1)
    got = oat_correlators(n, chi, times, dec)
    jumps = per_spin_jumps(SM2, n, 0.1) + per_spin_jumps(SZ2, n, 0.1)
    ref = dense_oat_correlators(n, chi, times, jumps)
    for key in SECOND_ORDER_KEYS:
        scale = max(1.0, np.abs(ref[key]).max())
        assert np.abs(got[key] - ref[key]).max() / scale < 1e-6, key


def test_raising_channel_matches_dense_lindblad():
    n, chi = 5, 0.8
    times = np.linspace(0.0, 0.4, 5)
    dec = DecoherenceSpec(rate_decay=0.13, rate_dephase=0.06)
    got = oat_correlators(n, chi, times, dec, rate_raise=0.07)
    jumps = (
        per_spin_jumps(SM2, n, 0.13)
        + per_spin_jumps(SZ2, n, 0.06)
        + per_spin_jumps(SP2, n, 0.07)
    )
    ref = dense_oat_correlators(n, chi, times, jumps)
    for key in SECOND_ORDER_KEYS:
        scale = max(1.0, np.abs(ref[key]).max())
        assert np.abs(got[key] - ref[key]).max() / scale < 1e-6, key


def test_reduces_to_kitagawa_ueda():
    n, chi = 20, 1.0
    times = np.linspace(1e-3, 0.2, 30)
    trace = oat_squeezing_trace(n, chi, times)
    ref = kitagawa_ueda_xi2(n, chi * times)
    assert np.abs(trace.xi2 - ref).max() < 1e-10


def test_dephasing_only_coherence_decay_rate():
    # <S_+> decays at Gamma_el / 2 when chi = 0 and only dephasing acts
    n, gamma = 8, 0.3
    times = np.linspace(0, 2, 9)
    corr = oat_correlators(n, 0.0, times, DecoherenceSpec(rate_dephase=gamma))
    ref = n / 2 * np.exp(-gamma * times / 2)
    assert np.abs(corr[(1, 0, 0)] - ref).max() < 1e-12


def test_driven_frame_spec_rejected():
    with pytest.raises(ValueError):
        oat_correlators(4, 1.0, [0.1], DecoherenceSpec(rate_decay=0.1, frame_bessel=0.5))


def test_optimal_time_guess_brackets_minimum():
    n, chi = 40, 2.0
    guess = oat_optimal_time_guess(n, chi)
    times = np.linspace(0, 2.5 * guess, 80)
    trace = oat_squeezing_trace(n, chi, times)
    opt = trace.optimal()
    assert opt.bracketed
    assert 0.4 * guess < opt.t_opt < 2.0 * guess
