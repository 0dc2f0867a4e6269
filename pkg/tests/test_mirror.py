import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from eitmirror.mirror import (
    EnvelopeState, MirrorState, amplitude_from_energy, energy_in_quanta, envelope_energy,
    envelope_predict, equilibrium_shift, feedback_force, free_solution, mechanical_energy,
    oscillator_rhs, resonant_drive_amplitude, static_force,
)
from eitmirror.params import HBAR, MirrorParams, derive_quantities

MIRROR = MirrorParams(1e-20, 2 * math.pi * 8e6)


@settings(max_examples=30, deadline=None)
@given(z0=st.floats(1e-12, 1e-7), p0=st.floats(-1e-19, 1e-19), t=st.floats(0, 1e-5))
def test_free_solution_conserves_energy(z0, p0, t):
    z, p = free_solution(z0, p0, t, MIRROR)
    e0 = mechanical_energy(z0, p0, MIRROR)
    assert mechanical_energy(z, p, MIRROR) == pytest.approx(e0, rel=1e-9)


def test_oscillator_rhs_matches_free_solution():
    z0 = 1e-9
    period = 2 * math.pi / MIRROR.omega_m

    def rhs(t, y):
        return oscillator_rhs(MirrorState(y[0], y[1], t), 0.0, MIRROR)

    sol = solve_ivp(rhs, (0, 3 * period), [z0, 0.0], rtol=1e-11, atol=1e-24)
    z, p = free_solution(z0, 0.0, sol.t[-1], MIRROR)
    assert sol.y[0, -1] == pytest.approx(z, abs=1e-8 * z0)


def test_resonant_drive_grows_linearly():
    f1 = 1e-15
    period = 2 * math.pi / MIRROR.omega_m

    def rhs(t, y):
        return oscillator_rhs(MirrorState(y[0], y[1], t), f1 * math.sin(MIRROR.omega_m * t), MIRROR)

    t_end = 200 * period
    sol = solve_ivp(rhs, (0, t_end), [0.0, 0.0], rtol=1e-10, atol=1e-22, dense_output=True)
    tt = np.linspace(t_end - period, t_end, 200)
    amp = np.abs(sol.sol(tt)[0]).max()
    assert amp == pytest.approx(resonant_drive_amplitude(f1, t_end, MIRROR), rel=0.01)


def test_envelope_model():
    assert envelope_predict(1.0, 2.0, 1.0) == pytest.approx(math.exp(-1.0))
    e = envelope_energy(1e-9, 1e3, [0.0, 1e-3], MIRROR)
    assert e[1] / e[0] == pytest.approx(math.exp(-1.0))
    with pytest.warns(UserWarning, match="period averaging"):
        envelope_predict(1.0, 0.5 * MIRROR.omega_m, 0.0, MIRROR.omega_m)


def test_envelope_state_energy():
    env = EnvelopeState.from_state(MirrorState(3e-9, 0.0), MIRROR)
    assert env.energy == pytest.approx(mechanical_energy(3e-9, 0.0, MIRROR))
    assert amplitude_from_energy(env.energy, MIRROR) == pytest.approx(3e-9)
    assert EnvelopeState.from_amplitude(3e-9, MIRROR).amplitude == 3e-9


def test_forces(fig2):
    assert static_force(1.0, 0.0) == pytest.approx(2 / 299_792_458.0)
    assert static_force(2e-3, 6.4e-3) == pytest.approx(2 * static_force(1e-3, 3.2e-3))
    with pytest.raises(ValueError):
        static_force(-1.0, 1.0)
    der = derive_quantities(fig2)
    f = feedback_force(np.array([0.01, 0.011]), 0.01, fig2.optics, der)
    assert f[0] == 0 and f[1] == pytest.approx(-der.f0 * der.a_gain * 0.001)
    shift = equilibrium_shift(fig2.optics, der, fig2.mirror, 0.0)
    assert shift == pytest.approx(2 * (fig2.optics.w_c + fig2.optics.w_p0)
                                  / (fig2.mirror.mass * fig2.mirror.omega_m**2 * 299_792_458.0))


def test_energy_in_quanta():
    e = HBAR * MIRROR.omega_m * 10
    assert energy_in_quanta(e, MIRROR) == pytest.approx(10)
