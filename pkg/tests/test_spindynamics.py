import math

import numpy as np
import pytest

from nv_multifreq.exceptions import StepSizeUnderflow
from nv_multifreq.models.common import DriveConfig, EchoConfig, TwoLevelState
from nv_multifreq.physics.spindynamics import (
    accumulated_phase,
    accumulated_phase_quadrature,
    echo_population,
    echo_visibility,
    phase_per_tesla,
    propagate_two_level,
    rabi_population,
    readout_phase_for_sign,
    rotate_instantaneous,
    run_hahn_echo,
)

GAMMA = 28.024e9


@pytest.mark.parametrize("b", [1e-9, 2.5e-7, -4e-7])
@pytest.mark.parametrize("phase0", [0.0, 0.4, math.pi / 2, 2.5])
def test_closed_form_phase_matches_quadrature(b, phase0):
    echo = EchoConfig(tau_s=1e-5, f_ac_hz=1e5, phase0_rad=phase0)
    exact = accumulated_phase_quadrature(b, echo, GAMMA)
    assert accumulated_phase(b, echo, GAMMA) == pytest.approx(exact, rel=1e-9, abs=1e-12)


TAU_GRID = np.geomspace(1e-6, 1e-4, 10)
F_AC_GRID = np.geomspace(1.0, 1e6, 10)
PHASE0_GRID = np.linspace(0.0, 2 * math.pi, 10, endpoint=False)


@pytest.mark.parametrize("tau", TAU_GRID)
def test_closed_form_phase_across_timing_grid(tau):
    b = 2e-7
    for f_ac in F_AC_GRID:
        omega = 2 * math.pi * f_ac
        # Phase amplitude over phase0, floored at quadrature round-off for whole-period halves
        envelope = 2 * math.pi * GAMMA * b * 4 * math.sin(omega * tau / 4) ** 2 / omega
        tolerance = 1e-9 * envelope + 1e-12 * 2 * math.pi * GAMMA * b * tau
        for phase0 in PHASE0_GRID:
            echo = EchoConfig(tau_s=float(tau), f_ac_hz=float(f_ac), phase0_rad=float(phase0), synchronized=False)
            exact = accumulated_phase_quadrature(b, echo, GAMMA)
            assert accumulated_phase(b, echo, GAMMA) == pytest.approx(exact, rel=1e-9, abs=tolerance)


def test_unsynchronized_phase_matches_quadrature():
    echo = EchoConfig(tau_s=1e-5, f_ac_hz=73e3, phase0_rad=0.3, synchronized=False)
    b = 3e-7
    assert accumulated_phase(b, echo, GAMMA) == pytest.approx(
        accumulated_phase_quadrature(b, echo, GAMMA), rel=1e-9
    )


def test_synchronized_phase_per_tesla_is_four_gamma_tau(echo):
    assert phase_per_tesla(echo, GAMMA) == pytest.approx(4 * GAMMA * echo.tau_s, rel=1e-12)


def test_static_field_is_refocused():
    echo = EchoConfig(tau_s=1e-5, f_ac_hz=0.0)
    assert accumulated_phase(1e-6, echo, GAMMA) == 0.0


def test_synchronization_is_enforced():
    with pytest.raises(ValueError):
        EchoConfig(tau_s=1e-5, f_ac_hz=2e5)


def test_echo_population_convention():
    assert echo_population(0.3, 0.8, 0.3) == pytest.approx(0.9)
    assert echo_population(0.0, 0.8, math.pi / 2) == pytest.approx(0.5)
    # A 180° readout flip mirrors the population about ½
    p = echo_population(0.2, 0.6, math.pi / 2)
    q = echo_population(0.2, 0.6, 3 * math.pi / 2)
    assert p + q == pytest.approx(1.0)
    with pytest.raises(ValueError):
        echo_population(0.0, 1.5, 0.0)


def test_visibility_decay():
    assert echo_visibility(20e-6, 20e-6, 1.0, 0.9) == pytest.approx(0.9 / math.e)
    assert echo_visibility(0.0, 20e-6, 2.0, 1.0) == 1.0
    with pytest.raises(ValueError):
        echo_visibility(1e-5, 0.0, 1.0, 1.0)


def test_readout_phase_for_sign():
    assert readout_phase_for_sign(1) == pytest.approx(math.pi / 2)
    assert readout_phase_for_sign(-1) == pytest.approx(3 * math.pi / 2)
    assert readout_phase_for_sign(-1, 0.0) == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        readout_phase_for_sign(0)


def test_resonant_pi_pulse_inverts_population():
    drive = DriveConfig(rabi_frequency_hz=2.5e6)
    assert drive.pi_duration_s() == pytest.approx(200e-9)
    pulse = drive.model_copy(update={"duration_s": drive.pi_duration_s()})
    state = propagate_two_level(TwoLevelState.ground(), pulse)
    assert state.population_1 == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("detuning", [0.0, 5e5, 1e6, 2e6, -1.2e6])
def test_propagator_matches_analytic_rabi_formula(detuning):
    drive = DriveConfig(rabi_frequency_hz=1e6, detuning_hz=detuning, duration_s=0.73e-6)
    state = propagate_two_level(TwoLevelState.ground(), drive)
    assert state.population_1 == pytest.approx(rabi_population(0.73e-6, 1e6, detuning), abs=1e-8)
    assert abs(state.norm - 1.0) < 1e-9


@pytest.mark.parametrize("detuning", [0.0, 1e6, 2e6])
def test_pulse_followed_by_its_inverse_restores_state(detuning):
    start = TwoLevelState(bloch=(0.6, 0.0, 0.8))
    forward = DriveConfig(rabi_frequency_hz=1e6, detuning_hz=detuning, pulse_phase_rad=0.3, duration_s=0.41e-6)
    inverse = forward.model_copy(update={"detuning_hz": -detuning, "pulse_phase_rad": 0.3 + math.pi})
    end = propagate_two_level(propagate_two_level(start, forward), inverse)
    assert end.bloch == pytest.approx(start.bloch, abs=1e-9)
    assert abs(end.norm - 1.0) < 1e-9


def test_zero_duration_is_identity():
    state = TwoLevelState(bloch=(0.6, 0.0, 0.8))
    assert propagate_two_level(state, DriveConfig(rabi_frequency_hz=1e6)) == state


def test_too_many_steps_underflow():
    drive = DriveConfig(rabi_frequency_hz=2.5e6, duration_s=10.0)
    with pytest.raises(StepSizeUnderflow):
        propagate_two_level(TwoLevelState.ground(), drive)


def test_instantaneous_half_pi_rotation():
    state = rotate_instantaneous(TwoLevelState.ground(), math.pi / 2, 0.0)
    assert state.population_0 == pytest.approx(0.5)
    assert state.bloch[1] == pytest.approx(-1.0)


def test_hahn_echo_at_zero_field_sits_at_the_operating_point(echo):
    populations = run_hahn_echo([0.0, 0.0], echo, GAMMA, [1, -1], t2_s=20e-6)
    assert populations == pytest.approx([0.5, 0.5])


def test_hahn_echo_on_a_single_axis_defaults_to_ideal_pulses(echo):
    b = 1e-7
    (single,) = run_hahn_echo([b], echo, GAMMA, [1], t2_s=20e-6)
    explicit = run_hahn_echo([b, b], echo, GAMMA, [1, 1], t2_s=20e-6, fidelity=[1.0, 1.0])
    assert single == pytest.approx(explicit[0])


def test_hahn_echo_flip_reverses_slope(echo):
    b = 1e-7
    plus, minus = run_hahn_echo([b, b], echo, GAMMA, [1, -1], t2_s=20e-6)
    assert plus > 0.5 > minus
    assert plus - 0.5 == pytest.approx(0.5 - minus)


def test_fidelity_scales_visibility(echo):
    b = 1e-7
    full, half = run_hahn_echo([b, b], echo, GAMMA, [1, 1], t2_s=20e-6, fidelity=[1.0, 0.5])
    assert half - 0.5 == pytest.approx((full - 0.5) / 2)


def test_numeric_echo_with_ideal_pulses_matches_closed_form(echo):
    b = 1e-7
    analytic = run_hahn_echo([b], echo, GAMMA, [1], t2_s=20e-6, fidelity=[1.0])
    numeric = run_hahn_echo([b], echo, GAMMA, [1], t2_s=20e-6, fidelity=[1.0], numeric=True)
    assert numeric[0] == pytest.approx(analytic[0], abs=1e-5)


def test_numeric_echo_with_finite_pulses_is_close(echo):
    b = 1e-7
    drive = DriveConfig(rabi_frequency_hz=2.5e6)
    analytic = run_hahn_echo([b], echo, GAMMA, [-1], t2_s=20e-6, fidelity=[1.0])
    numeric = run_hahn_echo(
        [b], echo, GAMMA, [-1], t2_s=20e-6, fidelity=[1.0], drive=drive, numeric=True
    )
    assert numeric[0] == pytest.approx(analytic[0], abs=5e-3)


def test_hahn_echo_rejects_mismatched_inputs(echo):
    with pytest.raises(ValueError):
        run_hahn_echo([0.0, 0.0], echo, GAMMA, [1], t2_s=20e-6, fidelity=[1.0, 1.0])
