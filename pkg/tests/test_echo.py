import math

import numpy as np
import pytest

from nv_multifreq.experiments.echo import (
    EchoReadout,
    best_sign_sweep,
    build_programs,
    echo_amplitude_sweep,
    echo_signal,
    model_gradient,
)
from nv_multifreq.models.common import EnsembleConfig
from nv_multifreq.models.run import RunConfig
from nv_multifreq.physics.ensemble import shot_noise_std
from nv_multifreq.physics.geometry import axis_matrix

FIELD_DIRECTION = (0.23, 0.16, -0.97)
X_HAT = (1.0, 0.0, 0.0)
SMALL_GRID = [k * 1e-9 for k in range(-10, 11)]
WIDE_GRID = [k * 1e-7 for k in range(-10, 11)]


def test_readout_from_programs(programs, assignment):
    single = EchoReadout.from_program(programs["NV3"], assignment)
    assert single.driven == (3,)
    assert single.offset_rad == pytest.approx(math.pi / 2)
    x = EchoReadout.from_program(programs["x"], assignment)
    assert x.driven == (1, 2, 3, 4)
    assert x.signs == (1, -1, 1, -1)
    assert x.thetas()[1] == pytest.approx(3 * math.pi / 2)


def test_zero_field_signal_sits_between_bright_and_dark(ensemble, echo):
    readout = EchoReadout((1, 2, 3, 4), (1, 1, 1, 1), math.pi / 2)
    s = echo_signal((0.0, 0.0, 0.0), readout, ensemble, echo)
    assert s == pytest.approx(1.0 - ensemble.contrast / 2)


def test_noiseless_gradient_matches_model(ensemble, echo, programs, assignment):
    sweep = echo_amplitude_sweep(ensemble, echo, programs["NV1"], X_HAT, SMALL_GRID, assignment=assignment)
    assert sweep.gradient == pytest.approx(sweep.model_gradient, rel=1e-3)
    kappa = 4 * ensemble.gyromagnetic_ratio_hz_per_t * echo.tau_s
    expected = 0.25 * ensemble.contrast * 0.5 * math.exp(-0.5) * kappa / math.sqrt(3)
    assert sweep.model_gradient == pytest.approx(expected, rel=1e-9)


def test_component_program_quadruples_the_slope(ensemble, echo, programs, assignment):
    for k, direction in zip(("x", "y", "z"), np.eye(3)):
        mf = EchoReadout.from_program(programs[k], assignment)
        nv1 = EchoReadout.from_program(programs["NV1"], assignment)
        ratio = model_gradient(mf, ensemble, echo, tuple(direction)) / model_gradient(
            nv1, ensemble, echo, tuple(direction)
        )
        assert ratio == pytest.approx(4.0)


def test_monte_carlo_gradient_tracks_noiseless(ensemble, echo, programs, assignment):
    clean = echo_amplitude_sweep(ensemble, echo, programs["NV1"], X_HAT, WIDE_GRID, assignment=assignment)
    noisy = echo_amplitude_sweep(
        ensemble, echo, programs["NV1"], X_HAT, WIDE_GRID, seed=11, repetitions=200, assignment=assignment
    )
    assert noisy.gradient == pytest.approx(clean.gradient, rel=0.1)
    shots = ensemble.shots_for(1.0)
    assert noisy.noise_1s == pytest.approx(shot_noise_std(clean.mean[10], ensemble, shots), rel=0.1)
    assert noisy.metadata.repetitions == 200


def test_noiseless_stddev_is_theoretical_shot_noise(ensemble, echo, programs, assignment):
    sweep = echo_amplitude_sweep(
        ensemble, echo, programs["y"], (0.0, 1.0, 0.0), SMALL_GRID, time_per_point_s=0.5, assignment=assignment
    )
    shots = ensemble.shots_for(0.5)
    for mean, std in zip(sweep.mean, sweep.stddev):
        assert std == pytest.approx(shot_noise_std(mean, ensemble, shots))
    assert sweep.noise_1s_stderr == 0.0


def test_grid_must_contain_zero(ensemble, echo, programs):
    with pytest.raises(ValueError):
        echo_amplitude_sweep(ensemble, echo, programs["NV1"], X_HAT, [-1e-8, 1e-8, 2e-8])


def test_window_needs_three_points(ensemble, echo, programs):
    with pytest.raises(ValueError):
        echo_amplitude_sweep(ensemble, echo, programs["NV1"], X_HAT, [-1e-8, 0.0, 1e-8])


def test_sweep_is_independent_of_thread_count(ensemble, echo, programs, assignment):
    kwargs = {"seed": 5, "repetitions": 20, "assignment": assignment}
    one = echo_amplitude_sweep(ensemble, echo, programs["z"], (0, 0, 1), WIDE_GRID, threads=1, **kwargs)
    four = echo_amplitude_sweep(ensemble, echo, programs["z"], (0, 0, 1), WIDE_GRID, threads=4, **kwargs)
    assert one == four


def test_numeric_pulses_stay_close_to_ideal(ensemble, echo, drive, programs, assignment):
    grid = [-2e-8, -1e-8, 0.0, 1e-8, 2e-8]
    ideal = echo_amplitude_sweep(
        ensemble, echo, programs["NV1"], X_HAT, grid, assignment=assignment, window_fraction=1.0
    )
    finite = echo_amplitude_sweep(
        ensemble, echo, programs["NV1"], X_HAT, grid, assignment=assignment, window_fraction=1.0,
        drive=drive, numeric=True,
    )
    for a, b in zip(ideal.mean, finite.mean):
        assert b == pytest.approx(a, abs=1e-4)


def test_pulse_fidelity_scales_the_gradient(echo):
    nv1 = EchoReadout((1,), (1, 1, 1, 1), math.pi / 2)
    full = model_gradient(nv1, EnsembleConfig(), echo, X_HAT)
    half = model_gradient(nv1, EnsembleConfig(pulse_fidelity=(0.5, 1.0, 1.0, 1.0)), echo, X_HAT)
    assert half == pytest.approx(full / 2)


def test_best_sign_adds_every_axis(ensemble, echo):
    b_hat = np.asarray(FIELD_DIRECTION) / np.linalg.norm(FIELD_DIRECTION)
    singles = [
        abs(model_gradient(EchoReadout((n,), (1, 1, 1, 1), math.pi / 2), ensemble, echo, tuple(b_hat)))
        for n in range(1, 5)
    ]
    sweep = best_sign_sweep(ensemble, echo, FIELD_DIRECTION, SMALL_GRID)
    assert sweep.model_gradient == pytest.approx(sum(singles))
    assert sweep.gradient == pytest.approx(sweep.model_gradient, rel=1e-3)
    assert sweep.metadata.mode == "multi_frequency:best"
    expected = tuple(float(np.dot(u, b_hat)) for u in axis_matrix())
    assert sweep.metadata.projections == pytest.approx(expected)


def test_build_programs_covers_all_modes(repo_root):
    config = RunConfig.load(repo_root / "configs" / "equal_ratios.json")
    assignment, programs = build_programs(config)
    assert sorted(programs) == ["NV1", "NV2", "NV3", "NV4", "x", "y", "z"]
    assert programs["x"].mode.component == "x"
    assert programs["NV2"].channels == (assignment.channel_for_axis(2),)
