import math

import numpy as np
import pytest

from nv_multifreq.models.common import EnsembleConfig, NoiseFloorConfig
from nv_multifreq.physics.ensemble import (
    ensemble_signal,
    expected_counts,
    noise_vs_integration_time,
    sample_readout,
    sample_readout_batch,
    shot_noise_std,
)
from nv_multifreq.utils.parallel import derive_rng, derive_seed, parallel_map

TIMES = [1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0]


def test_default_photon_budget(ensemble):
    assert ensemble.counts_per_shot == pytest.approx(1200.0)
    assert ensemble.shots_for(1.0) == 50_000
    assert ensemble.shots_for(1e-9) == 1


def test_signal_bounds(ensemble):
    assert ensemble_signal([1.0] * 4, ensemble) == pytest.approx(1.0)
    assert ensemble_signal([0.0] * 4, ensemble) == pytest.approx(1.0 - ensemble.contrast)


def test_signal_weights_axes_by_ratio():
    config = EnsembleConfig(ratios=(0.29, 0.35, 0.21, 0.15), contrast=0.1)
    s = ensemble_signal([0.0, 1.0, 1.0, 1.0], config)
    assert s == pytest.approx(1.0 - 0.29 * 0.1)


def test_signal_rejects_bad_populations(ensemble):
    with pytest.raises(ValueError):
        ensemble_signal([1.0, 1.0, 1.0], ensemble)
    with pytest.raises(ValueError):
        ensemble_signal([1.0, 1.0, 1.0, 1.2], ensemble)


def test_ratios_must_sum_to_one():
    with pytest.raises(ValueError):
        EnsembleConfig(ratios=(0.3, 0.3, 0.3, 0.3))


def test_sample_readout_is_deterministic(ensemble):
    a = sample_readout(0.99, ensemble, 1000, 42)
    b = sample_readout(0.99, ensemble, 1000, 42)
    assert a == b
    assert a.shots == 1000
    assert a.estimate == pytest.approx(a.counts / (1000 * ensemble.counts_per_shot))
    with pytest.raises(ValueError):
        sample_readout(0.99, ensemble, 0, 42)


def test_poisson_variance_matches_shot_noise(ensemble):
    shots = 500
    rng = np.random.default_rng(3)
    counts, estimates = sample_readout_batch(0.985, ensemble, shots, 20_000, rng)
    assert float(np.mean(counts)) == pytest.approx(expected_counts(0.985, ensemble, shots), rel=1e-3)
    assert float(np.std(estimates, ddof=1)) == pytest.approx(
        shot_noise_std(0.985, ensemble, shots), rel=0.03
    )


def test_noise_scales_as_inverse_root_time(ensemble):
    series = noise_vs_integration_time(ensemble, TIMES, 0.985, 2000, seed=5)
    assert -0.52 <= series.log_log_slope <= -0.48
    for point in series.points:
        assert point.std == pytest.approx(shot_noise_std(0.985, ensemble, point.shots), rel=0.1)


def test_noise_series_independent_of_thread_count(ensemble):
    one = noise_vs_integration_time(ensemble, TIMES, 0.985, 200, seed=9, threads=1)
    many = noise_vs_integration_time(ensemble, TIMES, 0.985, 200, seed=9, threads=4)
    assert one == many


def test_flicker_floor_flattens_long_times():
    config = EnsembleConfig(noise_floor=NoiseFloorConfig(enabled=True, flicker_relative=1e-3))
    series = noise_vs_integration_time(config, TIMES, 0.985, 1000, seed=2)
    assert series.log_log_slope > -0.4
    assert series.points[-1].std == pytest.approx(0.985 * 1e-3, rel=0.15)


def test_noise_series_rejects_bad_grids(ensemble):
    with pytest.raises(ValueError):
        noise_vs_integration_time(ensemble, [1.0, 0.1], 0.985, 10, seed=1)
    with pytest.raises(ValueError):
        noise_vs_integration_time(ensemble, TIMES, 0.985, 1, seed=1)


def test_derived_streams_are_reproducible_and_distinct():
    a = derive_rng(7, "echo", 0).integers(0, 2**32, size=4)
    b = derive_rng(7, "echo", 0).integers(0, 2**32, size=4)
    c = derive_rng(7, "echo", 1).integers(0, 2**32, size=4)
    d = derive_rng(7, "odmr", 0).integers(0, 2**32, size=4)
    assert list(a) == list(b)
    assert list(a) != list(c)
    assert list(a) != list(d)
    assert derive_seed(7, "echo", 3).spawn_key[-1] == 3


def test_parallel_map_preserves_order():
    assert parallel_map(lambda x: x * x, range(20), threads=4) == [x * x for x in range(20)]
    assert parallel_map(math.sqrt, [4.0], threads=8) == [2.0]
