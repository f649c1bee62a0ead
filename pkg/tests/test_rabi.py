import pytest

from nv_multifreq.experiments.rabi import simulate_rabi
from nv_multifreq.models.common import EnsembleConfig

MEASURED_RATIOS = (0.29, 0.35, 0.21, 0.15)
RABI_HZ = (2.5e6, 2.5e6, 2.5e6, 2.5e6)


def _grid(points: int = 201, max_s: float = 2e-6) -> list[float]:
    return [max_s * i / (points - 1) for i in range(points)]


def test_fitted_ratios_recover_configuration():
    ensemble = EnsembleConfig(ratios=MEASURED_RATIOS)
    result = simulate_rabi(ensemble, _grid(), RABI_HZ, seed=12)
    for got, want in zip(result.ratios, MEASURED_RATIOS):
        assert got == pytest.approx(want, abs=0.02)
    for f in result.rabi_frequencies_hz:
        assert f == pytest.approx(2.5e6, rel=0.01)
    assert sum(result.ratios) == pytest.approx(1.0)
    assert [s.metadata.label for s in result.sweeps] == ["rabi_NV1", "rabi_NV2", "rabi_NV3", "rabi_NV4"]


def test_noiseless_amplitudes_are_ratio_times_contrast():
    ensemble = EnsembleConfig(ratios=MEASURED_RATIOS, contrast=0.03)
    result = simulate_rabi(ensemble, _grid(), RABI_HZ)
    for amplitude, rho in zip(result.amplitudes, MEASURED_RATIOS):
        assert amplitude == pytest.approx(rho * 0.03, rel=1e-4)


def test_pulse_fidelity_reduces_amplitude():
    ensemble = EnsembleConfig(pulse_fidelity=(1.0, 0.5, 1.0, 1.0))
    result = simulate_rabi(ensemble, _grid(), RABI_HZ)
    assert result.amplitudes[1] == pytest.approx(result.amplitudes[0] / 2, rel=1e-4)


def test_different_drive_strengths_per_axis():
    rabi = (2.0e6, 2.5e6, 3.0e6, 3.5e6)
    result = simulate_rabi(EnsembleConfig(), _grid(), rabi, seed=8)
    for got, want in zip(result.rabi_frequencies_hz, rabi):
        assert got == pytest.approx(want, rel=0.01)


def test_grid_must_cover_three_periods():
    with pytest.raises(ValueError):
        simulate_rabi(EnsembleConfig(), _grid(max_s=1e-6), RABI_HZ)
    with pytest.raises(ValueError):
        simulate_rabi(EnsembleConfig(), _grid(points=4), RABI_HZ)


def test_seeded_run_is_deterministic():
    a = simulate_rabi(EnsembleConfig(), _grid(), RABI_HZ, seed=5, threads=1)
    b = simulate_rabi(EnsembleConfig(), _grid(), RABI_HZ, seed=5, threads=3)
    assert a == b
