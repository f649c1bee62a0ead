"""Helpers shared by the experiment runners."""

import numpy as np

from nv_multifreq.exceptions import ConfigError
from nv_multifreq.models.common import EnsembleConfig, StaticFieldCalibration
from nv_multifreq.models.results import SweepMetadata, SweepResult
from nv_multifreq.models.run import RunConfig
from nv_multifreq.physics.ensemble import expected_counts, sample_readout_batch, shot_noise_std
from nv_multifreq.physics.geometry import calibrate_static_field, resonance_frequencies
from nv_multifreq.utils.parallel import derive_rng, parallel_map


def static_calibration(config: RunConfig) -> StaticFieldCalibration:
    """Bias field from the config: given directly, or calibrated from resonances."""
    ens = config.ensemble
    sf = config.static_field
    if sf.measured_frequencies_hz is not None:
        return calibrate_static_field(
            sf.measured_frequencies_hz,
            ens.zero_field_splitting_hz,
            ens.gyromagnetic_ratio_hz_per_t,
            branch=sf.branch,
            fit_splitting=sf.fit_splitting,
        )
    field = sf.vector_t
    assert field is not None
    branch = sf.branch or "lower"
    pick = 0 if branch == "lower" else 1
    resonances = resonance_frequencies(
        field, ens.zero_field_splitting_hz, ens.gyromagnetic_ratio_hz_per_t
    )
    a, b, c, d = (pair[pick] for pair in resonances)
    return StaticFieldCalibration(
        field_t=field,
        frequencies_hz=(a, b, c, d),
        zero_field_splitting_hz=ens.zero_field_splitting_hz,
        gyromagnetic_ratio_hz_per_t=ens.gyromagnetic_ratio_hz_per_t,
        branch=branch,
    )


def require_seed(seed: int | None, command: str) -> int:
    if seed is None:
        raise ConfigError(f"'{command}' is a Monte Carlo command and needs a seed (--seed or config)")
    return seed


def sample_points(
    kind: str,
    grid: list[float],
    signals: list[float],
    ensemble: EnsembleConfig,
    time_per_point_s: float,
    metadata: SweepMetadata,
    seed: int | None,
    stream: str,
    threads: int = 1,
    repetitions: int = 1,
) -> SweepResult:
    """
    Attach shot noise to noiseless signals, one task per grid point.

    With ``seed`` None the noiseless signal is reported together with its
    theoretical shot-noise standard deviation. With one repetition the
    stddev column holds the theoretical value; otherwise it is the sample
    standard deviation over repetitions and the mean is their average.
    """
    shots = ensemble.shots_for(time_per_point_s)

    def point(task: tuple[int, float]) -> tuple[float, float, int]:
        index, signal = task
        sigma = shot_noise_std(signal, ensemble, shots)
        if seed is None:
            return signal, sigma, int(round(expected_counts(signal, ensemble, shots)))
        rng = derive_rng(seed, stream, index)
        counts, estimates = sample_readout_batch(signal, ensemble, shots, repetitions, rng)
        std = float(np.std(estimates, ddof=1)) if repetitions > 1 else sigma
        return float(np.mean(estimates)), std, int(np.sum(counts))

    rows = parallel_map(point, list(enumerate(signals)), threads)
    return SweepResult(
        kind=kind,  # type: ignore[arg-type]
        grid=list(grid),
        mean=[r[0] for r in rows],
        stddev=[r[1] for r in rows],
        counts=[r[2] for r in rows],
        metadata=metadata,
    )
