"""
Photoluminescence aggregation over the four axis sub-ensembles and the
photon shot-noise readout model.

δP is defined as the standard deviation of the estimate returned by
``sample_readout``.
"""

import math
from collections.abc import Sequence

import numpy as np

from nv_multifreq.models.common import EnsembleConfig
from nv_multifreq.models.results import NoisePoint, NoiseSeries, ReadoutSample
from nv_multifreq.utils.parallel import derive_rng, parallel_map


def ensemble_signal(populations: Sequence[float], config: EnsembleConfig) -> float:
    """
    Normalized PL S = Σ_n ρ_n [(1 − C) + C·P_n].

    Undriven axes are passed as P_n = 1 (bright). S lies in [1 − C, 1].
    """
    if len(populations) != 4:
        raise ValueError("four per-axis populations are required")
    if any(not 0.0 <= p <= 1.0 for p in populations):
        raise ValueError("populations must lie in [0, 1]")
    c = config.contrast
    return float(sum(r * ((1.0 - c) + c * p) for r, p in zip(config.ratios, populations)))


def expected_counts(mean_signal: float, config: EnsembleConfig, shots: int) -> float:
    return shots * config.counts_per_shot * mean_signal


def shot_noise_std(mean_signal: float, config: EnsembleConfig, shots: int) -> float:
    """Poisson standard deviation of the normalized estimate."""
    norm = shots * config.counts_per_shot
    return math.sqrt(mean_signal * norm) / norm


def _draw(
    mean_signal: float,
    config: EnsembleConfig,
    shots: int,
    rng: np.random.Generator,
    size: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    norm = shots * config.counts_per_shot
    counts = rng.poisson(norm * mean_signal, size=size)
    estimate = counts / norm
    floor = config.noise_floor
    if floor.enabled:
        # White intensity noise averages down with shots; flicker does not
        sigma = math.hypot(floor.white_relative / math.sqrt(shots), floor.flicker_relative)
        estimate = estimate * (1.0 + rng.normal(0.0, sigma, size=size))
    return np.asarray(counts), np.asarray(estimate)


def sample_readout(
    mean_signal: float, config: EnsembleConfig, shots: int, rng_seed: int | np.random.SeedSequence
) -> ReadoutSample:
    """
    Draw Poisson photon counts for ``shots`` repetitions and normalize.

    Deterministic for a fixed seed.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    rng = np.random.default_rng(rng_seed)
    counts, estimate = _draw(mean_signal, config, shots, rng)
    return ReadoutSample(
        mean_signal=mean_signal,
        counts=int(counts),
        estimate=float(estimate),
        shots=shots,
    )


def sample_readout_batch(
    mean_signal: float,
    config: EnsembleConfig,
    shots: int,
    repetitions: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized repeated readouts from one generator: (counts, estimates)."""
    return _draw(mean_signal, config, shots, rng, size=repetitions)


def _noise_point(
    task: tuple[int, float], mean_signal: float, config: EnsembleConfig, repetitions: int, seed: int
) -> NoisePoint:
    index, time_s = task
    shots = config.shots_for(time_s)
    rng = derive_rng(seed, "noise", index)
    _, estimates = sample_readout_batch(mean_signal, config, shots, repetitions, rng)
    std = float(np.std(estimates, ddof=1))
    return NoisePoint(
        integration_time_s=time_s,
        shots=shots,
        std=std,
        std_error=std / math.sqrt(2.0 * (repetitions - 1)),
    )


def noise_vs_integration_time(
    config: EnsembleConfig,
    times_s: Sequence[float],
    mean_signal: float,
    repetitions: int,
    seed: int,
    threads: int = 1,
) -> NoiseSeries:
    """
    Monte Carlo δP at each integration time (shots ∝ T) with a log–log slope fit.

    Each time point is an independent task with a seed derived from
    (seed, index); results do not depend on ``threads``.
    """
    times = list(times_s)
    if any(t <= 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("integration times must be positive and strictly ascending")
    if repetitions < 2:
        raise ValueError("at least two repetitions are required")

    points = parallel_map(
        lambda task: _noise_point(task, mean_signal, config, repetitions, seed),
        list(enumerate(times)),
        threads,
    )
    slope = float("nan")
    if len(points) >= 2:
        slope, _ = np.polyfit(
            np.log([p.integration_time_s for p in points]), np.log([p.std for p in points]), 1
        )
    return NoiseSeries(
        mean_signal=mean_signal,
        points=points,
        log_log_slope=float(slope),
        seed=seed,
    )
