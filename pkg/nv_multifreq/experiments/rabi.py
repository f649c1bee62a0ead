"""Rabi calibration of the orientation ratios, one axis driven at a time."""

from collections.abc import Sequence

import numpy as np
from scipy.optimize import curve_fit

from nv_multifreq.config import settings
from nv_multifreq.exceptions import FitDiverged
from nv_multifreq.experiments.base import Experiment, ExperimentOutput, RunContext
from nv_multifreq.experiments.common import require_seed, sample_points
from nv_multifreq.models.common import EnsembleConfig, PerAxis
from nv_multifreq.models.results import RabiResult, SweepMetadata, SweepResult
from nv_multifreq.models.run import RunConfig
from nv_multifreq.physics.ensemble import ensemble_signal
from nv_multifreq.physics.spindynamics import rabi_population
from nv_multifreq.utils.artifacts import sweep_to_csv
from nv_multifreq.utils.logger import log_sweep, logger

MIN_PERIODS = 3.0


def _rabi_model(t: np.ndarray, offset: float, amplitude: float, frequency_hz: float) -> np.ndarray:
    return offset - amplitude * np.sin(np.pi * frequency_hz * t) ** 2


def fit_rabi(sweep: SweepResult, rabi_frequency_hz: float) -> tuple[float, float]:
    """
    Fit S(t) = a − A·sin²(πft).

    Returns:
        (A, f) amplitude and fitted Rabi frequency.

    Raises:
        FitDiverged: Non-convergence, non-positive amplitude, or residual RMS
            above ``settings.rabi_fit_rms_threshold`` times A.
    """
    t = np.asarray(sweep.grid, dtype=float)
    y = np.asarray(sweep.mean, dtype=float)
    sigma = np.asarray(sweep.stddev, dtype=float)
    p0 = [float(y.max()), float(y.max() - y.min()), rabi_frequency_hz]
    try:
        popt, _ = curve_fit(
            _rabi_model,
            t,
            y,
            p0=p0,
            sigma=np.where(sigma > 0, sigma, 1.0),
            maxfev=10000,
        )
    except (RuntimeError, ValueError) as e:
        raise FitDiverged(f"Rabi fit failed for {sweep.metadata.label}: {e}") from None
    offset, amplitude, freq = (float(p) for p in popt)
    if amplitude <= 0:
        raise FitDiverged(f"Rabi fit for {sweep.metadata.label} gave amplitude {amplitude:.3e}")
    rms = float(np.sqrt(np.mean((y - _rabi_model(t, offset, amplitude, freq)) ** 2)))
    if rms > settings.rabi_fit_rms_threshold * amplitude:
        raise FitDiverged(
            f"Rabi fit residual RMS {rms:.3e} exceeds {settings.rabi_fit_rms_threshold} x "
            f"amplitude {amplitude:.3e} for {sweep.metadata.label}"
        )
    return amplitude, abs(freq)


def simulate_rabi(
    ensemble: EnsembleConfig,
    durations_s: Sequence[float],
    rabi_frequencies_hz: PerAxis,
    time_per_point_s: float = 0.1,
    seed: int | None = None,
    threads: int = 1,
    config_hash: str | None = None,
) -> RabiResult:
    """
    Drive each axis alone on resonance and fit the PL oscillation.

    The oscillation amplitude of axis n is ρ_n·C·F_n, so the fitted
    amplitudes normalized to unit sum give the orientation ratios (exactly
    so for equal pulse fidelities).

    Raises:
        ValueError: The grid covers fewer than three periods on some axis.
        FitDiverged: A fit fails.
    """
    grid = list(durations_s)
    if len(grid) < 5:
        raise ValueError("at least five durations are required")
    for n, omega in enumerate(rabi_frequencies_hz, start=1):
        if omega <= 0 or grid[-1] * omega < MIN_PERIODS:
            raise ValueError(
                f"duration grid covers {grid[-1] * omega:.2f} Rabi periods on NV{n}; "
                f"at least {MIN_PERIODS:g} are required"
            )

    sweeps: list[SweepResult] = []
    amplitudes: list[float] = []
    frequencies: list[float] = []
    for n, omega in enumerate(rabi_frequencies_hz, start=1):
        signals = []
        for t in grid:
            populations = [1.0, 1.0, 1.0, 1.0]
            # P(|0>) on the driven axis, scaled by its pulse fidelity
            populations[n - 1] = 1.0 - ensemble.pulse_fidelity[n - 1] * rabi_population(t, omega)
            signals.append(ensemble_signal(populations, ensemble))
        metadata = SweepMetadata(
            label=f"rabi_NV{n}",
            mode=f"single_frequency:NV{n}",
            axis=n,
            integration_time_s=time_per_point_s,
            seed=seed,
            config_hash=config_hash,
        )
        sweep = sample_points(
            "rabi", grid, signals, ensemble, time_per_point_s, metadata, seed, f"rabi-NV{n}", threads
        )
        log_sweep(sweep)
        amplitude, freq = fit_rabi(sweep, omega)
        sweeps.append(sweep)
        amplitudes.append(amplitude)
        frequencies.append(freq)

    total = sum(amplitudes)
    a, b, c, d = (x / total for x in amplitudes)
    logger.info(f"Rabi ratios: {a:.4f} / {b:.4f} / {c:.4f} / {d:.4f}")
    return RabiResult(
        sweeps=sweeps,
        amplitudes=tuple(amplitudes),  # type: ignore[arg-type]
        rabi_frequencies_hz=tuple(frequencies),  # type: ignore[arg-type]
        ratios=(a, b, c, d),
    )


class RabiExperiment(Experiment):
    """Per-axis Rabi oscillations and fitted orientation ratios."""

    @property
    def name(self) -> str:
        return "rabi"

    def run(self, config: RunConfig, context: RunContext) -> ExperimentOutput:
        seed = require_seed(context.seed, self.name)
        sw = config.sweeps
        rabi = sw.rabi_frequencies_hz or (config.echo.rabi_frequency_hz,) * 4
        result = simulate_rabi(
            config.ensemble,
            sw.rabi_grid(),
            rabi,  # type: ignore[arg-type]
            sw.rabi_time_per_point_s,
            seed,
            context.threads,
            context.config_hash,
        )
        files = {f"{s.metadata.label}.csv": sweep_to_csv(s) for s in result.sweeps}
        summary = ["axis  ratio     configured  rabi_MHz"]
        summary += [
            f"NV{n}   {r:.4f}    {c:.4f}      {f / 1e6:.4f}"
            for n, (r, c, f) in enumerate(
                zip(result.ratios, config.ensemble.ratios, result.rabi_frequencies_hz), start=1
            )
        ]
        return ExperimentOutput(files=files, summary=summary)
