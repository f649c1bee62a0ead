"""Continuous-wave ODMR spectrum and multi-Lorentzian dip fitting."""

from collections.abc import Sequence

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import find_peaks

from nv_multifreq.exceptions import FitDiverged
from nv_multifreq.experiments.base import Experiment, ExperimentOutput, RunContext
from nv_multifreq.experiments.common import sample_points, static_calibration
from nv_multifreq.models.common import EnsembleConfig, StaticFieldCalibration
from nv_multifreq.models.results import OdmrResonance, OdmrResult, SweepMetadata, SweepResult
from nv_multifreq.models.run import RunConfig
from nv_multifreq.physics.geometry import resonance_frequencies
from nv_multifreq.utils.artifacts import sweep_to_csv
from nv_multifreq.utils.logger import log_sweep, logger

MHZ = 1e6
DIP_NOISE_SIGMAS = 5.0
DIP_RELATIVE_DEPTH = 0.2


def odmr_signal(
    frequencies_hz: Sequence[float] | np.ndarray,
    ensemble: EnsembleConfig,
    calibration: StaticFieldCalibration,
    saturation: float = 1.0,
) -> np.ndarray:
    """
    Noiseless PL spectrum: eight Lorentzian dips, two per axis.

    Each dip has depth ρ_n·C·s/(1+s)/2 and the power-broadened full width
    linewidth·√(1+s), where s is the drive saturation parameter.
    """
    if saturation <= 0:
        raise ValueError("saturation parameter must be positive")
    f = np.asarray(frequencies_hz, dtype=float)
    lines = resonance_frequencies(
        calibration.field_t,
        calibration.zero_field_splitting_hz,
        calibration.gyromagnetic_ratio_hz_per_t,
    )
    half_width = ensemble.linewidth_hz * np.sqrt(1.0 + saturation) / 2.0
    depth_scale = ensemble.contrast * saturation / (1.0 + saturation) / 2.0
    signal = np.ones_like(f)
    for rho, pair in zip(ensemble.ratios, lines):
        for f0 in pair:
            signal -= rho * depth_scale * half_width**2 / ((f - f0) ** 2 + half_width**2)
    return signal


def simulate_odmr(
    ensemble: EnsembleConfig,
    calibration: StaticFieldCalibration,
    frequencies_hz: Sequence[float],
    saturation: float = 1.0,
    time_per_point_s: float = 1.0,
    seed: int | None = None,
    threads: int = 1,
    config_hash: str | None = None,
) -> SweepResult:
    """
    Simulated ODMR sweep with shot noise per frequency point.

    Raises:
        ValueError: The grid does not span every resonance.
    """
    grid = list(frequencies_hz)
    lines = resonance_frequencies(
        calibration.field_t,
        calibration.zero_field_splitting_hz,
        calibration.gyromagnetic_ratio_hz_per_t,
    )
    lo = min(p[0] for p in lines)
    hi = max(p[1] for p in lines)
    if not grid or grid[0] > lo or grid[-1] < hi:
        raise ValueError(
            f"frequency grid must span all resonances [{lo / 1e9:.6f}, {hi / 1e9:.6f}] GHz"
        )
    signals = odmr_signal(grid, ensemble, calibration, saturation)
    metadata = SweepMetadata(
        label="odmr",
        mode="cw",
        integration_time_s=time_per_point_s,
        seed=seed,
        config_hash=config_hash,
    )
    sweep = sample_points(
        "odmr", grid, [float(s) for s in signals], ensemble, time_per_point_s, metadata,
        seed, "odmr", threads,
    )
    log_sweep(sweep)
    return sweep


def _multi_lorentzian(x: np.ndarray, baseline: float, *params: float) -> np.ndarray:
    y = np.full_like(x, baseline)
    for f0, depth, width in zip(params[0::3], params[1::3], params[2::3]):
        hw = width / 2.0
        y -= depth * hw**2 / ((x - f0) ** 2 + hw**2)
    return y


def fit_odmr_resonances(
    sweep: SweepResult, linewidth_hz: float, max_resonances: int = 8
) -> list[OdmrResonance]:
    """
    Locate dips with peak finding, then refine all of them jointly with a
    multi-Lorentzian least-squares fit.

    Returns:
        Fitted resonances ascending in frequency.

    Raises:
        FitDiverged: No dip found or the fit did not converge.
    """
    f = np.asarray(sweep.grid, dtype=float)
    y = np.asarray(sweep.mean, dtype=float)
    sigma = np.asarray(sweep.stddev, dtype=float)
    dips = 1.0 - y
    step = float(np.median(np.diff(f)))
    prominence = max(
        DIP_NOISE_SIGMAS * float(np.median(sigma)), DIP_RELATIVE_DEPTH * float(dips.max())
    )
    peaks, props = find_peaks(
        dips, prominence=prominence, distance=max(1, int(linewidth_hz / 2.0 / step))
    )
    if len(peaks) == 0:
        raise FitDiverged("no ODMR dip above the noise")
    strongest = np.argsort(props["prominences"])[::-1][:max_resonances]
    peaks = np.sort(peaks[strongest])

    # Fit in MHz relative to the grid centre to keep parameters of order one
    center = float(f.mean())
    x = (f - center) / MHZ
    p0: list[float] = [1.0]
    for p in peaks:
        p0 += [float(x[p]), float(dips[p]), linewidth_hz / MHZ]
    lower = [-np.inf] + [x[0], 0.0, 1e-6] * len(peaks)
    upper = [np.inf] + [x[-1], np.inf, np.inf] * len(peaks)
    try:
        popt, _ = curve_fit(
            _multi_lorentzian,
            x,
            y,
            p0=p0,
            sigma=np.where(sigma > 0, sigma, 1.0),
            bounds=(lower, upper),
            maxfev=20000,
        )
    except (RuntimeError, ValueError) as e:
        raise FitDiverged(f"ODMR fit failed: {e}") from None

    resonances = [
        OdmrResonance(
            frequency_hz=center + float(f0) * MHZ,
            depth=float(depth),
            width_hz=float(width) * MHZ,
        )
        for f0, depth, width in zip(popt[1::3], popt[2::3], popt[3::3])
    ]
    return sorted(resonances, key=lambda r: r.frequency_hz)


def run_odmr(
    config: RunConfig, seed: int | None, threads: int = 1, config_hash: str | None = None
) -> OdmrResult:
    calibration = static_calibration(config)
    sw = config.sweeps
    sweep = simulate_odmr(
        config.ensemble,
        calibration,
        sw.odmr_grid(),
        sw.odmr_saturation,
        sw.odmr_time_per_point_s,
        seed,
        threads,
        config_hash,
    )
    resonances = fit_odmr_resonances(sweep, config.ensemble.linewidth_hz)
    logger.info(f"ODMR: {len(resonances)} resonances fitted")
    return OdmrResult(sweep=sweep, resonances=resonances)


class OdmrExperiment(Experiment):
    """CW ODMR spectrum of the four-axis ensemble."""

    @property
    def name(self) -> str:
        return "odmr"

    needs_seed = False

    def run(self, config: RunConfig, context: RunContext) -> ExperimentOutput:
        result = run_odmr(config, context.seed, context.threads, context.config_hash)
        summary = [f"{len(result.resonances)} resonances (GHz):"]
        summary += [
            f"  {r.frequency_hz / 1e9:.6f}  depth={r.depth:.3e}  width={r.width_hz / MHZ:.3f} MHz"
            for r in result.resonances
        ]
        return ExperimentOutput(files={"odmr.csv": sweep_to_csv(result.sweep)}, summary=summary)
