"""
Echo signal versus applied AC amplitude, with the central gradient and the
readout noise normalized to one second.
"""

import math
from collections.abc import Sequence

import numpy as np
from scipy.stats import linregress

from nv_multifreq.config import settings
from nv_multifreq.exceptions import ConfigError
from nv_multifreq.experiments.base import Experiment, ExperimentOutput, RunContext
from nv_multifreq.experiments.common import require_seed, sample_points, static_calibration
from nv_multifreq.models.common import COMPONENTS, DriveConfig, EchoConfig, EnsembleConfig, Vector3
from nv_multifreq.models.results import SweepMetadata, SweepResult
from nv_multifreq.models.run import RunConfig
from nv_multifreq.models.sequence import ChannelAssignment, SequenceMode, SequenceProgram
from nv_multifreq.physics.ensemble import ensemble_signal, noise_vs_integration_time
from nv_multifreq.physics.geometry import axis_matrix, best_sign_pattern, project_all
from nv_multifreq.physics.spindynamics import echo_visibility, phase_per_tesla, run_hahn_echo
from nv_multifreq.sequence.builder import build_echo_sequence
from nv_multifreq.sequence.validation import flip_signs
from nv_multifreq.utils.artifacts import noise_to_csv, sweep_to_csv
from nv_multifreq.utils.logger import log_sweep, logger
from nv_multifreq.utils.parallel import parallel_map


class EchoReadout:
    """Which axes a program drives, their readout signs and the readout offset."""

    def __init__(self, driven: tuple[int, ...], signs: tuple[int, int, int, int], offset_rad: float):
        self.driven = driven
        self.signs = signs
        self.offset_rad = offset_rad

    @classmethod
    def from_program(
        cls, program: SequenceProgram, assignment: ChannelAssignment | None = None
    ) -> "EchoReadout":
        readout = program.readout_phases()
        axis_of = assignment.axis_for_channel if assignment else (lambda ch: ch)
        if program.mode.kind == "single_frequency":
            (channel,) = program.channels
            return cls((axis_of(channel),), (1, 1, 1, 1), readout[channel])
        by_axis = {axis_of(ch): phase for ch, phase in readout.items()}
        return cls((1, 2, 3, 4), flip_signs(program, assignment), by_axis[1])

    @classmethod
    def best_sign(cls, direction: Vector3, offset_rad: float = math.pi / 2) -> "EchoReadout":
        """All four axes driven with s_n = sign(u_n·b̂)."""
        return cls((1, 2, 3, 4), best_sign_pattern(direction), offset_rad)

    def thetas(self) -> list[float]:
        return [self.offset_rad + (math.pi if s == -1 else 0.0) for s in self.signs]


def echo_signal(
    field_t: Sequence[float] | np.ndarray,
    readout: EchoReadout,
    ensemble: EnsembleConfig,
    echo: EchoConfig,
    drive: DriveConfig | None = None,
    numeric: bool = False,
) -> float:
    """Noiseless ensemble PL after one echo; undriven axes stay bright."""
    projections = project_all(field_t)
    driven = list(readout.driven)
    populations = run_hahn_echo(
        [float(projections[n - 1]) for n in driven],
        echo,
        ensemble.gyromagnetic_ratio_hz_per_t,
        [readout.signs[n - 1] for n in driven],
        ensemble.t2_s,
        ensemble.stretch,
        [ensemble.pulse_fidelity[n - 1] for n in driven],
        drive=drive,
        numeric=numeric,
        readout_offset_rad=readout.offset_rad,
    )
    full = [1.0, 1.0, 1.0, 1.0]
    for n, p in zip(driven, populations):
        full[n - 1] = p
    return ensemble_signal(full, ensemble)


def gradient_matrix_row(
    readout: EchoReadout, ensemble: EnsembleConfig, echo: EchoConfig
) -> np.ndarray:
    """Analytic dS/dB (per tesla, Cartesian) at zero field for one readout."""
    kappa = phase_per_tesla(echo, ensemble.gyromagnetic_ratio_hz_per_t)
    axes = axis_matrix()
    thetas = readout.thetas()
    row = np.zeros(3)
    for n in readout.driven:
        v = echo_visibility(echo.tau_s, ensemble.t2_s, ensemble.stretch, ensemble.pulse_fidelity[n - 1])
        weight = ensemble.ratios[n - 1] * ensemble.contrast * 0.5 * v * math.sin(thetas[n - 1])
        row += weight * kappa * axes[n - 1]
    return row


def model_gradient(
    readout: EchoReadout, ensemble: EnsembleConfig, echo: EchoConfig, direction: Vector3
) -> float:
    """Analytic dS/dB along a unit direction at zero amplitude."""
    return float(gradient_matrix_row(readout, ensemble, echo) @ np.asarray(direction, dtype=float))


def _unit(direction: Sequence[float]) -> Vector3:
    v = np.asarray(direction, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("field direction must be non-zero")
    x, y, z = (float(c) for c in v / norm)
    return (x, y, z)


def _windowed_fit(grid: np.ndarray, mean: np.ndarray, fraction: float) -> tuple[float, float, np.ndarray]:
    limit = fraction * float(np.max(np.abs(grid)))
    window = np.abs(grid) <= limit * (1.0 + 1e-12)
    if int(window.sum()) < 3:
        raise ValueError(
            f"gradient window |B| <= {limit:.3e} T holds fewer than three sweep points"
        )
    fit = linregress(grid[window], mean[window])
    return float(fit.slope), float(fit.stderr), window


def sweep_readout(
    readout: EchoReadout,
    label: str,
    mode: str,
    ensemble: EnsembleConfig,
    echo: EchoConfig,
    direction: Sequence[float],
    amplitudes_t: Sequence[float],
    time_per_point_s: float = 1.0,
    repetitions: int = 200,
    seed: int | None = None,
    threads: int = 1,
    drive: DriveConfig | None = None,
    numeric: bool = False,
    window_fraction: float | None = None,
    config_hash: str | None = None,
    axis: int | None = None,
    component: str | None = None,
) -> SweepResult:
    """Amplitude sweep for an explicit readout; see ``echo_amplitude_sweep``."""
    grid = [float(a) for a in amplitudes_t]
    if 0.0 not in grid:
        raise ValueError("amplitude grid must include 0")
    b_hat = _unit(direction)
    fraction = settings.gradient_window_fraction if window_fraction is None else window_fraction

    signals = parallel_map(
        lambda a: echo_signal(np.asarray(b_hat) * a, readout, ensemble, echo, drive, numeric),
        grid,
        threads,
    )
    p1, p2, p3, p4 = (float(p) for p in project_all(b_hat))
    metadata = SweepMetadata(
        label=label,
        mode=mode,
        axis=axis,
        component=component,  # type: ignore[arg-type]
        direction=b_hat,
        projections=(p1, p2, p3, p4),
        integration_time_s=time_per_point_s,
        repetitions=repetitions if seed is not None else None,
        seed=seed,
        config_hash=config_hash,
    )
    sweep = sample_points(
        "echo", grid, signals, ensemble, time_per_point_s, metadata, seed, f"echo-{label}",
        threads, repetitions if seed is not None else 1,
    )

    g = np.asarray(sweep.grid)
    mean = np.asarray(sweep.mean)
    std = np.asarray(sweep.stddev)
    slope, slope_err, window = _windowed_fit(g, mean, fraction)
    pooled = float(np.sqrt(np.mean(std[window] ** 2)))
    noise_1s = pooled * math.sqrt(time_per_point_s)
    if seed is not None and repetitions > 1:
        noise_err = noise_1s / math.sqrt(2.0 * int(window.sum()) * (repetitions - 1))
    else:
        noise_err = 0.0
    sweep = sweep.model_copy(
        update={
            "gradient": slope,
            "gradient_stderr": slope_err,
            "model_gradient": model_gradient(readout, ensemble, echo, b_hat),
            "noise_1s": noise_1s,
            "noise_1s_stderr": noise_err,
        }
    )
    log_sweep(sweep)
    return sweep


def echo_amplitude_sweep(
    ensemble: EnsembleConfig,
    echo: EchoConfig,
    program: SequenceProgram,
    direction: Sequence[float],
    amplitudes_t: Sequence[float],
    time_per_point_s: float = 1.0,
    repetitions: int = 200,
    seed: int | None = None,
    threads: int = 1,
    assignment: ChannelAssignment | None = None,
    drive: DriveConfig | None = None,
    numeric: bool = False,
    window_fraction: float | None = None,
    config_hash: str | None = None,
) -> SweepResult:
    """
    Ensemble echo signal as the AC amplitude along ``direction`` is swept.

    Each point projects the field onto the axes, runs the echo on the axes the
    program drives, aggregates the PL and, when ``seed`` is given, draws
    ``repetitions`` shot-noise readouts of ``time_per_point_s`` each. The
    result carries the gradient dS/dB from a linear fit over the central
    ``window_fraction`` of the amplitude range, the analytic gradient, and
    the pooled readout noise of the window normalized to 1 s.

    Without a seed the sweep is noiseless and its stddev column holds the
    theoretical shot noise.
    """
    readout = EchoReadout.from_program(program, assignment)
    mode = program.mode
    if mode.kind == "single_frequency":
        label = f"echo_NV{mode.axis}"
    else:
        label = f"echo_mf_{mode.component}"
    return sweep_readout(
        readout,
        label,
        str(mode),
        ensemble,
        echo,
        direction,
        amplitudes_t,
        time_per_point_s,
        repetitions,
        seed,
        threads,
        drive,
        numeric,
        window_fraction,
        config_hash,
        axis=mode.axis,
        component=mode.component,
    )


def best_sign_sweep(
    ensemble: EnsembleConfig,
    echo: EchoConfig,
    direction: Sequence[float],
    amplitudes_t: Sequence[float],
    readout_offset_rad: float = math.pi / 2,
    **kwargs,
) -> SweepResult:
    """Multi-frequency sweep with the flips that maximize the response along ``direction``."""
    readout = EchoReadout.best_sign(_unit(direction), readout_offset_rad)
    return sweep_readout(
        readout, "echo_mf_best", "multi_frequency:best", ensemble, echo, direction, amplitudes_t, **kwargs
    )


def build_programs(config: RunConfig) -> tuple[ChannelAssignment, dict[str, SequenceProgram]]:
    """The four single-axis and three component programs for a run config."""
    assignment = ChannelAssignment.from_calibration(static_calibration(config))
    drive = config.drive_config()
    offset = config.echo.readout_offset_rad
    programs: dict[str, SequenceProgram] = {}
    for n in range(1, 5):
        programs[f"NV{n}"] = build_echo_sequence(
            SequenceMode.single(n), config.echo.tau_s, drive, assignment, offset
        )
    for k in COMPONENTS:
        programs[k] = build_echo_sequence(
            SequenceMode.multi(k), config.echo.tau_s, drive, assignment, offset
        )
    return assignment, programs


def sweep_kwargs(config: RunConfig, seed: int | None, threads: int, config_hash: str | None) -> dict:
    numeric = not config.echo.ideal_pulses
    return {
        "time_per_point_s": config.sweeps.time_per_point_s,
        "repetitions": config.sweeps.repetitions,
        "seed": seed,
        "threads": threads,
        "drive": config.drive_config() if numeric else None,
        "numeric": numeric,
        "config_hash": config_hash,
    }


class EchoSweepExperiment(Experiment):
    """Amplitude sweeps for selected programs plus the δP-versus-time series."""

    @property
    def name(self) -> str:
        return "echo-sweep"

    def run(self, config: RunConfig, context: RunContext) -> ExperimentOutput:
        seed = require_seed(context.seed, self.name)
        assignment, programs = build_programs(config)
        selected = context.options.get("modes", "")
        names = [m.strip() for m in selected.split(",") if m.strip()] or list(programs)
        unknown = [m for m in names if m not in programs]
        if unknown:
            raise ConfigError(f"unknown program(s) {unknown}; choose from {list(programs)}")

        echo = config.echo_config()
        kwargs = sweep_kwargs(config, seed, context.threads, context.config_hash)
        files: dict[str, str] = {}
        summary = ["program           dS/dB (1/T)            dP(1 s)"]
        for name in names:
            program = programs[name]
            direction = (
                config.field.unit_direction()
                if program.mode.kind == "single_frequency"
                else tuple(1.0 if c == program.mode.component else 0.0 for c in COMPONENTS)
            )
            sweep = echo_amplitude_sweep(
                config.ensemble, echo, program, direction, config.sweeps.amplitude_grid(),
                assignment=assignment, **kwargs,
            )
            files[f"{sweep.metadata.label}.csv"] = sweep_to_csv(sweep)
            summary.append(
                f"{str(program.mode):<18}{sweep.gradient:.6e} ± {sweep.gradient_stderr:.1e}  "
                f"{sweep.noise_1s:.4e}"
            )

        quadrature = EchoReadout((1, 2, 3, 4), (1, 1, 1, 1), config.echo.readout_offset_rad)
        baseline = echo_signal((0.0, 0.0, 0.0), quadrature, config.ensemble, echo)
        series = noise_vs_integration_time(
            config.ensemble,
            config.sweeps.noise_times_s,
            baseline,
            config.sweeps.noise_repetitions,
            seed,
            context.threads,
        )
        files["noise.csv"] = noise_to_csv(series)
        summary.append(f"dP vs T log-log slope: {series.log_log_slope:.4f}")
        logger.info(f"Noise scaling slope {series.log_log_slope:.4f} over {len(series.points)} times")
        return ExperimentOutput(files=files, summary=summary)
