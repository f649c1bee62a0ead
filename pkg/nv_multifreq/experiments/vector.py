"""
Vector field estimation with the conventional four-axis scheme and with
multi-frequency component readout.
"""

import math
from typing import Literal

import numpy as np
from scipy.optimize import least_squares

from nv_multifreq.config import settings
from nv_multifreq.exceptions import AmbiguousSign, LinearWindowExceeded
from nv_multifreq.experiments.base import Experiment, ExperimentOutput, RunContext
from nv_multifreq.experiments.common import require_seed
from nv_multifreq.experiments.echo import (
    EchoReadout,
    build_programs,
    echo_signal,
    gradient_matrix_row,
    sweep_readout,
)
from nv_multifreq.models.common import COMPONENTS, EchoConfig, EnsembleConfig, Vector3
from nv_multifreq.models.results import VectorEstimate
from nv_multifreq.models.run import RunConfig
from nv_multifreq.models.sequence import ChannelAssignment, SequenceProgram
from nv_multifreq.physics.ensemble import sample_readout, shot_noise_std
from nv_multifreq.physics.geometry import axis_matrix, project_all
from nv_multifreq.physics.spindynamics import echo_visibility, phase_per_tesla
from nv_multifreq.utils.artifacts import to_json
from nv_multifreq.utils.logger import log_vector
from nv_multifreq.utils.parallel import derive_seed

Scheme = Literal["conventional", "multi_frequency"]
Calibration = Literal["config", "sweep"]


def angular_error_deg(a: Vector3 | np.ndarray, b: Vector3 | np.ndarray) -> float:
    """Angle between two vectors in degrees."""
    u = np.asarray(a, dtype=float)
    v = np.asarray(b, dtype=float)
    return math.degrees(math.atan2(float(np.linalg.norm(np.cross(u, v))), float(np.dot(u, v))))


def _check_linear_window(field_t: np.ndarray, ensemble: EnsembleConfig, echo: EchoConfig) -> None:
    kappa = phase_per_tesla(echo, ensemble.gyromagnetic_ratio_hz_per_t)
    phases = np.abs(kappa * project_all(field_t))
    worst = float(phases.max())
    if worst > settings.linear_window_rad:
        raise LinearWindowExceeded(worst, settings.linear_window_rad)


def _measure(
    signal: float, ensemble: EnsembleConfig, shots: int, seed: int | None, stream: str, index: int
) -> tuple[float, float]:
    """Readout estimate and its shot-noise σ; noiseless when seed is None."""
    sigma = shot_noise_std(signal, ensemble, shots)
    if seed is None:
        return signal, sigma
    sample = sample_readout(signal, ensemble, shots, derive_seed(seed, stream, index))
    return sample.estimate, sigma


def _finish(
    scheme: Scheme, responses: list[float], field: np.ndarray, covariance: np.ndarray
) -> VectorEstimate:
    amplitude = float(np.linalg.norm(field))
    direction = field / amplitude if amplitude > 0 else np.array([0.0, 0.0, 1.0])
    sigma = float(np.sqrt(max(direction @ covariance @ direction, 0.0)))
    if amplitude < 3.0 * sigma:
        raise AmbiguousSign(amplitude, sigma)
    x, y, z = (float(c) for c in direction)
    fx, fy, fz = (float(c) for c in field)
    estimate = VectorEstimate(
        scheme=scheme,
        responses=responses,
        field_t=(fx, fy, fz),
        direction=(x, y, z),
        amplitude_t=amplitude,
        covariance=covariance.tolist(),
    )
    log_vector(scheme, estimate)
    return estimate


def estimate_conventional(
    ensemble: EnsembleConfig,
    echo: EchoConfig,
    field_t: Vector3,
    programs: dict[str, SequenceProgram],
    assignment: ChannelAssignment | None,
    measurement_time_s: float,
    seed: int | None,
) -> VectorEstimate:
    """
    Four single-axis echoes, each inverted to its projection u_n·B, then
    the overdetermined system solved by least squares.
    """
    kappa = phase_per_tesla(echo, ensemble.gyromagnetic_ratio_hz_per_t)
    shots = ensemble.shots_for(measurement_time_s)
    c = ensemble.contrast
    projections: list[float] = []
    sigmas: list[float] = []
    populations: list[float] = []
    for n in range(1, 5):
        readout = EchoReadout.from_program(programs[f"NV{n}"], assignment)
        signal = echo_signal(field_t, readout, ensemble, echo)
        measured, sigma_s = _measure(signal, ensemble, shots, seed, "vector-conventional", n)

        rho = ensemble.ratios[n - 1]
        v = echo_visibility(echo.tau_s, ensemble.t2_s, ensemble.stretch, ensemble.pulse_fidelity[n - 1])
        theta = readout.thetas()[n - 1]
        population = 1.0 - (1.0 - measured) / (rho * c)
        x = max(-1.0, min(1.0, (2.0 * population - 1.0) / v))
        # cos(φ − θ) = x, taking the branch continuous through φ = 0
        phase = theta - math.acos(x)
        slope = 0.5 * rho * c * v * abs(math.sin(phase - theta)) * kappa
        projections.append(phase / kappa)
        sigmas.append(sigma_s / slope if slope > 0 else math.inf)
        populations.append(population)

    n_mat = axis_matrix()
    pinv = np.linalg.pinv(n_mat)
    field = pinv @ np.asarray(projections)
    covariance = pinv @ np.diag(np.square(sigmas)) @ pinv.T
    return _finish("conventional", populations, field, covariance)


def response_matrix(
    ensemble: EnsembleConfig,
    echo: EchoConfig,
    readouts: list[EchoReadout],
    calibration: Calibration = "config",
    amplitude_t: float = 1e-8,
) -> np.ndarray:
    """
    3×3 matrix J[k, j] = dS_k/dB_j at zero field.

    "config" evaluates it from the known γ, τ, visibilities and ratios;
    "sweep" measures each entry as the central gradient of a noiseless
    amplitude sweep along e_j.
    """
    if calibration == "config":
        return np.vstack([gradient_matrix_row(r, ensemble, echo) for r in readouts])
    grid = [amplitude_t * k for k in range(-2, 3)]
    j = np.zeros((3, 3))
    for k, readout in enumerate(readouts):
        for col, comp in enumerate(COMPONENTS):
            e_j = tuple(1.0 if c == comp else 0.0 for c in COMPONENTS)
            sweep = sweep_readout(
                readout, f"calibration_{COMPONENTS[k]}_{comp}", "calibration", ensemble, echo,
                e_j, grid, window_fraction=1.0,
            )
            j[k, col] = sweep.gradient
    return j


def estimate_multi_frequency(
    ensemble: EnsembleConfig,
    echo: EchoConfig,
    field_t: Vector3,
    programs: dict[str, SequenceProgram],
    assignment: ChannelAssignment | None,
    measurement_time_s: float,
    seed: int | None,
    calibration: Calibration = "config",
) -> VectorEstimate:
    """
    Three component programs read out simultaneously on all axes.

    The responses are inverted through the response matrix; with
    ``calibration="config"`` the linear solution is then refined by
    nonlinear least squares on the full echo model, which makes noiseless
    recovery exact.
    """
    shots = ensemble.shots_for(measurement_time_s)
    readouts = [EchoReadout.from_program(programs[k], assignment) for k in COMPONENTS]
    zero = np.array([echo_signal((0.0, 0.0, 0.0), r, ensemble, echo) for r in readouts])
    measured = np.zeros(3)
    sigmas = np.zeros(3)
    for k, readout in enumerate(readouts):
        signal = echo_signal(field_t, readout, ensemble, echo)
        measured[k], sigmas[k] = _measure(signal, ensemble, shots, seed, "vector-multi", k)

    jac = response_matrix(ensemble, echo, readouts, calibration)
    field = np.linalg.solve(jac, measured - zero)

    if calibration == "config":
        kappa = phase_per_tesla(echo, ensemble.gyromagnetic_ratio_hz_per_t)

        # Unknowns are echo phases (rad) so the solver works at unit scale
        def residual(x: np.ndarray) -> np.ndarray:
            b = x / kappa
            model = np.array([echo_signal(b, r, ensemble, echo) for r in readouts])
            return (model - measured) / sigmas

        fit = least_squares(residual, field * kappa, xtol=1e-14, ftol=1e-14, gtol=1e-14, method="lm")
        field = fit.x / kappa
        jac = np.vstack([_numeric_row(r, field, ensemble, echo, kappa) for r in readouts])

    inv = np.linalg.inv(jac)
    covariance = inv @ np.diag(np.square(sigmas)) @ inv.T
    responses = [float(r) for r in (measured - zero) / (0.5 * ensemble.contrast)]
    return _finish("multi_frequency", responses, field, covariance)


def _numeric_row(
    readout: EchoReadout, field: np.ndarray, ensemble: EnsembleConfig, echo: EchoConfig, kappa: float
) -> np.ndarray:
    """Central-difference dS/dB at the estimated field."""
    h = 1e-4 / kappa
    row = np.zeros(3)
    for j in range(3):
        step = np.zeros(3)
        step[j] = h
        row[j] = (
            echo_signal(field + step, readout, ensemble, echo)
            - echo_signal(field - step, readout, ensemble, echo)
        ) / (2.0 * h)
    return row


def estimate_vector(
    ensemble: EnsembleConfig,
    echo: EchoConfig,
    field_t: Vector3,
    scheme: Scheme,
    programs: dict[str, SequenceProgram],
    assignment: ChannelAssignment | None = None,
    measurement_time_s: float = 1.0,
    seed: int | None = None,
    calibration: Calibration = "config",
) -> VectorEstimate:
    """
    Estimate a field vector with one scheme.

    Each program is measured for ``measurement_time_s``; without a seed the
    readout is noiseless and the covariance still reflects shot noise.

    Raises:
        LinearWindowExceeded: Some axis phase exceeds the linear window.
        AmbiguousSign: Amplitude within 3σ of zero.
    """
    field = np.asarray(field_t, dtype=float)
    _check_linear_window(field, ensemble, echo)
    x, y, z = (float(c) for c in field)
    if scheme == "conventional":
        return estimate_conventional(
            ensemble, echo, (x, y, z), programs, assignment, measurement_time_s, seed
        )
    if scheme == "multi_frequency":
        return estimate_multi_frequency(
            ensemble, echo, (x, y, z), programs, assignment, measurement_time_s, seed, calibration
        )
    raise ValueError(f"unknown scheme '{scheme}'")


def run_vector(config: RunConfig, seed: int | None) -> dict[str, VectorEstimate]:
    """Estimate the configured field with both schemes."""
    assignment, programs = build_programs(config)
    echo = config.echo_config()
    truth = config.field.vector_t()
    return {
        scheme: estimate_vector(
            config.ensemble,
            echo,
            truth,
            scheme,  # type: ignore[arg-type]
            programs,
            assignment,
            config.measurement_time_s,
            seed,
            config.calibration,
        )
        for scheme in ("conventional", "multi_frequency")
    }


class VectorExperiment(Experiment):
    """Field vector from both schemes, compared with the configured truth."""

    @property
    def name(self) -> str:
        return "vector"

    def run(self, config: RunConfig, context: RunContext) -> ExperimentOutput:
        seed = require_seed(context.seed, self.name)
        estimates = run_vector(config, seed)
        truth = config.field.unit_direction()
        payload: dict = {"truth_direction": list(truth), "truth_amplitude_t": config.field.amplitude_t}
        summary = ["scheme            direction                      angular error"]
        for scheme, est in estimates.items():
            err = angular_error_deg(est.direction, truth)
            payload[scheme] = {**est.model_dump(mode="json"), "angular_error_deg": err}
            d = est.direction
            summary.append(f"{scheme:<17} ({d[0]:+.4f}, {d[1]:+.4f}, {d[2]:+.4f})  {err:.3f}°")
        between = angular_error_deg(
            estimates["conventional"].direction, estimates["multi_frequency"].direction
        )
        payload["scheme_disagreement_deg"] = between
        summary.append(f"schemes differ by {between:.3f}°")
        files = {"vector.json": to_json(payload, context.config_hash, seed)}
        return ExperimentOutput(files=files, summary=summary)
