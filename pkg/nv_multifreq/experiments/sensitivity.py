"""
Field sensitivities of the conventional (one axis at a time) and the
multi-frequency schemes, normalized to a 1 s measurement.
"""

import math
from collections.abc import Mapping, Sequence

import numpy as np

from nv_multifreq.config import settings
from nv_multifreq.exceptions import ConfigError, ZeroGradient
from nv_multifreq.experiments.base import Experiment, ExperimentOutput, RunContext
from nv_multifreq.experiments.common import require_seed
from nv_multifreq.experiments.echo import (
    best_sign_sweep,
    build_programs,
    echo_amplitude_sweep,
    sweep_kwargs,
)
from nv_multifreq.models.common import COMPONENTS, EchoConfig, EnsembleConfig
from nv_multifreq.models.results import (
    AxisSensitivity,
    ComponentSensitivity,
    Estimate,
    SensitivityReport,
    SweepResult,
)
from nv_multifreq.models.run import DEFAULT_CONVENTIONAL_PAIRS, RunConfig
from nv_multifreq.physics.geometry import axis_matrix, sign_pattern
from nv_multifreq.physics.spindynamics import echo_visibility, phase_per_tesla
from nv_multifreq.utils.artifacts import sweep_to_csv, to_json
from nv_multifreq.utils.logger import log_sensitivity

NT_PER_T = 1e9
SCHEMES = ("single", "multi", "both")
_EPS = float(np.finfo(float).eps)


def _check_gradient(sweep: SweepResult) -> float:
    """Gradient of a sweep, or ZeroGradient for a degenerate geometry."""
    meta = sweep.metadata
    reference = sweep.model_gradient if sweep.model_gradient is not None else sweep.gradient
    if sweep.gradient is None or reference is None or abs(reference) < settings.zero_gradient_threshold:
        raise ZeroGradient(f"{meta.mode} with field direction {meta.direction}")
    return sweep.gradient


def _rel(value: float, err: float | None) -> float:
    return abs(err or 0.0) / abs(value) if value else 0.0


def _estimate(value: float, rel: float) -> Estimate:
    value = abs(value)
    return Estimate(value=value, uncertainty=value * max(rel, _EPS))


def compute_sensitivity(
    axis_sweeps: Sequence[SweepResult] = (),
    component_sweeps: Sequence[SweepResult] = (),
    best_sweep: SweepResult | None = None,
    pairs: Mapping[str, tuple[int, int]] = DEFAULT_CONVENTIONAL_PAIRS,
    config_hash: str | None = None,
    seed: int | None = None,
) -> SensitivityReport:
    """
    Sensitivities from echo amplitude sweeps.

    Per axis δB_n = δP_n / |dP_n/dB|, with the gradient taken along the swept
    field direction. The conventional component k combines its pair (a, b):

        δB^(c)_k = √2 · √(δP_a² + δP_b²) / (|dP_a/dB_k| + |dP_b/dB_k|)

    where dP_n/dB_k = (dP_n/dB)/(u_n·b̂) · u_n,k and the √2 accounts for the
    two separate measurements. The multi-frequency component k is
    δB^(mf)_k = δP_k / |dP_k/dB_k| from a sweep of its program along e_k,
    and the best-sign sweep gives δB_mf along the field direction.

    Raises:
        ZeroGradient: A sweep has a vanishing gradient.
        ValueError: A conventional pair lacks its axis sweeps, or a
            component sweep is not along its own axis.
    """
    per_axis: list[AxisSensitivity] = []
    by_axis: dict[int, SweepResult] = {}
    for sweep in axis_sweeps:
        axis = sweep.metadata.axis
        if axis is None:
            raise ValueError(f"sweep {sweep.metadata.label} is not a single-axis sweep")
        g = _check_gradient(sweep)
        noise = sweep.noise_1s or 0.0
        rel = math.hypot(_rel(noise, sweep.noise_1s_stderr), _rel(g, sweep.gradient_stderr))
        est = _estimate(noise / g, rel)
        per_axis.append(AxisSensitivity(axis=axis, value=est.value, uncertainty=est.uncertainty))
        by_axis[axis] = sweep
    per_axis.sort(key=lambda e: e.axis)

    axes = axis_matrix()
    conventional: dict[str, Estimate] = {}
    if by_axis:
        for k_index, comp in enumerate(COMPONENTS):
            a, b = pairs[comp]
            if a not in by_axis or b not in by_axis:
                raise ValueError(f"conventional pair {(a, b)} for {comp} needs both axis sweeps")
            terms = []
            for n in (a, b):
                sweep = by_axis[n]
                proj = sweep.metadata.projections[n - 1]  # type: ignore[index]
                d_dbk = sweep.gradient / proj * axes[n - 1, k_index]  # type: ignore[operator]
                terms.append((sweep.noise_1s or 0.0, sweep.noise_1s_stderr or 0.0, d_dbk, sweep))
            numer = math.sqrt(sum(t[0] ** 2 for t in terms))
            denom = sum(abs(t[2]) for t in terms)
            numer_err = math.sqrt(sum((t[0] * t[1]) ** 2 for t in terms)) / numer if numer else 0.0
            denom_err = math.sqrt(
                sum((abs(t[2]) * _rel(t[3].gradient, t[3].gradient_stderr)) ** 2 for t in terms)
            )
            conventional[comp] = _estimate(
                math.sqrt(2.0) * numer / denom, math.hypot(_rel(numer, numer_err), _rel(denom, denom_err))
            )

    multi: dict[str, Estimate] = {}
    for sweep in component_sweeps:
        comp = sweep.metadata.component
        if comp is None:
            raise ValueError(f"sweep {sweep.metadata.label} is not a component sweep")
        expected = tuple(1.0 if c == comp else 0.0 for c in COMPONENTS)
        direction = sweep.metadata.direction
        if direction is None or not np.allclose(direction, expected, atol=1e-12):
            raise ValueError(f"component sweep {sweep.metadata.label} must run along e_{comp}")
        g = _check_gradient(sweep)
        noise = sweep.noise_1s or 0.0
        rel = math.hypot(_rel(noise, sweep.noise_1s_stderr), _rel(g, sweep.gradient_stderr))
        multi[comp] = _estimate(noise / g, rel)

    best = None
    if best_sweep is not None:
        g = _check_gradient(best_sweep)
        noise = best_sweep.noise_1s or 0.0
        best = _estimate(
            noise / g,
            math.hypot(_rel(noise, best_sweep.noise_1s_stderr), _rel(g, best_sweep.gradient_stderr)),
        )

    components = []
    for comp in COMPONENTS:
        c, m = conventional.get(comp), multi.get(comp)
        if c is None and m is None:
            continue
        components.append(
            ComponentSensitivity(
                component=comp,
                conventional=c,
                multi_frequency=m,
                improvement_ratio=(c.value / m.value) if c and m else None,
            )
        )
    report = SensitivityReport(
        per_axis=per_axis,
        multi_frequency=best,
        components=components,
        conventional_pairs=dict(pairs),
        config_hash=config_hash,
        seed=seed,
    )
    log_sensitivity(report)
    return report


def theoretical_improvement_ratios(
    ensemble: EnsembleConfig,
    echo: EchoConfig,
    pairs: Mapping[str, tuple[int, int]] = DEFAULT_CONVENTIONAL_PAIRS,
    readout_offset_rad: float = math.pi / 2,
) -> dict[str, float]:
    """
    δB^(c)_k / δB^(mf)_k from noiseless analytic gradients and a common δP.

    Equal ratios and visibilities give exactly 4 for every component.
    """
    kappa = phase_per_tesla(echo, ensemble.gyromagnetic_ratio_hz_per_t)
    axes = axis_matrix()
    slopes = [
        ensemble.ratios[n]
        * ensemble.contrast
        * 0.5
        * echo_visibility(echo.tau_s, ensemble.t2_s, ensemble.stretch, ensemble.pulse_fidelity[n])
        * abs(math.sin(readout_offset_rad))
        * kappa
        for n in range(4)
    ]
    out: dict[str, float] = {}
    for k, comp in enumerate(COMPONENTS):
        a, b = pairs[comp]
        conv = math.sqrt(2.0) * math.sqrt(2.0) / (
            slopes[a - 1] * abs(axes[a - 1, k]) + slopes[b - 1] * abs(axes[b - 1, k])
        )
        signs = sign_pattern(comp).signs
        mf = 1.0 / abs(sum(s * g * axes[n, k] for n, (s, g) in enumerate(zip(signs, slopes))))
        out[comp] = conv / mf
    return out


def run_sensitivity_study(
    config: RunConfig,
    seed: int | None,
    scheme: str = "both",
    threads: int = 1,
    config_hash: str | None = None,
) -> tuple[SensitivityReport, list[SweepResult]]:
    """
    Run the echo sweeps a scheme needs and compute its sensitivities.

    Single-axis sweeps and the best-sign sweep run along the configured
    field direction; component sweeps run along their own axis.
    """
    if scheme not in SCHEMES:
        raise ConfigError(f"scheme must be one of {SCHEMES}, got '{scheme}'")
    assignment, programs = build_programs(config)
    echo = config.echo_config()
    direction = config.field.unit_direction()
    grid = config.sweeps.amplitude_grid()
    kwargs = sweep_kwargs(config, seed, threads, config_hash)

    axis_sweeps: list[SweepResult] = []
    component_sweeps: list[SweepResult] = []
    best = None
    if scheme in ("single", "both"):
        for n in range(1, 5):
            axis_sweeps.append(
                echo_amplitude_sweep(
                    config.ensemble, echo, programs[f"NV{n}"], direction, grid,
                    assignment=assignment, **kwargs,
                )
            )
    if scheme in ("multi", "both"):
        for comp in COMPONENTS:
            e_k = tuple(1.0 if c == comp else 0.0 for c in COMPONENTS)
            component_sweeps.append(
                echo_amplitude_sweep(
                    config.ensemble, echo, programs[comp], e_k, grid, assignment=assignment, **kwargs
                )
            )
        best = best_sign_sweep(
            config.ensemble, echo, direction, grid, config.echo.readout_offset_rad, **kwargs
        )

    report = compute_sensitivity(
        axis_sweeps, component_sweeps, best, config.conventional_pairs, config_hash, seed
    )
    sweeps = axis_sweeps + component_sweeps + ([best] if best is not None else [])
    return report, sweeps


def format_report(report: SensitivityReport) -> list[str]:
    """Summary table in nT/√Hz."""

    def cell(e: Estimate | None) -> str:
        return "-" if e is None else f"{e.value * NT_PER_T:9.2f} ± {e.uncertainty * NT_PER_T:6.2f}"

    lines = ["sensitivity (nT/√Hz)"]
    for entry in report.per_axis:
        lines.append(f"  NV{entry.axis}          {cell(entry)}")
    if report.multi_frequency is not None:
        lines.append(f"  multi (b̂)    {cell(report.multi_frequency)}")
    if report.components:
        lines.append("  component  conventional         multi-frequency      ratio")
        for c in report.components:
            ratio = "-" if c.improvement_ratio is None else f"{c.improvement_ratio:.3f}"
            lines.append(f"  B{c.component}         {cell(c.conventional)}  {cell(c.multi_frequency)}  {ratio}")
    return lines


class SensitivityExperiment(Experiment):
    """Echo sweeps and δB tables for the selected scheme."""

    @property
    def name(self) -> str:
        return "sensitivity"

    def run(self, config: RunConfig, context: RunContext) -> ExperimentOutput:
        seed = require_seed(context.seed, self.name)
        scheme = context.options.get("scheme", "both")
        report, sweeps = run_sensitivity_study(
            config, seed, scheme, context.threads, context.config_hash
        )
        files = {f"{s.metadata.label}.csv": sweep_to_csv(s) for s in sweeps}
        payload = report.model_dump(mode="json", exclude={"config_hash", "seed"})
        payload["scheme"] = scheme
        files["sensitivity.json"] = to_json(payload, context.config_hash, seed)
        return ExperimentOutput(files=files, summary=format_report(report))
