from typing import Literal

from pydantic import Field, field_validator, model_validator

from nv_multifreq.models.common import Component, FrozenModel, PerAxis, Vector3


class ReadoutSample(FrozenModel):
    """One shot-noise-limited readout of the ensemble PL."""

    mean_signal: float
    counts: int = Field(ge=0)
    estimate: float
    shots: int = Field(ge=1)


class NoisePoint(FrozenModel):
    integration_time_s: float
    shots: int
    std: float
    std_error: float


class NoiseSeries(FrozenModel):
    """δP versus integration time with the fitted log–log slope."""

    mean_signal: float
    points: list[NoisePoint]
    log_log_slope: float
    seed: int


class SweepMetadata(FrozenModel):
    """Provenance of a sweep."""

    label: str
    mode: str
    axis: int | None = None
    component: Component | None = None
    direction: Vector3 | None = None
    projections: PerAxis | None = None
    integration_time_s: float | None = None
    repetitions: int | None = None
    seed: int | None = None
    config_hash: str | None = None


class SweepResult(FrozenModel):
    """Signal versus an independent variable (Hz, seconds or tesla)."""

    kind: Literal["odmr", "rabi", "echo"]
    grid: list[float]
    mean: list[float]
    stddev: list[float]
    counts: list[int]
    gradient: float | None = None  # dP/dB (per tesla) for echo sweeps
    gradient_stderr: float | None = None
    model_gradient: float | None = None  # noiseless analytic dS/dB at zero amplitude
    noise_1s: float | None = None  # δP normalized to a 1 s integration
    noise_1s_stderr: float | None = None
    metadata: SweepMetadata

    @field_validator("grid")
    @classmethod
    def _check_grid(cls, v: list[float]) -> list[float]:
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("sweep grid must be strictly ascending")
        return v

    @model_validator(mode="after")
    def _check_lengths(self) -> "SweepResult":
        n = len(self.grid)
        if not (len(self.mean) == len(self.stddev) == len(self.counts) == n):
            raise ValueError("sweep columns must have equal length")
        return self


class OdmrResonance(FrozenModel):
    frequency_hz: float
    depth: float
    width_hz: float


class OdmrResult(FrozenModel):
    """Simulated spectrum and the fitted dips, ascending in frequency."""

    sweep: SweepResult
    resonances: list[OdmrResonance]


class RabiResult(FrozenModel):
    """Per-axis Rabi sweeps and the orientation ratios fitted from them."""

    sweeps: list[SweepResult]
    amplitudes: PerAxis
    rabi_frequencies_hz: PerAxis
    ratios: PerAxis


class Estimate(FrozenModel):
    """A positive quantity with its uncertainty."""

    value: float = Field(gt=0)
    uncertainty: float = Field(gt=0)


class AxisSensitivity(Estimate):
    axis: int


class ComponentSensitivity(FrozenModel):
    component: Component
    conventional: Estimate | None = None
    multi_frequency: Estimate | None = None
    improvement_ratio: float | None = None


class SensitivityReport(FrozenModel):
    """Sensitivities in T/√Hz, normalized to a 1 s measurement."""

    per_axis: list[AxisSensitivity] = []
    multi_frequency: Estimate | None = None
    components: list[ComponentSensitivity] = []
    conventional_pairs: dict[str, tuple[int, int]] = {}
    config_hash: str | None = None
    seed: int | None = None


class VectorEstimate(FrozenModel):
    """Estimated field vector from one sensing scheme."""

    scheme: Literal["conventional", "multi_frequency"]
    responses: list[float]  # per-axis (conventional) or per-component (multi) signals
    field_t: Vector3
    direction: Vector3
    amplitude_t: float
    covariance: list[list[float]]

    @field_validator("direction")
    @classmethod
    def _check_unit(cls, v: Vector3) -> Vector3:
        norm = sum(x * x for x in v) ** 0.5
        if abs(norm - 1.0) > 1e-9:
            raise ValueError("direction must be a unit vector")
        return v
