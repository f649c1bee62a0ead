import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Vector3 = tuple[float, float, float]
PerAxis = tuple[float, float, float, float]
Component = Literal["x", "y", "z"]
Branch = Literal["lower", "upper"]

COMPONENTS: tuple[Component, ...] = ("x", "y", "z")
AXIS_LABELS: tuple[str, ...] = ("NV1", "NV2", "NV3", "NV4")

# Standard NV values; the experiment never states them
DEFAULT_ZERO_FIELD_SPLITTING_HZ = 2.870e9
DEFAULT_GYROMAGNETIC_RATIO_HZ_PER_T = 28.024e9


class FrozenModel(BaseModel):
    """Immutable value object."""

    model_config = ConfigDict(frozen=True, extra="forbid")


class AxisSet(FrozenModel):
    """The four NV symmetry axes as unit vectors, NV1..NV4 order."""

    axes: tuple[Vector3, Vector3, Vector3, Vector3]
    labels: tuple[str, str, str, str] = AXIS_LABELS


class SignPattern(FrozenModel):
    """Per-axis readout flips selecting one Cartesian component."""

    component: Component
    signs: tuple[int, int, int, int]

    @field_validator("signs")
    @classmethod
    def _check_signs(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if any(s not in (1, -1) for s in v):
            raise ValueError("signs must be +1 or -1")
        return v

    @property
    def flipped_axes(self) -> tuple[int, ...]:
        """1-based indices of the axes whose readout phase is shifted by π."""
        return tuple(i + 1 for i, s in enumerate(self.signs) if s == -1)

    def compose(self, other: "SignPattern") -> tuple[int, int, int, int]:
        """Elementwise product; composing a pattern with itself gives all +1."""
        a, b, c, d = (s * t for s, t in zip(self.signs, other.signs))
        return (a, b, c, d)


class CalibrationCandidate(FrozenModel):
    """One sign assignment considered during static-field calibration."""

    signs: tuple[int, int, int, int]
    field_t: Vector3
    zero_field_splitting_hz: float
    residual_t: float


class StaticFieldCalibration(FrozenModel):
    """Bias field recovered from the four measured resonances."""

    field_t: Vector3
    frequencies_hz: PerAxis
    zero_field_splitting_hz: float
    gyromagnetic_ratio_hz_per_t: float
    branch: Branch = "lower"
    signs: tuple[int, int, int, int] = (1, 1, 1, 1)
    residual_t: float = 0.0
    candidates: tuple[CalibrationCandidate, ...] = ()


class EchoConfig(FrozenModel):
    """Hahn-echo timing and AC-field synchronization."""

    tau_s: float = Field(gt=0)
    f_ac_hz: float = Field(ge=0)
    phase0_rad: float = 0.0
    readout_phase_rad: float = math.pi / 2
    synchronized: bool = True

    @model_validator(mode="after")
    def _check_sync(self) -> "EchoConfig":
        if self.synchronized and self.f_ac_hz > 0:
            if abs(self.tau_s * self.f_ac_hz - 1.0) > 1e-12:
                raise ValueError("synchronized echo requires tau = 1/f_ac")
        return self


class TwoLevelState(FrozenModel):
    """Bloch vector of an effective two-level spin; +z is |0⟩."""

    bloch: Vector3

    @field_validator("bloch")
    @classmethod
    def _check_norm(cls, v: Vector3) -> Vector3:
        if math.sqrt(sum(x * x for x in v)) > 1.0 + 1e-9:
            raise ValueError("Bloch vector norm exceeds 1")
        return v

    @classmethod
    def ground(cls) -> "TwoLevelState":
        return cls(bloch=(0.0, 0.0, 1.0))

    @property
    def norm(self) -> float:
        return math.sqrt(sum(x * x for x in self.bloch))

    @property
    def population_0(self) -> float:
        return 0.5 * (1.0 + self.bloch[2])

    @property
    def population_1(self) -> float:
        return 0.5 * (1.0 - self.bloch[2])


class DriveConfig(FrozenModel):
    """Constant-amplitude rotating-frame drive."""

    rabi_frequency_hz: float = Field(ge=0)
    detuning_hz: float = 0.0
    pulse_phase_rad: float = 0.0
    duration_s: float = Field(default=0.0, ge=0)

    @property
    def effective_frequency_hz(self) -> float:
        return math.hypot(self.rabi_frequency_hz, self.detuning_hz)

    def pi_duration_s(self) -> float:
        """Duration of a resonant π rotation."""
        return 1.0 / (2.0 * self.rabi_frequency_hz)


class NoiseFloorConfig(FrozenModel):
    """Optional laser-intensity noise on top of photon shot noise."""

    enabled: bool = False
    white_relative: float = Field(default=0.0, ge=0)  # per-shot relative intensity noise
    flicker_relative: float = Field(default=0.0, ge=0)  # integration-time independent


class EnsembleConfig(FrozenModel):
    """Physical parameters of the NV ensemble and its optical readout."""

    ratios: PerAxis = (0.25, 0.25, 0.25, 0.25)
    contrast: float = Field(default=0.03, gt=0, le=1)
    t2_s: float = Field(default=20e-6, gt=0)
    stretch: float = Field(default=1.0, gt=0)
    photon_rate_hz: float = Field(default=4.0e9, gt=0)
    readout_window_s: float = Field(default=3.0e-7, gt=0)  # 1200 counts per bright shot
    shot_period_s: float = Field(default=20e-6, gt=0)
    zero_field_splitting_hz: float = Field(default=DEFAULT_ZERO_FIELD_SPLITTING_HZ, gt=0)
    gyromagnetic_ratio_hz_per_t: float = Field(default=DEFAULT_GYROMAGNETIC_RATIO_HZ_PER_T, gt=0)
    pulse_fidelity: PerAxis = (1.0, 1.0, 1.0, 1.0)
    linewidth_hz: float = Field(default=5.0e6, gt=0)
    noise_floor: NoiseFloorConfig = NoiseFloorConfig()

    @field_validator("ratios")
    @classmethod
    def _check_ratios(cls, v: PerAxis) -> PerAxis:
        if any(r < 0 for r in v):
            raise ValueError("orientation ratios must be non-negative")
        if abs(sum(v) - 1.0) > 1e-12:
            raise ValueError(f"orientation ratios must sum to 1 (got {sum(v)!r})")
        return v

    @field_validator("pulse_fidelity")
    @classmethod
    def _check_fidelity(cls, v: PerAxis) -> PerAxis:
        if any(not 0.0 < f <= 1.0 for f in v):
            raise ValueError("pulse fidelity must lie in (0, 1]")
        return v

    @property
    def counts_per_shot(self) -> float:
        """Expected photon counts of a bright ensemble in one readout."""
        return self.photon_rate_hz * self.readout_window_s

    def shots_for(self, integration_time_s: float) -> int:
        """Number of sequence repetitions fitting in an integration time."""
        return max(1, int(round(integration_time_s / self.shot_period_s)))
