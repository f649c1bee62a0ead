import json
import math
from pathlib import Path
from typing import Literal

from pydantic import Field, ValidationError, field_validator, model_validator

from nv_multifreq.exceptions import ConfigError
from nv_multifreq.models.common import (
    Branch,
    DriveConfig,
    EchoConfig,
    EnsembleConfig,
    FrozenModel,
    PerAxis,
    Vector3,
)

DEFAULT_CONVENTIONAL_PAIRS: dict[str, tuple[int, int]] = {"x": (1, 3), "y": (1, 2), "z": (1, 4)}


class StaticFieldSettings(FrozenModel):
    """Bias field given directly or recovered from four measured resonances."""

    vector_t: Vector3 | None = None
    measured_frequencies_hz: PerAxis | None = None
    fit_splitting: bool = False
    branch: Branch | None = None

    @model_validator(mode="after")
    def _exactly_one(self) -> "StaticFieldSettings":
        if (self.vector_t is None) == (self.measured_frequencies_hz is None):
            raise ValueError("give exactly one of vector_t or measured_frequencies_hz")
        return self


class EchoSettings(FrozenModel):
    tau_s: float = Field(default=10e-6, gt=0)
    f_ac_hz: float = Field(default=100e3, ge=0)
    phase0_rad: float = 0.0
    synchronized: bool = True
    readout_offset_rad: float = math.pi / 2
    rabi_frequency_hz: float = Field(default=2.5e6, gt=0)
    ideal_pulses: bool = True  # False propagates finite pulses numerically

    @model_validator(mode="after")
    def _check_sync(self) -> "EchoSettings":
        if self.synchronized and self.f_ac_hz > 0 and abs(self.tau_s * self.f_ac_hz - 1.0) > 1e-12:
            raise ValueError("synchronized echo requires tau_s = 1/f_ac_hz")
        return self


class SweepSettings(FrozenModel):
    """Grids and Monte Carlo budgets for the simulated experiments."""

    odmr_start_hz: float = Field(default=2.60e9, gt=0)
    odmr_stop_hz: float = Field(default=3.15e9, gt=0)
    odmr_points: int = Field(default=1101, ge=3)
    odmr_saturation: float = Field(default=1.0, gt=0)  # drive power as saturation parameter
    odmr_time_per_point_s: float = Field(default=1.0, gt=0)

    rabi_max_duration_s: float = Field(default=2.0e-6, gt=0)
    rabi_points: int = Field(default=201, ge=5)
    rabi_time_per_point_s: float = Field(default=0.1, gt=0)
    rabi_frequencies_hz: PerAxis | None = None  # per-axis drive; echo Rabi frequency if unset

    amplitude_max_t: float = Field(default=1.0e-6, gt=0)
    amplitude_points: int = Field(default=21, ge=3)
    time_per_point_s: float = Field(default=1.0, gt=0)
    repetitions: int = Field(default=200, ge=2)

    noise_times_s: list[float] = [1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0]
    noise_repetitions: int = Field(default=400, ge=2)

    @field_validator("amplitude_points")
    @classmethod
    def _odd_points(cls, v: int) -> int:
        if v % 2 == 0:
            raise ValueError("amplitude_points must be odd so the grid contains zero")
        return v

    def amplitude_grid(self) -> list[float]:
        """Symmetric grid over [-amplitude_max_t, amplitude_max_t] with zero exactly."""
        half = (self.amplitude_points - 1) // 2
        step = self.amplitude_max_t / half
        return [k * step for k in range(-half, half + 1)]

    def odmr_grid(self) -> list[float]:
        n = self.odmr_points
        span = self.odmr_stop_hz - self.odmr_start_hz
        return [self.odmr_start_hz + span * i / (n - 1) for i in range(n)]

    def rabi_grid(self) -> list[float]:
        n = self.rabi_points
        return [self.rabi_max_duration_s * i / (n - 1) for i in range(n)]


class FieldSettings(FrozenModel):
    """Applied AC field: direction (normalized on use) and amplitude for vector runs."""

    direction: Vector3 = (0.23, 0.16, -0.97)
    amplitude_t: float = Field(default=0.25e-6, gt=0)

    @field_validator("direction")
    @classmethod
    def _nonzero(cls, v: Vector3) -> Vector3:
        if math.sqrt(sum(x * x for x in v)) == 0.0:
            raise ValueError("field direction must be non-zero")
        return v

    def unit_direction(self) -> Vector3:
        n = math.sqrt(sum(x * x for x in self.direction))
        x, y, z = (c / n for c in self.direction)
        return (x, y, z)

    def vector_t(self) -> Vector3:
        x, y, z = (self.amplitude_t * c for c in self.unit_direction())
        return (x, y, z)


class RunConfig(FrozenModel):
    """Versioned JSON run configuration with SI units in every field name."""

    schema_version: Literal[1] = 1
    ensemble: EnsembleConfig = EnsembleConfig()
    static_field: StaticFieldSettings = StaticFieldSettings(vector_t=(0.0, 0.0, 0.0))
    echo: EchoSettings = EchoSettings()
    sweeps: SweepSettings = SweepSettings()
    field: FieldSettings = FieldSettings()
    measurement_time_s: float = Field(default=1.0, gt=0)
    conventional_pairs: dict[str, tuple[int, int]] = DEFAULT_CONVENTIONAL_PAIRS
    calibration: Literal["config", "sweep"] = "config"
    seed: int | None = Field(default=None, ge=0, lt=2**64)
    output_dir: str | None = None

    @field_validator("conventional_pairs")
    @classmethod
    def _check_pairs(cls, v: dict[str, tuple[int, int]]) -> dict[str, tuple[int, int]]:
        if sorted(v) != ["x", "y", "z"]:
            raise ValueError("conventional_pairs needs exactly the keys x, y, z")
        for comp, (a, b) in v.items():
            if a == b or not (1 <= a <= 4 and 1 <= b <= 4):
                raise ValueError(f"pair for {comp} must be two distinct axes in 1..4")
        return v

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        """
        Read and validate a JSON run config.

        Raises:
            ConfigError: Missing file, malformed JSON or schema violation.
        """
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read config {p}: {e.strerror or e}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON in {p}: {e}") from None
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            first = e.errors()[0]
            loc = ".".join(str(x) for x in first["loc"]) or "<root>"
            raise ConfigError(f"Invalid config {p}: {loc}: {first['msg']}") from None

    def echo_config(self) -> EchoConfig:
        e = self.echo
        return EchoConfig(
            tau_s=e.tau_s,
            f_ac_hz=e.f_ac_hz,
            phase0_rad=e.phase0_rad,
            readout_phase_rad=e.readout_offset_rad,
            synchronized=e.synchronized,
        )

    def drive_config(self) -> DriveConfig:
        return DriveConfig(rabi_frequency_hz=self.echo.rabi_frequency_hz)
