import math
from typing import Literal

from pydantic import Field, field_validator, model_validator

from nv_multifreq.models.common import COMPONENTS, Component, FrozenModel, StaticFieldCalibration

TWO_PI = 2.0 * math.pi
PulseAngle = Literal["pi/2", "pi"]
ANGLE_RAD: dict[str, float] = {"pi/2": math.pi / 2, "pi": math.pi}
DEFAULT_SOURCE_PAIRS: tuple[tuple[int, int], tuple[int, int]] = ((1, 2), (3, 4))


class Channel(FrozenModel):
    """One microwave tone and the axis it addresses."""

    frequency_hz: float = Field(gt=0)
    axis: int = Field(ge=1, le=4)


class ChannelAssignment(FrozenModel):
    """Four tones, one per axis, generated as two sideband pairs."""

    channels: tuple[Channel, Channel, Channel, Channel]
    # Channels sharing one microwave source (1-based channel numbers)
    source_pairs: tuple[tuple[int, int], tuple[int, int]] = DEFAULT_SOURCE_PAIRS

    @field_validator("channels")
    @classmethod
    def _one_channel_per_axis(cls, v: tuple[Channel, ...]) -> tuple[Channel, ...]:
        if sorted(c.axis for c in v) != [1, 2, 3, 4]:
            raise ValueError("each axis must be targeted by exactly one channel")
        return v

    @field_validator("source_pairs")
    @classmethod
    def _check_pairs(cls, v: tuple[tuple[int, int], ...]) -> tuple[tuple[int, int], ...]:
        if sorted(c for pair in v for c in pair) != [1, 2, 3, 4]:
            raise ValueError("source pairs must partition channels 1..4")
        return v

    @classmethod
    def default(cls, frequencies_hz: tuple[float, float, float, float]) -> "ChannelAssignment":
        """Channel n drives axis n at the given frequency."""
        chans = tuple(Channel(frequency_hz=f, axis=i + 1) for i, f in enumerate(frequencies_hz))
        return cls(channels=chans)  # type: ignore[arg-type]

    @classmethod
    def from_calibration(cls, calibration: StaticFieldCalibration) -> "ChannelAssignment":
        return cls.default(calibration.frequencies_hz)

    def channel_for_axis(self, axis: int) -> int:
        for i, c in enumerate(self.channels):
            if c.axis == axis:
                return i + 1
        raise KeyError(axis)

    def axis_for_channel(self, channel: int) -> int:
        return self.channels[channel - 1].axis

    def selectivity_violations(self, rabi_frequency_hz: float, margin_factor: float) -> list[str]:
        """Channel pairs closer than margin_factor × Rabi frequency."""
        margin = margin_factor * rabi_frequency_hz
        out = []
        for i in range(4):
            for j in range(i + 1, 4):
                gap = abs(self.channels[i].frequency_hz - self.channels[j].frequency_hz)
                if gap < margin:
                    out.append(
                        f"channels {i + 1} and {j + 1} are {gap / 1e6:.3f} MHz apart "
                        f"(selectivity margin {margin / 1e6:.3f} MHz)"
                    )
        return out


class SequenceMode(FrozenModel):
    """single_frequency on one axis, or multi_frequency for one component."""

    kind: Literal["single_frequency", "multi_frequency"]
    axis: int | None = Field(default=None, ge=1, le=4)
    component: Component | None = None

    @model_validator(mode="after")
    def _check_target(self) -> "SequenceMode":
        if self.kind == "single_frequency" and (self.axis is None or self.component is not None):
            raise ValueError("single_frequency mode needs exactly an axis")
        if self.kind == "multi_frequency" and (self.component is None or self.axis is not None):
            raise ValueError("multi_frequency mode needs exactly a component")
        return self

    @classmethod
    def single(cls, axis: int) -> "SequenceMode":
        return cls(kind="single_frequency", axis=axis)

    @classmethod
    def multi(cls, component: Component) -> "SequenceMode":
        return cls(kind="multi_frequency", component=component)

    @classmethod
    def parse(cls, text: str) -> "SequenceMode":
        """Parse 'single_frequency:NV1' or 'multi_frequency:x'."""
        kind, _, target = text.partition(":")
        if kind == "single_frequency" and target.upper().startswith("NV") and target[2:].isdigit():
            return cls.single(int(target[2:]))
        if kind == "multi_frequency" and target in COMPONENTS:
            return cls.multi(target)  # type: ignore[arg-type]
        raise ValueError(f"unknown mode '{text}'")

    def __str__(self) -> str:
        if self.kind == "single_frequency":
            return f"single_frequency:NV{self.axis}"
        return f"multi_frequency:{self.component}"


class PulseEvent(FrozenModel):
    """One pulse fired on a set of channels, each with its own phase."""

    start_s: float = Field(ge=0)
    duration_s: float = Field(gt=0)
    angle: PulseAngle
    channels: tuple[int, ...]
    phases_rad: tuple[float, ...]

    @model_validator(mode="after")
    def _check_channels(self) -> "PulseEvent":
        if not self.channels or any(not 1 <= c <= 4 for c in self.channels):
            raise ValueError("channels must be a non-empty subset of 1..4")
        if list(self.channels) != sorted(set(self.channels)):
            raise ValueError("channels must be unique and ascending")
        if len(self.phases_rad) != len(self.channels):
            raise ValueError("one phase per channel is required")
        if any(not 0.0 <= p < TWO_PI for p in self.phases_rad):
            raise ValueError("phases must lie in [0, 2π)")
        return self

    @property
    def end_s(self) -> float:
        return self.start_s + self.duration_s

    @property
    def center_s(self) -> float:
        return self.start_s + self.duration_s / 2.0

    def phase_of(self, channel: int) -> float:
        return self.phases_rad[self.channels.index(channel)]


class SequenceProgram(FrozenModel):
    """A validated three-pulse Hahn-echo program."""

    tau_s: float = Field(gt=0)
    mode: SequenceMode
    events: tuple[PulseEvent, ...]

    @property
    def channels(self) -> tuple[int, ...]:
        return self.events[0].channels if self.events else ()

    def readout_phases(self) -> dict[int, float]:
        """Final-minus-first pulse phase per channel, in [0, 2π)."""
        first, last = self.events[0], self.events[-1]
        return {
            ch: (last.phase_of(ch) - first.phase_of(ch)) % TWO_PI for ch in first.channels
        }

    def rabi_frequency_hz(self) -> float:
        """Rabi frequency implied by the first π/2 pulse duration."""
        return 1.0 / (4.0 * self.events[0].duration_s)
