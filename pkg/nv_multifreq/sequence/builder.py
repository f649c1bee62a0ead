import math

from nv_multifreq.config import settings
from nv_multifreq.exceptions import InvalidTiming
from nv_multifreq.models.common import DriveConfig
from nv_multifreq.models.sequence import (
    TWO_PI,
    ChannelAssignment,
    PulseEvent,
    SequenceMode,
    SequenceProgram,
)
from nv_multifreq.physics.geometry import FLIPPED_AXES
from nv_multifreq.sequence.validation import check_program
from nv_multifreq.utils.logger import logger


def build_echo_sequence(
    mode: SequenceMode,
    tau_s: float,
    drive: DriveConfig,
    assignment: ChannelAssignment,
    readout_offset_rad: float = math.pi / 2,
) -> SequenceProgram:
    """
    Emit the π/2–π–π/2 program for one mode.

    The first pulse starts at t = 0 and τ is measured between the centres of
    the two π/2 pulses. All pulses on a channel share the first pulse's phase
    except the last, which is advanced by the readout offset plus π on the
    axes flipped for the selected component.

    Args:
        mode: single_frequency(axis) or multi_frequency(component).
        tau_s: Echo time.
        drive: Rabi frequency of the pulses (must be positive).
        assignment: Which channel targets which axis.
        readout_offset_rad: Final-pulse phase offset on unflipped axes.

    Raises:
        InvalidTiming: The pulses do not fit inside τ.
    """
    if drive.rabi_frequency_hz <= 0:
        raise InvalidTiming("finite pulses need a positive Rabi frequency")
    d90 = 1.0 / (4.0 * drive.rabi_frequency_hz)
    d180 = 1.0 / (2.0 * drive.rabi_frequency_hz)
    if tau_s <= 2.0 * d180:
        raise InvalidTiming(
            f"τ = {tau_s!r} s must exceed twice the π-pulse duration ({2.0 * d180!r} s)"
        )

    for issue in assignment.selectivity_violations(
        drive.rabi_frequency_hz, settings.selectivity_margin_factor
    ):
        logger.warning(f"Channel selectivity: {issue}")

    if mode.kind == "single_frequency":
        channels: tuple[int, ...] = (assignment.channel_for_axis(mode.axis),)  # type: ignore[arg-type]
        flipped: tuple[int, ...] = ()
    else:
        channels = (1, 2, 3, 4)
        flipped = FLIPPED_AXES[mode.component]  # type: ignore[index]

    first_phase = tuple(0.0 for _ in channels)
    final_phase = tuple(
        (readout_offset_rad + (math.pi if assignment.axis_for_channel(ch) in flipped else 0.0))
        % TWO_PI
        for ch in channels
    )
    first_center = d90 / 2.0
    events = (
        PulseEvent(start_s=0.0, duration_s=d90, angle="pi/2", channels=channels, phases_rad=first_phase),
        PulseEvent(
            start_s=first_center + tau_s / 2.0 - d180 / 2.0,
            duration_s=d180,
            angle="pi",
            channels=channels,
            phases_rad=first_phase,
        ),
        PulseEvent(
            start_s=first_center + tau_s - d90 / 2.0,
            duration_s=d90,
            angle="pi/2",
            channels=channels,
            phases_rad=final_phase,
        ),
    )
    program = SequenceProgram(tau_s=tau_s, mode=mode, events=events)
    check_program(program, assignment)
    return program
