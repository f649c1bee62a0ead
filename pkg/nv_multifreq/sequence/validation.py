"""Invariant checks shared by the sequence builder and the parser."""

import math

from nv_multifreq.exceptions import InvalidTiming, SequenceValidationError
from nv_multifreq.models.sequence import TWO_PI, ChannelAssignment, SequenceProgram
from nv_multifreq.physics.geometry import FLIPPED_AXES

EXPECTED_ANGLES = ("pi/2", "pi", "pi/2")
PHASE_TOL = 1e-9


def _same_phase(a: float, b: float) -> bool:
    d = (a - b) % TWO_PI
    return min(d, TWO_PI - d) <= PHASE_TOL


def check_timing(program: SequenceProgram) -> None:
    """
    Three ordered, non-overlapping pulses with τ between the π/2 centres.

    Raises:
        InvalidTiming: Pulses overlap or are not centred on the echo time.
    """
    events = program.events
    for prev, nxt in zip(events, events[1:]):
        shared = set(prev.channels) & set(nxt.channels)
        if shared and prev.end_s > nxt.start_s:
            raise InvalidTiming(
                f"{prev.angle} pulse ending at {prev.end_s!r} s overlaps {nxt.angle} pulse "
                f"starting at {nxt.start_s!r} s on channels {sorted(shared)}"
            )
    tol = 1e-12 * program.tau_s
    first, refocus, last = events
    if abs(refocus.center_s - first.center_s - program.tau_s / 2.0) > tol:
        raise InvalidTiming(
            f"π pulse centre {refocus.center_s!r} s is not τ/2 after the first pulse centre"
        )
    if abs(last.center_s - first.center_s - program.tau_s) > tol:
        raise InvalidTiming(f"final pulse centre {last.center_s!r} s is not τ after the first")
    if abs(refocus.center_s - (first.end_s + last.start_s) / 2.0) > tol:
        raise InvalidTiming("π pulse is not centred between the two π/2 pulses")


def check_program(program: SequenceProgram, assignment: ChannelAssignment | None = None) -> None:
    """
    Validate every program invariant; channel n targets axis n when no
    assignment is given.

    Raises:
        SequenceValidationError: Naming the violated invariant.
        InvalidTiming: Timing or overlap problems.
    """
    events = program.events
    if len(events) != 3:
        raise SequenceValidationError("pulse_count", f"expected 3 pulses, found {len(events)}")
    if any(b.start_s < a.start_s for a, b in zip(events, events[1:])):
        raise SequenceValidationError("pulse_order", "pulses must be ordered by start time")
    angles = tuple(e.angle for e in events)
    if angles != EXPECTED_ANGLES:
        raise SequenceValidationError("pulse_angles", f"expected pi/2, pi, pi/2; got {angles}")
    if len({e.channels for e in events}) != 1:
        raise SequenceValidationError("channel_set", "all pulses must fire the same channels")
    check_timing(program)

    axis_of = (lambda ch: assignment.axis_for_channel(ch)) if assignment else (lambda ch: ch)
    mode = program.mode
    channels = program.channels
    if mode.kind == "single_frequency":
        if [axis_of(ch) for ch in channels] != [mode.axis]:
            raise SequenceValidationError(
                "mode_channels", f"{mode} must drive only the channel targeting NV{mode.axis}"
            )
        return

    if len(channels) != 4:
        raise SequenceValidationError("mode_channels", f"{mode} must drive all four channels")
    flipped = FLIPPED_AXES[mode.component]  # type: ignore[index]
    readout = program.readout_phases()
    reference = next(readout[ch] for ch in channels if axis_of(ch) not in flipped)
    for ch in channels:
        expected = reference + (math.pi if axis_of(ch) in flipped else 0.0)
        if not _same_phase(readout[ch], expected):
            raise SequenceValidationError(
                "readout_flips",
                f"channel {ch} (NV{axis_of(ch)}) final-pulse phase offset {readout[ch]!r} rad "
                f"does not match the {mode.component} flip set",
            )


def flip_signs(
    program: SequenceProgram, assignment: ChannelAssignment | None = None
) -> tuple[int, int, int, int]:
    """Per-axis ±1 readout signs realized by a multi-frequency program."""
    readout = program.readout_phases()
    by_axis = {
        (assignment.axis_for_channel(ch) if assignment else ch): phase
        for ch, phase in readout.items()
    }
    reference = by_axis[1]
    a, b, c, d = (1 if _same_phase(by_axis[n], reference) else -1 for n in range(1, 5))
    return (a, b, c, d)
