"""
Line-oriented sequence text format.

    seq v1 tau=<seconds> mode=<single_frequency:NV1|multi_frequency:x>
    pulse t=<s> dur=<s> angle=<pi/2|pi> ch=<1,2,4> phase=<rad,rad,rad>

Blank lines are ignored and ``#`` starts a comment. Floats are written with
``repr`` so canonical text round-trips exactly.
"""

import math

from pydantic import ValidationError

from nv_multifreq.exceptions import ParseError, SequenceValidationError
from nv_multifreq.models.sequence import (
    ANGLE_RAD,
    TWO_PI,
    ChannelAssignment,
    PulseEvent,
    SequenceMode,
    SequenceProgram,
)
from nv_multifreq.sequence.validation import check_program
from nv_multifreq.utils.logger import logger

FORMAT_VERSION = "v1"
PULSE_KEYS = ("t", "dur", "angle", "ch", "phase")


def serialize_sequence(program: SequenceProgram) -> str:
    """Canonical text: pulses by start time, channels ascending."""
    lines = [f"seq {FORMAT_VERSION} tau={program.tau_s!r} mode={program.mode}"]
    for event in sorted(program.events, key=lambda e: e.start_s):
        order = sorted(range(len(event.channels)), key=lambda i: event.channels[i])
        channels = ",".join(str(event.channels[i]) for i in order)
        phases = ",".join(repr(event.phases_rad[i]) for i in order)
        lines.append(
            f"pulse t={event.start_s!r} dur={event.duration_s!r} angle={event.angle} "
            f"ch={channels} phase={phases}"
        )
    return "\n".join(lines) + "\n"


def _tokens(line: str) -> list[tuple[str, int]]:
    """Whitespace-separated tokens with their 1-based columns."""
    out = []
    pos = 0
    for tok in line.split():
        pos = line.index(tok, pos)
        out.append((tok, pos + 1))
        pos += len(tok)
    return out


def _fields(tokens: list[tuple[str, int]], lineno: int) -> dict[str, tuple[str, int]]:
    fields: dict[str, tuple[str, int]] = {}
    for tok, col in tokens:
        key, sep, value = tok.partition("=")
        if not sep or not key or not value:
            raise ParseError(f"expected key=value, got '{tok}'", lineno, col)
        if key in fields:
            raise ParseError(f"duplicate key '{key}'", lineno, col)
        fields[key] = (value, col + len(key) + 1)
    return fields


def _float(value: str, lineno: int, col: int) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ParseError(f"invalid number '{value}'", lineno, col) from None
    if not math.isfinite(x):
        raise ParseError(f"non-finite number '{value}'", lineno, col)
    return x


def _phase(value: str, lineno: int, col: int) -> float:
    p = _float(value, lineno, col)
    if 0.0 <= p < TWO_PI:
        return p
    wrapped = p % TWO_PI
    if wrapped >= TWO_PI:
        wrapped = 0.0
    logger.warning(f"Sequence line {lineno}: phase {p!r} rad normalized to {wrapped!r} rad")
    return wrapped


def _parse_pulse(fields: dict[str, tuple[str, int]], lineno: int, line_len: int) -> PulseEvent:
    for key, (_, col) in fields.items():
        if key not in PULSE_KEYS:
            raise ParseError(f"unknown pulse key '{key}'", lineno, col - len(key) - 1)
    missing = [k for k in PULSE_KEYS if k not in fields]
    if missing:
        raise ParseError(f"missing pulse keys {missing}", lineno, line_len + 1)

    start = _float(fields["t"][0], lineno, fields["t"][1])
    duration = _float(fields["dur"][0], lineno, fields["dur"][1])
    angle, angle_col = fields["angle"]
    if angle not in ANGLE_RAD:
        raise ParseError(f"angle must be pi/2 or pi, got '{angle}'", lineno, angle_col)

    ch_text, ch_col = fields["ch"]
    try:
        channels = [int(c) for c in ch_text.split(",")]
    except ValueError:
        raise ParseError(f"invalid channel list '{ch_text}'", lineno, ch_col) from None
    ph_text, ph_col = fields["phase"]
    phases = [_phase(p, lineno, ph_col) for p in ph_text.split(",")]
    if len(phases) != len(channels):
        raise ParseError(
            f"{len(channels)} channels but {len(phases)} phases", lineno, ph_col
        )

    # Accept any channel order; store ascending with phases kept alongside
    pairs = sorted(zip(channels, phases))
    try:
        return PulseEvent(
            start_s=start,
            duration_s=duration,
            angle=angle,  # type: ignore[arg-type]
            channels=tuple(c for c, _ in pairs),
            phases_rad=tuple(p for _, p in pairs),
        )
    except ValidationError as e:
        raise SequenceValidationError(
            "pulse_event", f"line {lineno}: {e.errors()[0]['msg']}"
        ) from None


def parse_sequence(
    text: str, assignment: ChannelAssignment | None = None, validate: bool = True
) -> SequenceProgram:
    """
    Parse sequence text and validate every program invariant.

    Phases outside [0, 2π) are wrapped with a warning.

    Raises:
        ParseError: Malformed text, with line and column.
        SequenceValidationError: A program invariant is violated.
        InvalidTiming: Pulses overlap or are off-centre.
    """
    header: tuple[float, SequenceMode] | None = None
    events: list[PulseEvent] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        tokens = _tokens(line)
        if not tokens:
            continue
        keyword, col = tokens[0]
        if header is None:
            if keyword != "seq":
                raise ParseError("expected 'seq' header", lineno, col)
            if len(tokens) < 2 or tokens[1][0] != FORMAT_VERSION:
                raise ParseError(
                    f"unsupported format version (expected {FORMAT_VERSION})",
                    lineno,
                    tokens[1][1] if len(tokens) > 1 else len(line) + 1,
                )
            fields = _fields(tokens[2:], lineno)
            for key, (_, vcol) in fields.items():
                if key not in ("tau", "mode"):
                    raise ParseError(f"unknown header key '{key}'", lineno, vcol - len(key) - 1)
            if "tau" not in fields or "mode" not in fields:
                raise ParseError("header needs tau= and mode=", lineno, len(line) + 1)
            tau = _float(fields["tau"][0], lineno, fields["tau"][1])
            if tau <= 0:
                raise ParseError("tau must be positive", lineno, fields["tau"][1])
            mode_text, mode_col = fields["mode"]
            try:
                mode = SequenceMode.parse(mode_text)
            except ValueError as e:
                raise ParseError(str(e), lineno, mode_col) from None
            header = (tau, mode)
            continue
        if keyword != "pulse":
            raise ParseError(f"unknown record '{keyword}'", lineno, col)
        events.append(_parse_pulse(_fields(tokens[1:], lineno), lineno, len(line)))

    if header is None:
        raise ParseError("missing 'seq' header", 1)
    tau, mode = header
    program = SequenceProgram(
        tau_s=tau, mode=mode, events=tuple(sorted(events, key=lambda e: e.start_s))
    )
    if validate:
        check_program(program, assignment)
    return program
