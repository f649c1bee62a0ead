"""
Advisory check of a program against the two-source, four-switch hardware.

Each microwave source produces two sideband channels. Within one pulse the
two channels of a source can only differ by a 0/π switch, and with strict
granularity every phase must be a multiple of π/2 (LO+I or LO+Q paths).
"""

import math

from nv_multifreq.config import settings
from nv_multifreq.models.sequence import DEFAULT_SOURCE_PAIRS, ChannelAssignment, SequenceProgram
from nv_multifreq.sequence.validation import PHASE_TOL


def _is_multiple(phase: float, step: float) -> bool:
    k = phase / step
    return abs(k - round(k)) * step <= PHASE_TOL


def validate_against_topology(
    program: SequenceProgram, assignment: ChannelAssignment | None = None, strict: bool = True
) -> list[str]:
    """
    List every reason the program cannot be played on the hardware.

    An empty list means the program is realizable. Unrealizable programs are
    still valid input for simulation. Without an assignment the default
    source pairs are used and channel selectivity is not checked.
    """
    pairs = assignment.source_pairs if assignment else DEFAULT_SOURCE_PAIRS
    violations: list[str] = []
    for index, event in enumerate(program.events, start=1):
        label = f"pulse {index} ({event.angle})"
        for a, b in pairs:
            active = [ch for ch in (a, b) if ch in event.channels]
            if len(active) < 2:
                continue
            pa, pb = event.phase_of(a), event.phase_of(b)
            if not _is_multiple(abs(pa - pb), math.pi):
                violations.append(
                    f"{label}: channels {a} and {b} share a source but need phases "
                    f"{pa:.6f} and {pb:.6f} rad, which differ by more than a 0/π switch"
                )
        if strict:
            for ch in event.channels:
                phase = event.phase_of(ch)
                if not _is_multiple(phase, math.pi / 2):
                    violations.append(
                        f"{label}: channel {ch} phase {phase:.6f} rad is not a multiple of π/2"
                    )

    if assignment is not None:
        violations.extend(
            assignment.selectivity_violations(
                program.rabi_frequency_hz(), settings.selectivity_margin_factor
            )
        )
    return violations
