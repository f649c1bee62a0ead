"""
NV crystallographic axes, field projections, first-order Zeeman model and
the readout sign patterns used by multi-frequency control.

Axis order is fixed to NV1 = [111], NV2 = [-1 1 -1], NV3 = [1 -1 -1],
NV4 = [-1 -1 1]; every other module indexes by this order.
"""

import itertools
import math
from fractions import Fraction
from threading import Lock

import numpy as np
from cachetools import LRUCache, cached

from nv_multifreq.config import settings
from nv_multifreq.exceptions import InvalidBranch, NoConsistentSignAssignment
from nv_multifreq.models.common import (
    AxisSet,
    Branch,
    CalibrationCandidate,
    Component,
    SignPattern,
    StaticFieldCalibration,
    Vector3,
)
from nv_multifreq.utils.logger import logger

# Integer direction vectors; the unit axes are these divided by √3
AXIS_DIRECTIONS: tuple[tuple[int, int, int], ...] = (
    (1, 1, 1),
    (-1, 1, -1),
    (1, -1, -1),
    (-1, -1, 1),
)

# Flip sets (1-based axes) per Cartesian component; NV1 is never flipped
FLIPPED_AXES: dict[str, tuple[int, ...]] = {
    "x": (2, 4),
    "y": (3, 4),
    "z": (2, 3),
}

_INV_SQRT3 = 1.0 / math.sqrt(3.0)


def axis_unit_vectors() -> AxisSet:
    """Return the four NV axes normalized to unit length."""
    axes = tuple(tuple(c * _INV_SQRT3 for c in d) for d in AXIS_DIRECTIONS)
    return AxisSet(axes=axes)  # type: ignore[arg-type]


def axis_matrix() -> np.ndarray:
    """4×3 matrix whose rows are the unit axes."""
    return np.asarray(AXIS_DIRECTIONS, dtype=float) * _INV_SQRT3


def exact_dot(i: int, j: int) -> Fraction:
    """Exact dot product of unit axes i and j (1-based)."""
    a, b = AXIS_DIRECTIONS[i - 1], AXIS_DIRECTIONS[j - 1]
    return Fraction(sum(x * y for x, y in zip(a, b)), 3)


def exact_axis_sum() -> tuple[int, int, int]:
    """Exact sum of the integer direction vectors."""
    x, y, z = (sum(d[k] for d in AXIS_DIRECTIONS) for k in range(3))
    return (x, y, z)


def exact_signed_sum(pattern: SignPattern) -> tuple[int, int, int]:
    """Σ s_n·d_n over integer directions; the unit-axis sum is this divided by √3."""
    x, y, z = (
        sum(s * d[k] for s, d in zip(pattern.signs, AXIS_DIRECTIONS)) for k in range(3)
    )
    return (x, y, z)


def project_field(field_t: Vector3 | np.ndarray, axis_index: int) -> float:
    """Projection B·u_n of a field onto axis n (1-based)."""
    if not 1 <= axis_index <= 4:
        raise ValueError(f"axis_index must be in 1..4, got {axis_index}")
    return float(np.dot(axis_matrix()[axis_index - 1], np.asarray(field_t, dtype=float)))


def project_all(field_t: Vector3 | np.ndarray) -> np.ndarray:
    """Projections onto all four axes."""
    return axis_matrix() @ np.asarray(field_t, dtype=float)


def sign_pattern(component: Component) -> SignPattern:
    """Readout sign pattern whose signed axis sum points along one component."""
    if component not in FLIPPED_AXES:
        raise ValueError(f"Unknown component '{component}'")
    flipped = FLIPPED_AXES[component]
    a, b, c, d = (-1 if n in flipped else 1 for n in range(1, 5))
    return SignPattern(component=component, signs=(a, b, c, d))


def best_sign_pattern(direction: Vector3 | np.ndarray) -> tuple[int, int, int, int]:
    """Signs s_n = sign(u_n·b̂) maximizing the summed response along a known direction."""
    proj = project_all(direction)
    a, b, c, d = (1 if p >= 0 else -1 for p in proj)
    return (a, b, c, d)


def resonance_frequencies(
    field_t: Vector3 | np.ndarray,
    zero_field_splitting_hz: float,
    gyromagnetic_ratio_hz_per_t: float,
) -> list[tuple[float, float]]:
    """
    First-order Zeeman resonances per axis.

    Returns:
        Four (f_lower, f_upper) pairs in NV1..NV4 order.
    """
    if zero_field_splitting_hz <= 0 or gyromagnetic_ratio_hz_per_t <= 0:
        raise ValueError("zero-field splitting and gyromagnetic ratio must be positive")
    shifts = gyromagnetic_ratio_hz_per_t * np.abs(project_all(field_t))
    return [
        (zero_field_splitting_hz - float(s), zero_field_splitting_hz + float(s)) for s in shifts
    ]


def _solve_assignment(
    signs: np.ndarray,
    freqs: np.ndarray,
    d_hz: float,
    gamma: float,
    branch_sign: float,
    fit_splitting: bool,
) -> tuple[np.ndarray, float, float] | None:
    """Least-squares field (and optionally D) for one sign assignment."""
    n = axis_matrix()
    # branch_sign·(D - f_n)/γ = |u_n·B| = s_n·u_n·B
    if fit_splitting:
        if signs.sum() == 0:
            return None
        # D is solved in units of the starting value to keep the system well conditioned
        a = np.hstack([n, (-branch_sign * signs * d_hz / gamma)[:, None]])
        rhs = -branch_sign * signs * freqs / gamma
        sol, *_ = np.linalg.lstsq(a, rhs, rcond=None)
        field, d_fit = sol[:3], float(sol[3]) * d_hz
        magnitudes = branch_sign * (d_fit - freqs) / gamma
        if np.any(magnitudes < -1e-15):
            return None
        residual = float(np.linalg.norm(a @ sol - rhs))
        return field, d_fit, residual
    magnitudes = branch_sign * (d_hz - freqs) / gamma
    rhs = signs * magnitudes
    field, *_ = np.linalg.lstsq(n, rhs, rcond=None)
    residual = float(np.linalg.norm(n @ field - rhs))
    return field, d_hz, residual


@cached(
    cache=LRUCache(maxsize=settings.calibration_cache_maxsize),
    lock=Lock(),
)
def _calibrate_cached(
    freqs: tuple[float, ...],
    d_hz: float,
    gamma: float,
    branch: Branch | None,
    fit_splitting: bool,
    threshold_t: float,
) -> StaticFieldCalibration:
    f = np.asarray(freqs, dtype=float)
    if branch is None:
        if np.all(f <= d_hz):
            branch = "lower"
        elif np.all(f >= d_hz):
            branch = "upper"
        else:
            raise InvalidBranch(
                f"Frequencies {list(freqs)} straddle D = {d_hz:.6e} Hz; pass an explicit branch"
            )
    elif not fit_splitting:
        ok = np.all(f <= d_hz) if branch == "lower" else np.all(f >= d_hz)
        if not ok:
            raise InvalidBranch(f"Frequencies {list(freqs)} are not all on the {branch} branch")
    branch_sign = 1.0 if branch == "lower" else -1.0

    candidates: list[CalibrationCandidate] = []
    for combo in itertools.product((1, -1), repeat=4):
        signs = np.asarray(combo, dtype=float)
        solved = _solve_assignment(signs, f, d_hz, gamma, branch_sign, fit_splitting)
        if solved is None:
            continue
        field, d_fit, residual = solved
        candidates.append(
            CalibrationCandidate(
                signs=combo,  # type: ignore[arg-type]
                field_t=tuple(float(x) for x in field),  # type: ignore[arg-type]
                zero_field_splitting_hz=d_fit,
                residual_t=residual,
            )
        )
    if not candidates:
        raise NoConsistentSignAssignment(float("inf"), threshold_t)

    best = min(candidates, key=lambda c: c.residual_t)
    if best.residual_t > threshold_t:
        raise NoConsistentSignAssignment(best.residual_t, threshold_t)

    limit = 2.0 * best.residual_t + 1e-12
    ambiguous = tuple(c for c in candidates if c.residual_t <= limit)
    if len(ambiguous) > 1:
        logger.info(
            f"Static-field calibration: {len(ambiguous)} sign assignments within 2x of best "
            f"residual {best.residual_t:.3e} T: {[c.signs for c in ambiguous]}"
        )

    return StaticFieldCalibration(
        field_t=best.field_t,
        frequencies_hz=tuple(freqs),  # type: ignore[arg-type]
        zero_field_splitting_hz=best.zero_field_splitting_hz,
        gyromagnetic_ratio_hz_per_t=gamma,
        branch=branch,
        signs=best.signs,
        residual_t=best.residual_t,
        candidates=ambiguous,
    )


def calibrate_static_field(
    frequencies_hz: tuple[float, float, float, float] | list[float],
    zero_field_splitting_hz: float,
    gyromagnetic_ratio_hz_per_t: float,
    branch: Branch | None = None,
    fit_splitting: bool = False,
    threshold_t: float | None = None,
) -> StaticFieldCalibration:
    """
    Recover the bias field from four measured single-branch resonances.

    Every one of the 2^4 sign assignments of |B·u_n| = ±(D − f_n)/γ is solved
    by least squares and the one with the smallest residual is returned. The
    assignments within 2× of the best residual are kept in ``candidates``;
    B and −B always tie.

    Args:
        frequencies_hz: Measured resonances in NV1..NV4 order.
        zero_field_splitting_hz: D, or the starting value when ``fit_splitting``.
        gyromagnetic_ratio_hz_per_t: γ.
        branch: "lower" or "upper"; inferred from the data when None.
        fit_splitting: Also fit an effective D (4 equations, 4 unknowns).
        threshold_t: Largest acceptable residual; defaults to settings.

    Raises:
        InvalidBranch: Frequencies straddle D.
        NoConsistentSignAssignment: Best residual exceeds the threshold.
    """
    if len(frequencies_hz) != 4:
        raise ValueError("exactly four resonance frequencies are required")
    threshold = settings.calibration_residual_threshold_t if threshold_t is None else threshold_t
    return _calibrate_cached(
        tuple(float(f) for f in frequencies_hz),
        float(zero_field_splitting_hz),
        float(gyromagnetic_ratio_hz_per_t),
        branch,
        fit_splitting,
        float(threshold),
    )
