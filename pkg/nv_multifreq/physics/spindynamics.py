"""
Effective two-level spin dynamics for one axis sub-ensemble.

Readout convention, used everywhere: with the refocusing π pulse along the
first pulse's axis,

    P(|0⟩) = ½ [1 + V·cos(φ − θ)]

where φ is the echo phase and θ the phase of the final π/2 pulse relative to
the first. θ = π/2 is the linear (quadrature) operating point; a 180° flip
adds π to θ.
"""

import math
from collections.abc import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from nv_multifreq.config import settings
from nv_multifreq.exceptions import StepSizeUnderflow
from nv_multifreq.models.common import DriveConfig, EchoConfig, TwoLevelState

TWO_PI = 2.0 * math.pi

DetuningFn = Callable[[float], float]


def accumulated_phase(b_parallel_t: float, echo: EchoConfig, gamma_hz_per_t: float) -> float:
    """
    Echo phase from an AC field b(t) = b·sin(2π f_ac t + phase0) along the axis.

    φ = 2πγ [∫₀^{τ/2} b dt − ∫_{τ/2}^{τ} b dt], evaluated in closed form. A
    static field (f_ac = 0) is refocused exactly.
    """
    if b_parallel_t == 0.0 or echo.f_ac_hz == 0.0:
        return 0.0
    omega = TWO_PI * echo.f_ac_hz
    tau = echo.tau_s
    p0 = echo.phase0_rad
    # Equals cos p0 − 2cos(ωτ/2 + p0) + cos(ωτ + p0)
    bracket = -4.0 * math.sin(omega * tau / 4.0) ** 2 * math.cos(p0 + omega * tau / 2.0)
    return TWO_PI * gamma_hz_per_t * b_parallel_t * bracket / omega


def accumulated_phase_quadrature(
    b_parallel_t: float, echo: EchoConfig, gamma_hz_per_t: float
) -> float:
    """Same phase by adaptive numerical quadrature of the two half-intervals."""

    def field(t: float) -> float:
        return b_parallel_t * math.sin(TWO_PI * echo.f_ac_hz * t + echo.phase0_rad)

    half = echo.tau_s / 2.0
    first, _ = quad(field, 0.0, half, epsabs=0.0, epsrel=1e-13, limit=200)
    second, _ = quad(field, half, echo.tau_s, epsabs=0.0, epsrel=1e-13, limit=200)
    return TWO_PI * gamma_hz_per_t * (first - second)


def phase_per_tesla(echo: EchoConfig, gamma_hz_per_t: float) -> float:
    """Slope dφ/db of the echo phase (rad/T)."""
    return accumulated_phase(1.0, echo, gamma_hz_per_t)


def echo_population(phase_rad: float, visibility: float, readout_phase_rad: float) -> float:
    """P(|0⟩) = ½[1 + V·cos(φ − θ)]."""
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {visibility}")
    return 0.5 * (1.0 + visibility * math.cos(phase_rad - readout_phase_rad))


def echo_visibility(tau_s: float, t2_s: float, stretch: float, fidelity: float) -> float:
    """V = F·exp(−(τ/T2)^p) for pulse fidelity F."""
    if t2_s <= 0 or stretch <= 0:
        raise ValueError("T2 and stretch exponent must be positive")
    if not 0.0 <= fidelity <= 1.0:
        raise ValueError(f"pulse fidelity must lie in [0, 1], got {fidelity}")
    return fidelity * math.exp(-((tau_s / t2_s) ** stretch))


def readout_phase_for_sign(sign: int, offset_rad: float = math.pi / 2) -> float:
    """Readout phase θ for a ±1 sign; −1 adds a 180° flip."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return offset_rad + (math.pi if sign == -1 else 0.0)


def _rotation_vector(rabi_hz: float, phase_rad: float, detuning_hz: float) -> np.ndarray:
    return TWO_PI * np.array(
        [rabi_hz * math.cos(phase_rad), rabi_hz * math.sin(phase_rad), detuning_hz]
    )


def _rk4_bloch(
    r: np.ndarray,
    t0: float,
    duration: float,
    steps: int,
    rabi_hz: float,
    phase_rad: float,
    detuning: DetuningFn,
) -> np.ndarray:
    """Fixed-step RK4 on dr/dt = ω(t) × r."""
    h = duration / steps
    drive_x = TWO_PI * rabi_hz * math.cos(phase_rad)
    drive_y = TWO_PI * rabi_hz * math.sin(phase_rad)

    def deriv(t: float, v: np.ndarray) -> np.ndarray:
        w = np.array([drive_x, drive_y, TWO_PI * detuning(t)])
        return np.cross(w, v)

    t = t0
    for _ in range(steps):
        k1 = deriv(t, r)
        k2 = deriv(t + h / 2, r + h / 2 * k1)
        k3 = deriv(t + h / 2, r + h / 2 * k2)
        k4 = deriv(t + h, r + h * k3)
        r = r + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return r


def propagate_two_level(
    state: TwoLevelState,
    drive: DriveConfig,
    detuning_fn: DetuningFn | None = None,
    t0_s: float = 0.0,
    max_detuning_hz: float = 0.0,
    min_rate_hz: float = 0.0,
) -> TwoLevelState:
    """
    Rotating-frame evolution under H/h = (Δ/2)σz + (Ω/2)(cos ϕ σx + sin ϕ σy).

    Integrated with fixed-step RK4; the step is at most
    1/(steps_per_cycle·√(Ω² + Δ²)). A time-dependent detuning may be given
    through ``detuning_fn`` (absolute time), in which case ``max_detuning_hz``
    and ``min_rate_hz`` bound its size and bandwidth for step selection.

    Raises:
        StepSizeUnderflow: More steps than ``settings.propagator_max_steps``.
    """
    if drive.duration_s == 0.0:
        return state
    rate = max(
        drive.effective_frequency_hz,
        math.hypot(drive.rabi_frequency_hz, max_detuning_hz),
        min_rate_hz,
    )
    if rate == 0.0:
        return state
    steps = max(1, math.ceil(drive.duration_s * rate * settings.propagator_steps_per_cycle))
    if steps > settings.propagator_max_steps:
        raise StepSizeUnderflow(steps, settings.propagator_max_steps)

    detuning: DetuningFn = detuning_fn if detuning_fn is not None else (lambda _t: drive.detuning_hz)
    r = _rk4_bloch(
        np.asarray(state.bloch, dtype=float),
        t0_s,
        drive.duration_s,
        steps,
        drive.rabi_frequency_hz,
        drive.pulse_phase_rad,
        detuning,
    )
    return TwoLevelState(bloch=(float(r[0]), float(r[1]), float(r[2])))


def rotate_instantaneous(state: TwoLevelState, angle_rad: float, phase_rad: float) -> TwoLevelState:
    """Ideal zero-duration rotation about (cos ϕ, sin ϕ, 0)."""
    n = np.array([math.cos(phase_rad), math.sin(phase_rad), 0.0])
    v = np.asarray(state.bloch, dtype=float)
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    out = v * c + np.cross(n, v) * s + n * np.dot(n, v) * (1.0 - c)
    return TwoLevelState(bloch=(float(out[0]), float(out[1]), float(out[2])))


def rabi_population(time_s: float, rabi_hz: float, detuning_hz: float = 0.0) -> float:
    """Analytic P(|1⟩) = Ω²/(Ω²+Δ²)·sin²(π√(Ω²+Δ²)·t)."""
    eff = math.hypot(rabi_hz, detuning_hz)
    if eff == 0.0:
        return 0.0
    return (rabi_hz / eff) ** 2 * math.sin(math.pi * eff * time_s) ** 2


def _echo_numeric(
    b_parallel_t: float,
    echo: EchoConfig,
    gamma_hz_per_t: float,
    readout_phase_rad: float,
    drive: DriveConfig | None,
) -> float:
    """P(|0⟩) from explicit π/2–π–π/2 propagation without decay."""

    def detuning(t: float) -> float:
        # Lower-branch transition shifts down by γ·b
        return -gamma_hz_per_t * b_parallel_t * math.sin(
            TWO_PI * echo.f_ac_hz * t + echo.phase0_rad
        )

    b_max = abs(gamma_hz_per_t * b_parallel_t)
    state = TwoLevelState.ground()
    tau = echo.tau_s
    half = tau / 2.0
    if drive is None:
        free = DriveConfig(rabi_frequency_hz=0.0, duration_s=half)
        state = rotate_instantaneous(state, math.pi / 2, 0.0)
        state = propagate_two_level(
            state, free, detuning, 0.0, b_max, min_rate_hz=max(echo.f_ac_hz, 1.0 / tau)
        )
        state = rotate_instantaneous(state, math.pi, 0.0)
        state = propagate_two_level(
            state, free, detuning, half, b_max, min_rate_hz=max(echo.f_ac_hz, 1.0 / tau)
        )
        state = rotate_instantaneous(state, math.pi / 2, readout_phase_rad)
        return state.population_0

    # Finite pulses: τ between the centres of the two π/2 pulses
    d90 = 1.0 / (4.0 * drive.rabi_frequency_hz)
    d180 = 2.0 * d90
    gap = half - d90 / 2.0 - d180 / 2.0
    if gap < 0:
        raise ValueError("echo time too short for the configured pulses")

    def segment(s: TwoLevelState, rabi: float, phase: float, start: float, dur: float) -> TwoLevelState:
        cfg = DriveConfig(rabi_frequency_hz=rabi, pulse_phase_rad=phase, duration_s=dur)
        return propagate_two_level(
            s, cfg, detuning, start, b_max, min_rate_hz=max(echo.f_ac_hz, 1.0 / tau)
        )

    # Shift the AC origin so that the first pulse centre is t = 0
    t = -d90 / 2.0
    state = segment(state, drive.rabi_frequency_hz, 0.0, t, d90)
    t += d90
    state = segment(state, 0.0, 0.0, t, gap)
    t += gap
    state = segment(state, drive.rabi_frequency_hz, 0.0, t, d180)
    t += d180
    state = segment(state, 0.0, 0.0, t, gap)
    t += gap
    state = segment(state, drive.rabi_frequency_hz, readout_phase_rad, t, d90)
    return state.population_0


def run_hahn_echo(
    b_parallel_t: Sequence[float],
    echo: EchoConfig,
    gamma_hz_per_t: float,
    signs: Sequence[int],
    t2_s: float,
    stretch: float = 1.0,
    fidelity: Sequence[float] | None = None,
    drive: DriveConfig | None = None,
    numeric: bool = False,
    readout_offset_rad: float = math.pi / 2,
) -> list[float]:
    """
    Per-axis P(|0⟩) after a Hahn echo.

    Composes accumulated_phase, echo_visibility and echo_population with
    θ = offset + (π if sign = −1). With ``numeric`` the explicit pulse train is
    propagated instead (ideal pulses unless ``drive`` is given) and the
    decay-free result is scaled by the visibility.
    """
    if fidelity is None:
        fidelity = [1.0] * len(b_parallel_t)
    if not (len(b_parallel_t) == len(signs) == len(fidelity)):
        raise ValueError("per-axis inputs must have equal length")
    populations: list[float] = []
    for b, sign, f in zip(b_parallel_t, signs, fidelity):
        theta = readout_phase_for_sign(sign, readout_offset_rad)
        visibility = echo_visibility(echo.tau_s, t2_s, stretch, f)
        if numeric:
            p_ideal = _echo_numeric(b, echo, gamma_hz_per_t, theta, drive)
            populations.append(0.5 + visibility * (p_ideal - 0.5))
        else:
            phase = accumulated_phase(b, echo, gamma_hz_per_t)
            populations.append(echo_population(phase, visibility, theta))
    return populations
