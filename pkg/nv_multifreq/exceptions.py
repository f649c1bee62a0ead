class SimulationError(Exception):
    """Base exception for simulation and analysis errors."""

    def __init__(self, exit_code: int, error_type: str, message: str):
        self.exit_code = exit_code
        self.error_type = error_type
        self.message = message
        super().__init__(message)


class ConfigError(SimulationError):
    """Run configuration could not be read or validated."""

    def __init__(self, message: str):
        super().__init__(1, "config_error", message)


class InvalidBranch(SimulationError):
    """Measured resonances straddle the zero-field splitting."""

    def __init__(self, message: str = "Resonance frequencies straddle the zero-field splitting"):
        super().__init__(2, "invalid_branch", message)


class NoConsistentSignAssignment(SimulationError):
    """No sign assignment reproduces the measured projections."""

    def __init__(self, residual_t: float, threshold_t: float):
        self.residual_t = residual_t
        super().__init__(
            2,
            "no_consistent_sign_assignment",
            f"Best calibration residual {residual_t:.3e} T exceeds threshold {threshold_t:.3e} T",
        )


class StepSizeUnderflow(SimulationError):
    """Propagation would need more steps than allowed."""

    def __init__(self, steps: int, max_steps: int):
        super().__init__(
            2, "step_size_underflow", f"Propagation needs {steps} steps (max {max_steps})"
        )


class ParseError(SimulationError):
    """Sequence text is malformed."""

    def __init__(self, message: str, line: int, column: int = 1):
        self.line = line
        self.column = column
        super().__init__(2, "parse_error", f"line {line}, column {column}: {message}")


class SequenceValidationError(SimulationError):
    """A sequence program violates one of its invariants."""

    def __init__(self, invariant: str, message: str):
        self.invariant = invariant
        super().__init__(2, "validation_error", f"{invariant}: {message}")


class InvalidTiming(SequenceValidationError):
    """Pulses overlap or the echo timing is inconsistent."""

    def __init__(self, message: str):
        super().__init__("timing", message)
        self.error_type = "invalid_timing"


class FitDiverged(SimulationError):
    """A curve fit failed or left an unacceptable residual."""

    def __init__(self, message: str):
        super().__init__(2, "fit_diverged", message)


class ZeroGradient(SimulationError):
    """Signal gradient vanishes; the field geometry is degenerate."""

    def __init__(self, geometry: str):
        self.geometry = geometry
        super().__init__(3, "zero_gradient", f"Signal gradient vanishes for {geometry}")


class AmbiguousSign(SimulationError):
    """Estimated amplitude is consistent with zero."""

    def __init__(self, amplitude_t: float, sigma_t: float):
        super().__init__(
            2,
            "ambiguous_sign",
            f"Amplitude {amplitude_t:.3e} T is within 3 sigma ({sigma_t:.3e} T) of zero",
        )


class LinearWindowExceeded(SimulationError):
    """Field drives an axis outside the linear response window."""

    def __init__(self, phase_rad: float, limit_rad: float):
        super().__init__(
            2,
            "linear_window_exceeded",
            f"Echo phase {phase_rad:.3f} rad exceeds linear window {limit_rad:.3f} rad",
        )
