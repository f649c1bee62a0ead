from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Process-level settings loaded from environment variables."""

    # Logging settings
    log_level: str = "INFO"  # DEBUG, INFO, WARNING, ERROR
    log_dir: str = "logs"
    log_to_file: bool = True

    # Static-field calibration
    calibration_residual_threshold_t: float = 1e-5  # Max acceptable fit residual (tesla)
    calibration_cache_maxsize: int = 256

    # Numeric propagator
    propagator_steps_per_cycle: int = 1000  # Steps per period of the effective Rabi frequency
    propagator_max_steps: int = 5_000_000

    # Analysis
    zero_gradient_threshold: float = 1e-12  # |dP/dB| below this (per tesla) is degenerate
    gradient_window_fraction: float = 0.2  # Central share of the swept amplitude range
    linear_window_rad: float = 0.3
    rabi_fit_rms_threshold: float = 0.5  # Residual RMS relative to fitted amplitude
    selectivity_margin_factor: float = 10.0  # Channel spacing in units of Rabi frequency

    # Execution
    default_threads: int = 1

    model_config = {
        "env_file": ".env",
        "env_prefix": "NV_MULTIFREQ_",
        "env_nested_delimiter": "__",
    }


settings = Settings()
