import logging
import re
import sys
import threading
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import TYPE_CHECKING

from nv_multifreq.config import settings

if TYPE_CHECKING:
    from nv_multifreq.models.results import SensitivityReport, SweepResult, VectorEstimate

# Constants
LOG_FILE_MAX_BYTES = 10 * 1024 * 1024  # 10MB
LOG_FILE_BACKUP_COUNT = 5
LOG_SEPARATOR_WIDTH = 80
NT_PER_T = 1e9

# ANSI color codes
COLORS = {
    "reset": "\033[0m",
    "bold": "\033[1m",
    "dim": "\033[2m",
    "cyan": "\033[36m",
    "green": "\033[32m",
    "yellow": "\033[33m",
    "red": "\033[31m",
    "magenta": "\033[35m",
}

# Thread-safe logger initialization
_logger_lock = threading.Lock()
_logger_initialized = False


class StripAnsiFilter(logging.Filter):
    """Filter that strips ANSI escape codes from log messages."""

    ANSI_ESCAPE = re.compile(r"\x1b\[[0-9;]*m")

    def filter(self, record: logging.LogRecord) -> bool:
        if isinstance(record.msg, str):
            record.msg = self.ANSI_ESCAPE.sub("", record.msg)
        return True


def setup_logger() -> logging.Logger:
    """
    Setup the toolkit logger with file and console handlers.

    Console output goes to standard error so that tables printed on
    standard output stay machine readable.
    """
    global _logger_initialized

    logger = logging.getLogger("nv-multifreq")
    logger.setLevel(getattr(logging, settings.log_level.upper(), logging.INFO))

    with _logger_lock:
        if _logger_initialized:
            return logger
        _logger_initialized = True

        if settings.log_to_file:
            try:
                log_dir = Path(settings.log_dir)
                log_dir.mkdir(parents=True, exist_ok=True)

                file_formatter = logging.Formatter(
                    "%(asctime)s | %(levelname)-8s | %(message)s",
                    datefmt="%Y-%m-%d %H:%M:%S",
                )
                file_handler = RotatingFileHandler(
                    log_dir / "nv-multifreq.log",
                    maxBytes=LOG_FILE_MAX_BYTES,
                    backupCount=LOG_FILE_BACKUP_COUNT,
                    encoding="utf-8",
                )
                file_handler.setFormatter(file_formatter)
                file_handler.addFilter(StripAnsiFilter())
                logger.addHandler(file_handler)

            except (PermissionError, OSError) as e:
                # Fall back to console-only logging
                print(
                    f"Warning: Could not create log directory {settings.log_dir}: {e}",
                    file=sys.stderr,
                )

        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(logging.Formatter("%(message)s"))
        if not sys.stderr.isatty():
            console_handler.addFilter(StripAnsiFilter())
        logger.addHandler(console_handler)

    return logger


# Global logger instance
logger = setup_logger()


def _separator() -> str:
    c = COLORS
    return f"{c['dim']}{'─' * LOG_SEPARATOR_WIDTH}{c['reset']}"


def log_run_start(command: str, config_hash: str, seed: int | None, threads: int) -> None:
    """Log the start of a CLI run."""
    c = COLORS
    lines = [
        "",
        _separator(),
        f"{c['cyan']}{c['bold']}▶ RUN{c['reset']}  {c['green']}{command}{c['reset']}",
        _separator(),
        f"  {c['bold']}Config:{c['reset']}  {c['dim']}{config_hash[:16]}{c['reset']}",
        f"  {c['bold']}Seed:{c['reset']}    {seed if seed is not None else 'none'}",
        f"  {c['bold']}Threads:{c['reset']} {threads}",
    ]
    logger.info("\n".join(lines))


def log_sweep(sweep: "SweepResult") -> None:
    """Log a one-line sweep summary (DEBUG level)."""
    c = COLORS
    gradient = "n/a" if sweep.gradient is None else f"{sweep.gradient:.4e}"
    logger.debug(
        f"{c['cyan']}⟳ SWEEP{c['reset']} {sweep.kind} {c['dim']}{sweep.metadata.label}{c['reset']} "
        f"points={len(sweep.grid)} gradient={gradient}"
    )


def log_sensitivity(report: "SensitivityReport") -> None:
    """Log a sensitivity report in nT/√Hz."""
    c = COLORS
    lines = ["", _separator(), f"{c['green']}{c['bold']}◀ SENSITIVITY{c['reset']}", _separator()]
    for entry in report.per_axis:
        lines.append(
            f"  NV{entry.axis}: {entry.value * NT_PER_T:8.2f} ± {entry.uncertainty * NT_PER_T:.2f} nT/√Hz"
        )
    if report.multi_frequency is not None:
        mf = report.multi_frequency
        lines.append(
            f"  {c['yellow']}multi{c['reset']}: {mf.value * NT_PER_T:8.2f} ± {mf.uncertainty * NT_PER_T:.2f} nT/√Hz"
        )
    for comp in report.components:
        conv = "-" if comp.conventional is None else f"{comp.conventional.value * NT_PER_T:.2f}"
        mf = "-" if comp.multi_frequency is None else f"{comp.multi_frequency.value * NT_PER_T:.2f}"
        lines.append(f"  B{comp.component}: conventional={conv} multi={mf} nT/√Hz")
    lines.append(_separator())
    logger.info("\n".join(lines))


def log_vector(scheme: str, estimate: "VectorEstimate") -> None:
    """Log a vector estimate."""
    c = COLORS
    d = estimate.direction
    logger.info(
        f"{c['magenta']}◆ VECTOR{c['reset']} {scheme}: "
        f"({d[0]:+.4f}, {d[1]:+.4f}, {d[2]:+.4f}) |B|={estimate.amplitude_t * NT_PER_T:.3f} nT"
    )


def log_error(error_type: str, message: str) -> None:
    """Log a failed run."""
    c = COLORS
    lines = [
        "",
        _separator(),
        f"{c['red']}{c['bold']}✖ ERROR{c['reset']}  {c['dim']}[{error_type}]{c['reset']}",
        f"  {c['red']}{message}{c['reset']}",
        _separator(),
    ]
    logger.error("\n".join(lines))
