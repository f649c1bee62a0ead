import functools
from dataclasses import dataclass
from pathlib import Path

import click

from nv_multifreq import __version__
from nv_multifreq.config import settings
from nv_multifreq.exceptions import ConfigError, SimulationError
from nv_multifreq.experiments import AVAILABLE_EXPERIMENTS
from nv_multifreq.experiments.base import RunContext
from nv_multifreq.experiments.common import static_calibration
from nv_multifreq.experiments.registry import ExperimentRegistry
from nv_multifreq.experiments.sensitivity import SCHEMES
from nv_multifreq.models.run import RunConfig
from nv_multifreq.models.sequence import ChannelAssignment, SequenceMode
from nv_multifreq.sequence import (
    build_echo_sequence,
    parse_sequence,
    serialize_sequence,
    validate_against_topology,
)
from nv_multifreq.utils.artifacts import config_hash, write_artifacts
from nv_multifreq.utils.logger import log_error, log_run_start, logger

DEFAULT_OUT_DIR = "results"


@dataclass
class CliState:
    config_path: Path | None
    seed: int | None
    out_dir: Path | None
    threads: int


def register_experiments() -> None:
    """Register every known experiment once per process."""
    ExperimentRegistry.register_all(AVAILABLE_EXPERIMENTS)


def handle_errors(func):
    """Map simulation errors onto exit codes with a message on standard error."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except SimulationError as exc:
            log_error(exc.error_type, exc.message)
            click.echo(f"error[{exc.error_type}]: {exc.message}", err=True)
            raise SystemExit(exc.exit_code) from None
        except ValueError as exc:
            # Precondition failures inside a simulation (e.g. a grid that misses a resonance)
            log_error("invalid_input", str(exc))
            click.echo(f"error[invalid_input]: {exc}", err=True)
            raise SystemExit(2) from None

    return wrapper


def _load_config(state: CliState) -> RunConfig:
    if state.config_path is None:
        raise ConfigError("no config given; pass --config <path>")
    return RunConfig.load(state.config_path)


def _run_experiment(state: CliState, name: str, options: dict[str, str] | None = None) -> None:
    register_experiments()
    config = _load_config(state)
    experiment = ExperimentRegistry.get(name)
    seed = state.seed if state.seed is not None else config.seed
    digest = config_hash(config)
    run_seed = seed if experiment.needs_seed else None
    log_run_start(name, digest, run_seed, state.threads)

    context = RunContext(seed=seed, threads=state.threads, config_hash=digest, options=options or {})
    output = experiment.run(config, context)

    out_dir = state.out_dir or Path(config.output_dir or DEFAULT_OUT_DIR)
    written = write_artifacts(out_dir, output.files, digest, run_seed)
    for line in output.summary:
        click.echo(line)
    logger.info(f"Wrote {len(written)} file(s) to {out_dir}")


@click.group()
@click.version_option(__version__, prog_name="nv-multifreq")
@click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="JSON run config.",
)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Monte Carlo seed (u64).")
@click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Output directory (default: config output_dir or ./results).",
)
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker threads.")
@click.pass_context
def main(
    ctx: click.Context,
    config_path: Path | None,
    seed: int | None,
    out_dir: Path | None,
    threads: int | None,
) -> None:
    """NV ensemble multi-frequency Hahn-echo magnetometry simulator."""
    ctx.obj = CliState(
        config_path=config_path,
        seed=seed,
        out_dir=out_dir,
        threads=threads or settings.default_threads,
    )


@main.command()
@click.pass_obj
@handle_errors
def odmr(state: CliState) -> None:
    """Simulate a CW ODMR spectrum and fit its resonances."""
    _run_experiment(state, "odmr")


@main.command()
@click.pass_obj
@handle_errors
def rabi(state: CliState) -> None:
    """Simulate Rabi oscillations per axis and fit transition ratios."""
    _run_experiment(state, "rabi")


@main.command("echo-sweep")
@click.option(
    "--modes",
    default="",
    help="Comma-separated programs (NV1..NV4, x, y, z); all when empty.",
)
@click.pass_obj
@handle_errors
def echo_sweep(state: CliState, modes: str) -> None:
    """Sweep the AC amplitude for echo programs and measure noise scaling."""
    _run_experiment(state, "echo-sweep", {"modes": modes})


@main.command()
@click.option("--scheme", type=click.Choice(SCHEMES), default="both", show_default=True)
@click.pass_obj
@handle_errors
def sensitivity(state: CliState, scheme: str) -> None:
    """Compare per-component sensitivities of both schemes."""
    _run_experiment(state, "sensitivity", {"scheme": scheme})


@main.command()
@click.pass_obj
@handle_errors
def vector(state: CliState) -> None:
    """Estimate the configured field vector with both schemes."""
    _run_experiment(state, "vector")


@main.group()
def seq() -> None:
    """Sequence file tools."""


def _assignment(state: CliState) -> ChannelAssignment | None:
    if state.config_path is None:
        return None
    return ChannelAssignment.from_calibration(static_calibration(_load_config(state)))


@seq.command("check")
@click.argument("path", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--strict/--no-strict", default=True, help="Require phases on the π/2 grid.")
@click.pass_obj
@handle_errors
def seq_check(state: CliState, path: Path, strict: bool) -> None:
    """Parse and validate a sequence file, then check it against the hardware."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read sequence {path}: {e.strerror or e}") from None
    assignment = _assignment(state)
    program = parse_sequence(text, assignment)
    click.echo(f"ok: {program.mode}, tau={program.tau_s!r} s, {len(program.events)} pulses")
    violations = validate_against_topology(program, assignment, strict)
    if not violations:
        click.echo("realizable on two-source hardware")
    for v in violations:
        click.echo(f"not realizable: {v}")


@seq.command("build")
@click.argument("mode")
@click.pass_obj
@handle_errors
def seq_build(state: CliState, mode: str) -> None:
    """Print the program for MODE, e.g. multi_frequency:x or single_frequency:NV1."""
    try:
        parsed = SequenceMode.parse(mode)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    config = _load_config(state) if state.config_path is not None else RunConfig()
    assignment = ChannelAssignment.from_calibration(static_calibration(config))
    program = build_echo_sequence(
        parsed, config.echo.tau_s, config.drive_config(), assignment, config.echo.readout_offset_rad
    )
    click.echo(serialize_sequence(program), nl=False)


if __name__ == "__main__":
    main()
