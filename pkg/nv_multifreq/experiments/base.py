from abc import ABC, abstractmethod

from pydantic import Field

from nv_multifreq.models.common import FrozenModel
from nv_multifreq.models.run import RunConfig


class RunContext(FrozenModel):
    """Per-invocation settings shared by every experiment."""

    seed: int | None = None
    threads: int = Field(default=1, ge=1)
    config_hash: str | None = None
    options: dict[str, str] = {}  # command-specific switches, e.g. scheme


class ExperimentOutput(FrozenModel):
    """Artifacts (file name -> text) and summary lines for standard output."""

    files: dict[str, str] = {}
    summary: list[str] = []


class Experiment(ABC):
    """Abstract base class for simulated experiments."""

    @property
    @abstractmethod
    def name(self) -> str:
        """Experiment name as used on the command line (e.g. 'odmr')."""
        pass

    needs_seed: bool = True

    @abstractmethod
    def run(self, config: RunConfig, context: RunContext) -> ExperimentOutput:
        """
        Run the experiment.

        Args:
            config: Validated run configuration.
            context: Seed, thread count and config hash.

        Returns:
            ExperimentOutput with artifact texts and a printable summary.
        """
        pass
