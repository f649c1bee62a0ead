from collections.abc import Mapping

from nv_multifreq.exceptions import ConfigError
from nv_multifreq.experiments.base import Experiment


class ExperimentRegistry:
    """Experiment instances by command name, one per process."""

    _experiments: dict[str, Experiment] = {}

    @classmethod
    def register(cls, experiment: Experiment) -> None:
        """
        Register an experiment under its own name.

        Registering the same class twice keeps the first instance.

        Raises:
            ValueError: The name is already taken by another class.
        """
        existing = cls._experiments.get(experiment.name)
        if existing is None:
            cls._experiments[experiment.name] = experiment
        elif type(existing) is not type(experiment):
            raise ValueError(
                f"experiment name '{experiment.name}' already registered by {type(existing).__name__}"
            )

    @classmethod
    def register_all(cls, classes: Mapping[str, type[Experiment]]) -> None:
        """Instantiate and register each class not yet known, checking command names."""
        for command, experiment_class in classes.items():
            if command in cls._experiments:
                continue
            experiment = experiment_class()
            if experiment.name != command:
                raise ValueError(f"{experiment_class.__name__} is named '{experiment.name}', not '{command}'")
            cls.register(experiment)

    @classmethod
    def get(cls, name: str) -> Experiment:
        """
        Look up an experiment.

        Raises:
            ConfigError: Unknown name; the message lists what is registered.
        """
        try:
            return cls._experiments[name]
        except KeyError:
            known = ", ".join(cls.list_experiments()) or "none"
            raise ConfigError(f"unknown experiment '{name}' (registered: {known})") from None

    @classmethod
    def list_experiments(cls) -> list[str]:
        return sorted(cls._experiments)

    @classmethod
    def clear(cls) -> None:
        cls._experiments.clear()
