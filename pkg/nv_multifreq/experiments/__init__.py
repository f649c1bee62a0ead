from nv_multifreq.experiments.base import Experiment, ExperimentOutput, RunContext
from nv_multifreq.experiments.echo import EchoSweepExperiment
from nv_multifreq.experiments.odmr import OdmrExperiment
from nv_multifreq.experiments.rabi import RabiExperiment
from nv_multifreq.experiments.registry import ExperimentRegistry
from nv_multifreq.experiments.sensitivity import SensitivityExperiment
from nv_multifreq.experiments.vector import VectorExperiment

# Command name -> experiment class; the CLI registers every entry
AVAILABLE_EXPERIMENTS = {
    "odmr": OdmrExperiment,
    "rabi": RabiExperiment,
    "echo-sweep": EchoSweepExperiment,
    "sensitivity": SensitivityExperiment,
    "vector": VectorExperiment,
}

__all__ = [
    "Experiment",
    "ExperimentOutput",
    "RunContext",
    "ExperimentRegistry",
    "OdmrExperiment",
    "RabiExperiment",
    "EchoSweepExperiment",
    "SensitivityExperiment",
    "VectorExperiment",
    "AVAILABLE_EXPERIMENTS",
]
