from nv_multifreq.models.common import (
    AxisSet,
    CalibrationCandidate,
    DriveConfig,
    EchoConfig,
    EnsembleConfig,
    NoiseFloorConfig,
    SignPattern,
    StaticFieldCalibration,
    TwoLevelState,
)
from nv_multifreq.models.results import (
    AxisSensitivity,
    ComponentSensitivity,
    Estimate,
    NoisePoint,
    NoiseSeries,
    OdmrResonance,
    OdmrResult,
    RabiResult,
    ReadoutSample,
    SensitivityReport,
    SweepMetadata,
    SweepResult,
    VectorEstimate,
)
from nv_multifreq.models.sequence import (
    Channel,
    ChannelAssignment,
    PulseEvent,
    SequenceMode,
    SequenceProgram,
)

__all__ = [
    "AxisSet",
    "CalibrationCandidate",
    "DriveConfig",
    "EchoConfig",
    "EnsembleConfig",
    "NoiseFloorConfig",
    "SignPattern",
    "StaticFieldCalibration",
    "TwoLevelState",
    "AxisSensitivity",
    "ComponentSensitivity",
    "Estimate",
    "NoisePoint",
    "NoiseSeries",
    "OdmrResonance",
    "OdmrResult",
    "RabiResult",
    "ReadoutSample",
    "SensitivityReport",
    "SweepMetadata",
    "SweepResult",
    "VectorEstimate",
    "Channel",
    "ChannelAssignment",
    "PulseEvent",
    "SequenceMode",
    "SequenceProgram",
]
