import os
from pathlib import Path

# Keep test runs from writing rotating log files into the working tree
os.environ.setdefault("NV_MULTIFREQ_LOG_TO_FILE", "false")

import pytest  # noqa: E402

from nv_multifreq.models.common import DriveConfig, EchoConfig, EnsembleConfig  # noqa: E402
from nv_multifreq.models.sequence import ChannelAssignment, SequenceMode  # noqa: E402
from nv_multifreq.sequence import build_echo_sequence  # noqa: E402

REPO_ROOT = Path(__file__).resolve().parent.parent

# Well separated lower-branch tones (50 MHz apart)
TONES_HZ = (2.70e9, 2.75e9, 2.80e9, 2.85e9)
MEASURED_RATIOS = (0.29, 0.35, 0.21, 0.15)
MEASURED_FREQUENCIES_HZ = (2.720e9, 2.806e9, 2.826e9, 2.862e9)
FIELD_DIRECTION = (0.23, 0.16, -0.97)


@pytest.fixture
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture
def ensemble() -> EnsembleConfig:
    return EnsembleConfig()


@pytest.fixture
def measured_ensemble() -> EnsembleConfig:
    return EnsembleConfig(ratios=MEASURED_RATIOS)


@pytest.fixture
def echo() -> EchoConfig:
    return EchoConfig(tau_s=1e-5, f_ac_hz=1e5)


@pytest.fixture
def drive() -> DriveConfig:
    return DriveConfig(rabi_frequency_hz=2.5e6)


@pytest.fixture
def assignment() -> ChannelAssignment:
    return ChannelAssignment.default(TONES_HZ)


@pytest.fixture
def programs(echo, drive, assignment):
    """All seven echo programs keyed NV1..NV4, x, y, z."""
    out = {}
    for n in range(1, 5):
        out[f"NV{n}"] = build_echo_sequence(SequenceMode.single(n), echo.tau_s, drive, assignment)
    for k in ("x", "y", "z"):
        out[k] = build_echo_sequence(SequenceMode.multi(k), echo.tau_s, drive, assignment)
    return out
