import json

from nv_multifreq import __version__
from nv_multifreq.models.results import SweepMetadata, SweepResult
from nv_multifreq.models.run import RunConfig
from nv_multifreq.utils.artifacts import config_hash, csv_provenance, sweep_to_csv, to_json, write_artifacts


def _sweep() -> SweepResult:
    return SweepResult(
        kind="echo",
        grid=[-1e-7, 0.0, 1e-7],
        mean=[0.98, 0.985, 0.99],
        stddev=[1e-4, 1e-4, 1e-4],
        counts=[100, 101, 102],
        metadata=SweepMetadata(label="echo_NV1", mode="single_frequency:NV1"),
    )


def test_config_hash_is_stable_and_sensitive():
    a = RunConfig(seed=1)
    assert config_hash(a) == config_hash(RunConfig(seed=1))
    assert config_hash(a) != config_hash(RunConfig(seed=2))
    assert len(config_hash(a)) == 64


def test_sweep_csv_layout():
    lines = sweep_to_csv(_sweep()).splitlines()
    assert lines[0] == "x,mean,stddev,counts"
    assert lines[2] == "0.0,0.985,0.0001,101"
    assert len(lines) == 4


def test_json_carries_provenance():
    text = to_json({"b": 1, "a": 2}, "abc", 5)
    doc = json.loads(text)
    assert doc["tool_version"] == __version__
    assert doc["config_hash"] == "abc"
    assert doc["seed"] == 5
    keys = [line.split(":")[0].strip().strip('"') for line in text.splitlines()[1:-1]]
    assert keys == sorted(keys)


def test_write_artifacts_creates_directory(tmp_path):
    out = tmp_path / "nested" / "run"
    written = write_artifacts(out, {"b.csv": "x\n", "a.json": "{}\n"})
    assert [p.name for p in written] == ["a.json", "b.csv"]
    assert (out / "b.csv").read_text(encoding="utf-8") == "x\n"


def test_written_csv_leads_with_provenance(tmp_path):
    digest = config_hash(RunConfig(seed=3))
    write_artifacts(tmp_path, {"echo_NV1.csv": sweep_to_csv(_sweep()), "report.json": "{}\n"}, digest, 3)
    lines = (tmp_path / "echo_NV1.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == f"# config_hash={digest} seed=3 tool_version={__version__}"
    assert lines[1] == "x,mean,stddev,counts"
    assert (tmp_path / "report.json").read_text(encoding="utf-8") == "{}\n"


def test_provenance_without_seed():
    assert csv_provenance("abc", None) == f"# config_hash=abc seed=none tool_version={__version__}\n"
