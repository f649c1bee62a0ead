import json

import pytest
from click.testing import CliRunner

from nv_multifreq import __version__
from nv_multifreq.main import main
from nv_multifreq.models.run import RunConfig
from nv_multifreq.models.sequence import SequenceMode
from nv_multifreq.sequence import parse_sequence, serialize_sequence
from nv_multifreq.utils.artifacts import config_hash

SMALL_ECHO_CONFIG = {
    "schema_version": 1,
    "static_field": {"vector_t": [0.001, 0.003, 0.008]},
    "sweeps": {
        "amplitude_points": 11,
        "repetitions": 10,
        "noise_times_s": [0.001, 0.01, 0.1],
        "noise_repetitions": 10,
    },
    "seed": 99,
}


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL_ECHO_CONFIG), encoding="utf-8")
    return path


def test_version(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_odmr_on_measured_config(runner, repo_root, tmp_path):
    config = repo_root / "configs" / "measured.json"
    result = runner.invoke(main, ["--config", str(config), "--out", str(tmp_path), "odmr"])
    assert result.exit_code == 0, result.output
    assert "8 resonances (GHz):" in result.output
    assert "  2.720" in result.output
    provenance, header = (tmp_path / "odmr.csv").read_text(encoding="utf-8").splitlines()[:2]
    digest = config_hash(RunConfig.load(config))
    assert provenance == f"# config_hash={digest} seed=none tool_version={__version__}"
    assert header == "x,mean,stddev,counts"


def test_zero_field_odmr_has_one_line(runner, repo_root, tmp_path):
    config = repo_root / "configs" / "zero_field.json"
    result = runner.invoke(main, ["--config", str(config), "--out", str(tmp_path), "odmr"])
    assert result.exit_code == 0, result.output
    assert "1 resonances (GHz):" in result.output


def test_missing_config_file(runner, tmp_path):
    missing = tmp_path / "absent.json"
    result = runner.invoke(main, ["--config", str(missing), "odmr"])
    assert result.exit_code == 1
    assert "error[config_error]" in result.output
    assert str(missing) in result.output


def test_no_config_at_all(runner):
    result = runner.invoke(main, ["rabi"])
    assert result.exit_code == 1
    assert "--config" in result.output


def test_monte_carlo_command_needs_a_seed(runner, tmp_path):
    path = tmp_path / "unseeded.json"
    path.write_text(json.dumps({"schema_version": 1}), encoding="utf-8")
    result = runner.invoke(main, ["--config", str(path), "--out", str(tmp_path), "rabi"])
    assert result.exit_code == 1
    assert "needs a seed" in result.output


def test_degenerate_direction_exits_with_zero_gradient(runner, repo_root, tmp_path):
    config = repo_root / "configs" / "degenerate.json"
    result = runner.invoke(
        main, ["--config", str(config), "--out", str(tmp_path), "sensitivity", "--scheme", "single"]
    )
    assert result.exit_code == 3
    assert "error[zero_gradient]" in result.output


def test_vector_report_carries_provenance(runner, repo_root, tmp_path):
    config = repo_root / "configs" / "equal_ratios.json"
    result = runner.invoke(main, ["--config", str(config), "--out", str(tmp_path), "vector"])
    assert result.exit_code == 0, result.output
    assert "schemes differ by" in result.output
    doc = json.loads((tmp_path / "vector.json").read_text(encoding="utf-8"))
    assert doc["tool_version"] == __version__
    assert len(doc["config_hash"]) == 64
    assert doc["seed"] == 7
    assert doc["multi_frequency"]["angular_error_deg"] < 1.0


def test_echo_sweep_is_reproducible_across_threads(runner, small_config, tmp_path):
    outputs = []
    for threads in ("1", "3"):
        out = tmp_path / f"t{threads}"
        result = runner.invoke(
            main,
            ["--config", str(small_config), "--out", str(out), "--threads", threads,
             "echo-sweep", "--modes", "NV1,x"],
        )
        assert result.exit_code == 0, result.output
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert sorted(outputs[0]) == ["echo_NV1.csv", "echo_mf_x.csv", "noise.csv"]
    assert outputs[0] == outputs[1]


@pytest.mark.parametrize("command", ["odmr", "rabi", "sensitivity", "vector"])
def test_experiments_are_byte_identical_across_threads(runner, repo_root, tmp_path, command):
    config = repo_root / "configs" / "equal_ratios.json"
    outputs = []
    for threads in ("1", "4"):
        out = tmp_path / f"t{threads}"
        result = runner.invoke(main, ["--config", str(config), "--out", str(out), "--threads", threads, command])
        assert result.exit_code == 0, result.output
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outputs[0]
    assert outputs[0] == outputs[1]


def test_csv_outputs_name_their_seed(runner, small_config, tmp_path):
    result = runner.invoke(main, ["--config", str(small_config), "--out", str(tmp_path), "echo-sweep", "--modes", "NV1"])
    assert result.exit_code == 0, result.output
    for name in ("echo_NV1.csv", "noise.csv"):
        first = (tmp_path / name).read_text(encoding="utf-8").splitlines()[0]
        assert first.startswith("# config_hash=")
        assert " seed=99 " in first


def test_seed_flag_overrides_config(runner, small_config, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out, seed in ((a, "1"), (b, "2")):
        result = runner.invoke(
            main, ["--config", str(small_config), "--out", str(out), "--seed", seed, "echo-sweep", "--modes", "NV2"]
        )
        assert result.exit_code == 0, result.output
    assert (a / "echo_NV2.csv").read_text() != (b / "echo_NV2.csv").read_text()


def test_unknown_echo_program(runner, small_config, tmp_path):
    result = runner.invoke(
        main, ["--config", str(small_config), "--out", str(tmp_path), "echo-sweep", "--modes", "NV9"]
    )
    assert result.exit_code == 1
    assert "unknown program" in result.output


@pytest.mark.parametrize("name", ["single_NV1.seq", "multi_x.seq", "multi_y.seq", "multi_z.seq"])
def test_seq_check_golden_files(runner, repo_root, name):
    result = runner.invoke(main, ["seq", "check", str(repo_root / "sequences" / name)])
    assert result.exit_code == 0, result.output
    assert result.output.startswith("ok: ")
    assert "realizable on two-source hardware" in result.output


def test_seq_check_off_grid_phases(runner, repo_root):
    path = str(repo_root / "sequences" / "multi_x_offset_pi4.seq")
    strict = runner.invoke(main, ["seq", "check", path])
    assert strict.exit_code == 0
    assert strict.output.count("not realizable:") == 4
    relaxed = runner.invoke(main, ["seq", "check", "--no-strict", path])
    assert "realizable on two-source hardware" in relaxed.output


def test_seq_check_malformed_file(runner, tmp_path):
    path = tmp_path / "bad.seq"
    path.write_text("tau 1e-05\npulse t=zero\n", encoding="utf-8")
    result = runner.invoke(main, ["seq", "check", str(path)])
    assert result.exit_code == 2
    assert "error[parse_error]" in result.output


def test_seq_check_unreadable_file(runner, tmp_path):
    result = runner.invoke(main, ["seq", "check", str(tmp_path / "none.seq")])
    assert result.exit_code == 1


def test_seq_build_round_trips(runner):
    result = runner.invoke(main, ["seq", "build", "multi_frequency:y"])
    assert result.exit_code == 0, result.output
    program = parse_sequence(result.output)
    assert program.mode == SequenceMode.multi("y")
    assert serialize_sequence(program) == result.output


def test_seq_build_rejects_unknown_mode(runner):
    result = runner.invoke(main, ["seq", "build", "multi_frequency:w"])
    assert result.exit_code == 1
