"""
CSV and JSON artifact writers.

Output is byte-stable: floats use ``repr``, JSON keys are sorted and no
timestamps are embedded.
"""

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from nv_multifreq import __version__
from nv_multifreq.models.results import NoiseSeries, SweepResult

CSV_HEADER = ("x", "mean", "stddev", "counts")


def config_hash(config: BaseModel) -> str:
    """SHA-256 of the canonical JSON form of a config."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def sweep_to_csv(sweep: SweepResult) -> str:
    """One row per sweep point: independent variable, mean, stddev, counts."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for x, mean, std, counts in zip(sweep.grid, sweep.mean, sweep.stddev, sweep.counts):
        writer.writerow((repr(x), repr(mean), repr(std), str(counts)))
    return buf.getvalue()


def noise_to_csv(series: NoiseSeries) -> str:
    """One row per integration time."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("integration_time_s", "shots", "std", "std_error"))
    for p in series.points:
        writer.writerow((repr(p.integration_time_s), str(p.shots), repr(p.std), repr(p.std_error)))
    return buf.getvalue()


def csv_provenance(config_digest: str | None, seed: int | None) -> str:
    """Leading comment line naming the config, seed and tool version behind a CSV."""
    seed_text = "none" if seed is None else str(seed)
    return f"# config_hash={config_digest} seed={seed_text} tool_version={__version__}\n"


def to_json(payload: dict[str, Any], config_digest: str | None, seed: int | None) -> str:
    """Serialize a report payload with provenance, keys sorted."""
    doc = dict(payload)
    doc["config_hash"] = config_digest
    doc["seed"] = seed
    doc["tool_version"] = __version__
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_artifacts(
    out_dir: str | Path,
    files: dict[str, str],
    config_digest: str | None = None,
    seed: int | None = None,
) -> list[Path]:
    """
    Write text artifacts into a directory, creating it if needed.

    With a config digest, every CSV gets a leading provenance comment line
    ahead of its header row.
    """
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(files):
        path = root / name
        text = files[name]
        if config_digest is not None and name.endswith(".csv"):
            text = csv_provenance(config_digest, seed) + text
        path.write_text(text, encoding="utf-8", newline="\n")
        written.append(path)
    return written
