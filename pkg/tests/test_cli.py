"""End-to-end tests of the incad command."""

import json
from collections import Counter
from pathlib import Path

import pandas as pd
import pytest

from incad.cli import build_parser, main
from incad.const import (
    CHECKPOINT_FILE,
    DATASET_FILE,
    DIAGNOSTICS_FILE,
    EVENT_UPDATE,
    EVENTS_FILE,
    EXIT_CONFIG_ERROR,
    EXIT_DATA_ERROR,
    EXIT_OK,
    METRICS_FILE,
    PHASE_BATCH,
    PHASE_STREAM,
    RESULTS_FILE,
    SENSITIVITY_FILE,
)
from incad.data import read_results

SMALL_CONFIG = """\
seed: 4
gibbs:
  sweeps: 3
  burn_in: 1
synthetic:
  sizes: [30, 30, 30, 20]
  n_anomalies: 8
stream:
  batch_fraction: 0.5
sensitivity:
  fractions: [0.4, 0.6]
"""
N_POINTS = 118


@pytest.fixture
def config_file(tmp_path) -> Path:
    """Return a config for short runs on a small synthetic dataset."""
    path = tmp_path / "incad.yaml"
    path.write_text(SMALL_CONFIG)
    return path


@pytest.fixture
def dataset_file(tmp_path, config_file) -> Path:
    """Return the simulated dataset written by the simulate command."""
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(config_file), "--out", str(out)]) == EXIT_OK
    return out / DATASET_FILE


@pytest.fixture
def default_dataset_file(tmp_path) -> Path:
    """Return the 400-point dataset simulated with the default config."""
    out = tmp_path / "sim400"
    assert main(["simulate", "--out", str(out)]) == EXIT_OK
    return out / DATASET_FILE


def _run(command: str, config_file: Path, dataset_file: Path, out: Path, *extra: str) -> int:
    return main(
        [
            command,
            "--config",
            str(config_file),
            "--input",
            str(dataset_file),
            "--out",
            str(out),
            *extra,
        ]
    )


def test_parser_fractions() -> None:
    """Test the comma-separated fraction list."""
    args = build_parser().parse_args(["sensitivity", "--fractions", "0.1,0.5"])
    assert args.fractions == [0.1, 0.5]
    assert args.out == Path(".")


def test_simulate(tmp_path, config_file, dataset_file) -> None:
    """Test simulate writes a labeled dataset that depends on the seed."""
    frame = pd.read_csv(dataset_file)
    assert len(frame) == N_POINTS
    assert frame["label"].sum() == 8
    assert list(frame.columns) == ["x1", "x2", "label", "cluster"]

    other = tmp_path / "other"
    main(["simulate", "--config", str(config_file), "--out", str(other), "--seed", "5"])
    assert (other / DATASET_FILE).read_text() != dataset_file.read_text()


def test_batch(tmp_path, config_file, dataset_file) -> None:
    """Test a batch run writes every artifact, deterministically."""
    first, second = tmp_path / "a", tmp_path / "b"
    assert _run("batch", config_file, dataset_file, first) == EXIT_OK
    assert _run("batch", config_file, dataset_file, second) == EXIT_OK

    assert (first / RESULTS_FILE).read_bytes() == (second / RESULTS_FILE).read_bytes()
    records = read_results(first / RESULTS_FILE)
    assert [r.index for r in records] == list(range(N_POINTS))
    assert {r.phase for r in records} == {PHASE_BATCH}

    metrics = json.loads((first / METRICS_FILE).read_text())
    for key in ("precision", "recall", "specificity", "accuracy", "f_measure"):
        assert 0.0 <= metrics[key] <= 1.0
    assert metrics["runtime_seconds"] > 0

    diagnostics = json.loads((first / DIAGNOSTICS_FILE).read_text())
    assert diagnostics["n_points"] == N_POINTS
    assert diagnostics["invariant_violations"] == []
    assert (first / CHECKPOINT_FILE).is_file()


def test_eval_matches_batch(tmp_path, config_file, dataset_file) -> None:
    """Test eval recomputes the measures from the results file."""
    out = tmp_path / "run"
    assert _run("batch", config_file, dataset_file, out) == EXIT_OK
    batch_metrics = json.loads((out / METRICS_FILE).read_text())

    assert _run("eval", config_file, dataset_file, out) == EXIT_OK
    eval_metrics = json.loads((out / METRICS_FILE).read_text())
    assert eval_metrics["f_measure"] == batch_metrics["f_measure"]
    assert eval_metrics["counts"] == batch_metrics["counts"]


@pytest.mark.slow
def test_stream(tmp_path, config_file, dataset_file) -> None:
    """Test a stream run tags phases at the split and logs one summary per update."""
    first, second = tmp_path / "a", tmp_path / "b"
    assert _run("stream", config_file, dataset_file, first) == EXIT_OK
    assert _run("stream", config_file, dataset_file, second) == EXIT_OK

    assert (first / RESULTS_FILE).read_bytes() == (second / RESULTS_FILE).read_bytes()
    phases = [r.phase for r in read_results(first / RESULTS_FILE)]
    assert phases == [PHASE_BATCH] * 59 + [PHASE_STREAM] * 59

    events = [json.loads(line) for line in (first / EVENTS_FILE).read_text().splitlines()]
    updates = [e for e in events if e["event_type"] == EVENT_UPDATE]
    assert [e["update"] for e in updates] == list(range(1, 60))
    assert updates[-1]["n_points"] == N_POINTS

    metrics = json.loads((first / METRICS_FILE).read_text())
    assert metrics["batch_fraction"] == 0.5


@pytest.mark.slow
def test_sensitivity(tmp_path, config_file, dataset_file) -> None:
    """Test the sweep writes one row per batch fraction."""
    out = tmp_path / "sweep"
    assert _run("sensitivity", config_file, dataset_file, out) == EXIT_OK
    table = pd.read_csv(out / SENSITIVITY_FILE, index_col="batch_fraction")
    assert table.index.tolist() == [0.4, 0.6]
    assert (table["runtime_seconds"] > 0).all()
    assert table["f_measure"].between(0.0, 1.0).all()


@pytest.mark.slow
def test_batch_recovers_synthetic_clusters(tmp_path, default_dataset_file) -> None:
    """Test the default batch run finds the planted clusters and anomalies."""
    out = tmp_path / "batch400"
    assert main(["batch", "--input", str(default_dataset_file), "--out", str(out)]) == EXIT_OK
    records = read_results(out / RESULTS_FILE)
    assert len(records) == 400
    sizes = Counter(r.cluster for r in records)
    assert 4 <= sum(size > 20 for size in sizes.values()) <= 6
    metrics = json.loads((out / METRICS_FILE).read_text())
    assert metrics["f_measure"] >= 0.80


@pytest.mark.slow
def test_sensitivity_plateau(tmp_path, default_dataset_file) -> None:
    """Test quality levels off for large batch fractions."""
    out = tmp_path / "sweep400"
    argv = ["sensitivity", "--input", str(default_dataset_file), "--out", str(out)]
    assert main([*argv, "--fractions", "0.75,0.9"]) == EXIT_OK
    table = pd.read_csv(out / SENSITIVITY_FILE, index_col="batch_fraction")
    assert table.index.tolist() == [0.75, 0.9]
    assert abs(table.loc[0.75, "f_measure"] - table.loc[0.9, "f_measure"]) <= 0.05
    assert (table["runtime_seconds"] > 0).all()


def test_unknown_config_key(tmp_path, dataset_file) -> None:
    """Test an invalid config exits with the config error code."""
    path = tmp_path / "bad.yaml"
    path.write_text("gibbs:\n  alhpa: 2\n")
    assert _run("batch", path, dataset_file, tmp_path / "out") == EXIT_CONFIG_ERROR


def test_missing_input(tmp_path, config_file) -> None:
    """Test a missing dataset exits with the data error code."""
    missing = tmp_path / "absent.csv"
    assert _run("batch", config_file, missing, tmp_path / "out") == EXIT_DATA_ERROR


def test_sensitivity_requires_labels(tmp_path, config_file) -> None:
    """Test the sweep refuses an unlabeled dataset."""
    path = tmp_path / "unlabeled.csv"
    path.write_text("x,y\n" + "\n".join(f"{i},{i % 7}" for i in range(40)) + "\n")
    assert _run("sensitivity", config_file, path, tmp_path / "out") == EXIT_DATA_ERROR
