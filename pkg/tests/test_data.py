"""Tests for dataset ingestion and result files."""

import numpy as np
import pytest

from incad.config import DataSchema, IncadConfig
from incad.const import PHASE_BATCH, PHASE_STREAM
from incad.data import (
    LabeledDataset,
    ResultRecord,
    generate_synthetic,
    load_csv,
    read_results,
    records_from_state,
    write_dataset_csv,
    write_results,
)
from incad.exceptions import IncadDataError
from incad.mvn import make_rng


def test_load_timestamp_series(tmp_path) -> None:
    """Test a (timestamp, value) file becomes 2-D observations."""
    path = tmp_path / "series.csv"
    path.write_text(
        "timestamp,value\n"
        "2014-04-01 00:00:00,10.5\n"
        "2014-04-01 00:05:00,11.0\n"
        "2014-04-01 00:10:00,9.5\n"
        "2014-04-01 00:20:00,30.0\n"
    )
    dataset = load_csv(path, DataSchema(timestamp_column="timestamp", zscore=False))
    assert dataset.dim == 2
    assert dataset.feature_names == ("timestamp", "value")
    np.testing.assert_allclose(dataset.points[:, 0], [0.0, 300.0, 600.0, 1200.0])
    assert dataset.labels is None


def test_load_zscores_features(tmp_path) -> None:
    """Test z-scored columns have mean 0 and variance 1, and can be inverted."""
    gen = make_rng(0)
    raw = gen.normal(loc=[3.0, -20.0, 100.0], scale=[1.0, 5.0, 30.0], size=(50, 3))
    path = tmp_path / "points.csv"
    path.write_text(
        "a,b,c\n" + "\n".join(",".join(repr(float(v)) for v in row) for row in raw) + "\n"
    )
    dataset = load_csv(path)
    np.testing.assert_allclose(dataset.points.mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(dataset.points.var(axis=0), 1.0, atol=1e-9)
    np.testing.assert_allclose(dataset.raw_points(), raw, rtol=1e-12)


def test_load_labels(tmp_path) -> None:
    """Test a label column is passed through and not used as a feature."""
    path = tmp_path / "labeled.csv"
    path.write_text("x,y,label\n0,1,0\n1,2,1\n2,0,0\n")
    dataset = load_csv(path)
    assert dataset.feature_names == ("x", "y")
    assert dataset.labels.tolist() == [False, True, False]


def test_malformed_row_reports_row(tmp_path) -> None:
    """Test a non-numeric cell names its row."""
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1,2\n3,oops\n")
    with pytest.raises(IncadDataError) as exc_info:
        load_csv(path)
    assert exc_info.value.translation_key == "malformed_row"
    assert exc_info.value.translation_placeholders["row"] == 2


def test_ragged_row_reports_row(tmp_path) -> None:
    """Test a row with too many fields names its row."""
    path = tmp_path / "ragged.csv"
    path.write_text("x,y\n1,2\n3,4\n5,6,7\n")
    with pytest.raises(IncadDataError) as exc_info:
        load_csv(path)
    assert exc_info.value.translation_key == "malformed_row"
    assert exc_info.value.translation_placeholders["row"] == 3


def test_missing_column(tmp_path) -> None:
    """Test a configured column that is absent is an error."""
    path = tmp_path / "points.csv"
    path.write_text("x,y\n1,2\n")
    with pytest.raises(IncadDataError) as exc_info:
        load_csv(path, DataSchema(feature_columns=("x", "z")))
    assert exc_info.value.translation_key == "missing_column"


def test_missing_file(tmp_path) -> None:
    """Test a missing file is a data error."""
    with pytest.raises(IncadDataError) as exc_info:
        load_csv(tmp_path / "absent.csv")
    assert exc_info.value.translation_key == "file_not_found"


def test_synthetic_default_counts(synthetic) -> None:
    """Test the default generator plants 23 anomalies among 400 points."""
    assert len(synthetic) == 400
    assert synthetic.dim == 2
    assert int(synthetic.labels.sum()) == 23
    assert np.bincount(synthetic.cluster_ids).tolist() == [23, 100, 100, 100, 77]
    assert not synthetic.labels[:300].any()
    assert set(synthetic.cluster_ids[:300].tolist()) == {1, 2, 3}


def test_synthetic_anomalies_centered(synthetic) -> None:
    """Test anomalies are drawn around the origin."""
    anomalies = synthetic.points[synthetic.labels]
    assert np.linalg.norm(anomalies.mean(axis=0)) < 5.0


def test_synthetic_is_seeded() -> None:
    """Test equal seeds give equal datasets and other seeds differ."""
    cfg = IncadConfig.from_mapping({}).synthetic
    first = generate_synthetic(cfg, make_rng(5))
    second = generate_synthetic(cfg, make_rng(5))
    third = generate_synthetic(cfg, make_rng(6))
    np.testing.assert_array_equal(first.points, second.points)
    assert not np.array_equal(first.points, third.points)
    assert len(third) == len(first)


def test_dataset_round_trip(tmp_path, synthetic) -> None:
    """Test a written dataset loads back unchanged."""
    path = write_dataset_csv(synthetic, tmp_path / "dataset.csv")
    loaded = load_csv(path, DataSchema(zscore=False))
    np.testing.assert_allclose(loaded.points, synthetic.points, rtol=1e-14, atol=0)
    np.testing.assert_array_equal(loaded.labels, synthetic.labels)
    np.testing.assert_array_equal(loaded.cluster_ids, synthetic.cluster_ids)


def test_results_round_trip(tmp_path) -> None:
    """Test result records survive a write and read."""
    records = records_from_state(
        np.array([[0.5, 1.0], [2.0, 3.25], [4.0, 0.0]]),
        np.array([1, 1, 2]),
        np.array([False, True, False]),
        np.array([0.0, 0.75, 0.0]),
        batch_size=2,
    )
    path = write_results(records, tmp_path / "results.jsonl")
    assert read_results(path) == records
    assert [r.phase for r in records] == [PHASE_BATCH, PHASE_BATCH, PHASE_STREAM]
    assert len(path.read_text().splitlines()) == 3


def test_empty_results_file(tmp_path) -> None:
    """Test an empty record list writes a valid empty file."""
    path = write_results([], tmp_path / "results.jsonl")
    assert path.read_text() == ""
    assert read_results(path) == []


def test_result_record_rejects_bad_probability() -> None:
    """Test p outside [0, 1] is rejected."""
    with pytest.raises(IncadDataError):
        ResultRecord(index=0, point=[0.0], cluster=1, anomaly_flag=0, p=1.5)


def test_split_bounds(synthetic) -> None:
    """Test batch fractions map to prefix sizes and must be inside (0, 1)."""
    assert synthetic.split(0.75) == 300
    assert synthetic.split(0.99) == 396
    with pytest.raises(IncadDataError):
        synthetic.split(1.0)


def test_label_length_mismatch() -> None:
    """Test labels must match the number of points."""
    with pytest.raises(IncadDataError):
        LabeledDataset(points=np.zeros((3, 2)), feature_names=("a", "b"), labels=np.zeros(2))
