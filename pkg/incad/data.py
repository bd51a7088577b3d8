"""Dataset ingestion, the synthetic generator and result files."""

from __future__ import annotations

import json
import logging
import re
from collections.abc import Iterable
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt
import pandas as pd

from .config import DataSchema, SyntheticConfig
from .const import PHASE_BATCH, PHASE_STREAM
from .exceptions import IncadDataError
from .metrics import Metrics
from .mvn import RandomSource

_LOGGER = logging.getLogger(__name__)

LABEL_COLUMN = "label"
CLUSTER_COLUMN = "cluster"
_PARSER_LINE = re.compile(r"in line (\d+)")


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Observations with optional ground truth."""

    points: npt.NDArray[np.float64]
    feature_names: tuple[str, ...]
    labels: npt.NDArray[np.bool_] | None = None
    cluster_ids: npt.NDArray[np.int64] | None = None
    column_mean: npt.NDArray[np.float64] | None = None
    column_std: npt.NDArray[np.float64] | None = None

    def __post_init__(self) -> None:
        """Check that the ground truth lines up with the points."""
        n = self.points.shape[0]
        for name, values in (("labels", self.labels), ("cluster_ids", self.cluster_ids)):
            if values is not None and values.shape[0] != n:
                raise IncadDataError(
                    translation_key="length_mismatch",
                    translation_placeholders={"left": n, "right": f"{values.shape[0]} {name}"},
                )

    def __len__(self) -> int:
        """Number of points."""
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        """Observation dimension."""
        return int(self.points.shape[1])

    def raw_points(self) -> npt.NDArray[np.float64]:
        """Undo the z-scoring."""
        if self.column_mean is None or self.column_std is None:
            return self.points.copy()
        return self.points * self.column_std + self.column_mean

    def split(self, fraction: float) -> int:
        """Number of leading points that make up the batch prefix."""
        if not 0.0 < fraction < 1.0:
            raise IncadDataError(
                translation_key="invalid_batch_fraction",
                translation_placeholders={"fraction": fraction},
            )
        return max(1, min(len(self) - 1, round(fraction * len(self))))


def zscore(
    values: npt.NDArray[np.float64],
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Per-column z-scores with the (mean, std) needed to invert them."""
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    return (values - mean) / std, mean, std


def _parser_error_row(err: pd.errors.ParserError) -> int | str:
    """Data row named by a tokenizer error (the header is line 1)."""
    match = _PARSER_LINE.search(str(err))
    return int(match.group(1)) - 1 if match else "?"


def _read_frame(path: Path) -> pd.DataFrame:
    if not path.is_file():
        raise IncadDataError(
            translation_key="file_not_found", translation_placeholders={"path": str(path)}
        )
    try:
        return pd.read_csv(path)
    except pd.errors.ParserError as err:
        raise IncadDataError(
            translation_key="malformed_row",
            translation_placeholders={
                "row": _parser_error_row(err),
                "path": str(path),
                "error": str(err),
            },
        ) from err
    except (OSError, pd.errors.EmptyDataError) as err:
        raise IncadDataError(
            translation_key="io_error",
            translation_placeholders={"path": str(path), "error": str(err)},
        ) from err


def _require(frame: pd.DataFrame, column: str, path: Path) -> pd.Series:
    if column not in frame.columns:
        raise IncadDataError(
            translation_key="missing_column",
            translation_placeholders={"column": column, "path": str(path)},
        )
    return frame[column]


def _numeric(frame: pd.DataFrame, path: Path) -> npt.NDArray[np.float64]:
    """Columns as floats; the first bad cell is reported by row (1 = first data row)."""
    converted = frame.apply(pd.to_numeric, errors="coerce")
    values = converted.to_numpy(dtype=np.float64, na_value=np.nan)
    bad = ~np.isfinite(values)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise IncadDataError(
            translation_key="malformed_row",
            translation_placeholders={
                "row": int(row) + 1,
                "path": str(path),
                "error": f"column {frame.columns[col]!r} has value {frame.iat[row, col]!r}",
            },
        )
    return converted.to_numpy(dtype=np.float64)


def load_csv(path: str | Path, schema: DataSchema | None = None) -> LabeledDataset:
    """Load observations (and optional ground truth) from a CSV file with a header."""
    path = Path(path)
    schema = schema or DataSchema()
    frame = _read_frame(path)

    label_column = schema.label_column
    if label_column is None and LABEL_COLUMN in frame.columns:
        label_column = LABEL_COLUMN
    cluster_column = schema.cluster_column
    if cluster_column is None and CLUSTER_COLUMN in frame.columns:
        cluster_column = CLUSTER_COLUMN

    reserved = {c for c in (label_column, cluster_column, schema.timestamp_column) if c}
    if schema.feature_columns is not None:
        features = list(schema.feature_columns)
        for column in features:
            _require(frame, column, path)
    else:
        features = [c for c in frame.columns if c not in reserved]

    columns: list[npt.NDArray[np.float64]] = []
    names: list[str] = []
    if schema.timestamp_column:
        stamps = pd.to_datetime(_require(frame, schema.timestamp_column, path), errors="coerce")
        if stamps.isna().any():
            row = int(np.flatnonzero(stamps.isna().to_numpy())[0]) + 1
            raise IncadDataError(
                translation_key="malformed_row",
                translation_placeholders={
                    "row": row,
                    "path": str(path),
                    "error": f"unparseable timestamp in {schema.timestamp_column!r}",
                },
            )
        seconds = (stamps - stamps.iloc[0]).dt.total_seconds().to_numpy(dtype=np.float64)
        columns.append(seconds[:, None])
        names.append(schema.timestamp_column)
    if features:
        columns.append(_numeric(frame[features], path))
        names.extend(str(c) for c in features)
    if not names:
        raise IncadDataError(
            translation_key="no_feature_columns", translation_placeholders={"path": str(path)}
        )
    values = np.hstack(columns)

    mean = std = None
    if schema.zscore:
        values, mean, std = zscore(values)

    labels = None
    if label_column:
        labels = _numeric(_require(frame, label_column, path).to_frame(), path)[:, 0] != 0
    cluster_ids = None
    if cluster_column:
        cluster_ids = _numeric(_require(frame, cluster_column, path).to_frame(), path)[:, 0]
        cluster_ids = cluster_ids.astype(np.int64)

    _LOGGER.info("Loaded %d points with %d features from %s", values.shape[0], len(names), path)
    return LabeledDataset(
        points=values,
        feature_names=tuple(names),
        labels=labels,
        cluster_ids=cluster_ids,
        column_mean=mean,
        column_std=std,
    )


def generate_synthetic(cfg: SyntheticConfig, rng: RandomSource) -> LabeledDataset:
    """Gaussian clusters plus planted anomalies around a common centre.

    All clusters but the last come first in shuffled order; the anomalies and
    the last cluster follow, shuffled together, so a batch prefix covering the
    leading clusters leaves the rest to the stream.
    """
    dim = len(cfg.anomaly_mean)
    eye = np.eye(dim)
    blocks: list[tuple[npt.NDArray[np.float64], npt.NDArray[np.int64]]] = []
    for k, (mean, size) in enumerate(zip(cfg.means, cfg.sizes, strict=True), start=1):
        points = rng.multivariate_normal(np.asarray(mean), cfg.cluster_scale * eye, size=size)
        blocks.append((points, np.full(size, k, dtype=np.int64)))
    anomalies = rng.multivariate_normal(
        np.asarray(cfg.anomaly_mean), cfg.anomaly_cov_scale * eye, size=cfg.n_anomalies
    )

    def _shuffled(parts: list[tuple[npt.NDArray[np.float64], npt.NDArray[np.int64]]]):
        points = np.vstack([p for p, _ in parts]) if parts else np.empty((0, dim))
        ids = np.concatenate([c for _, c in parts]) if parts else np.empty(0, dtype=np.int64)
        order = rng.permutation(points.shape[0])
        return points[order], ids[order]

    head_points, head_ids = _shuffled(blocks[:-1])
    tail_points, tail_ids = _shuffled(
        [blocks[-1], (anomalies, np.zeros(cfg.n_anomalies, dtype=np.int64))]
    )
    points = np.vstack([head_points, tail_points])
    cluster_ids = np.concatenate([head_ids, tail_ids])
    _LOGGER.debug("Generated %d points, %d anomalies", points.shape[0], cfg.n_anomalies)
    return LabeledDataset(
        points=points,
        feature_names=tuple(f"x{j + 1}" for j in range(dim)),
        labels=cluster_ids == 0,
        cluster_ids=cluster_ids,
    )


def write_dataset_csv(dataset: LabeledDataset, path: str | Path) -> Path:
    """Write a dataset with its ground truth columns."""
    path = Path(path)
    frame = pd.DataFrame(dataset.points, columns=list(dataset.feature_names))
    if dataset.labels is not None:
        frame[LABEL_COLUMN] = dataset.labels.astype(int)
    if dataset.cluster_ids is not None:
        frame[CLUSTER_COLUMN] = dataset.cluster_ids
    try:
        frame.to_csv(path, index=False, float_format="%.17g")
    except OSError as err:
        raise IncadDataError(
            translation_key="io_error",
            translation_placeholders={"path": str(path), "error": str(err)},
        ) from err
    _LOGGER.info("Wrote %d rows to %s", len(frame), path)
    return path


@dataclass(frozen=True)
class ResultRecord:
    """Per-point outcome of a run."""

    index: int
    point: list[float]
    cluster: int
    anomaly_flag: int
    p: float
    phase: str = PHASE_BATCH

    def __post_init__(self) -> None:
        """Validate the probability and the phase."""
        if not 0.0 <= self.p <= 1.0 or self.phase not in (PHASE_BATCH, PHASE_STREAM):
            raise IncadDataError(
                translation_key="invalid_probability",
                translation_placeholders={"p": self.p},
            )


def records_from_state(
    points: npt.NDArray[np.float64],
    labels: npt.NDArray[np.int64],
    flags: npt.NDArray[np.bool_],
    probabilities: npt.NDArray[np.float64],
    batch_size: int | None = None,
) -> list[ResultRecord]:
    """One record per point; points past batch_size are tagged as streamed."""
    cut = points.shape[0] if batch_size is None else batch_size
    return [
        ResultRecord(
            index=i,
            point=[float(v) for v in points[i]],
            cluster=int(labels[i]),
            anomaly_flag=int(flags[i]),
            p=float(probabilities[i]),
            phase=PHASE_BATCH if i < cut else PHASE_STREAM,
        )
        for i in range(points.shape[0])
    ]


def write_results(records: Iterable[ResultRecord], path: str | Path) -> Path:
    """Write records as JSON lines."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8") as handle:
            for record in records:
                handle.write(json.dumps(asdict(record)) + "\n")
    except OSError as err:
        raise IncadDataError(
            translation_key="io_error",
            translation_placeholders={"path": str(path), "error": str(err)},
        ) from err
    return path


def read_results(path: str | Path) -> list[ResultRecord]:
    """Read records written by write_results."""
    path = Path(path)
    if not path.is_file():
        raise IncadDataError(
            translation_key="file_not_found", translation_placeholders={"path": str(path)}
        )
    records = []
    with path.open(encoding="utf-8") as handle:
        for row, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                records.append(ResultRecord(**json.loads(line)))
            except (json.JSONDecodeError, TypeError) as err:
                raise IncadDataError(
                    translation_key="malformed_row",
                    translation_placeholders={"row": row, "path": str(path), "error": str(err)},
                ) from err
    return records


def write_json(document: dict[str, Any], path: str | Path) -> Path:
    """Write one JSON document."""
    path = Path(path)
    try:
        path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as err:
        raise IncadDataError(
            translation_key="io_error",
            translation_placeholders={"path": str(path), "error": str(err)},
        ) from err
    return path


def write_metrics(metrics: Metrics, path: str | Path) -> Path:
    """Write one metrics document."""
    return write_json(metrics.as_dict(), path)
