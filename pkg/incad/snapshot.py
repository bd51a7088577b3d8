"""Checkpoint and restore of model state."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np

from .config import RunConfig
from .const import SNAPSHOT_FORMAT, SNAPSHOT_VERSION
from .coordinator import StreamState
from .exceptions import IncadConfigError, IncadDataError
from .model import ClusterRecord, ModelState
from .mvn import MVNParams, SufficientStats

_LOGGER = logging.getLogger(__name__)


def _cluster_document(cluster: ClusterRecord) -> dict[str, Any]:
    return {
        "mean": cluster.params.mean.tolist(),
        "covariance": cluster.params.covariance.tolist(),
        "n": cluster.stats.n,
        "sum": cluster.stats.sum.tolist(),
        "sum_outer": cluster.stats.sum_outer.tolist(),
        "anomalous": cluster.anomalous,
    }


def snapshot_document(state: StreamState | ModelState, config_hash: str) -> dict[str, Any]:
    """Self-describing JSON form of a state."""
    stream = state if isinstance(state, StreamState) else None
    model = state.model if isinstance(state, StreamState) else state
    return {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "config_hash": config_hash,
        "data": model.data.tolist(),
        "assignments": model.assignments.tolist(),
        "flags": model.flags.astype(int).tolist(),
        "tail_probability": model.tail_probability.tolist(),
        "clusters": [_cluster_document(cluster) for cluster in model.clusters],
        "update_count": stream.update_count if stream else 0,
        "batch_fraction": stream.batch_fraction if stream else None,
        "batch_size": stream.batch_size if stream else model.n_points,
    }


def save_snapshot(
    path: str | Path, state: StreamState | ModelState, config_hash: str
) -> Path:
    """Write a checkpoint."""
    path = Path(path)
    document = snapshot_document(state, config_hash)
    try:
        path.write_text(json.dumps(document), encoding="utf-8")
    except OSError as err:
        raise IncadDataError(
            translation_key="io_error",
            translation_placeholders={"path": str(path), "error": str(err)},
        ) from err
    _LOGGER.debug("Saved snapshot with %d points to %s", len(document["data"]), path)
    return path


def _invalid(path: Path, error: str) -> IncadConfigError:
    return IncadConfigError(
        translation_key="snapshot_invalid",
        translation_placeholders={"path": str(path), "error": error},
    )


def load_snapshot(
    path: str | Path, config: RunConfig, config_hash: str | None = None
) -> StreamState:
    """Restore a checkpoint; the format version and config hash must match."""
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as err:
        raise IncadDataError(
            translation_key="file_not_found", translation_placeholders={"path": str(path)}
        ) from err
    except (OSError, json.JSONDecodeError) as err:
        raise _invalid(path, str(err)) from err

    if not isinstance(document, dict) or document.get("format") != SNAPSHOT_FORMAT:
        raise _invalid(path, "unknown format")
    if document.get("version") != SNAPSHOT_VERSION:
        raise _invalid(path, f"unsupported version {document.get('version')!r}")
    if config_hash is not None and document.get("config_hash") != config_hash:
        raise IncadConfigError(
            translation_key="snapshot_config_mismatch",
            translation_placeholders={
                "path": str(path),
                "found": str(document.get("config_hash"))[:12],
                "expected": config_hash[:12],
            },
        )

    try:
        data = np.asarray(document["data"], dtype=np.float64)
        clusters = [
            ClusterRecord(
                params=MVNParams(
                    mean=np.asarray(c["mean"], dtype=np.float64),
                    covariance=np.asarray(c["covariance"], dtype=np.float64),
                ),
                stats=SufficientStats(
                    n=int(c["n"]),
                    sum=np.asarray(c["sum"], dtype=np.float64),
                    sum_outer=np.asarray(c["sum_outer"], dtype=np.float64),
                ),
                anomalous=bool(c.get("anomalous", False)),
            )
            for c in document["clusters"]
        ]
        model = ModelState(
            data=data,
            assignments=np.asarray(document["assignments"], dtype=np.int64),
            flags=np.asarray(document["flags"], dtype=bool),
            clusters=clusters,
            config=config,
            tail_probability=np.asarray(document.get("tail_probability", []), dtype=np.float64),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise _invalid(path, str(err)) from err

    if problems := model.invariant_violations():
        raise _invalid(path, "; ".join(problems))
    fraction = document.get("batch_fraction")
    return StreamState(
        model=model,
        batch_fraction=config.stream.batch_fraction if fraction is None else float(fraction),
        update_count=int(document.get("update_count", 0)),
        batch_size=int(document.get("batch_size", model.n_points)),
    )
