"""INCAD: joint nonparametric clustering and extreme-value anomaly detection."""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import IncadConfig, RunConfig, load_config
from .coordinator import (
    IncadStreamCoordinator,
    StreamState,
    batch_init,
    finalize_small_clusters,
    stream_update,
)
from .data import LabeledDataset, ResultRecord, generate_synthetic, load_csv
from .events import StreamEvent
from .exceptions import IncadConfigError, IncadDataError, IncadError, IncadNumericalError
from .gibbs import gibbs_sweep, initialize_state, run_gibbs
from .metrics import Metrics, compute_metrics
from .model import ModelState
from .tail import TailModel, fit_tail

__all__ = [
    "IncadConfig",
    "IncadConfigError",
    "IncadDataError",
    "IncadError",
    "IncadNumericalError",
    "IncadRunData",
    "IncadStreamCoordinator",
    "LabeledDataset",
    "Metrics",
    "ModelState",
    "ResultRecord",
    "RunConfig",
    "StreamEvent",
    "StreamState",
    "TailModel",
    "batch_init",
    "compute_metrics",
    "finalize_small_clusters",
    "fit_tail",
    "generate_synthetic",
    "gibbs_sweep",
    "initialize_state",
    "load_config",
    "load_csv",
    "run_gibbs",
    "stream_update",
]


@dataclass
class IncadRunData:
    """Outcome of one batch or stream run."""

    state: StreamState
    tail: TailModel
    records: list[ResultRecord]
    runtime_seconds: float
    metrics: Metrics | None = None
    events: list[StreamEvent] = field(default_factory=list)
