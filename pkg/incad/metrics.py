"""Detection quality measures with anomaly as the positive class."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import asdict, dataclass, field, replace
from typing import Any

import numpy as np
import numpy.typing as npt

from .exceptions import IncadDataError

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionCounts:
    """Confusion matrix cells."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        """Number of scored points."""
        return self.tp + self.fp + self.fn + self.tn


def _ratio(numerator: int, denominator: int) -> float | None:
    return numerator / denominator if denominator else None


def _f_measure(counts: ConfusionCounts) -> float | None:
    precision = _ratio(counts.tp, counts.tp + counts.fp)
    recall = _ratio(counts.tp, counts.tp + counts.fn)
    if precision is None or recall is None or precision + recall == 0:
        return None
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True, kw_only=True)
class MetricDescription:
    """Describes one quality measure."""

    key: str
    name: str
    value_fn: Callable[[ConfusionCounts], float | None]


METRICS: tuple[MetricDescription, ...] = (
    MetricDescription(
        key="precision",
        name="Precision",
        value_fn=lambda c: _ratio(c.tp, c.tp + c.fp),
    ),
    MetricDescription(
        key="recall",
        name="Recall",
        value_fn=lambda c: _ratio(c.tp, c.tp + c.fn),
    ),
    MetricDescription(
        key="specificity",
        name="Specificity",
        value_fn=lambda c: _ratio(c.tn, c.tn + c.fp),
    ),
    MetricDescription(
        key="accuracy",
        name="Accuracy",
        value_fn=lambda c: _ratio(c.tp + c.tn, c.total),
    ),
    MetricDescription(
        key="f_measure",
        name="F-measure",
        value_fn=_f_measure,
    ),
)


@dataclass(frozen=True)
class Metrics:
    """Quality of one run."""

    precision: float
    recall: float
    specificity: float
    accuracy: float
    f_measure: float
    runtime_seconds: float = 0.0
    batch_fraction: float | None = None
    counts: ConfusionCounts | None = None
    undefined: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict[str, Any]:
        """JSON-ready form."""
        document = asdict(self)
        document["undefined"] = list(self.undefined)
        return document

    def with_runtime(self, seconds: float, batch_fraction: float | None = None) -> Metrics:
        """Attach the run's wall-clock time and batch fraction."""
        return replace(
            self,
            runtime_seconds=seconds,
            batch_fraction=self.batch_fraction if batch_fraction is None else batch_fraction,
        )


def confusion_counts(
    predicted: npt.ArrayLike, truth: npt.ArrayLike
) -> ConfusionCounts:
    """Count the confusion matrix cells."""
    pred = np.asarray(predicted).astype(bool)
    true = np.asarray(truth).astype(bool)
    if pred.shape[0] != true.shape[0]:
        raise IncadDataError(
            translation_key="length_mismatch",
            translation_placeholders={"left": pred.shape[0], "right": true.shape[0]},
        )
    if pred.shape[0] == 0:
        raise IncadDataError(translation_key="empty_labels")
    return ConfusionCounts(
        tp=int(np.sum(pred & true)),
        fp=int(np.sum(pred & ~true)),
        fn=int(np.sum(~pred & true)),
        tn=int(np.sum(~pred & ~true)),
    )


def compute_metrics(predicted: npt.ArrayLike, truth: npt.ArrayLike) -> Metrics:
    """Precision, recall, specificity, accuracy and F-measure of anomaly flags.

    A measure whose denominator is zero is reported as 0 and listed in
    `undefined`.
    """
    counts = confusion_counts(predicted, truth)
    values: dict[str, float] = {}
    undefined: list[str] = []
    for description in METRICS:
        value = description.value_fn(counts)
        if value is None:
            undefined.append(description.key)
            value = 0.0
        values[description.key] = value
    if undefined:
        _LOGGER.warning("Undefined measures reported as 0: %s", ", ".join(undefined))
    return Metrics(**values, counts=counts, undefined=tuple(undefined))

