"""Event stream derived from successive model snapshots."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from .const import (
    EVENT_CLUSTER_REMOVED,
    EVENT_CLUSTER_SPAWNED,
    EVENT_POINT_CLEARED,
    EVENT_POINT_FLAGGED,
    EVENT_UPDATE,
)
from .exceptions import IncadDataError

if TYPE_CHECKING:
    from .model import ModelState
    from .tail import TailModel

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class StreamEvent:
    """One event emitted by a stream update."""

    event_type: str
    data: dict[str, Any]

    def as_dict(self) -> dict[str, Any]:
        """JSON-ready form."""
        return {"event_type": self.event_type, **self.data}


def _cluster_anchors(state: ModelState) -> dict[int, int]:
    """Map each cluster's earliest member to its 1-based label."""
    anchors: dict[int, int] = {}
    for k in range(state.n_clusters):
        members = state.members(k)
        if members.shape[0]:
            anchors[int(members[0])] = k + 1
    return anchors


def _handle_flag_changes(
    previous: ModelState, current: ModelState, update: int
) -> list[tuple[str, dict[str, Any]]]:
    """Point flag transitions. Returns (event_type, event_data) pairs."""
    before = np.zeros(current.n_points, dtype=bool)
    before[: previous.n_points] = previous.flags
    changed = np.flatnonzero(before != current.flags)
    events = []
    for i in changed:
        event_type = EVENT_POINT_FLAGGED if current.flags[i] else EVENT_POINT_CLEARED
        events.append(
            (
                event_type,
                {
                    "update": update,
                    "index": int(i),
                    "cluster": int(current.assignments[i]) + 1,
                    "p": float(current.tail_probability[i]),
                },
            )
        )
    return events


def _handle_cluster_changes(
    previous: ModelState, current: ModelState, update: int
) -> list[tuple[str, dict[str, Any]]]:
    """Clusters opened or closed, each identified by its earliest member."""
    before = _cluster_anchors(previous)
    after = _cluster_anchors(current)
    events = [
        (EVENT_CLUSTER_SPAWNED, {"update": update, "anchor": anchor, "cluster": after[anchor]})
        for anchor in sorted(after.keys() - before.keys())
    ]
    events.extend(
        (EVENT_CLUSTER_REMOVED, {"update": update, "anchor": anchor, "cluster": before[anchor]})
        for anchor in sorted(before.keys() - after.keys())
    )
    return events


def derive_events(
    previous: ModelState,
    current: ModelState,
    update: int,
    tail: TailModel | None = None,
) -> list[StreamEvent]:
    """Events explaining how one update changed the model."""
    pairs = _handle_flag_changes(previous, current, update)
    pairs.extend(_handle_cluster_changes(previous, current, update))
    summary: dict[str, Any] = {
        "update": update,
        "n_points": current.n_points,
        "n_clusters": current.n_clusters,
        "n_flagged": int(current.flags.sum()),
        "n_tail": tail.image.n_tail if tail is not None else 0,
        "threshold": tail.image.threshold_t1 if tail is not None else None,
        "tail_fitted": tail is not None and tail.fit is not None,
    }
    pairs.append((EVENT_UPDATE, summary))
    _LOGGER.debug("Update %d produced %d events", update, len(pairs))
    return [StreamEvent(event_type, data) for event_type, data in pairs]


class EventLog:
    """Listener that collects the events of every update."""

    def __init__(self) -> None:
        """Initialize an empty log."""
        self.events: list[StreamEvent] = []

    def __call__(self, events: list[StreamEvent]) -> None:
        """Listener entry point."""
        self.events.extend(events)

    def of_type(self, event_type: str) -> list[StreamEvent]:
        """Events of one type, in emission order."""
        return [event for event in self.events if event.event_type == event_type]


def write_events(events: list[StreamEvent], path: str | Path) -> Path:
    """Write events as JSON lines."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8") as handle:
            for event in events:
                handle.write(json.dumps(event.as_dict()) + "\n")
    except OSError as err:
        raise IncadDataError(
            translation_key="io_error",
            translation_placeholders={"path": str(path), "error": str(err)},
        ) from err
    _LOGGER.debug("Wrote %d events to %s", len(events), path)
    return path
