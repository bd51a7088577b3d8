"""Tests for stream events."""

import json

import numpy as np

from incad.const import (
    EVENT_CLUSTER_REMOVED,
    EVENT_CLUSTER_SPAWNED,
    EVENT_POINT_CLEARED,
    EVENT_POINT_FLAGGED,
    EVENT_UPDATE,
)
from incad.events import EventLog, derive_events, write_events
from incad.model import ModelState
from incad.mvn import MVNParams


def _params(x) -> MVNParams:
    return MVNParams(mean=np.asarray(x, dtype=float), covariance=np.eye(2))


def _state(run_config) -> ModelState:
    data = np.array([[0.0, 0.0], [0.1, 0.0], [5.0, 5.0]])
    state = ModelState.empty(data, run_config)
    state.spawn(0, _params(data[0]))
    state.attach(1, 0)
    state.spawn(2, _params(data[2]))
    return state


def test_new_point_in_new_cluster(run_config) -> None:
    """Test a flagged arrival in its own cluster emits flag and spawn events."""
    previous = _state(run_config)
    current = previous.copy()
    index = current.append(np.array([9.0, 9.0]))
    current.spawn(index, _params([9.0, 9.0]))
    current.flags[index] = True
    current.tail_probability[index] = 0.7

    events = derive_events(previous, current, update=1)
    types = [event.event_type for event in events]

    assert types == [EVENT_POINT_FLAGGED, EVENT_CLUSTER_SPAWNED, EVENT_UPDATE]
    assert events[0].data == {"update": 1, "index": 3, "cluster": 3, "p": 0.7}
    assert events[1].data["anchor"] == 3
    assert events[-1].data["n_points"] == 4
    assert events[-1].data["n_clusters"] == 3


def test_cleared_flag_and_removed_cluster(run_config) -> None:
    """Test a point that leaves a flagged singleton emits clear and remove events."""
    previous = _state(run_config)
    previous.flags[2] = True
    current = previous.copy()
    current.detach(2)
    current.attach(2, 0)
    current.flags[2] = False

    types = [event.event_type for event in derive_events(previous, current, update=4)]

    assert types == [EVENT_POINT_CLEARED, EVENT_CLUSTER_REMOVED, EVENT_UPDATE]


def test_unchanged_state_emits_only_summary(run_config) -> None:
    """Test an update with no changes still reports its summary."""
    state = _state(run_config)
    events = derive_events(state, state.copy(), update=2)
    assert [event.event_type for event in events] == [EVENT_UPDATE]
    assert events[0].data["threshold"] is None


def test_write_events(tmp_path, run_config) -> None:
    """Test events are written one JSON object per line."""
    log = EventLog()
    state = _state(run_config)
    log(derive_events(state, state.copy(), update=1))
    log(derive_events(state, state.copy(), update=2))
    path = write_events(log.events, tmp_path / "events.jsonl")
    lines = path.read_text().splitlines()
    assert [json.loads(line)["update"] for line in lines] == [1, 2]
    assert json.loads(lines[0])["event_type"] == EVENT_UPDATE
