"""Test the INCAD diagnostics."""

import json

from incad.coordinator import batch_init, stream_update
from incad.diagnostics import get_state_diagnostics
from incad.mvn import make_rng
from incad.tail import fit_tail

from .conftest import single_cluster_state


def test_stream_diagnostics(blobs, run_config) -> None:
    """Test diagnostics of a stream state are complete and serializable."""
    state = batch_init(blobs, run_config, make_rng(11))
    stream_update(state, [0.0, 1.0], make_rng(12))

    diagnostics = get_state_diagnostics(state, config_hash="abc")

    assert diagnostics["config_hash"] == "abc"
    assert diagnostics["n_points"] == 81
    assert diagnostics["n_clusters"] == len(diagnostics["clusters"])
    assert sum(c["size"] for c in diagnostics["clusters"]) == 81
    assert diagnostics["invariant_violations"] == []
    assert diagnostics["tail"]["n_tail"] >= 1
    assert diagnostics["stream"]["update_count"] == 1
    assert diagnostics["stream"]["batch_size"] == 80
    json.dumps(diagnostics)


def test_model_diagnostics_without_tail(blobs, run_config) -> None:
    """Test a plain model state has no stream section and an optional tail."""
    state = single_cluster_state(blobs, run_config)
    diagnostics = get_state_diagnostics(state)
    assert "stream" not in diagnostics
    assert diagnostics["tail"] is None
    assert diagnostics["clusters"][0]["cluster"] == 1
    assert diagnostics["clusters"][0]["flagged_fraction"] == 0.0

    with_tail = get_state_diagnostics(state, fit_tail(state, run_config.tail))
    assert with_tail["tail"]["q"] > 0
    json.dumps(with_tail)
