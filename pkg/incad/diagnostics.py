"""Diagnostics support for INCAD."""

from __future__ import annotations

from typing import Any

from .coordinator import StreamState
from .model import ModelState
from .tail import TailModel


def _tail_diagnostics(tail: TailModel | None) -> dict[str, Any] | None:
    if tail is None:
        return None
    fit = tail.fit
    return {
        "q": tail.image.q,
        "threshold": tail.image.threshold_t1,
        "n_tail": tail.image.n_tail,
        "fit": None
        if fit is None
        else {
            "xi": fit.xi,
            "beta": fit.beta,
            "nu": fit.nu,
            "method": fit.method,
            "n_exceedances": fit.n_exceedances,
        },
    }


def get_state_diagnostics(
    state: StreamState | ModelState,
    tail: TailModel | None = None,
    config_hash: str | None = None,
) -> dict[str, Any]:
    """Return a serializable summary of a model state."""
    stream = state if isinstance(state, StreamState) else None
    model = stream.model if stream else state
    if tail is None and stream is not None:
        tail = stream.tail
    clusters = []
    for k, cluster in enumerate(model.clusters):
        members = model.members(k)
        clusters.append(
            {
                "cluster": k + 1,
                "size": cluster.size,
                "anomalous": cluster.anomalous,
                "flagged_fraction": float(model.flags[members].mean()) if members.size else 0.0,
                "mean": cluster.params.mean.tolist(),
            }
        )
    diagnostics: dict[str, Any] = {
        "config_hash": config_hash,
        "n_points": model.n_points,
        "n_clusters": model.n_clusters,
        "n_flagged": int(model.flags.sum()),
        "clusters": clusters,
        "tail": _tail_diagnostics(tail),
        "invariant_violations": model.invariant_violations(),
    }
    if stream is not None:
        diagnostics["stream"] = {
            "batch_size": stream.batch_size,
            "batch_fraction": stream.batch_fraction,
            "update_count": stream.update_count,
            "recorded_sweeps": stream.trace.recorded,
        }
    return diagnostics
