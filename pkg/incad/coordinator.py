"""Streaming coordinator for INCAD."""

from __future__ import annotations

import asyncio
import logging
from collections.abc import AsyncIterable, Callable, Iterable
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .config import RunConfig
from .exceptions import IncadDataError
from .events import StreamEvent, derive_events
from .gibbs import (
    GibbsTrace,
    assignment_distribution,
    cluster_majority_relabel,
    gibbs_step,
    initialize_state,
    run_gibbs,
    spawn_cluster,
)
from .model import ModelState
from .mvn import RandomSource, as_observation
from .tail import TailModel, fit_tail, score_points

_LOGGER = logging.getLogger(__name__)


@dataclass
class StreamState:
    """Model over every observation seen so far."""

    model: ModelState
    batch_fraction: float
    update_count: int = 0
    batch_size: int = 0
    tail: TailModel | None = None
    trace: GibbsTrace = field(default_factory=GibbsTrace)

    @property
    def buffer(self) -> npt.NDArray[np.float64]:
        """All buffered observations."""
        return self.model.data


@dataclass(frozen=True)
class PointScore:
    """Read-only score of a point against a snapshot."""

    cluster: int
    log_density: float
    probability: float
    in_tail: bool


def batch_init(
    data_prefix: npt.ArrayLike,
    config: RunConfig,
    rng: RandomSource,
    batch_fraction: float | None = None,
) -> StreamState:
    """Cluster the batch prefix with the full sampler."""
    block = np.atleast_2d(np.asarray(data_prefix, dtype=np.float64))
    minimum = config.stream.min_batch
    if block.shape[0] < minimum:
        raise IncadDataError(
            translation_key="batch_too_small",
            translation_placeholders={"count": block.shape[0], "minimum": minimum},
        )
    model = initialize_state(block, config, rng)
    trace = run_gibbs(model, rng)
    fraction = config.stream.batch_fraction if batch_fraction is None else batch_fraction
    _LOGGER.info(
        "Batch model ready: N=%d, K=%d, ev_prop=%.4f",
        model.n_points,
        model.n_clusters,
        config.tail.ev_prop,
    )
    return StreamState(
        model=model,
        batch_fraction=fraction,
        batch_size=model.n_points,
        tail=fit_tail(model, config.tail),
        trace=trace,
    )


def stream_update(state: StreamState, x_new: npt.ArrayLike, rng: RandomSource) -> StreamState:
    """Insert one observation and re-evaluate the density-tail points."""
    model = state.model
    config = model.config
    x = as_observation(x_new, model.dim)
    i = model.append(x)

    # Provisional greedy placement before the tail pass.
    probabilities = assignment_distribution(model, x, 0.0, False)
    k = int(np.argmax(probabilities))
    if k == model.n_clusters:
        spawn_cluster(model, i)
    else:
        model.attach(i, k)

    tail = state.tail
    for _ in range(config.stream.tail_passes):
        tail = fit_tail(model, config.tail)
        mask = tail.image.tail_mask
        # Non-tail points draw Binomial(0); members of small clusters keep their flag.
        small = model.sizes() <= config.small_cluster_frac * model.n_points + 1e-9
        clear = ~mask & ~small[model.assignments]
        model.flags[clear] = False
        model.tail_probability[~mask] = 0.0
        for j in np.flatnonzero(mask):
            in_tail = tail.fit is not None
            gibbs_step(model, int(j), float(tail.probabilities[j]), in_tail, rng)
    cluster_majority_relabel(model)

    state.tail = tail
    state.update_count += 1
    every = config.stream.finalize_every
    if every and state.update_count % every == 0:
        finalize_small_clusters(state)
    return state


def finalize_small_clusters(state: StreamState | ModelState) -> StreamState | ModelState:
    """Flag every point of a cluster holding at most small_cluster_frac of the data."""
    model = state.model if isinstance(state, StreamState) else state
    limit = model.config.small_cluster_frac * model.n_points
    for k, cluster in enumerate(model.clusters):
        if cluster.size <= limit + 1e-9:
            model.flags[model.members(k)] = True
    model.refresh_cluster_labels()
    return state


class IncadStreamCoordinator:
    """Class to manage streaming updates of an INCAD model."""

    def __init__(self, state: StreamState, rng: RandomSource, name: str = "INCAD") -> None:
        """Initialize the coordinator."""
        self.state = state
        self.rng = rng
        self.name = name
        self._lock = asyncio.Lock()
        self._listeners: list[Callable[[list[StreamEvent]], None]] = []
        self._snapshot = state.model.copy()
        self._tail = state.tail if state.tail is not None else fit_tail(
            self._snapshot, self._snapshot.config.tail
        )

    @property
    def snapshot(self) -> ModelState:
        """Immutable view of the model between updates."""
        return self._snapshot

    def async_add_listener(
        self, update_callback: Callable[[list[StreamEvent]], None]
    ) -> Callable[[], None]:
        """Listen for events of each update; returns a function that removes the listener."""
        self._listeners.append(update_callback)

        def remove_listener() -> None:
            self._listeners.remove(update_callback)

        return remove_listener

    async def async_process(self, x: npt.ArrayLike) -> list[StreamEvent]:
        """Apply one stream update and notify listeners."""
        async with self._lock:
            previous = self._snapshot
            await asyncio.to_thread(stream_update, self.state, x, self.rng)
            current = self.state.model.copy()
            tail = self.state.tail
            events = derive_events(previous, current, self.state.update_count, tail)
            self._snapshot = current
            if tail is not None:
                self._tail = tail
        for listener in list(self._listeners):
            listener(events)
        return events

    async def async_run(
        self, points: Iterable[npt.ArrayLike] | AsyncIterable[npt.ArrayLike]
    ) -> int:
        """Feed points one at a time; returns the number of updates applied."""
        count = 0
        if isinstance(points, AsyncIterable):
            async for x in points:
                await self.async_process(x)
                count += 1
        else:
            for x in points:
                await self.async_process(x)
                count += 1
        _LOGGER.info("%s processed %d stream updates", self.name, count)
        return count

    async def async_finalize(self) -> StreamState:
        """Apply the small-cluster rule at end of stream."""
        async with self._lock:
            finalize_small_clusters(self.state)
            self._snapshot = self.state.model.copy()
        return self.state

    def async_score(self, x: npt.ArrayLike) -> PointScore:
        """Score a point against the last snapshot without touching the live state."""
        snapshot = self._snapshot
        point = as_observation(x, snapshot.dim)
        values, probabilities = score_points(snapshot, point, self._tail)
        probs = assignment_distribution(snapshot, point, 0.0, False)
        return PointScore(
            cluster=int(np.argmax(probs[:-1])) + 1,
            log_density=float(values[0]),
            probability=float(probabilities[0]),
            in_tail=bool(np.exp(values[0]) < self._tail.image.threshold_t1),
        )
