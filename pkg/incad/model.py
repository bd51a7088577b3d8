"""Model state of the INCAD sampler."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import numpy.typing as npt

from .config import RunConfig
from .mvn import MVNParams, Observation, SufficientStats, stats_add, stats_remove

UNASSIGNED: int = -1


@dataclass
class ClusterRecord:
    """One live mixture component."""

    params: MVNParams
    stats: SufficientStats
    anomalous: bool = False

    @property
    def size(self) -> int:
        """Number of member points (n_k)."""
        return self.stats.n


@dataclass
class ModelState:
    """Assignments, anomaly flags and clusters over an observation buffer.

    Cluster indices are 0-based and contiguous; exported labels are 1-based.
    A point detached mid-sweep carries the UNASSIGNED sentinel.
    """

    data: npt.NDArray[np.float64]
    assignments: npt.NDArray[np.int64]
    flags: npt.NDArray[np.bool_]
    clusters: list[ClusterRecord]
    config: RunConfig
    tail_probability: npt.NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        """Fill the per-point tail probabilities."""
        if self.tail_probability.shape[0] != self.n_points:
            self.tail_probability = np.zeros(self.n_points)

    @classmethod
    def empty(cls, data: npt.ArrayLike, config: RunConfig) -> ModelState:
        """A state with every point unassigned and no clusters."""
        block = np.atleast_2d(np.asarray(data, dtype=np.float64))
        n = block.shape[0]
        return cls(
            data=block,
            assignments=np.full(n, UNASSIGNED, dtype=np.int64),
            flags=np.zeros(n, dtype=bool),
            clusters=[],
            config=config,
        )

    @property
    def n_points(self) -> int:
        """Number of buffered observations (N)."""
        return int(self.data.shape[0])

    @property
    def n_clusters(self) -> int:
        """Number of live clusters (K)."""
        return len(self.clusters)

    @property
    def dim(self) -> int:
        """Observation dimension."""
        return int(self.data.shape[1])

    def sizes(self) -> npt.NDArray[np.int64]:
        """Cluster sizes in index order."""
        return np.array([cluster.size for cluster in self.clusters], dtype=np.int64)

    def labels(self) -> npt.NDArray[np.int64]:
        """1-based cluster labels of every point (0 for unassigned)."""
        return self.assignments + 1

    def members(self, k: int) -> npt.NDArray[np.int64]:
        """Indices of the points assigned to cluster k."""
        return np.flatnonzero(self.assignments == k)

    def copy(self) -> ModelState:
        """Value copy safe to hand to readers."""
        return ModelState(
            data=self.data.copy(),
            assignments=self.assignments.copy(),
            flags=self.flags.copy(),
            clusters=[replace(cluster) for cluster in self.clusters],
            config=self.config,
            tail_probability=self.tail_probability.copy(),
        )

    def append(self, x: Observation) -> int:
        """Buffer a new observation, unassigned; returns its index."""
        self.data = np.vstack([self.data, x[None, :]])
        self.assignments = np.append(self.assignments, UNASSIGNED)
        self.flags = np.append(self.flags, False)
        self.tail_probability = np.append(self.tail_probability, 0.0)
        return self.n_points - 1

    def attach(self, i: int, k: int) -> None:
        """Assign point i to existing cluster k."""
        cluster = self.clusters[k]
        cluster.stats = stats_add(cluster.stats, self.data[i])
        self.assignments[i] = k

    def spawn(self, i: int, params: MVNParams) -> int:
        """Open a new cluster holding only point i; returns its index."""
        stats = stats_add(SufficientStats.empty(self.dim), self.data[i])
        self.clusters.append(ClusterRecord(params=params, stats=stats))
        k = self.n_clusters - 1
        self.assignments[i] = k
        return k

    def detach(self, i: int) -> int | None:
        """Remove point i from its cluster; returns the removed cluster index if it emptied."""
        k = int(self.assignments[i])
        if k == UNASSIGNED:
            return None
        cluster = self.clusters[k]
        cluster.stats = stats_remove(cluster.stats, self.data[i])
        self.assignments[i] = UNASSIGNED
        if cluster.size > 0:
            return None
        del self.clusters[k]
        self.assignments[self.assignments > k] -= 1
        return k

    def refresh_cluster_labels(self) -> None:
        """Derive each cluster's anomalous label from a strict majority of member flags."""
        assigned = self.assignments != UNASSIGNED
        flagged = np.bincount(
            self.assignments[assigned],
            weights=self.flags[assigned].astype(float),
            minlength=self.n_clusters,
        )
        for cluster, count in zip(self.clusters, flagged, strict=True):
            cluster.anomalous = bool(count * 2 > cluster.size)

    def invariant_violations(self) -> list[str]:
        """Describe every broken state invariant (empty when the state is valid)."""
        problems: list[str] = []
        assigned = self.assignments[self.assignments != UNASSIGNED]
        if np.any(assigned >= self.n_clusters) or np.any(assigned < 0):
            problems.append("assignment references a missing cluster")
        counts = np.bincount(assigned, minlength=self.n_clusters)[: self.n_clusters]
        sizes = self.sizes()
        if not np.array_equal(counts, sizes):
            problems.append(f"cluster sizes {sizes.tolist()} != member counts {counts.tolist()}")
        if np.any(sizes < 1):
            problems.append("empty cluster present")
        if int(sizes.sum()) != assigned.shape[0]:
            problems.append("sizes do not sum to the number of assigned points")
        for k, cluster in enumerate(self.clusters):
            members = self.data[self.assignments == k]
            if members.shape[0] and not np.allclose(cluster.stats.sum, members.sum(axis=0)):
                problems.append(f"cluster {k + 1} statistics drifted from its members")
        return problems
