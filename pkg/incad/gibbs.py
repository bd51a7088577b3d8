"""Pseudo-Gibbs sampler for the INCAD mixture.

Cluster assignments follow a Chinese-restaurant process whose concentration is
raised for points in the density tail; anomalous and normal clusters share the
NIW base distribution, and a new cluster is opened at the point with the
configured covariance sigma_new.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
from scipy.special import expit, logsumexp

from .config import RunConfig
from .const import FLAG_SAMPLER_POSTERIOR, RESAMPLE_ALL
from .model import UNASSIGNED, ClusterRecord, ModelState
from .mvn import (
    MVNParams,
    Observation,
    RandomSource,
    SufficientStats,
    log_predictive,
    mvn_logpdf,
    niw_posterior,
    sample_covariance,
    sample_niw,
)
from .tail import TailModel, effective_alpha, fit_tail

_LOGGER = logging.getLogger(__name__)


def initialize_state(
    data: npt.ArrayLike, config: RunConfig, rng: RandomSource
) -> ModelState:
    """Start from init_clusters identical clusters with random memberships.

    Every cluster gets the sample mean and init_cov_scale times the sample
    covariance; clusters left empty by the random assignment are dropped.
    """
    state = ModelState.empty(data, config)
    n = state.n_points
    n_init = min(config.init_clusters, n)
    shared = MVNParams(
        mean=state.data.mean(axis=0),
        covariance=config.init_cov_scale * sample_covariance(state.data),
    )
    draws = rng.integers(0, n_init, size=n)
    for k in range(n_init):
        members = np.flatnonzero(draws == k)
        if members.shape[0] == 0:
            continue
        state.clusters.append(
            ClusterRecord(params=shared, stats=SufficientStats.from_points(state.data[members]))
        )
        state.assignments[members] = state.n_clusters - 1
    _LOGGER.debug("Initialized %d clusters over %d points", state.n_clusters, n)
    return state


def detach_point(state: ModelState, i: int) -> ModelState:
    """Remove point i from its cluster, deleting the cluster if it empties."""
    state.detach(i)
    return state


def _concentration(state: ModelState, p: float, flagged: bool, in_tail: bool | None) -> float:
    if not flagged:
        return state.config.alpha
    tail_cfg = state.config.tail
    p = min(p, 1.0 - tail_cfg.p_clamp)
    return effective_alpha(p, tail_cfg, p > 0 if in_tail is None else in_tail)


def _component_log_terms(state: ModelState, x: Observation) -> npt.NDArray[np.float64]:
    """log n_k + log F(x|theta_k) for every live cluster, then log predictive."""
    terms = [math.log(c.size) + mvn_logpdf(x, c.params) for c in state.clusters]
    terms.append(log_predictive(x, state.config.niw))
    return np.array(terms)


def assignment_distribution(
    state: ModelState, x: Observation, p: float, a: bool, in_tail: bool | None = None
) -> npt.NDArray[np.float64]:
    """Posterior over the K existing clusters plus a new one for a detached point."""
    alpha = _concentration(state, p, a, in_tail)
    log_den = math.log(state.n_points + alpha - 1.0)
    log_terms = _component_log_terms(state, x)
    log_terms[-1] += math.log(alpha)
    log_terms -= log_den
    return np.exp(log_terms - logsumexp(log_terms))


def spawn_cluster(state: ModelState, i: int) -> ModelState:
    """Open a cluster at x_i with the configured new-cluster covariance."""
    params = MVNParams(mean=state.data[i].copy(), covariance=state.config.sigma_new)
    state.spawn(i, params)
    return state


def resample_cluster_params(
    state: ModelState, rng: RandomSource, clusters: Iterable[int] | None = None
) -> ModelState:
    """Redraw cluster parameters from the NIW posterior given their members."""
    indices = range(state.n_clusters) if clusters is None else clusters
    for k in indices:
        cluster = state.clusters[k]
        cluster.params = sample_niw(niw_posterior(state.config.niw, cluster.stats), rng)
    return state


def anomaly_flag_posterior(
    state: ModelState, x: Observation, p: float, in_tail: bool | None = None
) -> float:
    """P(a = 1 | x, z) from the anomalous and normal concentration terms."""
    gamma = state.config.gamma
    if gamma <= 0.0:
        return 0.0
    if gamma >= 1.0:
        return 1.0
    alpha = state.config.alpha
    alpha_star = _concentration(state, p, True, in_tail)
    n = state.n_points
    log_terms = _component_log_terms(state, x)

    def _log_mass(concentration: float) -> float:
        terms = log_terms.copy()
        terms[-1] += math.log(concentration)
        return float(logsumexp(terms)) - math.log(n + concentration - 1.0)

    log_s1 = math.log(gamma) + _log_mass(alpha_star)
    log_s0 = math.log1p(-gamma) + _log_mass(alpha)
    return float(expit(log_s1 - log_s0))


def sample_anomaly_flag(p: float, rng: RandomSource) -> bool:
    """Bernoulli(p) draw of the anomaly flag."""
    return bool(rng.random() < p)


def cluster_majority_relabel(
    state: ModelState, clusters: Iterable[int] | None = None
) -> ModelState:
    """Flag every member of a cluster whose members are strictly mostly flagged."""
    indices = range(state.n_clusters) if clusters is None else clusters
    for k in indices:
        members = state.members(k)
        if members.shape[0] and 2 * int(state.flags[members].sum()) > members.shape[0]:
            state.flags[members] = True
    state.refresh_cluster_labels()
    return state


def _draw_index(probabilities: npt.NDArray[np.float64], rng: RandomSource) -> int:
    cumulative = np.cumsum(probabilities)
    k = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    return min(k, probabilities.shape[0] - 1)


def gibbs_step(
    state: ModelState, i: int, p: float, in_tail: bool, rng: RandomSource
) -> ModelState:
    """Detach, reassign, resample and re-flag one point."""
    config = state.config
    x = state.data[i]
    old = int(state.assignments[i])
    removed = state.detach(i)

    probabilities = assignment_distribution(state, x, p, bool(state.flags[i]), in_tail)
    k = _draw_index(probabilities, rng)
    spawned = k == state.n_clusters
    if spawned:
        spawn_cluster(state, i)
    else:
        state.attach(i, k)

    if config.resample_scope == RESAMPLE_ALL:
        touched: set[int] = set(range(state.n_clusters))
    else:
        touched = set()
        if old != UNASSIGNED and removed is None:
            touched.add(old)
        touched.add(k)
    if spawned:
        touched.discard(k)
    resample_cluster_params(state, rng, sorted(touched))

    if config.flag_sampler == FLAG_SAMPLER_POSTERIOR:
        flag_p = anomaly_flag_posterior(state, x, p, in_tail)
    else:
        flag_p = p
    state.flags[i] = sample_anomaly_flag(flag_p, rng)
    state.tail_probability[i] = p
    cluster_majority_relabel(state, [int(state.assignments[i])])
    return state


def gibbs_sweep(
    state: ModelState, rng: RandomSource, tail: TailModel | None = None
) -> ModelState:
    """One full pass of the pseudo-Gibbs sampler over every point."""
    config = state.config
    if tail is None:
        tail = fit_tail(state, config.tail)
    for i in range(state.n_points):
        if config.refit_per_point and i:
            tail = fit_tail(state, config.tail)
        in_tail = tail.fit is not None and bool(tail.image.tail_mask[i])
        gibbs_step(state, i, float(tail.probabilities[i]), in_tail, rng)
    resample_cluster_params(state, rng)
    state.refresh_cluster_labels()
    return state


def canonical_partition(assignments: Sequence[int] | npt.NDArray[np.int64]) -> tuple[int, ...]:
    """Relabel clusters by order of first appearance."""
    mapping: dict[int, int] = {}
    return tuple(mapping.setdefault(int(k), len(mapping)) for k in assignments)


@dataclass
class GibbsTrace:
    """What the sampler recorded after burn-in."""

    n_clusters: list[int] = field(default_factory=list)
    sizes: list[tuple[int, ...]] = field(default_factory=list)
    partitions: list[tuple[int, ...]] = field(default_factory=list)
    flag_counts: npt.NDArray[np.int64] | None = None

    @property
    def recorded(self) -> int:
        """Number of recorded sweeps."""
        return len(self.n_clusters)

    def flag_frequency(self) -> npt.NDArray[np.float64]:
        """Fraction of recorded sweeps in which each point was flagged."""
        if self.flag_counts is None or not self.recorded:
            return np.zeros(0)
        return self.flag_counts / self.recorded

    def record(self, state: ModelState) -> None:
        """Append one sweep's state."""
        self.n_clusters.append(state.n_clusters)
        self.sizes.append(tuple(int(n) for n in state.sizes()))
        self.partitions.append(canonical_partition(state.assignments))
        if self.flag_counts is None:
            self.flag_counts = np.zeros(state.n_points, dtype=np.int64)
        self.flag_counts += state.flags


def run_gibbs(
    state: ModelState,
    rng: RandomSource,
    sweeps: int | None = None,
    burn_in: int | None = None,
    on_sweep: Callable[[int, ModelState], None] | None = None,
) -> GibbsTrace:
    """Run the sweep loop, recording every sweep after burn-in."""
    sweeps = state.config.sweeps if sweeps is None else sweeps
    burn_in = state.config.burn_in if burn_in is None else burn_in
    trace = GibbsTrace()
    for sweep in range(sweeps):
        gibbs_sweep(state, rng)
        if sweep >= burn_in:
            trace.record(state)
        if on_sweep is not None:
            on_sweep(sweep, state)
        _LOGGER.debug(
            "Sweep %d: K=%d, flagged=%d", sweep, state.n_clusters, int(state.flags.sum())
        )
    return trace


def joint_assignment_log_prob(
    labels: Sequence[int] | npt.NDArray[np.int64],
    p: Sequence[float] | npt.NDArray[np.float64],
    alpha: float,
    alpha_star: float | Sequence[float] | npt.NDArray[np.float64],
    order: Sequence[int] | None = None,
) -> float:
    """Log joint probability of an assignment sequence under the modified CRP.

    Points arrive in `order` (default: index order). The I-th arrival joining a
    cluster of current size m contributes
    p*m/(I+alpha-1) + (1-p)*m/(I+alpha*-1); opening a cluster contributes
    p*alpha/(I+alpha-1) + (1-p)*alpha*/(I+alpha*-1).
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    p_seq = np.asarray(p, dtype=np.float64)
    star = np.broadcast_to(np.asarray(alpha_star, dtype=np.float64), (n,))
    sequence = range(n) if order is None else order
    sizes: dict[int, int] = {}
    numerators: list[float] = []
    denominators: list[float] = []
    for arrival, j in enumerate(sequence, start=1):
        k = int(labels[j])
        a_star = float(star[j])
        if k in sizes:
            w_alpha = w_star = float(sizes[k])
            sizes[k] += 1
        else:
            w_alpha, w_star = alpha, a_star
            sizes[k] = 1
        d_alpha = arrival + alpha - 1.0
        d_star = arrival + a_star - 1.0
        if alpha == a_star:
            numerators.append(math.log(w_alpha))
            denominators.append(math.log(d_alpha))
            continue
        pj = float(p_seq[j])
        numerators.append(math.log(pj * w_alpha * d_star + (1.0 - pj) * w_star * d_alpha))
        denominators.append(math.log(d_alpha))
        denominators.append(math.log(d_star))
    return math.fsum(numerators) - math.fsum(denominators)


def crp_log_prob(
    labels: Sequence[int] | npt.NDArray[np.int64],
    alpha: float,
    order: Sequence[int] | None = None,
) -> float:
    """Log probability of an assignment sequence under the plain CRP."""
    n = len(labels)
    return joint_assignment_log_prob(labels, np.zeros(n), alpha, alpha, order)
