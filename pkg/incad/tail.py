"""Extreme-value tail of the mixture-density image.

The image Y = f(X) of the mixture density over the data has a lower tail made
of points that no cluster explains well. A generalized Pareto distribution is
fitted to the exceedances t1 - f(x) below the q-th percentile t1, and its CDF
turns a point's density into the probability p that the point is anomalous.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp
from scipy.stats import genpareto

from .const import DEFAULT_MIN_TAIL_POINTS, DEFAULT_P_CLAMP, GPD_XI_MAX, GPD_XI_MIN
from .exceptions import IncadDataError, IncadNumericalError, TailFitUnavailable
from .mvn import mvn_logpdf_many

if TYPE_CHECKING:
    from .config import TailConfig
    from .model import ModelState

_LOGGER = logging.getLogger(__name__)

FIT_MLE: str = "mle"
FIT_MOMENTS: str = "moments"

_GRID_POINTS = 40


@dataclass(frozen=True, eq=False)
class DensityImage:
    """Per-point mixture log-densities and the tail threshold t1 (density units)."""

    values: npt.NDArray[np.float64]
    threshold_t1: float
    q: float

    @cached_property
    def densities(self) -> npt.NDArray[np.float64]:
        """Mixture densities exp(values)."""
        return np.exp(self.values)

    @cached_property
    def tail_mask(self) -> npt.NDArray[np.bool_]:
        """Points strictly below the threshold."""
        return self.densities < self.threshold_t1

    @property
    def n_tail(self) -> int:
        """Number of tail points."""
        return int(self.tail_mask.sum())

    def with_quantile(self, q: float) -> DensityImage:
        """Same values, threshold moved to another percentile."""
        return DensityImage(self.values, tail_threshold(self.densities, q), q)


@dataclass(frozen=True)
class GPDTailFit:
    """Generalized Pareto fit (location nu, scale beta, shape xi) of the exceedances."""

    nu: float
    beta: float
    xi: float
    method: str = FIT_MLE
    n_exceedances: int = 0

    def cdf(self, y: npt.ArrayLike) -> npt.NDArray[np.float64]:
        """GPD CDF of exceedance values."""
        return genpareto.cdf(y, c=self.xi, loc=self.nu, scale=self.beta)


def tail_threshold(densities: npt.NDArray[np.float64], q: float) -> float:
    """q-th percentile of the densities, taken as an observed value."""
    return float(np.quantile(densities, q, method="higher"))


def mixture_log_density(
    state: ModelState, points: npt.NDArray[np.float64] | None = None
) -> npt.NDArray[np.float64]:
    """log sum_k (n_k / N) N(x; theta_k) for each point."""
    if state.n_clusters == 0:
        raise IncadNumericalError(translation_key="empty_model")
    block = state.data if points is None else np.atleast_2d(points)
    sizes = state.sizes().astype(float)
    log_weights = np.log(sizes / sizes.sum())
    components = np.stack(
        [
            log_w + mvn_logpdf_many(block, cluster.params)
            for log_w, cluster in zip(log_weights, state.clusters, strict=True)
        ]
    )
    return logsumexp(components, axis=0)


def density_image(
    state: ModelState, points: npt.NDArray[np.float64] | None = None, q: float | None = None
) -> DensityImage:
    """Mixture-density image of the points (default: the state's data) with threshold t1."""
    block = state.data if points is None else np.atleast_2d(points)
    if block.shape[0] == 0:
        raise IncadDataError(translation_key="empty_data")
    q = state.config.tail.q if q is None else q
    values = mixture_log_density(state, block)
    return DensityImage(values, tail_threshold(np.exp(values), q), q)


def _profile_log_likelihood(theta: float, y: npt.NDArray[np.float64]) -> tuple[float, float]:
    """Profile log-likelihood of theta = xi / beta, with the implied xi."""
    s = np.log1p(theta * y)
    xi = float(s.mean())
    if not math.isfinite(xi) or xi == 0.0 or xi / theta <= 0:
        return -math.inf, xi
    n = y.shape[0]
    return -n * math.log(xi / theta) - n * (1.0 + xi), xi


def _best_on_interval(
    y: npt.NDArray[np.float64], low: float, high: float, log_spaced: bool
) -> tuple[float, float, float] | None:
    """Grid-seeded bounded search of the profile on one side of zero."""
    if log_spaced:
        grid = np.geomspace(low, high, _GRID_POINTS)
    else:
        grid = -np.geomspace(-high, -low, _GRID_POINTS)[::-1]
    scores = np.array([_profile_log_likelihood(t, y)[0] for t in grid])
    if not np.any(np.isfinite(scores)):
        return None
    best = int(np.nanargmax(np.where(np.isfinite(scores), scores, -np.inf)))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.shape[0] - 1)]
    result = minimize_scalar(
        lambda t: -_profile_log_likelihood(t, y)[0],
        bounds=(min(lo, hi), max(lo, hi)),
        method="bounded",
    )
    if not result.success or not math.isfinite(result.fun):
        return None
    theta = float(result.x)
    ll, xi = _profile_log_likelihood(theta, y)
    return ll, xi, xi / theta


def _fit_moments(y: npt.NDArray[np.float64]) -> GPDTailFit:
    mean = float(y.mean())
    var = float(y.var())
    if var <= 0.0:
        xi = GPD_XI_MIN
    else:
        xi = float(np.clip(0.5 * (1.0 - mean * mean / var), GPD_XI_MIN, GPD_XI_MAX))
    # GPD mean is beta / (1 - xi).
    beta = max(mean * (1.0 - xi), np.finfo(float).tiny) if xi < 1 else max(mean, 1e-300)
    return GPDTailFit(nu=0.0, beta=beta, xi=xi, method=FIT_MOMENTS, n_exceedances=y.shape[0])


def fit_gpd(exceedances: npt.ArrayLike) -> GPDTailFit:
    """Maximum-likelihood GPD fit of positive exceedances, method of moments as fallback.

    The likelihood is profiled over theta = xi / beta (Grimshaw's reduction);
    each side of zero is searched separately and the exponential (xi = 0)
    limit is a candidate of its own.
    """
    y = np.asarray(exceedances, dtype=np.float64)
    if y.shape[0] < 2 or np.ptp(y) == 0.0:
        _LOGGER.debug("Degenerate exceedances, using method of moments")
        return _fit_moments(y)

    n = y.shape[0]
    mean = float(y.mean())
    ymax = float(y.max())
    candidates: list[tuple[float, float, float]] = [(-n * math.log(mean) - n, 0.0, mean)]

    eps = 1e-8 / mean
    positive = _best_on_interval(y, eps, 1e3 / mean, log_spaced=True)
    negative = _best_on_interval(y, -(1.0 - 1e-6) / ymax, -eps, log_spaced=False)
    candidates.extend(c for c in (positive, negative) if c is not None)

    valid = [
        c
        for c in candidates
        if math.isfinite(c[0]) and GPD_XI_MIN <= c[1] <= GPD_XI_MAX and c[2] > 0
    ]
    if not valid:
        _LOGGER.debug("GPD likelihood search failed, using method of moments")
        return _fit_moments(y)
    _, xi, beta = max(valid, key=lambda c: c[0])
    return GPDTailFit(nu=0.0, beta=beta, xi=xi, method=FIT_MLE, n_exceedances=n)


def fit_gpd_lower_tail(
    image: DensityImage, min_points: int = DEFAULT_MIN_TAIL_POINTS
) -> GPDTailFit:
    """Fit the GPD to t1 - f(x) over the points below t1."""
    exceedances = image.threshold_t1 - image.densities[image.tail_mask]
    if exceedances.shape[0] < min_points:
        raise TailFitUnavailable(
            translation_key="insufficient_tail",
            translation_placeholders={"count": exceedances.shape[0], "minimum": min_points},
        )
    return fit_gpd(exceedances)


def anomaly_probability(
    fx: float, image: DensityImage, fit: GPDTailFit, p_clamp: float = DEFAULT_P_CLAMP
) -> float:
    """Probability that a point of density fx is anomalous; 0 outside the tail."""
    if fx >= image.threshold_t1:
        return 0.0
    p = float(fit.cdf(image.threshold_t1 - fx))
    return min(max(p, 0.0), 1.0 - p_clamp)


def effective_alpha(p: float, cfg: TailConfig, in_tail: bool) -> float:
    """Point-specific concentration: alpha outside the tail, the EV blend inside it."""
    if not 0.0 <= p < 1.0:
        raise IncadNumericalError(
            translation_key="invalid_probability",
            translation_placeholders={"p": p},
        )
    if not in_tail:
        return cfg.alpha_base
    return cfg.alpha_base * (1.0 - cfg.ev_prop) + cfg.ev_alpha_scale / (1.0 - p) * cfg.ev_prop


@dataclass(frozen=True, eq=False)
class TailModel:
    """Density image plus the GPD fit, or no fit when it was deferred."""

    image: DensityImage
    fit: GPDTailFit | None
    p_clamp: float = DEFAULT_P_CLAMP

    def probability(self, fx: float) -> float:
        """Anomaly probability of a density value (0 while the fit is deferred)."""
        if self.fit is None:
            return 0.0
        return anomaly_probability(fx, self.image, self.fit, self.p_clamp)

    @cached_property
    def probabilities(self) -> npt.NDArray[np.float64]:
        """Anomaly probability of every imaged point."""
        if self.fit is None:
            return np.zeros(self.image.values.shape[0])
        y = self.image.threshold_t1 - self.image.densities
        p = np.where(self.image.tail_mask, self.fit.cdf(np.maximum(y, 0.0)), 0.0)
        return np.clip(p, 0.0, 1.0 - self.p_clamp)


def fit_tail(state: ModelState, cfg: TailConfig) -> TailModel:
    """Image the state's data and fit its tail, widening q when the tail is too thin."""
    image = density_image(state, q=cfg.q)
    try:
        return TailModel(image, fit_gpd_lower_tail(image, cfg.min_points), cfg.p_clamp)
    except TailFitUnavailable as err:
        widened = cfg.min_points / state.n_points
        if widened > cfg.max_q:
            _LOGGER.debug("Tail fit deferred at N=%d: %s", state.n_points, err)
            return TailModel(image, None, cfg.p_clamp)
    image = image.with_quantile(widened)
    try:
        fit = fit_gpd_lower_tail(image, cfg.min_points)
    except TailFitUnavailable as err:
        _LOGGER.debug("Tail fit deferred after widening q to %.3f: %s", widened, err)
        return TailModel(image, None, cfg.p_clamp)
    _LOGGER.debug("Widened tail quantile to %.3f at N=%d", widened, state.n_points)
    return TailModel(image, fit, cfg.p_clamp)


def score_points(
    state: ModelState, points: npt.ArrayLike, tail: TailModel
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Read-only mixture log-density and anomaly probability of arbitrary points."""
    block = np.atleast_2d(np.asarray(points, dtype=np.float64))
    values = mixture_log_density(state, block)
    probabilities = np.array([tail.probability(float(f)) for f in np.exp(values)])
    return values, probabilities
