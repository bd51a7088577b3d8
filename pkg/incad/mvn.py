"""Multivariate-normal likelihoods and Normal-Inverse-Wishart conjugacy.

The mixture components F(x|theta) are multivariate normals and the base
distribution G0 is a Normal-Inverse-Wishart. All densities are returned in log
space; every determinant and solve goes through a Cholesky factor, and a
factorization failure is an error rather than a silent regularization.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import TypeAlias

import numpy as np
import numpy.typing as npt
from scipy import linalg
from scipy.special import gammaln
from scipy.stats import invwishart

from .exceptions import IncadConfigError, IncadDataError, IncadNumericalError

_LOGGER = logging.getLogger(__name__)

Observation: TypeAlias = npt.NDArray[np.float64]
RandomSource: TypeAlias = np.random.Generator

_LOG_2PI = math.log(2.0 * math.pi)


def make_rng(seed: int | np.random.SeedSequence) -> RandomSource:
    """Return a seeded PCG64 generator."""
    return np.random.default_rng(seed)


def spawn_rngs(seed: int, count: int) -> list[RandomSource]:
    """Split one seed into independent generator streams."""
    return [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(count)]


def as_observation(x: npt.ArrayLike, dim: int | None = None) -> Observation:
    """Coerce to a finite 1-D float vector, optionally of a fixed dimension."""
    arr = np.asarray(x, dtype=np.float64).reshape(-1)
    if dim is not None and arr.shape[0] != dim:
        raise IncadDataError(
            translation_key="dimension_mismatch",
            translation_placeholders={"expected": dim, "actual": arr.shape[0]},
        )
    if not np.all(np.isfinite(arr)):
        raise IncadDataError(translation_key="non_finite_observation")
    return arr


def cholesky_factor(matrix: npt.NDArray[np.float64], context: str) -> npt.NDArray[np.float64]:
    """Lower Cholesky factor, raising a numerical error when not positive-definite."""
    try:
        return linalg.cholesky(matrix, lower=True)
    except (linalg.LinAlgError, ValueError) as err:
        raise IncadNumericalError(
            translation_key="covariance_not_positive_definite",
            translation_placeholders={"context": context},
        ) from err


def _symmetrize(matrix: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    return 0.5 * (matrix + matrix.T)


@dataclass(frozen=True, eq=False)
class MVNParams:
    """Mean and covariance of one multivariate-normal component."""

    mean: npt.NDArray[np.float64]
    covariance: npt.NDArray[np.float64]

    @property
    def dim(self) -> int:
        """Dimension of the component."""
        return int(self.mean.shape[0])

    @cached_property
    def chol(self) -> npt.NDArray[np.float64]:
        """Lower Cholesky factor of the covariance."""
        return cholesky_factor(self.covariance, "component covariance")

    @cached_property
    def log_det(self) -> float:
        """Log-determinant of the covariance."""
        return 2.0 * float(np.log(np.diag(self.chol)).sum())


@dataclass(frozen=True, eq=False)
class NIWParams:
    """Normal-Inverse-Wishart hyperparameters (mu0, kappa0, nu0, psi)."""

    mu0: npt.NDArray[np.float64]
    kappa0: float
    nu0: float
    psi: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        """Validate the hyperparameters."""
        d = self.mu0.shape[0]
        if self.psi.shape != (d, d):
            raise IncadConfigError(
                translation_key="invalid_niw_params",
                translation_placeholders={"error": f"psi must be {d}x{d}"},
            )
        if not self.kappa0 > 0:
            raise IncadConfigError(
                translation_key="invalid_niw_params",
                translation_placeholders={"error": f"kappa0={self.kappa0} must be positive"},
            )
        if not self.nu0 > d - 1:
            raise IncadConfigError(
                translation_key="invalid_niw_params",
                translation_placeholders={"error": f"nu0={self.nu0} must exceed {d - 1}"},
            )
        if not np.allclose(self.psi, self.psi.T):
            raise IncadConfigError(
                translation_key="invalid_niw_params",
                translation_placeholders={"error": "psi must be symmetric"},
            )
        cholesky_factor(self.psi, "NIW scale matrix")

    @property
    def dim(self) -> int:
        """Dimension of the modelled observations."""
        return int(self.mu0.shape[0])

    @cached_property
    def predictive_df(self) -> float:
        """Degrees of freedom of the Student-t predictive."""
        return self.nu0 - self.dim + 1.0

    @cached_property
    def predictive_chol(self) -> npt.NDArray[np.float64]:
        """Cholesky factor of the Student-t predictive scale."""
        scale = self.psi * (self.kappa0 + 1.0) / (self.kappa0 * self.predictive_df)
        return cholesky_factor(scale, "predictive scale")


@dataclass(frozen=True, eq=False)
class SufficientStats:
    """Count, sum and summed outer products of the points in a cluster."""

    n: int
    sum: npt.NDArray[np.float64]
    sum_outer: npt.NDArray[np.float64] = field(repr=False)

    @classmethod
    def empty(cls, dim: int) -> SufficientStats:
        """Statistics of no points."""
        return cls(0, np.zeros(dim), np.zeros((dim, dim)))

    @classmethod
    def from_points(cls, points: npt.ArrayLike) -> SufficientStats:
        """Statistics of a block of points, computed from scratch."""
        block = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return cls(int(block.shape[0]), block.sum(axis=0), block.T @ block)

    @property
    def mean(self) -> npt.NDArray[np.float64]:
        """Sample mean (zero vector when empty)."""
        return self.sum / self.n if self.n else np.zeros_like(self.sum)


def stats_add(stats: SufficientStats, x: Observation) -> SufficientStats:
    """Fold one observation into the statistics."""
    return SufficientStats(stats.n + 1, stats.sum + x, stats.sum_outer + np.outer(x, x))


def stats_remove(stats: SufficientStats, x: Observation) -> SufficientStats:
    """Remove one observation from the statistics."""
    if stats.n < 1:
        raise IncadNumericalError(translation_key="remove_from_empty_stats")
    if stats.n == 1:
        return SufficientStats.empty(stats.sum.shape[0])
    return SufficientStats(stats.n - 1, stats.sum - x, stats.sum_outer - np.outer(x, x))


def mvn_logpdf_many(points: npt.NDArray[np.float64], params: MVNParams) -> npt.NDArray[np.float64]:
    """Log N(x; mean, covariance) for each row of an (N, d) block."""
    diff = np.atleast_2d(points) - params.mean
    solved = linalg.solve_triangular(params.chol, diff.T, lower=True)
    maha = np.einsum("ij,ij->j", solved, solved)
    return -0.5 * (params.dim * _LOG_2PI + params.log_det + maha)


def mvn_logpdf(x: Observation, params: MVNParams) -> float:
    """Log N(x; mean, covariance) of a single observation."""
    if x.shape[0] != params.dim:
        raise IncadDataError(
            translation_key="dimension_mismatch",
            translation_placeholders={"expected": params.dim, "actual": x.shape[0]},
        )
    return float(mvn_logpdf_many(x[None, :], params)[0])


def niw_posterior(prior: NIWParams, stats: SufficientStats) -> NIWParams:
    """Conjugate NIW update with the statistics of the cluster's points."""
    if stats.n == 0:
        return prior
    n = stats.n
    kappa_n = prior.kappa0 + n
    nu_n = prior.nu0 + n
    xbar = stats.sum / n
    mu_n = (prior.kappa0 * prior.mu0 + stats.sum) / kappa_n
    scatter = stats.sum_outer - n * np.outer(xbar, xbar)
    dev = xbar - prior.mu0
    psi_n = prior.psi + scatter + (prior.kappa0 * n / kappa_n) * np.outer(dev, dev)
    return NIWParams(mu0=mu_n, kappa0=kappa_n, nu0=nu_n, psi=_symmetrize(psi_n))


def sample_niw(params: NIWParams, rng: RandomSource) -> MVNParams:
    """Draw (mean, covariance) from NIW: covariance ~ IW(nu, psi), mean ~ N(mu0, cov/kappa0)."""
    draw = invwishart.rvs(df=params.nu0, scale=params.psi, random_state=rng)
    covariance = _symmetrize(np.atleast_2d(np.asarray(draw, dtype=np.float64)))
    chol = cholesky_factor(covariance, "inverse-Wishart draw")
    mean = params.mu0 + chol @ rng.standard_normal(params.dim) / math.sqrt(params.kappa0)
    return MVNParams(mean=mean, covariance=covariance)


def log_predictive_many(
    points: npt.NDArray[np.float64], params: NIWParams
) -> npt.NDArray[np.float64]:
    """Log Student-t predictive density of each row under the NIW prior."""
    d = params.dim
    df = params.predictive_df
    chol = params.predictive_chol
    diff = np.atleast_2d(points) - params.mu0
    solved = linalg.solve_triangular(chol, diff.T, lower=True)
    maha = np.einsum("ij,ij->j", solved, solved)
    log_det = 2.0 * float(np.log(np.diag(chol)).sum())
    log_norm = (
        gammaln((df + d) / 2.0) - gammaln(df / 2.0) - 0.5 * (d * math.log(df * math.pi) + log_det)
    )
    return log_norm - 0.5 * (df + d) * np.log1p(maha / df)


def log_predictive(x: Observation, params: NIWParams) -> float:
    """Log of the integral of F(x|theta) G0(theta) over theta."""
    return float(log_predictive_many(x[None, :], params)[0])


def sample_covariance(points: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """Sample covariance of an (N, d) block, or the identity when it is not positive-definite."""
    block = np.atleast_2d(points)
    d = block.shape[1]
    if block.shape[0] < 2:
        _LOGGER.warning("Fewer than two points, using identity covariance")
        return np.eye(d)
    cov = np.atleast_2d(np.cov(block, rowvar=False, ddof=1))
    try:
        linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        _LOGGER.warning("Sample covariance is not positive-definite, using identity")
        return np.eye(d)
    return cov
