"""Configuration loading and validation for INCAD."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt
import voluptuous as vol
import yaml

from .const import (
    CONF_ALPHA,
    CONF_BATCH_FRACTION,
    CONF_BURN_IN,
    CONF_CLUSTER_COLUMN,
    CONF_EV_ALPHA_SCALE,
    CONF_EV_PROP,
    CONF_FEATURE_COLUMNS,
    CONF_FINALIZE_EVERY,
    CONF_FLAG_SAMPLER,
    CONF_FRACTIONS,
    CONF_GAMMA,
    CONF_INIT_CLUSTERS,
    CONF_INIT_COV_SCALE,
    CONF_KAPPA0,
    CONF_LABEL_COLUMN,
    CONF_MAX_Q,
    CONF_MIN_BATCH,
    CONF_MIN_TAIL_POINTS,
    CONF_NU0,
    CONF_P_CLAMP,
    CONF_PSI_SCALE,
    CONF_Q,
    CONF_REFIT_PER_POINT,
    CONF_RESAMPLE_SCOPE,
    CONF_SEED,
    CONF_SIGMA_NEW_SCALE,
    CONF_SMALL_CLUSTER_FRAC,
    CONF_SWEEPS,
    CONF_SYNTH_ANOMALY_COV_SCALE,
    CONF_SYNTH_ANOMALY_MEAN,
    CONF_SYNTH_CLUSTER_SCALE,
    CONF_SYNTH_MEANS,
    CONF_SYNTH_N_ANOMALIES,
    CONF_SYNTH_SIZES,
    CONF_TAIL_PASSES,
    CONF_TIMESTAMP_COLUMN,
    CONF_ZSCORE,
    DEFAULT_ALPHA,
    DEFAULT_BATCH_FRACTION,
    DEFAULT_BURN_IN,
    DEFAULT_EV_ALPHA_SCALE,
    DEFAULT_EV_PROP,
    DEFAULT_FINALIZE_EVERY,
    DEFAULT_FLAG_SAMPLER,
    DEFAULT_FRACTIONS,
    DEFAULT_GAMMA,
    DEFAULT_INIT_CLUSTERS,
    DEFAULT_INIT_COV_SCALE,
    DEFAULT_KAPPA0,
    DEFAULT_MAX_Q,
    DEFAULT_MIN_BATCH,
    DEFAULT_MIN_TAIL_POINTS,
    DEFAULT_P_CLAMP,
    DEFAULT_PSI_SCALE,
    DEFAULT_Q,
    DEFAULT_REFIT_PER_POINT,
    DEFAULT_RESAMPLE_SCOPE,
    DEFAULT_SEED,
    DEFAULT_SIGMA_NEW_SCALE,
    DEFAULT_SMALL_CLUSTER_FRAC,
    DEFAULT_SWEEPS,
    DEFAULT_SYNTH_ANOMALY_COV_SCALE,
    DEFAULT_SYNTH_ANOMALY_MEAN,
    DEFAULT_SYNTH_CLUSTER_SCALE,
    DEFAULT_SYNTH_MEANS,
    DEFAULT_SYNTH_N_ANOMALIES,
    DEFAULT_SYNTH_SIZES,
    DEFAULT_TAIL_PASSES,
    DEFAULT_ZSCORE,
    FLAG_SAMPLER_POSTERIOR,
    FLAG_SAMPLER_TAIL,
    RESAMPLE_ALL,
    RESAMPLE_TOUCHED,
)
from .exceptions import IncadConfigError
from .mvn import NIWParams, sample_covariance

_LOGGER = logging.getLogger(__name__)

_POSITIVE = vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False))
_UNIT = vol.All(vol.Coerce(float), vol.Range(min=0, max=1))
_OPEN_UNIT = vol.All(
    vol.Coerce(float), vol.Range(min=0, max=1, min_included=False, max_included=False)
)
_COUNT = vol.All(vol.Coerce(int), vol.Range(min=0))
_OPTIONAL_COLUMN = vol.Any(None, str)

CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.Coerce(int),
        vol.Optional(CONF_ALPHA, default=DEFAULT_ALPHA): _POSITIVE,
        vol.Optional(CONF_GAMMA, default=DEFAULT_GAMMA): _UNIT,
        vol.Optional(CONF_SWEEPS, default=DEFAULT_SWEEPS): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
        vol.Optional(CONF_BURN_IN, default=DEFAULT_BURN_IN): _COUNT,
        vol.Optional(CONF_INIT_CLUSTERS, default=DEFAULT_INIT_CLUSTERS): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
        vol.Optional(CONF_INIT_COV_SCALE, default=DEFAULT_INIT_COV_SCALE): _POSITIVE,
        vol.Optional(CONF_SIGMA_NEW_SCALE, default=DEFAULT_SIGMA_NEW_SCALE): _POSITIVE,
        vol.Optional(CONF_REFIT_PER_POINT, default=DEFAULT_REFIT_PER_POINT): bool,
        vol.Optional(CONF_RESAMPLE_SCOPE, default=DEFAULT_RESAMPLE_SCOPE): vol.In(
            [RESAMPLE_TOUCHED, RESAMPLE_ALL]
        ),
        vol.Optional(CONF_FLAG_SAMPLER, default=DEFAULT_FLAG_SAMPLER): vol.In(
            [FLAG_SAMPLER_TAIL, FLAG_SAMPLER_POSTERIOR]
        ),
        vol.Optional(CONF_KAPPA0, default=DEFAULT_KAPPA0): _POSITIVE,
        vol.Optional(CONF_NU0, default=None): vol.Any(None, vol.Coerce(float)),
        vol.Optional(CONF_PSI_SCALE, default=DEFAULT_PSI_SCALE): _POSITIVE,
        vol.Optional(CONF_Q, default=DEFAULT_Q): vol.All(
            vol.Coerce(float), vol.Range(min=0, max=0.5, min_included=False, max_included=False)
        ),
        vol.Optional(CONF_EV_PROP, default=DEFAULT_EV_PROP): _UNIT,
        vol.Optional(CONF_EV_ALPHA_SCALE, default=DEFAULT_EV_ALPHA_SCALE): _POSITIVE,
        vol.Optional(CONF_MIN_TAIL_POINTS, default=DEFAULT_MIN_TAIL_POINTS): vol.All(
            vol.Coerce(int), vol.Range(min=2)
        ),
        vol.Optional(CONF_MAX_Q, default=DEFAULT_MAX_Q): vol.All(
            vol.Coerce(float), vol.Range(min=0, max=0.5, min_included=False)
        ),
        vol.Optional(CONF_P_CLAMP, default=DEFAULT_P_CLAMP): vol.All(
            vol.Coerce(float), vol.Range(min=0, max=0.5, min_included=False)
        ),
        vol.Optional(CONF_BATCH_FRACTION, default=DEFAULT_BATCH_FRACTION): _OPEN_UNIT,
        vol.Optional(CONF_SMALL_CLUSTER_FRAC, default=DEFAULT_SMALL_CLUSTER_FRAC): _UNIT,
        vol.Optional(CONF_FINALIZE_EVERY, default=DEFAULT_FINALIZE_EVERY): _COUNT,
        vol.Optional(CONF_TAIL_PASSES, default=DEFAULT_TAIL_PASSES): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
        vol.Optional(CONF_MIN_BATCH, default=DEFAULT_MIN_BATCH): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
        vol.Optional(CONF_FEATURE_COLUMNS, default=None): vol.Any(None, [str]),
        vol.Optional(CONF_TIMESTAMP_COLUMN, default=None): _OPTIONAL_COLUMN,
        vol.Optional(CONF_LABEL_COLUMN, default=None): _OPTIONAL_COLUMN,
        vol.Optional(CONF_CLUSTER_COLUMN, default=None): _OPTIONAL_COLUMN,
        vol.Optional(CONF_ZSCORE, default=DEFAULT_ZSCORE): bool,
        vol.Optional(CONF_SYNTH_MEANS, default=DEFAULT_SYNTH_MEANS): [[vol.Coerce(float)]],
        vol.Optional(CONF_SYNTH_SIZES, default=DEFAULT_SYNTH_SIZES): [
            vol.All(vol.Coerce(int), vol.Range(min=1))
        ],
        vol.Optional(CONF_SYNTH_CLUSTER_SCALE, default=DEFAULT_SYNTH_CLUSTER_SCALE): _POSITIVE,
        vol.Optional(CONF_SYNTH_N_ANOMALIES, default=DEFAULT_SYNTH_N_ANOMALIES): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
        vol.Optional(CONF_SYNTH_ANOMALY_MEAN, default=DEFAULT_SYNTH_ANOMALY_MEAN): [
            vol.Coerce(float)
        ],
        vol.Optional(
            CONF_SYNTH_ANOMALY_COV_SCALE, default=DEFAULT_SYNTH_ANOMALY_COV_SCALE
        ): _POSITIVE,
        vol.Optional(CONF_FRACTIONS, default=DEFAULT_FRACTIONS): [_OPEN_UNIT],
    },
    extra=vol.PREVENT_EXTRA,
)


@dataclass(frozen=True, kw_only=True)
class TailConfig:
    """Settings of the extreme-value tail and the effective concentration."""

    q: float = DEFAULT_Q
    ev_prop: float = DEFAULT_EV_PROP
    alpha_base: float = DEFAULT_ALPHA
    ev_alpha_scale: float = DEFAULT_EV_ALPHA_SCALE
    min_points: int = DEFAULT_MIN_TAIL_POINTS
    max_q: float = DEFAULT_MAX_Q
    p_clamp: float = DEFAULT_P_CLAMP

    def __post_init__(self) -> None:
        """Validate ranges."""
        if not 0 < self.q < 0.5:
            _raise_invalid(f"{CONF_Q}={self.q} must lie in (0, 0.5)")
        if not 0 <= self.ev_prop <= 1:
            _raise_invalid(f"{CONF_EV_PROP}={self.ev_prop} must lie in [0, 1]")
        if not self.alpha_base > 0:
            _raise_invalid(f"{CONF_ALPHA}={self.alpha_base} must be positive")


@dataclass(frozen=True, kw_only=True)
class StreamSettings:
    """Settings of the streaming extension."""

    batch_fraction: float = DEFAULT_BATCH_FRACTION
    small_cluster_frac: float = DEFAULT_SMALL_CLUSTER_FRAC
    finalize_every: int = DEFAULT_FINALIZE_EVERY
    tail_passes: int = DEFAULT_TAIL_PASSES
    min_batch: int = DEFAULT_MIN_BATCH


@dataclass(frozen=True, kw_only=True)
class DataSchema:
    """Column selection for CSV ingestion."""

    feature_columns: tuple[str, ...] | None = None
    timestamp_column: str | None = None
    label_column: str | None = None
    cluster_column: str | None = None
    zscore: bool = DEFAULT_ZSCORE


@dataclass(frozen=True, kw_only=True)
class SyntheticConfig:
    """Layout of the simulated mixture with planted anomalies."""

    means: tuple[tuple[float, ...], ...] = tuple(tuple(m) for m in DEFAULT_SYNTH_MEANS)
    sizes: tuple[int, ...] = tuple(DEFAULT_SYNTH_SIZES)
    cluster_scale: float = DEFAULT_SYNTH_CLUSTER_SCALE
    n_anomalies: int = DEFAULT_SYNTH_N_ANOMALIES
    anomaly_mean: tuple[float, ...] = tuple(DEFAULT_SYNTH_ANOMALY_MEAN)
    anomaly_cov_scale: float = DEFAULT_SYNTH_ANOMALY_COV_SCALE

    def __post_init__(self) -> None:
        """Validate that the layout is consistent."""
        if len(self.means) != len(self.sizes) or not self.means:
            _raise_invalid("synthetic.means and synthetic.sizes must have equal, nonzero length")
        dims = {len(m) for m in self.means} | {len(self.anomaly_mean)}
        if len(dims) != 1:
            _raise_invalid("synthetic means must share one dimension")


@dataclass(frozen=True, kw_only=True)
class RunConfig:
    """Hyperparameters of one sampler run, resolved against a dataset."""

    alpha: float
    gamma: float
    tail: TailConfig
    small_cluster_frac: float
    sigma_new: npt.NDArray[np.float64]
    niw: NIWParams
    sweeps: int
    burn_in: int
    seed: int
    init_clusters: int = DEFAULT_INIT_CLUSTERS
    init_cov_scale: float = DEFAULT_INIT_COV_SCALE
    refit_per_point: bool = DEFAULT_REFIT_PER_POINT
    resample_scope: str = DEFAULT_RESAMPLE_SCOPE
    flag_sampler: str = DEFAULT_FLAG_SAMPLER
    stream: StreamSettings = StreamSettings()

    def __post_init__(self) -> None:
        """Validate ranges."""
        if not self.alpha > 0:
            _raise_invalid(f"{CONF_ALPHA}={self.alpha} must be positive")
        if not 0 <= self.gamma <= 1:
            _raise_invalid(f"{CONF_GAMMA}={self.gamma} must lie in [0, 1]")
        if not self.sweeps > self.burn_in >= 0:
            _raise_invalid(f"{CONF_SWEEPS} must exceed {CONF_BURN_IN}")


def _raise_invalid(error: str) -> None:
    raise IncadConfigError(
        translation_key="invalid_config",
        translation_placeholders={"error": error},
    )


def _flatten(raw: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    """Flatten nested sections into module-prefixed keys."""
    flat: dict[str, Any] = {}
    for key, value in raw.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


@dataclass(frozen=True)
class IncadConfig:
    """Validated flat configuration document."""

    values: dict[str, Any]

    @classmethod
    def from_mapping(cls, raw: dict[str, Any] | None = None, **overrides: Any) -> IncadConfig:
        """Validate a (possibly nested) mapping plus overrides."""
        flat = _flatten(raw or {})
        flat.update({key: value for key, value in overrides.items() if value is not None})
        try:
            values = CONFIG_SCHEMA(flat)
        except vol.Invalid as err:
            raise IncadConfigError(
                translation_key="invalid_config",
                translation_placeholders={"error": str(err)},
            ) from err
        if not values[CONF_SWEEPS] > values[CONF_BURN_IN]:
            _raise_invalid(f"{CONF_SWEEPS} must exceed {CONF_BURN_IN}")
        if values[CONF_Q] > values[CONF_MAX_Q]:
            _raise_invalid(f"{CONF_Q} must not exceed {CONF_MAX_Q}")
        return cls(values)

    def __getitem__(self, key: str) -> Any:
        """Return one validated value."""
        return self.values[key]

    def with_overrides(self, **overrides: Any) -> IncadConfig:
        """Return a copy with some keys replaced (keys use the flat dotted names)."""
        return IncadConfig.from_mapping({**self.values, **overrides})

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form of the document."""
        canonical = json.dumps(self.values, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @property
    def tail(self) -> TailConfig:
        """Tail settings."""
        return TailConfig(
            q=self.values[CONF_Q],
            ev_prop=self.values[CONF_EV_PROP],
            alpha_base=self.values[CONF_ALPHA],
            ev_alpha_scale=self.values[CONF_EV_ALPHA_SCALE],
            min_points=self.values[CONF_MIN_TAIL_POINTS],
            max_q=self.values[CONF_MAX_Q],
            p_clamp=self.values[CONF_P_CLAMP],
        )

    @property
    def stream(self) -> StreamSettings:
        """Streaming settings."""
        return StreamSettings(
            batch_fraction=self.values[CONF_BATCH_FRACTION],
            small_cluster_frac=self.values[CONF_SMALL_CLUSTER_FRAC],
            finalize_every=self.values[CONF_FINALIZE_EVERY],
            tail_passes=self.values[CONF_TAIL_PASSES],
            min_batch=self.values[CONF_MIN_BATCH],
        )

    @property
    def schema(self) -> DataSchema:
        """CSV column selection."""
        columns = self.values[CONF_FEATURE_COLUMNS]
        return DataSchema(
            feature_columns=tuple(columns) if columns else None,
            timestamp_column=self.values[CONF_TIMESTAMP_COLUMN],
            label_column=self.values[CONF_LABEL_COLUMN],
            cluster_column=self.values[CONF_CLUSTER_COLUMN],
            zscore=self.values[CONF_ZSCORE],
        )

    @property
    def synthetic(self) -> SyntheticConfig:
        """Synthetic generator layout."""
        return SyntheticConfig(
            means=tuple(tuple(m) for m in self.values[CONF_SYNTH_MEANS]),
            sizes=tuple(self.values[CONF_SYNTH_SIZES]),
            cluster_scale=self.values[CONF_SYNTH_CLUSTER_SCALE],
            n_anomalies=self.values[CONF_SYNTH_N_ANOMALIES],
            anomaly_mean=tuple(self.values[CONF_SYNTH_ANOMALY_MEAN]),
            anomaly_cov_scale=self.values[CONF_SYNTH_ANOMALY_COV_SCALE],
        )

    @property
    def fractions(self) -> list[float]:
        """Batch fractions of the sensitivity sweep."""
        return list(self.values[CONF_FRACTIONS])

    def resolve(self, data: npt.NDArray[np.float64]) -> RunConfig:
        """Resolve data-dependent defaults (NIW prior, new-cluster covariance)."""
        block = np.atleast_2d(np.asarray(data, dtype=np.float64))
        d = block.shape[1]
        cov = sample_covariance(block)
        nu0 = self.values[CONF_NU0]
        if nu0 is None:
            nu0 = d + 2.0
        # Prior expected covariance psi / (nu0 - d - 1) equals psi_scale * cov when nu0 > d + 1.
        psi_dof = max(nu0 - d - 1.0, 1.0)
        niw = NIWParams(
            mu0=block.mean(axis=0),
            kappa0=self.values[CONF_KAPPA0],
            nu0=float(nu0),
            psi=psi_dof * self.values[CONF_PSI_SCALE] * cov,
        )
        return RunConfig(
            alpha=self.values[CONF_ALPHA],
            gamma=self.values[CONF_GAMMA],
            tail=self.tail,
            small_cluster_frac=self.values[CONF_SMALL_CLUSTER_FRAC],
            sigma_new=self.values[CONF_SIGMA_NEW_SCALE] * cov,
            niw=niw,
            sweeps=self.values[CONF_SWEEPS],
            burn_in=self.values[CONF_BURN_IN],
            seed=self.values[CONF_SEED],
            init_clusters=self.values[CONF_INIT_CLUSTERS],
            init_cov_scale=self.values[CONF_INIT_COV_SCALE],
            refit_per_point=self.values[CONF_REFIT_PER_POINT],
            resample_scope=self.values[CONF_RESAMPLE_SCOPE],
            flag_sampler=self.values[CONF_FLAG_SAMPLER],
            stream=self.stream,
        )


def load_config(path: str | Path | None = None, **overrides: Any) -> IncadConfig:
    """Load a YAML config file (or the defaults) and apply overrides."""
    raw: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            loaded = yaml.safe_load(path.read_text(encoding="utf-8"))
        except FileNotFoundError as err:
            raise IncadConfigError(
                translation_key="config_unreadable",
                translation_placeholders={"path": str(path), "error": "no such file"},
            ) from err
        except (OSError, yaml.YAMLError) as err:
            raise IncadConfigError(
                translation_key="config_unreadable",
                translation_placeholders={"path": str(path), "error": str(err)},
            ) from err
        if loaded is not None and not isinstance(loaded, dict):
            raise IncadConfigError(
                translation_key="config_unreadable",
                translation_placeholders={"path": str(path), "error": "expected a mapping"},
            )
        raw = loaded or {}
        _LOGGER.debug("Loaded %d config keys from %s", len(raw), path)
    return IncadConfig.from_mapping(raw, **overrides)
