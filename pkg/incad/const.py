"""Constants for the INCAD detector."""

import math

DOMAIN: str = "incad"

# Config keys. One flat document, prefixed by the module that reads them.
CONF_SEED: str = "seed"

CONF_ALPHA: str = "gibbs.alpha"
CONF_GAMMA: str = "gibbs.gamma"
CONF_SWEEPS: str = "gibbs.sweeps"
CONF_BURN_IN: str = "gibbs.burn_in"
CONF_INIT_CLUSTERS: str = "gibbs.init_clusters"
CONF_INIT_COV_SCALE: str = "gibbs.init_cov_scale"
CONF_SIGMA_NEW_SCALE: str = "gibbs.sigma_new_scale"
CONF_REFIT_PER_POINT: str = "gibbs.refit_per_point"
CONF_RESAMPLE_SCOPE: str = "gibbs.resample_scope"
CONF_FLAG_SAMPLER: str = "gibbs.flag_sampler"

CONF_KAPPA0: str = "niw.kappa0"
CONF_NU0: str = "niw.nu0"
CONF_PSI_SCALE: str = "niw.psi_scale"

CONF_Q: str = "tail.q"
CONF_EV_PROP: str = "tail.ev_prop"
CONF_EV_ALPHA_SCALE: str = "tail.ev_alpha_scale"
CONF_MIN_TAIL_POINTS: str = "tail.min_points"
CONF_MAX_Q: str = "tail.max_q"
CONF_P_CLAMP: str = "tail.p_clamp"

CONF_BATCH_FRACTION: str = "stream.batch_fraction"
CONF_SMALL_CLUSTER_FRAC: str = "stream.small_cluster_frac"
CONF_FINALIZE_EVERY: str = "stream.finalize_every"
CONF_TAIL_PASSES: str = "stream.tail_passes"
CONF_MIN_BATCH: str = "stream.min_batch"

CONF_FEATURE_COLUMNS: str = "data.feature_columns"
CONF_TIMESTAMP_COLUMN: str = "data.timestamp_column"
CONF_LABEL_COLUMN: str = "data.label_column"
CONF_CLUSTER_COLUMN: str = "data.cluster_column"
CONF_ZSCORE: str = "data.zscore"

CONF_SYNTH_MEANS: str = "synthetic.means"
CONF_SYNTH_SIZES: str = "synthetic.sizes"
CONF_SYNTH_CLUSTER_SCALE: str = "synthetic.cluster_scale"
CONF_SYNTH_N_ANOMALIES: str = "synthetic.n_anomalies"
CONF_SYNTH_ANOMALY_MEAN: str = "synthetic.anomaly_mean"
CONF_SYNTH_ANOMALY_COV_SCALE: str = "synthetic.anomaly_cov_scale"

CONF_FRACTIONS: str = "sensitivity.fractions"

# Defaults.
DEFAULT_SEED: int = 0

DEFAULT_ALPHA: float = 1.0
DEFAULT_GAMMA: float = 0.05
DEFAULT_SWEEPS: int = 100
DEFAULT_BURN_IN: int = 50
DEFAULT_INIT_CLUSTERS: int = 10
DEFAULT_INIT_COV_SCALE: float = 1.0
DEFAULT_SIGMA_NEW_SCALE: float = 0.1
DEFAULT_REFIT_PER_POINT: bool = False
RESAMPLE_TOUCHED: str = "touched"
RESAMPLE_ALL: str = "all"
DEFAULT_RESAMPLE_SCOPE: str = RESAMPLE_TOUCHED
FLAG_SAMPLER_TAIL: str = "tail_probability"
FLAG_SAMPLER_POSTERIOR: str = "posterior"
DEFAULT_FLAG_SAMPLER: str = FLAG_SAMPLER_TAIL

DEFAULT_KAPPA0: float = 0.01
DEFAULT_PSI_SCALE: float = 0.1

DEFAULT_Q: float = 0.05
DEFAULT_EV_PROP: float = math.exp(-0.5)
DEFAULT_EV_ALPHA_SCALE: float = 100.0
DEFAULT_MIN_TAIL_POINTS: int = 20
DEFAULT_MAX_Q: float = 0.25
DEFAULT_P_CLAMP: float = 1e-9

DEFAULT_BATCH_FRACTION: float = 0.2
DEFAULT_SMALL_CLUSTER_FRAC: float = 0.05
DEFAULT_FINALIZE_EVERY: int = 0  # end of stream only
DEFAULT_TAIL_PASSES: int = 1
DEFAULT_MIN_BATCH: int = 30

DEFAULT_ZSCORE: bool = True

DEFAULT_SYNTH_MEANS: list[list[float]] = [[-10.0, 10.0], [10.0, -10.0], [-10.0, -10.0], [10.0, 10.0]]
DEFAULT_SYNTH_SIZES: list[int] = [100, 100, 100, 77]
DEFAULT_SYNTH_CLUSTER_SCALE: float = 1.0
DEFAULT_SYNTH_N_ANOMALIES: int = 23
DEFAULT_SYNTH_ANOMALY_MEAN: list[float] = [0.0, 0.0]
DEFAULT_SYNTH_ANOMALY_COV_SCALE: float = 25.0

DEFAULT_FRACTIONS: list[float] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]

# GPD fit bounds on the shape parameter.
GPD_XI_MIN: float = -0.9
GPD_XI_MAX: float = 5.0

# Output file names under --out.
RESULTS_FILE: str = "results.jsonl"
METRICS_FILE: str = "metrics.json"
SENSITIVITY_FILE: str = "sensitivity.csv"
DATASET_FILE: str = "dataset.csv"
EVENTS_FILE: str = "events.jsonl"
DIAGNOSTICS_FILE: str = "diagnostics.json"
CHECKPOINT_FILE: str = "checkpoint.json"

PHASE_BATCH: str = "batch"
PHASE_STREAM: str = "stream"

LOG_ENV_VAR: str = "INCAD_LOG"

# Snapshot format.
SNAPSHOT_FORMAT: str = "incad-snapshot"
SNAPSHOT_VERSION: int = 1

# Stream events.
EVENT_POINT_FLAGGED: str = f"{DOMAIN}_point_flagged"
EVENT_POINT_CLEARED: str = f"{DOMAIN}_point_cleared"
EVENT_CLUSTER_SPAWNED: str = f"{DOMAIN}_cluster_spawned"
EVENT_CLUSTER_REMOVED: str = f"{DOMAIN}_cluster_removed"
EVENT_UPDATE: str = f"{DOMAIN}_update"

# CLI exit codes.
EXIT_OK: int = 0
EXIT_UNEXPECTED: int = 1
EXIT_CONFIG_ERROR: int = 2
EXIT_DATA_ERROR: int = 3
EXIT_NUMERICAL_ERROR: int = 4
