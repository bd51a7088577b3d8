"""Command-line entry point for INCAD."""

from __future__ import annotations

import argparse
import asyncio
import logging
import os
import sys
import time
from collections.abc import Callable, Sequence
from pathlib import Path

import numpy as np
import pandas as pd

from . import IncadRunData
from .config import IncadConfig, load_config
from .const import (
    CHECKPOINT_FILE,
    CONF_BATCH_FRACTION,
    CONF_FRACTIONS,
    CONF_SEED,
    DATASET_FILE,
    DIAGNOSTICS_FILE,
    EVENTS_FILE,
    EXIT_OK,
    EXIT_UNEXPECTED,
    LOG_ENV_VAR,
    METRICS_FILE,
    RESULTS_FILE,
    SENSITIVITY_FILE,
)
from .coordinator import IncadStreamCoordinator, StreamState, batch_init, finalize_small_clusters
from .data import (
    LabeledDataset,
    generate_synthetic,
    load_csv,
    read_results,
    records_from_state,
    write_dataset_csv,
    write_json,
    write_metrics,
    write_results,
)
from .diagnostics import get_state_diagnostics
from .events import EventLog, write_events
from .exceptions import IncadDataError, IncadError
from .gibbs import initialize_state, run_gibbs
from .metrics import Metrics, compute_metrics
from .mvn import make_rng, spawn_rngs
from .snapshot import save_snapshot
from .tail import fit_tail

_LOGGER = logging.getLogger(__name__)


def configure_logging() -> None:
    """Set the root log level from the environment."""
    name = os.environ.get(LOG_ENV_VAR, "WARNING").upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _labels_or_none(dataset: LabeledDataset, predicted: np.ndarray) -> Metrics | None:
    if dataset.labels is None:
        _LOGGER.warning("Dataset has no labels, metrics omitted")
        return None
    return compute_metrics(predicted, dataset.labels)


def run_batch(config: IncadConfig, dataset: LabeledDataset) -> IncadRunData:
    """Full Gibbs sampling over the whole dataset, then the small-cluster rule."""
    start = time.perf_counter()
    run_config = config.resolve(dataset.points)
    rng = make_rng(run_config.seed)
    model = initialize_state(dataset.points, run_config, rng)
    trace = run_gibbs(model, rng)
    finalize_small_clusters(model)
    tail = fit_tail(model, run_config.tail)
    state = StreamState(
        model=model,
        batch_fraction=1.0,
        batch_size=model.n_points,
        tail=tail,
        trace=trace,
    )
    runtime = time.perf_counter() - start
    records = records_from_state(
        model.data, model.labels(), model.flags, tail.probabilities, model.n_points
    )
    metrics = _labels_or_none(dataset, model.flags)
    if metrics is not None:
        metrics = metrics.with_runtime(runtime)
    _LOGGER.info(
        "Batch run: K=%d, %d flagged in %.1fs", model.n_clusters, model.flags.sum(), runtime
    )
    return IncadRunData(state, tail, records, runtime, metrics)


def run_stream(
    config: IncadConfig, dataset: LabeledDataset, batch_fraction: float
) -> IncadRunData:
    """Batch-initialize on the prefix, then stream the remaining points one by one."""
    start = time.perf_counter()
    n_batch = dataset.split(batch_fraction)
    prefix = dataset.points[:n_batch]
    run_config = config.resolve(prefix)
    batch_rng, stream_rng = spawn_rngs(run_config.seed, 2)
    state = batch_init(prefix, run_config, batch_rng, batch_fraction)

    coordinator = IncadStreamCoordinator(state, stream_rng)
    log = EventLog()
    remove_listener = coordinator.async_add_listener(log)

    async def _stream() -> None:
        await coordinator.async_run(dataset.points[n_batch:])
        await coordinator.async_finalize()

    asyncio.run(_stream())
    remove_listener()

    model = state.model
    tail = fit_tail(model, run_config.tail)
    state.tail = tail
    runtime = time.perf_counter() - start
    records = records_from_state(
        model.data, model.labels(), model.flags, tail.probabilities, n_batch
    )
    metrics = _labels_or_none(dataset, model.flags)
    if metrics is not None:
        metrics = metrics.with_runtime(runtime, batch_fraction)
    _LOGGER.info(
        "Stream run (batch %d, streamed %d): K=%d in %.1fs",
        n_batch,
        model.n_points - n_batch,
        model.n_clusters,
        runtime,
    )
    return IncadRunData(state, tail, records, runtime, metrics, log.events)


def _write_run(outcome: IncadRunData, config: IncadConfig, out: Path) -> None:
    write_results(outcome.records, out / RESULTS_FILE)
    if outcome.metrics is not None:
        write_metrics(outcome.metrics, out / METRICS_FILE)
    write_json(
        get_state_diagnostics(outcome.state, outcome.tail, config.config_hash()),
        out / DIAGNOSTICS_FILE,
    )
    save_snapshot(out / CHECKPOINT_FILE, outcome.state, config.config_hash())


def _dataset(config: IncadConfig, path: Path | None) -> LabeledDataset:
    if path is None:
        raise IncadDataError(
            translation_key="file_not_found", translation_placeholders={"path": "--input"}
        )
    return load_csv(path, config.schema)


def cmd_batch(config: IncadConfig, input_path: Path | None, out: Path) -> IncadRunData:
    """Run the batch sampler and write its artifacts."""
    outcome = run_batch(config, _dataset(config, input_path))
    _write_run(outcome, config, out)
    return outcome


def cmd_stream(config: IncadConfig, input_path: Path | None, out: Path) -> IncadRunData:
    """Run batch-then-stream and write its artifacts."""
    outcome = run_stream(config, _dataset(config, input_path), config[CONF_BATCH_FRACTION])
    _write_run(outcome, config, out)
    write_events(outcome.events, out / EVENTS_FILE)
    return outcome


def cmd_sensitivity(
    config: IncadConfig, input_path: Path | None, out: Path
) -> pd.DataFrame:
    """Run the stream pipeline once per batch fraction and tabulate quality."""
    dataset = _dataset(config, input_path)
    if dataset.labels is None:
        raise IncadDataError(
            translation_key="labels_required", translation_placeholders={"path": str(input_path)}
        )
    rows = []
    for fraction in config.fractions:
        outcome = run_stream(config, dataset, fraction)
        row = outcome.metrics.as_dict() if outcome.metrics else {}
        row.pop("counts", None)
        row.pop("undefined", None)
        row["batch_fraction"] = fraction
        row["n_clusters"] = outcome.state.model.n_clusters
        rows.append(row)
        _LOGGER.info("Fraction %.2f: f_measure=%.3f", fraction, row["f_measure"])
    table = pd.DataFrame(rows).set_index("batch_fraction")
    try:
        table.to_csv(out / SENSITIVITY_FILE)
    except OSError as err:
        raise IncadDataError(
            translation_key="io_error",
            translation_placeholders={"path": str(out / SENSITIVITY_FILE), "error": str(err)},
        ) from err
    return table


def cmd_simulate(config: IncadConfig, input_path: Path | None, out: Path) -> LabeledDataset:
    """Write the labeled synthetic dataset."""
    dataset = generate_synthetic(config.synthetic, make_rng(config[CONF_SEED]))
    write_dataset_csv(dataset, out / DATASET_FILE)
    return dataset


def cmd_eval(config: IncadConfig, input_path: Path | None, out: Path) -> Metrics:
    """Recompute metrics from an existing results file and a labeled dataset."""
    dataset = _dataset(config, input_path)
    if dataset.labels is None:
        raise IncadDataError(
            translation_key="labels_required", translation_placeholders={"path": str(input_path)}
        )
    records = read_results(out / RESULTS_FILE)
    predicted = np.array([record.anomaly_flag for record in records], dtype=bool)
    metrics = compute_metrics(predicted, dataset.labels)
    write_metrics(metrics, out / METRICS_FILE)
    return metrics


COMMANDS: dict[str, Callable[[IncadConfig, Path | None, Path], object]] = {
    "batch": cmd_batch,
    "stream": cmd_stream,
    "sensitivity": cmd_sensitivity,
    "simulate": cmd_simulate,
    "eval": cmd_eval,
}


def _fractions(value: str) -> list[float]:
    try:
        return [float(part) for part in value.split(",") if part.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"invalid fraction list: {value}") from err


def build_parser() -> argparse.ArgumentParser:
    """Argument parser of the incad command."""
    parser = argparse.ArgumentParser(
        prog="incad", description="Clustering and anomaly detection with INCAD"
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="YAML config file")
    parser.add_argument("--input", type=Path, help="input CSV dataset")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--batch-fraction", type=float, help="override stream.batch_fraction")
    parser.add_argument(
        "--fractions", type=_fractions, help="comma-separated sensitivity.fractions"
    )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run one command; returns the process exit code."""
    args = build_parser().parse_args(argv)
    configure_logging()
    try:
        config = load_config(
            args.config,
            **{
                CONF_SEED: args.seed,
                CONF_BATCH_FRACTION: args.batch_fraction,
                CONF_FRACTIONS: args.fractions,
            },
        )
        args.out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](config, args.input, args.out)
    except IncadError as err:
        print(f"incad: {err.message}", file=sys.stderr)
        return err.exit_code
    except Exception:
        _LOGGER.exception("Unexpected error running %s", args.command)
        return EXIT_UNEXPECTED
    return EXIT_OK
