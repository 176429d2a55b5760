"""Run configuration and the train/evaluate/report pipeline behind the CLI.

Everything here is deterministic: identical resolved configs produce
byte-identical artifact files. JSON artifacts are emitted with insertion
order preserved and shortest-roundtrip float formatting; CSV artifacts carry
the config echo, seed, and dataset digest as leading comment lines.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import corpus, features, network
from .corpus import (BUNDLED_EMISSIONS, BUNDLED_ENGINE, CLEAN_COMPLEMENT_FILL,
                     CLEAN_RAW, Dataset, NormalizationParams)
from .features import ALL_KINDS, CROSS_PRODUCT_KINDS, FeatureError, FeatureMapKind

NORM_RANGE = (0.05, 0.95)

SNAPSHOT_SCHEMA = "pvreg-snapshot/1"
REPORT_SCHEMA = "pvreg-report/1"
COMPARISON_SCHEMA = "pvreg-comparison/1"

OUT_DIR_ENV = "PVREG_OUT_DIR"

TARGET_COLUMNS = {
    "engine": {"all": ("power_kw", "torque_nm", "sfc"), "power": ("power_kw",),
               "torque": ("torque_nm",), "sfc": ("sfc",)},
    "emission": {"all": ("hc", "co"), "hc": ("hc",), "co": ("co",)},
}


class ConfigError(ValueError):
    """A run configuration is invalid or internally inconsistent."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run parameters; no field is left implicit."""

    dataset: str = BUNDLED_ENGINE
    feature_map: str = "linear"
    targets: str = "all"
    hidden: int = 10
    eta: float = 0.25
    seed: int = 42
    target_mse: float = 0.005
    max_epochs: int = 50000
    update_mode: str = network.SEQUENTIAL
    order: str = "sequential"
    holdout: Optional[float] = None
    out_dir: str = "out"
    raw: bool = False
    keep_constant: bool = False
    bias: bool = False
    require_target: bool = False
    cleaning_log: Optional[str] = None
    activation_sample_every: int = 0

    def echo(self) -> dict:
        return dataclasses.asdict(self)


def resolve_config(cli_values: dict, config_file: Optional[str] = None) -> RunConfig:
    """Merge defaults, an optional JSON config file, and CLI flags.

    Precedence: CLI flag > config file key > built-in default. CLI values
    that are None count as not given. The config file uses flat keys named
    after the RunConfig fields.
    """
    values = {}
    if config_file is not None:
        try:
            file_values = json.loads(Path(config_file).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {config_file}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a JSON object with flat keys")
        values.update(file_values)
    values.update({k: v for k, v in cli_values.items() if v is not None})

    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}")
    if "out_dir" not in values:
        values["out_dir"] = os.environ.get(OUT_DIR_ENV, "out")

    config = RunConfig(**values)
    _validate(config)
    return config


def _validate(config: RunConfig) -> None:
    if config.feature_map != "all":
        try:
            FeatureMapKind(config.feature_map)
        except ValueError:
            raise ConfigError(f"unknown feature map {config.feature_map!r}") from None
    if config.hidden < 1:
        raise ConfigError(f"hidden size must be >= 1, got {config.hidden}")
    if config.eta <= 0:
        raise ConfigError(f"eta must be > 0, got {config.eta}")
    if config.target_mse <= 0:
        raise ConfigError(f"target-mse must be > 0, got {config.target_mse}")
    if config.max_epochs < 1:
        raise ConfigError(f"max-epochs must be >= 1, got {config.max_epochs}")
    if config.update_mode not in network.UPDATE_MODES:
        raise ConfigError(f"update mode must be one of {network.UPDATE_MODES}, got {config.update_mode!r}")
    if config.order not in ("sequential", "shuffle"):
        raise ConfigError(f"order must be 'sequential' or 'shuffle', got {config.order!r}")
    valid_targets = set(TARGET_COLUMNS["engine"]) | set(TARGET_COLUMNS["emission"])
    if config.targets not in valid_targets:
        raise ConfigError(f"targets must be one of {sorted(valid_targets)}, got {config.targets!r}")


def _sniff_kind(source: str) -> str:
    """Classify a dataset source as 'engine' or 'emission' by its header."""
    if source == BUNDLED_ENGINE:
        return "engine"
    if source == BUNDLED_EMISSIONS:
        return "emission"
    path = Path(source)
    if not path.exists():
        raise corpus.DatasetError(f"dataset file not found: {path}")
    header = path.read_text(encoding="utf-8-sig").splitlines()
    if not header:
        raise corpus.DatasetError("empty dataset")
    first = tuple(c.strip() for c in header[0].split(","))
    if set(corpus.ENGINE_COLUMNS) <= set(first):
        return "engine"
    if set(corpus.EMISSION_COLUMNS) <= set(first):
        return "emission"
    raise corpus.DatasetError(f"unrecognized dataset header {first} in {path}")


@dataclass(frozen=True)
class PreparedRun:
    """Loaded, split, normalized data ready to featurize and train on."""

    dataset: Dataset
    train_data: Dataset
    eval_data: Dataset
    kind: str  # engine | emission
    input_columns: tuple
    target_columns: tuple
    input_params: NormalizationParams
    target_params: NormalizationParams
    train_inputs_norm: np.ndarray
    train_targets_norm: np.ndarray
    eval_inputs_norm: np.ndarray
    eval_indices: tuple  # 1-based pattern identifiers for the eval rows

    @property
    def nf(self) -> int:
        return len(self.input_columns)


def prepare(config: RunConfig) -> PreparedRun:
    """Load, clean, split, and normalize the configured dataset."""
    kind = _sniff_kind(config.dataset)
    if kind == "engine":
        cleaning = CLEAN_RAW if config.raw else CLEAN_COMPLEMENT_FILL
        data = corpus.load_engine_dataset(config.dataset, cleaning=cleaning)
        input_columns = corpus.ENGINE_INPUT_COLUMNS if config.keep_constant \
            else tuple(c for c in corpus.ENGINE_INPUT_COLUMNS if c != "full_load")
    else:
        data = corpus.load_emission_dataset(config.dataset)
        input_columns = corpus.EMISSION_INPUT_COLUMNS

    try:
        target_columns = TARGET_COLUMNS[kind][config.targets]
    except KeyError:
        raise ConfigError(
            f"targets {config.targets!r} not available for {kind} datasets") from None

    if config.holdout is not None:
        train_data, eval_data = corpus.split(data, corpus.LeaveBlendOut(config.holdout),
                                             seed=config.seed)
        if len(eval_data) == 0:
            raise ConfigError(f"holdout blend {config.holdout} matches no rows")
    else:
        train_data, _ = corpus.split(data, corpus.AllTrain(), seed=config.seed)
        eval_data = train_data

    input_params = corpus.fit_normalizer(train_data, input_columns, NORM_RANGE,
                                         allow_constant=config.keep_constant)
    target_params = corpus.fit_normalizer(train_data, target_columns, NORM_RANGE)

    train_inputs = corpus.normalize(train_data.matrix(input_columns), input_params)
    train_targets = corpus.normalize(train_data.matrix(target_columns), target_params)
    eval_inputs = corpus.normalize(eval_data.matrix(input_columns), input_params)

    if kind == "engine":
        indices = tuple(p.sno for p in eval_data.patterns)
    else:
        indices = tuple(range(1, len(eval_data) + 1))

    return PreparedRun(dataset=data, train_data=train_data, eval_data=eval_data,
                       kind=kind, input_columns=input_columns,
                       target_columns=target_columns, input_params=input_params,
                       target_params=target_params,
                       train_inputs_norm=train_inputs,
                       train_targets_norm=train_targets,
                       eval_inputs_norm=eval_inputs, eval_indices=indices)


def _featurized(prepared: PreparedRun, kind: FeatureMapKind, config: RunConfig):
    """Featurized (train, eval) input matrices, with bias column if configured."""
    if prepared.nf < 2 and kind in CROSS_PRODUCT_KINDS:
        raise ConfigError("feature map undefined for single-feature input")
    train = features.featurize_matrix(prepared.train_inputs_norm, kind)
    evals = features.featurize_matrix(prepared.eval_inputs_norm, kind)
    if config.bias:
        train = np.hstack([train, np.ones((len(train), 1))])
        evals = np.hstack([evals, np.ones((len(evals), 1))])
    return train, evals


@dataclass(frozen=True)
class VariantRun:
    """Result of training and evaluating one feature-map variant."""

    feature_map: FeatureMapKind
    state: network.NetworkState
    report: network.TrainingReport
    eval_actual: np.ndarray     # raw units, (n_eval, n_targets)
    eval_predicted: np.ndarray  # raw units, (n_eval, n_targets)
    eval_extrapolated: np.ndarray


def run_variant(prepared: PreparedRun, config: RunConfig, kind: FeatureMapKind) -> VariantRun:
    """Train one variant and evaluate it on the prepared evaluation rows."""
    train_x, eval_x = _featurized(prepared, kind, config)
    sizes = (train_x.shape[1], config.hidden, len(prepared.target_columns))
    state = network.init_weights(sizes, seed=config.seed, eta=config.eta,
                                 update_mode=config.update_mode)
    training = network.TrainingConfig(
        target_mse=config.target_mse, max_epochs=config.max_epochs,
        order=config.order, order_seed=config.seed,
        activation_sample_every=config.activation_sample_every)
    state, report = network.train(state, train_x, prepared.train_targets_norm, training)

    outputs_norm = np.array([network.predict(state, x) for x in eval_x])
    predicted, outside = corpus.denormalize_flagged(outputs_norm, prepared.target_params)
    actual = prepared.eval_data.matrix(prepared.target_columns)
    return VariantRun(feature_map=kind, state=state, report=report,
                      eval_actual=actual, eval_predicted=predicted,
                      eval_extrapolated=outside)


# --- artifact emission -------------------------------------------------------

def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2) + "\n").encode()


def _write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def _digest_of(obj) -> str:
    return "sha256:" + hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def _csv_preamble(config: RunConfig, digest: str) -> list:
    return [f"# config: {json.dumps(config.echo())}",
            f"# seed: {config.seed}",
            f"# dataset_digest: {digest}"]


def _trace_csv(config: RunConfig, digest: str, report: network.TrainingReport) -> bytes:
    lines = _csv_preamble(config, digest)
    lines.append("epoch,mse,best_mse")
    for i, (mse, best) in enumerate(zip(report.mse_trace, report.best_mse_trace), start=1):
        lines.append(f"{i},{mse!r},{best!r}")
    return ("\n".join(lines) + "\n").encode()


def _figure_csv(config: RunConfig, digest: str, indices, actual, estimated) -> bytes:
    lines = _csv_preamble(config, digest)
    lines.append("pattern_index,actual,estimated")
    for idx, a, e in zip(indices, actual, estimated):
        lines.append(f"{idx},{a!r},{e!r}")
    return ("\n".join(lines) + "\n").encode()


def _pattern_records(prepared: PreparedRun, run: VariantRun) -> list:
    records = []
    for row, idx in enumerate(prepared.eval_indices):
        targets = {}
        for col_i, col in enumerate(prepared.target_columns):
            actual = float(run.eval_actual[row, col_i])
            predicted = float(run.eval_predicted[row, col_i])
            targets[col] = {"actual": actual, "predicted": predicted,
                            "residual": actual - predicted,
                            "extrapolated": bool(run.eval_extrapolated[row, col_i])}
        records.append({"pattern_index": idx, "targets": targets,
                        "error": run.report.final_pattern_errors[row]
                        if row < len(run.report.final_pattern_errors) else None})
    return records


def _variant_summary(prepared: PreparedRun, run: VariantRun) -> dict:
    report = run.report
    return {
        "feature_map": run.feature_map.value,
        "failed": False,
        "error": None,
        "sizes": [run.state.n_in, run.state.n_hidden, run.state.n_out],
        "epochs_executed": report.epochs_executed,
        "epochs_to_target": report.epochs_to_target,
        "final_mse": report.mse_trace[-1],
        "best_mse": report.best_mse_trace[-1],
        "patterns": _pattern_records(prepared, run),
    }


def _snapshot_dict(config: RunConfig, prepared: PreparedRun, run: VariantRun) -> dict:
    return {
        "schema": SNAPSHOT_SCHEMA,
        "config": config.echo(),
        "seed": config.seed,
        "dataset_digest": prepared.dataset.source_digest,
        "feature_map": run.feature_map.value,
        "bias_input": config.bias,
        "input_columns": list(prepared.input_columns),
        "target_columns": list(prepared.target_columns),
        "input_norm": prepared.input_params.as_dict(),
        "target_norm": prepared.target_params.as_dict(),
        "network": network.state_to_dict(run.state),
    }


def _report_dict(config: RunConfig, prepared: PreparedRun, run: VariantRun) -> dict:
    report = run.report
    return {
        "schema": REPORT_SCHEMA,
        "config": config.echo(),
        "seed": config.seed,
        "dataset_digest": prepared.dataset.source_digest,
        "feature_map": run.feature_map.value,
        "sizes": [run.state.n_in, run.state.n_hidden, run.state.n_out],
        "epochs_executed": report.epochs_executed,
        "epochs_to_target": report.epochs_to_target,
        "final_mse": report.mse_trace[-1],
        "best_mse": report.best_mse_trace[-1],
        "weights_digest": _digest_of(network.state_to_dict(run.state)),
        "activation_samples": [list(s) for s in report.activation_samples],
        "patterns": _pattern_records(prepared, run),
        "mse_trace": list(report.mse_trace),
        "best_mse_trace": list(report.best_mse_trace),
    }


def _write_cleaning_log(config: RunConfig, data: Dataset) -> None:
    if config.cleaning_log is None:
        return
    lines = [json.dumps(entry.as_dict()) for entry in data.cleaning_log]
    _write(Path(config.cleaning_log), ("\n".join(lines) + ("\n" if lines else "")).encode())


def run_training(config: RunConfig) -> dict:
    """Train one variant and write snapshot.json, report.json, trace.csv.

    Returns a small summary dict (also what the CLI prints). Raises
    ConfigError or corpus errors; convergence misses are reported in the
    summary, not raised.
    """
    if config.feature_map == "all":
        raise ConfigError("train runs one feature map; use the compare command for 'all'")
    prepared = prepare(config)
    _write_cleaning_log(config, prepared.dataset)
    run = run_variant(prepared, config, FeatureMapKind(config.feature_map))

    out = Path(config.out_dir)
    digest = prepared.dataset.source_digest
    _write(out / "snapshot.json", _json_bytes(_snapshot_dict(config, prepared, run)))
    _write(out / "report.json", _json_bytes(_report_dict(config, prepared, run)))
    _write(out / "trace.csv", _trace_csv(config, digest, run.report))

    return {
        "out_dir": str(out),
        "files": ["snapshot.json", "report.json", "trace.csv"],
        "feature_map": run.feature_map.value,
        "final_mse": run.report.mse_trace[-1],
        "epochs_executed": run.report.epochs_executed,
        "epochs_to_target": run.report.epochs_to_target,
        "converged": run.report.epochs_to_target is not None,
    }


def run_comparison(config: RunConfig) -> dict:
    """Train every feature-map variant under one config and write artifacts.

    Emits comparison.json plus one figure CSV per variant per target with
    the actual-vs-estimated pairs over the evaluation rows. Variants run in
    the fixed order linear, nl1..nl6; a failing variant is recorded and the
    others still run.
    """
    if config.feature_map != "all":
        raise ConfigError("compare requires feature map 'all'")
    prepared = prepare(config)
    _write_cleaning_log(config, prepared.dataset)

    out = Path(config.out_dir)
    digest = prepared.dataset.source_digest
    variants = []
    files = []
    any_failed = False
    all_converged = True
    for kind in ALL_KINDS:
        try:
            run = run_variant(prepared, config, kind)
        except (ConfigError, FeatureError, network.NetworkError) as exc:
            any_failed = True
            variants.append({"feature_map": kind.value, "failed": True,
                             "error": str(exc), "sizes": None,
                             "epochs_executed": None, "epochs_to_target": None,
                             "final_mse": None, "best_mse": None, "patterns": []})
            continue
        if run.report.epochs_to_target is None:
            all_converged = False
        variants.append(_variant_summary(prepared, run))
        for col_i, col in enumerate(prepared.target_columns):
            name = f"{kind.value}_{col}.csv"
            _write(out / name, _figure_csv(config, digest, prepared.eval_indices,
                                           run.eval_actual[:, col_i],
                                           run.eval_predicted[:, col_i]))
            files.append(name)

    if config.require_target and not all_converged:
        any_failed = True

    comparison = {
        "schema": COMPARISON_SCHEMA,
        "config": config.echo(),
        "seed": config.seed,
        "dataset_digest": digest,
        "variant_order": [k.value for k in ALL_KINDS],
        "variants": variants,
    }
    _write(out / "comparison.json", _json_bytes(comparison))

    return {
        "out_dir": str(out),
        "files": ["comparison.json"] + files,
        "any_failed": any_failed,
        "epochs_to_target": {v["feature_map"]: v["epochs_to_target"] for v in variants},
    }


def run_dataset_stats(config: RunConfig) -> dict:
    """Dataset summary JSON: computed maxima, reported annotations, consistency."""
    from . import engine_metrics

    kind = _sniff_kind(config.dataset)
    if kind == "engine":
        cleaning = CLEAN_RAW if config.raw else CLEAN_COMPLEMENT_FILL
        data = corpus.load_engine_dataset(config.dataset, cleaning=cleaning)
        _write_cleaning_log(config, data)
        summary = engine_metrics.summarize(data)
        return {
            "dataset": config.dataset,
            "dataset_digest": data.source_digest,
            "rows": len(data),
            "computed": summary.as_dict(),
            "reported": dict(engine_metrics.REPORTED_VALUES),
            "power_consistency": engine_metrics.power_consistency(data),
            "cleaning_log": [e.as_dict() for e in data.cleaning_log],
        }

    data = corpus.load_emission_dataset(config.dataset)
    rows = [{"blend_pct": p.blend_pct, "hc": p.hc, "co": p.co} for p in data.patterns]
    return {
        "dataset": config.dataset,
        "dataset_digest": data.source_digest,
        "rows": len(data),
        "emissions": rows,
        "hc_min": min(p.hc for p in data.patterns),
        "hc_max": max(p.hc for p in data.patterns),
        "co_min": min(p.co for p in data.patterns),
        "co_max": max(p.co for p in data.patterns),
    }
