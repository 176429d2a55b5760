"""Command-line interface: train, predict, compare, dataset-stats, featurize.

stdout carries data (JSON summaries or CSV rows), stderr carries
diagnostics. Exit codes: 0 success, 2 invalid configuration or input,
3 dataset error, 4 target MSE not reached when --require-target is set,
5 one or more comparison variants failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import corpus, features, harness, network
from .corpus import CorpusError
from .features import FeatureError, FeatureMapKind
from .harness import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATASET = 3
EXIT_NO_CONVERGENCE = 4
EXIT_VARIANT_FAILED = 5

FEATURE_MAP_CHOICES = [k.value for k in features.ALL_KINDS] + ["all"]
TARGET_CHOICES = ["all", "power", "torque", "sfc", "hc", "co"]


def _add_run_options(parser: argparse.ArgumentParser, default_map: str) -> None:
    parser.add_argument("--config", help="JSON file with flat keys mirroring these flags")
    parser.add_argument("--dataset", help="CSV path, 'bundled-engine', or 'bundled-emissions'")
    parser.add_argument("--feature-map", dest="feature_map", choices=FEATURE_MAP_CHOICES,
                        help=f"input preprocessing variant (default {default_map})")
    parser.add_argument("--targets", choices=TARGET_CHOICES,
                        help="which outputs to train on (default all)")
    parser.add_argument("--hidden", type=int, help="hidden layer width (default 10)")
    parser.add_argument("--eta", type=float, help="learning factor (default 0.25)")
    parser.add_argument("--seed", type=int, help="weight init / shuffle seed (default 42)")
    parser.add_argument("--target-mse", dest="target_mse", type=float,
                        help="stop when epoch MSE reaches this (default 0.005)")
    parser.add_argument("--max-epochs", dest="max_epochs", type=int,
                        help="epoch cap (default 50000)")
    parser.add_argument("--update-mode", dest="update_mode",
                        choices=list(network.UPDATE_MODES),
                        help="hidden deltas from updated (sequential) or pre-update "
                             "(simultaneous) output weights")
    parser.add_argument("--order", choices=["sequential", "shuffle"],
                        help="pattern presentation order per epoch")
    parser.add_argument("--holdout", type=float,
                        help="blend percent to hold out for evaluation (default in-sample)")
    parser.add_argument("--out-dir", dest="out_dir",
                        help=f"artifact directory (default ${harness.OUT_DIR_ENV} or ./out)")
    parser.add_argument("--raw", action="store_true", default=None,
                        help="disable dataset cleaning rules")
    parser.add_argument("--keep-constant", dest="keep_constant", action="store_true",
                        default=None,
                        help="keep the constant full-load column as a midpoint feature")
    parser.add_argument("--bias", action="store_true", default=None,
                        help="append an always-1 input to the featurized vector")
    parser.add_argument("--require-target", dest="require_target", action="store_true",
                        default=None, help="fail (exit 4) if target MSE is not reached")
    parser.add_argument("--cleaning-log", dest="cleaning_log",
                        help="write applied cleaning corrections to this JSONL file")


def _config_from_args(args: argparse.Namespace, **overrides) -> harness.RunConfig:
    keys = ("dataset", "feature_map", "targets", "hidden", "eta", "seed",
            "target_mse", "max_epochs", "update_mode", "order", "holdout",
            "out_dir", "raw", "keep_constant", "bias", "require_target",
            "cleaning_log")
    values = {k: getattr(args, k) for k in keys}
    values.update(overrides)
    return harness.resolve_config(values, config_file=args.config)


def cmd_train(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    summary = harness.run_training(config)
    print(json.dumps(summary, indent=2))
    if config.require_target and not summary["converged"]:
        print(f"error: target MSE {config.target_mse} not reached within "
              f"{config.max_epochs} epochs", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    if args.feature_map is None:
        args.feature_map = "all"
    config = _config_from_args(args)
    summary = harness.run_comparison(config)
    print(json.dumps(summary, indent=2))
    if summary["any_failed"]:
        print("error: one or more variants failed; see comparison.json",
              file=sys.stderr)
        return EXIT_VARIANT_FAILED
    return EXIT_OK


def cmd_dataset_stats(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    stats = harness.run_dataset_stats(config)
    print(json.dumps(stats, indent=2))
    return EXIT_OK


def _parse_query(text: str, input_columns: list) -> dict:
    parts = [p.strip() for p in text.split(",")]
    try:
        numbers = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"query {text!r} is not a comma-separated number list") from None

    if "blend_pct" in input_columns:
        if len(numbers) != 1:
            raise ConfigError(f"emissions query takes one value (blend percent), got {text!r}")
        blend = numbers[0]
        if not 0 <= blend <= 100:
            raise ConfigError(f"blend percent must be in [0, 100], got {blend}")
        return {"blend_pct": blend}

    if len(numbers) != 2:
        raise ConfigError(f"engine query takes 'biodiesel_pct,speed_rpm', got {text!r}")
    biodiesel, speed = numbers
    if not 0 <= biodiesel <= 100:
        raise ConfigError(f"biodiesel percent must be in [0, 100], got {biodiesel}")
    if speed <= 0:
        raise ConfigError(f"speed must be > 0 rpm, got {speed}")
    return {"full_load": 1.0, "biodiesel_pct": biodiesel,
            "diesel_pct": 100.0 - biodiesel, "speed_rpm": speed}


def cmd_predict(args: argparse.Namespace) -> int:
    try:
        snapshot = json.loads(Path(args.snapshot).read_text())
    except FileNotFoundError:
        raise ConfigError(f"snapshot not found: {args.snapshot}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"snapshot is not valid JSON: {exc}") from None
    if snapshot.get("schema") != harness.SNAPSHOT_SCHEMA:
        raise ConfigError(f"unsupported snapshot schema {snapshot.get('schema')!r}")

    state = network.state_from_dict(snapshot["network"])
    kind = FeatureMapKind(snapshot["feature_map"])
    input_columns = snapshot["input_columns"]
    target_columns = snapshot["target_columns"]
    input_params = corpus.NormalizationParams.from_dict(snapshot["input_norm"])
    target_params = corpus.NormalizationParams.from_dict(snapshot["target_norm"])

    rows = []
    for text in args.query:
        values = _parse_query(text, input_columns)
        raw = np.array([values[c] for c in input_columns])
        x = features.featurize(corpus.normalize(raw, input_params), kind).values
        if snapshot["bias_input"]:
            x = np.append(x, 1.0)
        outputs = network.predict(state, x)
        predicted, outside = corpus.denormalize_flagged(outputs, target_params)
        rows.append((raw, predicted, bool(outside.any())))

    print(",".join(list(input_columns) + list(target_columns) + ["extrapolated"]))
    for raw, predicted, outside in rows:
        cells = [repr(float(v)) for v in raw] + [repr(float(v)) for v in predicted]
        cells.append("true" if outside else "false")
        print(",".join(cells))
    return EXIT_OK


def cmd_featurize(args: argparse.Namespace) -> int:
    try:
        vector = [float(p) for p in args.vector.split(",")]
    except ValueError:
        raise ConfigError(f"vector {args.vector!r} is not a comma-separated number list") from None
    result = features.featurize(vector, FeatureMapKind(args.feature_map))
    print(",".join(repr(float(v)) for v in result.values))
    print(len(result))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pvreg",
        description="Polynomial-vector feature maps and an online backprop "
                    "sigmoid network for engine performance regression.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one feature-map variant and write artifacts")
    _add_run_options(p_train, default_map="linear")
    p_train.set_defaults(func=cmd_train)

    p_predict = sub.add_parser("predict", help="predict from a weight snapshot")
    p_predict.add_argument("--snapshot", required=True, help="snapshot.json from a train run")
    p_predict.add_argument("--query", action="append", required=True,
                           help="engine: 'biodiesel_pct,speed_rpm' (diesel is auto-"
                                "complemented); emissions: 'blend_pct'; repeatable")
    p_predict.set_defaults(func=cmd_predict)

    p_compare = sub.add_parser("compare", help="train all feature-map variants and compare")
    _add_run_options(p_compare, default_map="all")
    p_compare.set_defaults(func=cmd_compare)

    p_stats = sub.add_parser("dataset-stats", help="print dataset summary statistics")
    _add_run_options(p_stats, default_map="linear")
    p_stats.set_defaults(func=cmd_dataset_stats)

    p_feat = sub.add_parser("featurize", help="print one expanded feature vector")
    p_feat.add_argument("vector", help="comma-separated input values")
    p_feat.add_argument("feature_map", choices=[k.value for k in features.ALL_KINDS])
    p_feat.set_defaults(func=cmd_featurize)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FeatureError, network.NetworkError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATASET


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
