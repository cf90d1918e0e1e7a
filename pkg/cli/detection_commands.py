"""Subcommands that train and apply the detector: train to report."""

import argparse
import logging
from pathlib import Path

from cli.application_model import AppSettings, RunContext
from cli.corpus_commands import default_values, read_corpus, read_table
from service.blacklist import (
    Blacklist,
    build_blacklist,
    load_blacklist,
    match_stream,
    save_blacklist,
    write_events_jsonl,
    write_summary_csv,
    write_unseen_pairs_jsonl,
)
from service.detector import (
    EvalReport,
    ExperimentConfig,
    evaluate,
    evaluate_ground_truth,
    load_model,
    predict_matrix,
    read_predictions_csv,
    repeated_evaluation,
    save_model,
    split,
    threshold_sweep,
    train,
    write_predictions_csv,
)
from service.errors import MissingInputError
from service.features import FeatureSet, read_feature_csv
from service.file.artifact_repo import ArtifactRepository
from service.labeling import Label, read_dataset_csv, write_dataset_csv
from service.report import write_report_csvs, write_sweep_csv
from service.synth import ground_truth_blacklist_pairs, read_ground_truth_csv

logger = logging.getLogger(__name__)

MODEL_FILE = "model.json"
TRAIN_FILE = "train.csv"
TEST_FILE = "test.csv"
EVAL_REPORT_FILE = "eval_report.json"
REPEATED_FILE = "repeated_evaluation.json"
SWEEP_FILE = "threshold_sweep.csv"
PREDICTIONS_FILE = "predictions.csv"
GROUND_TRUTH_REPORT_FILE = "ground_truth_report.json"
BLACKLIST_FILE = "blacklist.json"
EVENTS_FILE = "leak_events.jsonl"
SUMMARY_FILE = "leak_summary.csv"
UNSEEN_FILE = "unseen_pairs.jsonl"
SWEEP_THRESHOLDS = [round(0.5 + 0.05 * step, 2) for step in range(10)]


def _require(path: Path | None, flag: str, subcommand: str) -> Path:
    if path is None:
        raise MissingInputError(f"{subcommand} needs {flag}")
    if not path.exists():
        raise MissingInputError(f"File not found: {path}")
    return path


def run_train(args: argparse.Namespace, context: RunContext) -> None:
    """Split the dataset, train a forest and write the model with both splits."""
    dataset = read_dataset_csv(args.input)
    context.inputs.append(args.input)
    train_set, test_set = split(dataset, args.split, args.seed)
    with context.timed("train"):
        model = train(
            train_set,
            n_trees=args.trees,
            seed=args.seed,
            feature_set=FeatureSet(args.feature_set),
        )
    save_model(model, context.output(MODEL_FILE))
    write_dataset_csv(train_set, context.output(TRAIN_FILE))
    write_dataset_csv(test_set, context.output(TEST_FILE))
    context.trained_at = model.trained_at


def run_evaluate(args: argparse.Namespace, context: RunContext) -> None:
    """Evaluate a model on a labeled test set, with a threshold sweep and breakdown CSVs."""
    model_path = _require(args.model, "--model", "evaluate")
    model = load_model(model_path)
    test_set = read_dataset_csv(args.input)
    context.inputs.extend([model_path, args.input])
    with context.timed("evaluate"):
        report = evaluate(model, test_set, args.threshold)
    context.repository.upload_json(EVAL_REPORT_FILE, report.model_dump(mode="json"))
    context.output(EVAL_REPORT_FILE)
    with context.timed("sweep"):
        sweep = threshold_sweep(model, test_set, SWEEP_THRESHOLDS)
    write_sweep_csv(sweep, context.output(SWEEP_FILE))
    for path in write_report_csvs(context.output_dir, report=report):
        context.output(path.name)
    if args.repeats:
        full_path = _require(args.full_dataset, "--full-dataset", "evaluate --repeats")
        context.inputs.append(full_path)
        with context.timed("repeated"):
            repeated = repeated_evaluation(
                read_dataset_csv(full_path),
                repeats=args.repeats,
                seed=args.seed,
                config=ExperimentConfig(
                    ratio=args.split,
                    n_trees=args.trees,
                    threshold=args.threshold,
                    feature_set=FeatureSet(args.feature_set),
                ),
            )
        context.repository.upload_json(REPEATED_FILE, repeated.model_dump(mode="json"))
        context.output(REPEATED_FILE)


def run_predict(args: argparse.Namespace, context: RunContext) -> None:
    """Predict every pair of a feature matrix; optionally score against ground truth."""
    model_path = _require(args.model, "--model", "predict")
    model = load_model(model_path)
    matrix = read_feature_csv(args.input)
    context.inputs.extend([model_path, args.input])
    with context.timed("predict"):
        predictions = predict_matrix(model, matrix, args.threshold)
    write_predictions_csv(predictions, context.output(PREDICTIONS_FILE))
    if args.ground_truth is not None:
        ground_truth = read_ground_truth_csv(args.ground_truth)
        context.inputs.append(args.ground_truth)
        report = evaluate_ground_truth(predictions, ground_truth)
        context.repository.upload_json(GROUND_TRUTH_REPORT_FILE, report.model_dump(mode="json"))
        context.output(GROUND_TRUTH_REPORT_FILE)


def run_blacklist(args: argparse.Namespace, context: RunContext) -> None:
    """Build a blacklist from positive predictions, or from ground truth."""
    defaults = default_values(args.defaults, context)
    pi_types: dict = {}
    if args.dataset is not None:
        context.inputs.append(args.dataset)
        pi_types = {
            sample.pair: sample.pi_type
            for sample in read_dataset_csv(args.dataset)
            if sample.label == Label.POSITIVE and sample.pi_type
        }
    if args.ground_truth is not None:
        ground_truth = read_ground_truth_csv(args.ground_truth)
        context.inputs.append(args.ground_truth)
        blacklist = Blacklist(
            entries=ground_truth_blacklist_pairs(ground_truth),
            built_from=str(args.ground_truth),
            pi_types={
                pair: entry.pi_kind
                for pair, entry in ground_truth.items()
                if entry.label == Label.POSITIVE
            },
        )
    else:
        predictions_path = _require(args.input, "--input", "blacklist")
        predictions = read_predictions_csv(predictions_path)
        context.inputs.append(predictions_path)
        blacklist = build_blacklist(
            predictions,
            args.threshold,
            built_from=str(predictions_path),
            pi_types=pi_types,
        )
    blacklist.default_values = defaults
    sidecar = save_blacklist(blacklist, context.output(BLACKLIST_FILE))
    context.output(sidecar.name)


def run_match(args: argparse.Namespace, context: RunContext) -> None:
    """Flag leaks in a corpus and append unseen pairs to the retraining side file."""
    blacklist_path = _require(args.blacklist, "--blacklist", "match")
    blacklist = load_blacklist(blacklist_path)
    context.inputs.append(blacklist_path)
    known_pairs = None
    if args.table is not None:
        known_pairs = set(read_table(args.table, context).pairs)
    result = read_corpus(args.input, context)
    with context.timed("match"):
        matched = match_stream(blacklist, result.records, known_pairs=known_pairs)
    with context.output(EVENTS_FILE).open("w", encoding="utf-8", newline="\n") as stream:
        write_events_jsonl(matched.events, stream)
    write_summary_csv(matched.summary, context.output(SUMMARY_FILE))
    if known_pairs is not None:
        with context.output(UNSEEN_FILE).open("a", encoding="utf-8", newline="\n") as stream:
            write_unseen_pairs_jsonl(matched.unseen_pairs, stream)


def run_report(args: argparse.Namespace, context: RunContext) -> None:
    """Render the users-per-pair CDF and evaluation breakdown CSVs."""
    table = read_table(args.table, context) if args.table is not None else None
    report = None
    if args.eval_report is not None:
        repository = ArtifactRepository(args.eval_report.parent)
        report = EvalReport.model_validate(repository.download_json(args.eval_report.name))
        context.inputs.append(args.eval_report)
    if table is None and report is None:
        raise MissingInputError("report needs --table and/or --eval-report")
    for path in write_report_csvs(context.output_dir, table=table, report=report):
        context.output(path.name)


def register(
    subparsers: "argparse._SubParsersAction[argparse.ArgumentParser]",
    settings: AppSettings,
    common: argparse.ArgumentParser,
) -> None:
    """Add the detection subcommands to the parser."""
    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--trees", type=int, default=settings.trees, help="number of trees")
    model.add_argument("--split", type=float, default=settings.split, help="train ratio")
    model.add_argument(
        "--feature-set",
        choices=[feature_set.value for feature_set in FeatureSet],
        default=FeatureSet.ALL.value,
        help="features the trees may split on",
    )
    gated = argparse.ArgumentParser(add_help=False)
    gated.add_argument(
        "--threshold",
        type=float,
        default=settings.threshold,
        help="confidence threshold",
    )

    train_parser = subparsers.add_parser(
        "train",
        parents=[common, model],
        help="split the dataset and train the forest",
    )
    train_parser.set_defaults(handler=run_train, requires_input=True)

    evaluate_parser = subparsers.add_parser(
        "evaluate",
        parents=[common, model, gated],
        help="evaluate a model on a test set",
    )
    evaluate_parser.add_argument("--model", type=Path, help="model JSON")
    evaluate_parser.add_argument("--repeats", type=int, default=0, help="repeated runs")
    evaluate_parser.add_argument("--full-dataset", type=Path, help="dataset for --repeats")
    evaluate_parser.set_defaults(handler=run_evaluate, requires_input=True)

    predict_parser = subparsers.add_parser(
        "predict",
        parents=[common, gated],
        help="predict every pair of a feature CSV",
    )
    predict_parser.add_argument("--model", type=Path, help="model JSON")
    predict_parser.add_argument("--ground-truth", type=Path, help="generator ground truth")
    predict_parser.set_defaults(handler=run_predict, requires_input=True)

    blacklist_parser = subparsers.add_parser(
        "blacklist",
        parents=[common, gated],
        help="build a blacklist from predictions",
    )
    blacklist_parser.add_argument("--defaults", type=Path, help="default values file")
    blacklist_parser.add_argument("--dataset", type=Path, help="dataset carrying PI types")
    blacklist_parser.add_argument(
        "--ground-truth",
        type=Path,
        help="build from generator ground truth instead of predictions",
    )
    blacklist_parser.set_defaults(handler=run_blacklist)

    match_parser = subparsers.add_parser(
        "match",
        parents=[common],
        help="flag leaks in a corpus",
    )
    match_parser.add_argument("--blacklist", type=Path, help="blacklist JSON")
    match_parser.add_argument("--table", type=Path, help="training table for unseen pairs")
    match_parser.set_defaults(handler=run_match, requires_input=True)

    report_parser = subparsers.add_parser(
        "report",
        parents=[common],
        help="write CDF, breakdown and histogram CSVs",
    )
    report_parser.add_argument("--table", type=Path, help="pair table snapshot")
    report_parser.add_argument("--eval-report", type=Path, help="evaluation report JSON")
    report_parser.set_defaults(handler=run_report)

