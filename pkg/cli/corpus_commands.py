"""Subcommands that produce and transform the traffic corpus: synth to label."""

import argparse
import logging
from pathlib import Path

import pandas as pd

from cli.application_model import AppSettings, RunContext
from service.aggregate import (
    PairTable,
    build_table,
    load_default_values,
    prune,
)
from service.errors import ConfigError, MissingInputError
from service.features import feature_matrix, read_feature_csv, write_feature_csv
from service.file.artifact_repo import ArtifactRepository
from service.ingest import IngestResult, parse_jsonl_corpus, write_jsonl_corpus
from service.labeling import (
    assemble_dataset,
    load_overrides,
    load_rule_set,
    rule_labels,
    write_dataset_csv,
)
from service.synth import SynthConfig, generate, write_ground_truth_csv

logger = logging.getLogger(__name__)

CORPUS_FILE = "corpus.jsonl"
GROUND_TRUTH_FILE = "ground_truth.csv"
OVERRIDES_FILE = "overrides.csv"
SYNTH_CONFIG_FILE = "synth_config.json"
SYNTH_SUMMARY_FILE = "synth_summary.json"
RECORDS_FILE = "records.jsonl"
INGEST_REPORT_FILE = "ingest_report.json"
TABLE_FILE = "table.json"
PRUNE_REPORT_FILE = "prune_report.json"
FEATURES_FILE = "features.csv"
DATASET_FILE = "dataset.csv"
BALANCE_FILE = "balance.json"


def read_corpus(path: Path, context: RunContext) -> IngestResult:
    """Parse a JSONL corpus file and record it as a run input.

    Raises:
        MissingInputError: If the file does not exist.

    """
    if not path.is_file():
        raise MissingInputError(f"Corpus file not found: {path}")
    context.inputs.append(path)
    with path.open("rb") as stream:
        return parse_jsonl_corpus(stream)


def read_table(path: Path, context: RunContext) -> PairTable:
    """Load a pair table snapshot and record it as a run input."""
    repository = ArtifactRepository(path.parent)
    table = PairTable.from_snapshot(repository.download_json(path.name))
    context.inputs.append(path)
    return table


def default_values(path: Path | None, context: RunContext) -> set[str]:
    """Return the default-value set, from a file when one is given."""
    if path is not None:
        context.inputs.append(path)
    return load_default_values(path)


def run_synth(args: argparse.Namespace, context: RunContext) -> None:
    """Generate a seeded synthetic corpus with ground truth and manual negatives."""
    overrides = {
        name: value
        for name, value in (("n_users", args.users), ("n_apps", args.apps))
        if value is not None
    }
    try:
        config = SynthConfig(seed=args.seed, **overrides)
    except ValueError as e:
        raise ConfigError(f"Invalid synthetic corpus configuration: {e}") from e
    with context.timed("generate"), context.output(CORPUS_FILE).open(
        "w",
        encoding="utf-8",
        newline="\n",
    ) as corpus:
        result = generate(config, corpus)
    write_ground_truth_csv(result.ground_truth, context.output(GROUND_TRUTH_FILE))
    pd.DataFrame(
        [
            {"app": pair.app_id, "key": pair.key, "label": "neg", "pi_type": ""}
            for pair in result.manual_negatives
        ],
        columns=["app", "key", "label", "pi_type"],
    ).to_csv(context.output(OVERRIDES_FILE), index=False, encoding="utf-8", lineterminator="\n")
    context.repository.upload_json(SYNTH_CONFIG_FILE, config.model_dump(mode="json"))
    context.output(SYNTH_CONFIG_FILE)
    context.repository.upload_json(
        SYNTH_SUMMARY_FILE,
        {
            "record_count": result.record_count,
            "planted_leaks": result.planted_leaks,
            "planted_defaults": result.planted_defaults,
            "pairs": len(result.ground_truth),
            "manual_negatives": len(result.manual_negatives),
        },
    )
    context.output(SYNTH_SUMMARY_FILE)


def run_ingest(args: argparse.Namespace, context: RunContext) -> None:
    """Parse a corpus (structured or raw lines) into structured records."""
    with context.timed("parse"):
        result = read_corpus(args.input, context)
    with context.output(RECORDS_FILE).open("w", encoding="utf-8", newline="\n") as stream:
        write_jsonl_corpus(result.records, stream)
    context.repository.upload_json(
        INGEST_REPORT_FILE,
        {
            "records": len(result.records),
            "error_count": result.error_count,
            "unparsed_bodies": result.unparsed_bodies,
            "body_parsers": {
                name: tally.model_dump() for name, tally in sorted(result.parser_tallies.items())
            },
            "errors": [error.model_dump() for error in result.errors],
        },
    )
    context.output(INGEST_REPORT_FILE)


def run_aggregate(args: argparse.Namespace, context: RunContext) -> None:
    """Build the pair table, prune it and write the snapshot."""
    defaults = default_values(args.defaults, context)
    result = read_corpus(args.input, context)
    with context.timed("build"):
        table = build_table(result.records, defaults)
    with context.timed("prune"):
        pruned, report = prune(table)
    context.repository.upload_json(TABLE_FILE, pruned.to_snapshot())
    context.output(TABLE_FILE)
    context.repository.upload_json(PRUNE_REPORT_FILE, report.model_dump())
    context.output(PRUNE_REPORT_FILE)
    logger.info(
        "✓ Pruned %d default-only and %d singleton pairs; %d retained",
        report.default_only,
        report.singleton,
        report.retained,
    )


def run_features(args: argparse.Namespace, context: RunContext) -> None:
    """Extract the 17 features of every pair of a table snapshot."""
    table = read_table(args.input, context)
    with context.timed("extract"):
        matrix = feature_matrix(table)
    write_feature_csv(matrix, context.output(FEATURES_FILE))


def run_label(args: argparse.Namespace, context: RunContext) -> None:
    """Label pairs with rules, propagation and overrides into a dataset."""
    if args.table is None:
        raise MissingInputError("label needs --table <table.json>")
    table = read_table(args.table, context)
    if not args.input.is_file():
        raise MissingInputError(f"Feature file not found: {args.input}")
    matrix = read_feature_csv(args.input)
    context.inputs.append(args.input)
    rules = load_rule_set(args.rules)
    if args.rules is not None:
        context.inputs.append(args.rules)
    overrides = []
    if args.overrides is not None:
        overrides = load_overrides(args.overrides)
        context.inputs.append(args.overrides)
    with context.timed("rules"):
        labels = rule_labels(table, rules)
    samples, balance = assemble_dataset(table, matrix, labels, overrides)
    write_dataset_csv(samples, context.output(DATASET_FILE))
    context.repository.upload_json(BALANCE_FILE, balance.model_dump())
    context.output(BALANCE_FILE)


def register(
    subparsers: "argparse._SubParsersAction[argparse.ArgumentParser]",
    settings: AppSettings,
    common: argparse.ArgumentParser,
) -> None:
    """Add the corpus subcommands to the parser."""
    del settings
    synth = subparsers.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    synth.add_argument("--users", type=int, help="number of users (default 100)")
    synth.add_argument("--apps", type=int, help="number of apps (default 50)")
    synth.set_defaults(handler=run_synth)

    ingest = subparsers.add_parser("ingest", parents=[common], help="parse a JSONL corpus")
    ingest.set_defaults(handler=run_ingest, requires_input=True)

    aggregate = subparsers.add_parser(
        "aggregate",
        parents=[common],
        help="build and prune the pair table",
    )
    aggregate.add_argument("--defaults", type=Path, help="default values, one per line")
    aggregate.set_defaults(handler=run_aggregate, requires_input=True)

    features = subparsers.add_parser("features", parents=[common], help="extract pair features")
    features.set_defaults(handler=run_features, requires_input=True)

    label = subparsers.add_parser("label", parents=[common], help="build the labeled dataset")
    label.add_argument("--table", type=Path, help="pair table snapshot")
    label.add_argument("--rules", type=Path, help="rule set JSON (default: shipped rules)")
    label.add_argument("--overrides", type=Path, help="manual labels CSV")
    label.set_defaults(handler=run_label, requires_input=True)
