"""Full-scale detection run on the default synthetic corpus."""

import io

import pytest

from service.aggregate import build_table, prune
from service.detector import (
    evaluate,
    evaluate_ground_truth,
    predict_matrix,
    split,
    threshold_sweep,
    train,
)
from service.features import feature_matrix
from service.ingest import parse_jsonl_corpus
from service.labeling import Label, Override, assemble_dataset, load_rule_set, rule_labels
from service.synth import default_s1_config, generate

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def detection_run():  # noqa: ANN201
    corpus = io.StringIO()
    result = generate(default_s1_config(), corpus)
    records = parse_jsonl_corpus(io.BytesIO(corpus.getvalue().encode("utf-8"))).records
    table, _ = prune(build_table(records))
    matrix = feature_matrix(table)
    overrides = [Override(pair=pair, label=Label.NEGATIVE) for pair in result.manual_negatives]
    samples, _ = assemble_dataset(table, matrix, rule_labels(table, load_rule_set()), overrides)
    train_set, test_set = split(samples, 0.8, seed=7)
    model = train(train_set, n_trees=20, seed=7)
    return result, matrix, model, test_set


def test_detector_f1_on_accepted_test_predictions(detection_run) -> None:  # noqa: ANN001
    _, _, model, test_set = detection_run

    report = evaluate(model, test_set, 0.75)

    assert report.f1 is not None
    assert report.f1 >= 0.85


def test_pi_invisible_to_rules_is_still_found(detection_run) -> None:  # noqa: ANN001
    result, matrix, model, _ = detection_run

    report = evaluate_ground_truth(predict_matrix(model, matrix, 0.75), result.ground_truth)

    assert report.unknown_type.planted > 0
    assert report.unknown_type.recall is not None
    assert report.unknown_type.recall >= 0.7


def test_stricter_threshold_trades_coverage_for_precision(detection_run) -> None:  # noqa: ANN001
    _, _, model, test_set = detection_run
    thresholds = [round(0.5 + 0.05 * step, 2) for step in range(10)]

    points = threshold_sweep(model, test_set, thresholds)
    by_threshold = {point.threshold: point for point in points}

    coverages = [point.coverage for point in points]
    assert all(a >= b for a, b in zip(coverages, coverages[1:], strict=False))
    assert by_threshold[0.5].precision is not None
    assert by_threshold[0.75].precision is not None
    assert by_threshold[0.75].precision >= by_threshold[0.5].precision
