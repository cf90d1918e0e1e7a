"""Splitting, confidence-gated prediction and evaluation of the detector."""

import logging
from collections.abc import Sequence
from enum import StrEnum
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field
from sklearn.metrics import accuracy_score, confusion_matrix, precision_recall_fscore_support
from sklearn.model_selection import train_test_split

from service.aggregate.pair_table import PairKey
from service.detector.forest import DEFAULT_TREES, ForestModel, feature_row, train
from service.errors import DatasetError
from service.features.feature_store import read_pair_frame
from service.features.feature_vector import FeatureSet, FeatureVector
from service.labeling.labeler import Label, LabeledSample
from service.synth.ground_truth import GroundTruth
from service.util import safe_ratio

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.75
DEFAULT_SPLIT = 0.8
MIN_DATASET_SIZE = 10
HISTOGRAM_BINS = 20


class PredictedLabel(StrEnum):
    """Gated prediction outcome."""

    POSITIVE = "positive"
    NEGATIVE = "negative"
    REJECTED = "rejected"


class Prediction(BaseModel):
    """Forest vote for one pair after confidence gating.

    The label is rejected when max(p, 1 - p) is below the threshold; otherwise it is
    positive when p > 0.5 and negative otherwise.
    """

    pair: PairKey
    probability_positive: float
    label: PredictedLabel
    threshold: float


class ConfusionCounts(BaseModel):
    """Outcome counts over an evaluated set."""

    true_positive: int = 0
    false_positive: int = 0
    true_negative: int = 0
    false_negative: int = 0
    rejected: int = 0

    @property
    def accepted(self) -> int:
        """Return the number of accepted predictions."""
        return (
            self.true_positive + self.false_positive + self.true_negative + self.false_negative
        )


class BreakdownRow(BaseModel):
    """Accepted and false predictions for one group of samples."""

    group: str
    accepted: int = 0
    false: int = 0


class HistogramRow(BaseModel):
    """Correct and false accepted predictions whose probability falls in a bin."""

    bin_low: float
    bin_high: float
    correct: int = 0
    false: int = 0


class EvalReport(BaseModel):
    """Detector metrics over accepted predictions; rejections only affect coverage."""

    threshold: float
    evaluated: int
    coverage: float
    precision: float | None = None
    recall: float | None = None
    accuracy: float | None = None
    f1: float | None = None
    confusion: ConfusionCounts
    false_by_user_count: list[BreakdownRow] = []
    false_by_pi_type: list[BreakdownRow] = []
    probability_histogram: list[HistogramRow] = []


class SweepPoint(BaseModel):
    """Coverage and precision at one confidence threshold."""

    threshold: float
    coverage: float
    precision: float | None
    recall: float | None


class RepeatedEvaluation(BaseModel):
    """Mean metrics over repeated split, train and evaluate runs."""

    repeats: int
    feature_set: FeatureSet
    mean_precision: float | None
    mean_recall: float | None
    mean_accuracy: float | None
    mean_f1: float | None
    mean_coverage: float
    runs: list[EvalReport]


def split(
    dataset: Sequence[LabeledSample],
    ratio: float = DEFAULT_SPLIT,
    seed: int = 0,
) -> tuple[list[LabeledSample], list[LabeledSample]]:
    """Split a dataset into train and test sets, stratified by label and seeded.

    Samples are ordered by pair first so the split only depends on the seed, not on
    the order of the input.

    Raises:
        DatasetError: If the dataset is too small, single-class, or the ratio leaves
            either side empty.

    """
    if len(dataset) < MIN_DATASET_SIZE:
        raise DatasetError(f"Need at least {MIN_DATASET_SIZE} samples, got {len(dataset)}")
    if not 0.0 < ratio < 1.0:
        raise DatasetError(f"Split ratio must lie strictly between 0 and 1, got {ratio}")
    samples = sorted(dataset, key=lambda sample: sample.pair)
    labels = [sample.label.value for sample in samples]
    for label in Label:
        if label.value not in labels:
            raise DatasetError(f"Dataset has no {label.value} samples")
    try:
        train_set, test_set = train_test_split(
            samples,
            train_size=ratio,
            stratify=labels,
            random_state=seed,
        )
    except ValueError as e:
        raise DatasetError(f"Cannot split {len(samples)} samples at ratio {ratio}: {e}") from e
    if not train_set or not test_set:
        raise DatasetError(f"Split ratio {ratio} leaves an empty train or test set")
    return sorted(train_set, key=lambda s: s.pair), sorted(test_set, key=lambda s: s.pair)


def gate(votes: int, n_trees: int, threshold: float) -> PredictedLabel:
    """Apply confidence gating to a vote count."""
    confidence = max(votes, n_trees - votes) / n_trees
    if confidence < threshold:
        return PredictedLabel.REJECTED
    return PredictedLabel.POSITIVE if 2 * votes > n_trees else PredictedLabel.NEGATIVE


def predict(
    model: ForestModel,
    pair: PairKey,
    features: FeatureVector | Sequence[float],
    threshold: float = DEFAULT_THRESHOLD,
) -> Prediction:
    """Predict one pair; the probability is the fraction of trees voting positive.

    Raises:
        ModelError: If a raw feature sequence does not have 17 values.

    """
    votes, probability = model.vote_fraction(feature_row(features))
    return Prediction(
        pair=pair,
        probability_positive=probability,
        label=gate(votes, model.n_trees, threshold),
        threshold=threshold,
    )


def predict_matrix(
    model: ForestModel,
    matrix: dict[PairKey, FeatureVector],
    threshold: float = DEFAULT_THRESHOLD,
) -> list[Prediction]:
    """Predict every pair of a feature matrix, ordered by pair."""
    predictions = [
        predict(model, pair, matrix[pair], threshold) for pair in sorted(matrix)
    ]
    counts = {label: 0 for label in PredictedLabel}
    for prediction in predictions:
        counts[prediction.label] += 1
    logger.info(
        "✓ Predicted %d pairs: %d positive, %d negative, %d rejected",
        len(predictions),
        counts[PredictedLabel.POSITIVE],
        counts[PredictedLabel.NEGATIVE],
        counts[PredictedLabel.REJECTED],
    )
    return predictions


def _confusion(
    samples: Sequence[LabeledSample],
    predictions: Sequence[Prediction],
) -> tuple[ConfusionCounts, np.ndarray, np.ndarray]:
    accepted = [
        (sample.label == Label.POSITIVE, prediction.label == PredictedLabel.POSITIVE)
        for sample, prediction in zip(samples, predictions, strict=True)
        if prediction.label != PredictedLabel.REJECTED
    ]
    y_true = np.array([int(actual) for actual, _ in accepted], dtype=int)
    y_pred = np.array([int(predicted) for _, predicted in accepted], dtype=int)
    confusion = ConfusionCounts(rejected=len(samples) - len(accepted))
    if accepted:
        tn, fp, fn, tp = confusion_matrix(y_true, y_pred, labels=[0, 1]).ravel()
        confusion.true_positive = int(tp)
        confusion.false_positive = int(fp)
        confusion.true_negative = int(tn)
        confusion.false_negative = int(fn)
    return confusion, y_true, y_pred


def _defined(value: float) -> float | None:
    return None if np.isnan(value) else float(value)


def _breakdown(
    groups: Sequence[str],
    samples: Sequence[LabeledSample],
    predictions: Sequence[Prediction],
) -> list[BreakdownRow]:
    rows: dict[str, BreakdownRow] = {}
    for group, sample, prediction in zip(groups, samples, predictions, strict=True):
        if prediction.label == PredictedLabel.REJECTED:
            continue
        row = rows.setdefault(group, BreakdownRow(group=group))
        row.accepted += 1
        row.false += int(_is_false(sample, prediction))
    return [rows[group] for group in sorted(rows, key=_group_order)]


def _group_order(group: str) -> tuple[int, int | str]:
    return (0, int(group)) if group.isdigit() else (1, group)


def _is_false(sample: LabeledSample, prediction: Prediction) -> bool:
    return (prediction.label == PredictedLabel.POSITIVE) != (sample.label == Label.POSITIVE)


def _histogram(
    samples: Sequence[LabeledSample],
    predictions: Sequence[Prediction],
) -> list[HistogramRow]:
    edges = np.linspace(0.0, 1.0, HISTOGRAM_BINS + 1)
    accepted = [
        (prediction.probability_positive, _is_false(sample, prediction))
        for sample, prediction in zip(samples, predictions, strict=True)
        if prediction.label != PredictedLabel.REJECTED
    ]
    correct, _ = np.histogram([p for p, false in accepted if not false], bins=edges)
    false, _ = np.histogram([p for p, false in accepted if false], bins=edges)
    return [
        HistogramRow(
            bin_low=round(float(edges[i]), 10),
            bin_high=round(float(edges[i + 1]), 10),
            correct=int(correct[i]),
            false=int(false[i]),
        )
        for i in range(HISTOGRAM_BINS)
    ]


def evaluate(
    model: ForestModel,
    test_set: Sequence[LabeledSample],
    threshold: float = DEFAULT_THRESHOLD,
) -> EvalReport:
    """Evaluate a model on labeled samples.

    Raises:
        DatasetError: If the test set is empty.

    """
    if not test_set:
        raise DatasetError("Cannot evaluate on an empty test set")
    samples = sorted(test_set, key=lambda s: s.pair)
    predictions = [predict(model, s.pair, s.features, threshold) for s in samples]
    confusion, y_true, y_pred = _confusion(samples, predictions)
    report = EvalReport(
        threshold=threshold,
        evaluated=len(samples),
        coverage=safe_ratio(confusion.accepted, len(samples)),
        confusion=confusion,
        false_by_user_count=_breakdown(
            [str(s.features.num_users) for s in samples],
            samples,
            predictions,
        ),
        false_by_pi_type=_breakdown(
            [s.pi_type or s.label.value for s in samples],
            samples,
            predictions,
        ),
        probability_histogram=_histogram(samples, predictions),
    )
    if confusion.accepted == 0:
        logger.warning("All %d predictions were rejected at threshold %s", len(samples), threshold)
        return report

    precision, recall, f1, _ = precision_recall_fscore_support(
        y_true,
        y_pred,
        average="binary",
        pos_label=1,
        zero_division=np.nan,
    )
    report.precision = _defined(precision)
    report.recall = _defined(recall)
    report.accuracy = float(accuracy_score(y_true, y_pred))
    if report.precision is not None and report.recall is not None:
        report.f1 = _defined(f1) or 0.0
    logger.info(
        "✓ Evaluated %d samples: coverage %.3f, precision %s, recall %s, accuracy %.3f",
        len(samples),
        report.coverage,
        report.precision,
        report.recall,
        report.accuracy,
    )
    return report


def threshold_sweep(
    model: ForestModel,
    test_set: Sequence[LabeledSample],
    thresholds: Sequence[float],
) -> list[SweepPoint]:
    """Evaluate the same model at several confidence thresholds."""
    points = []
    for threshold in thresholds:
        report = evaluate(model, test_set, threshold)
        points.append(
            SweepPoint(
                threshold=threshold,
                coverage=report.coverage,
                precision=report.precision,
                recall=report.recall,
            ),
        )
    return points


def _mean(values: list[float | None]) -> float | None:
    present = [value for value in values if value is not None]
    return float(np.mean(present)) if present else None


class ExperimentConfig(BaseModel):
    """Split, forest and gating settings shared by every repeated run."""

    ratio: float = Field(default=DEFAULT_SPLIT, gt=0.0, lt=1.0)
    n_trees: int = Field(default=DEFAULT_TREES, ge=1)
    threshold: float = Field(default=DEFAULT_THRESHOLD, ge=0.0, le=1.0)
    feature_set: FeatureSet = FeatureSet.ALL


def repeated_evaluation(
    dataset: Sequence[LabeledSample],
    repeats: int = 10,
    seed: int = 0,
    config: ExperimentConfig | None = None,
) -> RepeatedEvaluation:
    """Repeat split, train and evaluate with derived seeds and average the metrics."""
    config = config or ExperimentConfig()
    runs: list[EvalReport] = []
    for child in np.random.SeedSequence(seed).spawn(repeats):
        run_seed = int(child.generate_state(1)[0])
        train_set, test_set = split(dataset, config.ratio, run_seed)
        model = train(
            train_set,
            n_trees=config.n_trees,
            seed=run_seed,
            feature_set=config.feature_set,
        )
        runs.append(evaluate(model, test_set, config.threshold))
    return RepeatedEvaluation(
        repeats=repeats,
        feature_set=config.feature_set,
        mean_precision=_mean([run.precision for run in runs]),
        mean_recall=_mean([run.recall for run in runs]),
        mean_accuracy=_mean([run.accuracy for run in runs]),
        mean_f1=_mean([run.f1 for run in runs]),
        mean_coverage=float(np.mean([run.coverage for run in runs])),
        runs=runs,
    )


def write_predictions_csv(predictions: Sequence[Prediction], path: Path) -> None:
    """Write predictions as CSV with columns app, key, probability_positive, label, threshold."""
    frame = pd.DataFrame(
        [
            {
                "app": p.pair.app_id,
                "key": p.pair.key,
                "probability_positive": p.probability_positive,
                "label": p.label.value,
                "threshold": p.threshold,
            }
            for p in predictions
        ],
        columns=["app", "key", "probability_positive", "label", "threshold"],
    )
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def read_predictions_csv(path: Path) -> list[Prediction]:
    """Read predictions written by write_predictions_csv."""
    frame = read_pair_frame(path, ["app", "key", "probability_positive", "label", "threshold"])
    return [
        Prediction(
            pair=PairKey(app_id=row["app"], key=row["key"]),
            probability_positive=float(row["probability_positive"]),
            label=PredictedLabel(row["label"]),
            threshold=float(row["threshold"]),
        )
        for row in frame.to_dict(orient="records")
    ]


class KindRecall(BaseModel):
    """Detection of the planted PI pairs of one kind."""

    group: str
    planted: int = 0
    accepted: int = 0
    detected: int = 0
    recall: float | None = None


class GroundTruthReport(BaseModel):
    """Predictions scored against generator ground truth."""

    predicted: int
    unlabeled: int
    precision: float | None
    recall: float | None
    by_kind: list[KindRecall]
    unknown_type: KindRecall


def _kind_group(entry_kind: str, naming: str | None) -> str:
    return f"{entry_kind}/{naming}" if naming else entry_kind


def evaluate_ground_truth(
    predictions: Sequence[Prediction],
    ground_truth: GroundTruth,
) -> GroundTruthReport:
    """Score accepted predictions against ground truth.

    Recall is reported per planted kind and for the neutral and obfuscated plants no
    rule can see. Pairs missing from the ground truth are counted as unlabeled.
    """
    groups: dict[str, KindRecall] = {}
    unknown = KindRecall(group="unknown_type")
    tp = fp = fn = unlabeled = 0
    for prediction in predictions:
        entry = ground_truth.get(prediction.pair)
        if entry is None:
            unlabeled += 1
            continue
        accepted = prediction.label != PredictedLabel.REJECTED
        detected = prediction.label == PredictedLabel.POSITIVE
        if entry.label == Label.NEGATIVE:
            fp += int(detected)
            continue
        fn += int(accepted and not detected)
        tp += int(detected)
        naming = entry.key_naming.value if entry.key_naming else None
        targets = [groups.setdefault(
            _kind_group(entry.pi_kind, naming),
            KindRecall(group=_kind_group(entry.pi_kind, naming)),
        )]
        if entry.is_unknown_type():
            targets.append(unknown)
        for target in targets:
            target.planted += 1
            target.accepted += int(accepted)
            target.detected += int(detected)
    for target in [*groups.values(), unknown]:
        target.recall = target.detected / target.accepted if target.accepted else None
    if unlabeled:
        logger.warning("%d predicted pairs have no ground truth entry", unlabeled)
    report = GroundTruthReport(
        predicted=len(predictions),
        unlabeled=unlabeled,
        precision=tp / (tp + fp) if tp + fp else None,
        recall=tp / (tp + fn) if tp + fn else None,
        by_kind=[groups[name] for name in sorted(groups)],
        unknown_type=unknown,
    )
    logger.info(
        "✓ Ground truth check: precision %s, recall %s, unknown-type recall %s",
        report.precision,
        report.recall,
        unknown.recall,
    )
    return report
