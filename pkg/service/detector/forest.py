"""Random forest of Gini decision trees over pair features."""

import logging
import math
from collections.abc import Sequence
from datetime import datetime
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from service.errors import DatasetError, MissingInputError, ModelError, SchemaVersionError
from service.features.feature_vector import FEATURE_NAMES, FeatureSet, FeatureVector
from service.labeling.labeler import Label, LabeledSample

logger = logging.getLogger(__name__)

MODEL_SCHEMA_VERSION = 1
DEFAULT_TREES = 20


class TreeNode(BaseModel):
    """A split node (feature, threshold, left, right) or a leaf (class counts).

    Rows with value <= threshold go left. Leaf counts are [negative, positive].
    """

    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    counts: list[int] | None = None

    def is_leaf(self) -> bool:
        """Return True for leaf nodes."""
        return self.counts is not None

    def votes_positive(self, row: np.ndarray) -> bool:
        """Walk the tree and return the leaf's majority vote, ties voting negative."""
        node = self
        while node.counts is None:
            node = node.left if row[node.feature] <= node.threshold else node.right
        return node.counts[1] > node.counts[0]


class ForestModel(BaseModel):
    """A trained forest with its training parameters."""

    schema_version: int = MODEL_SCHEMA_VERSION
    n_trees: int
    seed: int
    feature_names: list[str] = list(FEATURE_NAMES)
    feature_set: FeatureSet = FeatureSet.ALL
    trees: list[TreeNode]
    trained_at: datetime | None = Field(default=None, exclude=True)

    def vote_fraction(self, row: np.ndarray) -> tuple[int, float]:
        """Return the positive vote count and the fraction of trees voting positive."""
        votes = sum(tree.votes_positive(row) for tree in self.trees)
        return votes, votes / len(self.trees)


def samples_to_arrays(samples: Sequence[LabeledSample]) -> tuple[np.ndarray, np.ndarray]:
    """Return the feature matrix and 0/1 labels of samples in the given order."""
    x = np.array([sample.features.as_array() for sample in samples], dtype=float)
    y = np.array([int(sample.label == Label.POSITIVE) for sample in samples], dtype=int)
    return x.reshape(len(samples), len(FEATURE_NAMES)), y


def _best_split(
    x: np.ndarray,
    y: np.ndarray,
    candidates: np.ndarray,
) -> tuple[int, float] | None:
    """Return the (feature, threshold) with the lowest weighted Gini impurity."""
    n = len(y)
    best: tuple[float, int, float] | None = None
    n_left = np.arange(1, n, dtype=float)
    n_right = n - n_left
    total_positive = y.sum()
    for feature in candidates:
        order = np.argsort(x[:, feature], kind="stable")
        values = x[order, feature]
        positive_left = np.cumsum(y[order])[:-1].astype(float)
        positive_right = total_positive - positive_left
        gini_left = 1.0 - (positive_left / n_left) ** 2 - (1 - positive_left / n_left) ** 2
        gini_right = 1.0 - (positive_right / n_right) ** 2 - (1 - positive_right / n_right) ** 2
        impurity = (n_left * gini_left + n_right * gini_right) / n
        valid = values[1:] != values[:-1]
        if not valid.any():
            continue
        impurity = np.where(valid, impurity, np.inf)
        position = int(np.argmin(impurity))
        if best is None or impurity[position] < best[0]:
            low, high = values[position], values[position + 1]
            threshold = float((low + high) / 2)
            if threshold >= high:
                threshold = float(low)
            best = (float(impurity[position]), int(feature), threshold)
    if best is None:
        return None
    return best[1], best[2]


def _grow(
    x: np.ndarray,
    y: np.ndarray,
    allowed: np.ndarray,
    max_features: int,
    rng: np.random.Generator,
) -> TreeNode:
    positives = int(y.sum())
    counts = [len(y) - positives, positives]
    if positives in (0, len(y)):
        return TreeNode(counts=counts)
    varying = np.array([f for f in allowed if np.ptp(x[:, f]) > 0], dtype=int)
    if len(varying) == 0:
        return TreeNode(counts=counts)
    size = min(max_features, len(varying))
    candidates = rng.choice(varying, size=size, replace=False)
    split = _best_split(x, y, candidates)
    if split is None:
        return TreeNode(counts=counts)
    feature, threshold = split
    mask = x[:, feature] <= threshold
    return TreeNode(
        feature=feature,
        threshold=threshold,
        left=_grow(x[mask], y[mask], allowed, max_features, rng),
        right=_grow(x[~mask], y[~mask], allowed, max_features, rng),
    )


def train(
    train_set: Sequence[LabeledSample],
    n_trees: int = DEFAULT_TREES,
    seed: int = 0,
    feature_set: FeatureSet = FeatureSet.ALL,
) -> ForestModel:
    """Train a random forest.

    Each tree is grown on a bootstrap resample of the training set, drawn over the
    samples sorted by pair so row order does not matter. Splits minimise Gini
    impurity over ceil(sqrt(k)) seeded candidate features, where k is the number of
    features in the feature set, and trees grow until leaves are pure.

    Raises:
        DatasetError: If the training set lacks one of the classes.

    """
    ordered = sorted(train_set, key=lambda sample: sample.pair)
    x, y = samples_to_arrays(ordered)
    if len(ordered) == 0 or y.min() == y.max():
        raise DatasetError("Training needs both positive and negative samples")
    if np.all(x == x[0]):
        logger.warning(
            "All training rows have identical features; trees reduce to majority leaves",
        )

    allowed = np.array(feature_set.indices(), dtype=int)
    max_features = math.ceil(math.sqrt(len(allowed)))
    trees: list[TreeNode] = []
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        rows = rng.integers(0, len(y), size=len(y))
        trees.append(_grow(x[rows], y[rows], allowed, max_features, rng))
    logger.info(
        "✓ Trained %d trees on %d samples (%d positive)",
        n_trees,
        len(y),
        int(y.sum()),
    )
    return ForestModel(
        n_trees=n_trees,
        seed=seed,
        feature_set=feature_set,
        trees=trees,
        trained_at=datetime.now().astimezone(),
    )


def feature_row(features: FeatureVector | Sequence[float]) -> np.ndarray:
    """Return a full 17-value feature row.

    Raises:
        ModelError: If a raw sequence does not hold exactly 17 values.

    """
    if isinstance(features, FeatureVector):
        return features.as_array()
    row = np.asarray(features, dtype=float)
    if row.shape != (len(FEATURE_NAMES),):
        raise ModelError(
            f"Expected {len(FEATURE_NAMES)} feature values, got shape {row.shape}",
        )
    return row


def save_model(model: ForestModel, path: Path) -> None:
    """Write the model as self-describing JSON; trained_at is kept out of the file."""
    path.write_text(model.model_dump_json(exclude_none=True), encoding="utf-8")


def load_model(path: Path) -> ForestModel:
    """Read a model written by save_model.

    Raises:
        MissingInputError: If the file does not exist.
        SchemaVersionError: If the schema version differs.
        ModelError: If the file is not a valid model.

    """
    if not path.exists():
        raise MissingInputError(f"Model file not found: {path}")
    try:
        model = ForestModel.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ModelError(f"Invalid model file {path}: {e}") from e
    if model.schema_version != MODEL_SCHEMA_VERSION:
        raise SchemaVersionError(
            f"Model schema version {model.schema_version}, expected {MODEL_SCHEMA_VERSION}",
        )
    if len(model.trees) != model.n_trees:
        raise ModelError(f"Model declares {model.n_trees} trees but holds {len(model.trees)}")
    return model
