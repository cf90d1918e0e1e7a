"""Bootstrap a labeled dataset from rules, value propagation and manual overrides."""

import logging
from collections import Counter
from enum import StrEnum
from pathlib import Path

from pydantic import BaseModel, ConfigDict

from service.aggregate.pair_table import PairKey, PairTable
from service.errors import DatasetError
from service.features.feature_store import read_pair_frame
from service.features.feature_vector import FeatureVector
from service.labeling.rule_set import RuleSet

logger = logging.getLogger(__name__)

MIN_PROPAGATION_LENGTH = 6
MIN_NUMERIC_PROPAGATION_LENGTH = 8


class Label(StrEnum):
    """Binary sample label."""

    POSITIVE = "positive"
    NEGATIVE = "negative"


class LabelSource(StrEnum):
    """Where a label came from."""

    RULE_KEYWORD = "rule_keyword"
    RULE_REGEX = "rule_regex"
    PROPAGATED = "propagated"
    MANUAL = "manual"


class RuleMatch(BaseModel):
    """A pair found positive by a rule or by propagation."""

    model_config = ConfigDict(frozen=True)

    pair: PairKey
    pi_type: str
    source: LabelSource


class Override(BaseModel):
    """A manual label for one pair."""

    pair: PairKey
    label: Label
    pi_type: str | None = None


class LabeledSample(BaseModel):
    """A pair with its features, label and label provenance."""

    pair: PairKey
    features: FeatureVector
    label: Label
    source: LabelSource
    pi_type: str | None = None


class DatasetBalance(BaseModel):
    """Class balance of an assembled dataset."""

    positives: int = 0
    negatives: int = 0
    by_source: dict[str, int] = {}
    by_pi_type: dict[str, int] = {}


def apply_rules(table: PairTable, rules: RuleSet) -> set[RuleMatch]:
    """Match every pair against keyword and regex rules.

    A pair matches a keyword when its lowercased key equals it, and a regex when any
    valid value matches the regex in full. Each matching PI type yields one match.
    """
    patterns = rules.compiled()
    matches: set[RuleMatch] = set()
    for pair in table.sorted_pairs():
        keyword_type = rules.keyword_type(pair.key)
        if keyword_type is not None:
            matches.add(
                RuleMatch(pair=pair, pi_type=keyword_type, source=LabelSource.RULE_KEYWORD),
            )
        values = sorted(table.pairs[pair].value_counts())
        matched_types: set[str] = set()
        for pi_type, pattern in patterns:
            if pi_type in matched_types:
                continue
            if any(pattern.fullmatch(value) for value in values):
                matched_types.add(pi_type)
                matches.add(
                    RuleMatch(pair=pair, pi_type=pi_type, source=LabelSource.RULE_REGEX),
                )
    logger.info(
        "✓ Rules matched %d pairs (%d matches)",
        len({match.pair for match in matches}),
        len(matches),
    )
    return matches


def is_propagatable(value: str) -> bool:
    """Return True for values distinctive enough to identify the same PI elsewhere."""
    if len(value) < MIN_PROPAGATION_LENGTH:
        return False
    return not (value.isdigit() and len(value) < MIN_NUMERIC_PROPAGATION_LENGTH)


def propagate(table: PairTable, seeds: set[PairKey]) -> set[PairKey]:
    """Extend seed pairs with pairs sharing a distinctive value for the same user.

    Newly found pairs seed further rounds until a fixpoint; the result always
    contains the seeds.
    """
    holders: dict[tuple[str, str], set[PairKey]] = {}
    for pair, stats in table.pairs.items():
        for user, values in stats.per_user_values.items():
            for value in values:
                if is_propagatable(value):
                    holders.setdefault((user, value), set()).add(pair)

    found = set(seeds)
    frontier = sorted(seed for seed in seeds if seed in table.pairs)
    rounds = 0
    while frontier:
        rounds += 1
        next_frontier: set[PairKey] = set()
        for pair in frontier:
            for user, values in table.pairs[pair].per_user_values.items():
                for value in values:
                    for other in holders.get((user, value), ()):
                        if other not in found:
                            next_frontier.add(other)
        found |= next_frontier
        frontier = sorted(next_frontier)
    logger.info(
        "✓ Propagation added %d pairs in %d rounds",
        len(found) - len(seeds),
        rounds,
    )
    return found


def rule_labels(table: PairTable, rules: RuleSet) -> dict[PairKey, RuleMatch]:
    """Apply rules, then propagation, keeping one match per pair.

    Keyword matches win over regex matches; propagated pairs inherit the PI type of
    the first seed (in pair order) they share a value with.
    """
    labels: dict[PairKey, RuleMatch] = {}
    ranked = sorted(
        apply_rules(table, rules),
        key=lambda m: (m.pair, m.source != LabelSource.RULE_KEYWORD, m.pi_type),
    )
    for match in ranked:
        labels.setdefault(match.pair, match)

    for pair in sorted(propagate(table, set(labels))):
        if pair in labels:
            continue
        pi_type = _inherited_type(table, pair, labels)
        labels[pair] = RuleMatch(pair=pair, pi_type=pi_type, source=LabelSource.PROPAGATED)
    return labels


def _inherited_type(
    table: PairTable,
    pair: PairKey,
    labels: dict[PairKey, RuleMatch],
) -> str:
    mine = {
        (user, value)
        for user, values in table.pairs[pair].per_user_values.items()
        for value in values
        if is_propagatable(value)
    }
    for seed in sorted(labels):
        stats = table.pairs.get(seed)
        if stats is None:
            continue
        for user, values in stats.per_user_values.items():
            if any((user, value) in mine for value in values):
                return labels[seed].pi_type
    return "unknown"


def load_overrides(path: Path) -> list[Override]:
    """Read a CSV of manual labels with columns app, key, label (pos|neg), pi_type.

    Raises:
        MissingInputError: If the file does not exist.
        DatasetError: If a label is not pos or neg.

    """
    frame = read_pair_frame(path, ["app", "key", "label"])
    overrides: list[Override] = []
    for row in frame.to_dict(orient="records"):
        raw_label = str(row["label"]).strip().lower()
        if raw_label not in {"pos", "neg"}:
            raise DatasetError(f"Override label must be pos or neg, got {row['label']!r}")
        pi_type = str(row.get("pi_type", "") or "").strip() or None
        overrides.append(
            Override(
                pair=PairKey(app_id=row["app"], key=row["key"]),
                label=Label.POSITIVE if raw_label == "pos" else Label.NEGATIVE,
                pi_type=pi_type,
            ),
        )
    logger.info("✓ Loaded %d overrides from %s", len(overrides), path)
    return overrides


def _index_overrides(overrides: list[Override]) -> dict[PairKey, Override]:
    indexed: dict[PairKey, Override] = {}
    for override in overrides:
        existing = indexed.get(override.pair)
        if existing is not None and existing.label != override.label:
            raise DatasetError(f"Conflicting overrides for {override.pair}")
        indexed.setdefault(override.pair, override)
    return indexed


def assemble_dataset(
    table: PairTable,
    matrix: dict[PairKey, FeatureVector],
    labels: dict[PairKey, RuleMatch],
    overrides: list[Override],
) -> tuple[list[LabeledSample], DatasetBalance]:
    """Combine rule labels and overrides into labeled samples.

    Overrides win over rules and propagation. Unlabeled pairs are left out.

    Raises:
        DatasetError: If overrides conflict or nothing is labeled.

    """
    indexed = _index_overrides(overrides)
    samples: dict[PairKey, LabeledSample] = {}
    for pair, match in labels.items():
        if pair in matrix:
            samples[pair] = LabeledSample(
                pair=pair,
                features=matrix[pair],
                label=Label.POSITIVE,
                source=match.source,
                pi_type=match.pi_type,
            )
    for pair, override in sorted(indexed.items()):
        if pair not in matrix or pair not in table.pairs:
            logger.warning("Override for unknown pair %s skipped", pair)
            continue
        inherited = labels[pair].pi_type if pair in labels else None
        samples[pair] = LabeledSample(
            pair=pair,
            features=matrix[pair],
            label=override.label,
            source=LabelSource.MANUAL,
            pi_type=override.pi_type or (
                inherited if override.label == Label.POSITIVE else None
            ),
        )
    if not samples:
        raise DatasetError("No pair was labeled by rules or overrides")

    ordered = [samples[pair] for pair in sorted(samples)]
    balance = DatasetBalance(
        positives=sum(1 for s in ordered if s.label == Label.POSITIVE),
        negatives=sum(1 for s in ordered if s.label == Label.NEGATIVE),
        by_source=dict(sorted(Counter(s.source.value for s in ordered).items())),
        by_pi_type=dict(
            sorted(Counter(s.pi_type for s in ordered if s.pi_type).items()),
        ),
    )
    logger.info(
        "✓ Assembled %d samples (%d positive, %d negative)",
        len(ordered),
        balance.positives,
        balance.negatives,
    )
    return ordered, balance
