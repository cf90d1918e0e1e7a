"""Rule-based labeling services."""

from service.labeling.dataset_store import read_dataset_csv, write_dataset_csv
from service.labeling.labeler import (
    DatasetBalance,
    Label,
    LabeledSample,
    LabelSource,
    Override,
    RuleMatch,
    apply_rules,
    assemble_dataset,
    is_propagatable,
    load_overrides,
    propagate,
    rule_labels,
)
from service.labeling.rule_set import RuleSet, load_rule_set

__all__ = [
    "DatasetBalance",
    "Label",
    "LabelSource",
    "LabeledSample",
    "Override",
    "RuleMatch",
    "RuleSet",
    "apply_rules",
    "assemble_dataset",
    "is_propagatable",
    "load_overrides",
    "load_rule_set",
    "propagate",
    "read_dataset_csv",
    "rule_labels",
    "write_dataset_csv",
]
