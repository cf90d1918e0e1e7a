"""Pair table aggregation services."""

from service.aggregate.pair_table import (
    DEFAULT_VALUES,
    AppStats,
    PairKey,
    PairStats,
    PairTable,
    ValueUsage,
)
from service.aggregate.table_builder import (
    PruneReport,
    build_table,
    default_matcher,
    load_default_values,
    merge,
    prune,
)

__all__ = [
    "DEFAULT_VALUES",
    "AppStats",
    "PairKey",
    "PairStats",
    "PairTable",
    "PruneReport",
    "ValueUsage",
    "build_table",
    "default_matcher",
    "load_default_values",
    "merge",
    "prune",
]
