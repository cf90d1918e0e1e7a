"""Build, merge and prune pair tables."""

import logging
from collections.abc import Callable, Iterable
from importlib.resources import files
from pathlib import Path

from pydantic import BaseModel

from service.aggregate.pair_table import (
    DEFAULT_VALUES,
    AppStats,
    PairKey,
    PairStats,
    PairTable,
    ValueUsage,
)
from service.errors import EmptyTableError, MissingInputError
from service.ingest.traffic_record import TrafficRecord

logger = logging.getLogger(__name__)


class PruneReport(BaseModel):
    """Counts of pairs removed by prune, by reason."""

    default_only: int = 0
    singleton: int = 0
    retained: int = 0

    @property
    def removed(self) -> int:
        """Return the total number of removed pairs."""
        return self.default_only + self.singleton


def default_matcher(default_values: Iterable[str]) -> Callable[[str], bool]:
    """Return a predicate telling whether a value is empty or a default.

    Bracketed tokens such as "[IMEI]" match exactly; word defaults match regardless of
    case.
    """
    exact = {value for value in default_values if value.startswith("[")}
    words = {value.lower() for value in default_values if not value.startswith("[")}

    def is_default(value: str) -> bool:
        return not value or value in exact or value.lower() in words

    return is_default


def load_default_values(path: Path | None = None) -> set[str]:
    """Read a default-value list, one value per line, or the shipped list when path is None.

    Only the line terminator is stripped, so whitespace-only defaults survive. A blank
    line declares the empty string, which is always treated as a default anyway.

    Raises:
        MissingInputError: If the file does not exist.

    """
    if path is None:
        source = files("service.resources").joinpath("default_values.txt")
    elif path.exists():
        source = path
    else:
        raise MissingInputError(f"Default value file not found: {path}")
    values = {line.rstrip("\r\n") for line in source.read_text(encoding="utf-8").splitlines()}
    values.add("")
    logger.info("✓ Loaded %d default values from %s", len(values), source)
    return values


def build_table(
    records: Iterable[TrafficRecord],
    default_values: Iterable[str] = DEFAULT_VALUES,
) -> PairTable:
    """Aggregate records into a pair table in a single pass.

    Args:
        records (Iterable[TrafficRecord]): Parsed traffic.
        default_values (Iterable[str]): Values treated as absent.

    Returns:
        PairTable: The aggregated statistics.

    Raises:
        EmptyTableError: If there are no records.

    """
    defaults = set(default_values) | {""}
    is_default = default_matcher(defaults)
    pair_stats: dict[tuple[str, str], PairStats] = {}
    apps: dict[str, AppStats] = {}
    record_count = 0

    for record in records:
        record_count += 1
        app = apps.get(record.app_id)
        if app is None:
            app = apps[record.app_id] = AppStats()
        app.total_requests += 1
        app.users.add(record.user_id)
        app.domains.add(record.domain)

        seen_in_record: set[str] = set()
        for kv in record.kvs:
            stats = pair_stats.get((record.app_id, kv.key))
            if stats is None:
                stats = pair_stats[record.app_id, kv.key] = PairStats()
            if kv.key not in seen_in_record:
                seen_in_record.add(kv.key)
                stats.requests_with_key += 1
                stats.domains.add(record.domain)
                app.keys.add(kv.key)
            if is_default(kv.value):
                continue
            user_values = stats.per_user_values.setdefault(record.user_id, {})
            user_values[kv.value] = user_values.get(kv.value, 0) + 1
            usage = app.value_index.get(kv.value)
            if usage is None:
                usage = app.value_index[kv.value] = ValueUsage()
            usage.users.add(record.user_id)
            usage.count += 1

    if record_count == 0:
        raise EmptyTableError("Cannot build a pair table from an empty corpus")
    pairs = {
        PairKey(app_id=app_id, key=key): stats
        for (app_id, key), stats in pair_stats.items()
    }
    logger.info(
        "✓ Aggregated %d records into %d pairs across %d apps",
        record_count,
        len(pairs),
        len(apps),
    )
    return PairTable(pairs=pairs, apps=apps, default_values=defaults)


def _merge_pair(left: PairStats, right: PairStats) -> PairStats:
    per_user: dict[str, dict[str, int]] = {}
    for source in (left.per_user_values, right.per_user_values):
        for user, values in source.items():
            merged = per_user.setdefault(user, {})
            for value, count in values.items():
                merged[value] = merged.get(value, 0) + count
    return PairStats(
        per_user_values=per_user,
        domains=left.domains | right.domains,
        requests_with_key=left.requests_with_key + right.requests_with_key,
    )


def _merge_app(left: AppStats, right: AppStats) -> AppStats:
    value_index: dict[str, ValueUsage] = {}
    for source in (left.value_index, right.value_index):
        for value, usage in source.items():
            merged = value_index.get(value)
            if merged is None:
                merged = value_index[value] = ValueUsage()
            merged.users |= usage.users
            merged.count += usage.count
    return AppStats(
        total_requests=left.total_requests + right.total_requests,
        users=left.users | right.users,
        keys=left.keys | right.keys,
        domains=left.domains | right.domains,
        value_index=value_index,
    )


def merge(left: PairTable, right: PairTable) -> PairTable:
    """Merge two tables built from disjoint shards of one corpus.

    Every field is a counter or a set, so merge(a, b) equals merge(b, a).
    """
    pairs = {
        pair: _merge_pair(
            left.pairs.get(pair, PairStats()),
            right.pairs.get(pair, PairStats()),
        )
        for pair in left.pairs.keys() | right.pairs.keys()
    }
    apps = {
        app_id: _merge_app(
            left.apps.get(app_id, AppStats()),
            right.apps.get(app_id, AppStats()),
        )
        for app_id in left.apps.keys() | right.apps.keys()
    }
    return PairTable(
        pairs=pairs,
        apps=apps,
        default_values=left.default_values | right.default_values,
    )


def prune(table: PairTable) -> tuple[PairTable, PruneReport]:
    """Drop pairs with only default or empty values, and pairs seen in one request.

    App statistics are left untouched so global features still see every key and
    value of the corpus.

    Returns:
        tuple[PairTable, PruneReport]: The pruned table and removal counts.

    """
    report = PruneReport()
    kept: dict[PairKey, PairStats] = {}
    for pair, stats in table.pairs.items():
        if not stats.per_user_values:
            report.default_only += 1
        elif stats.requests_with_key <= 1:
            report.singleton += 1
        else:
            kept[pair] = stats
    report.retained = len(kept)
    logger.info(
        "✓ Pruned %d pairs (%d default-only, %d singleton), %d retained",
        report.removed,
        report.default_only,
        report.singleton,
        report.retained,
    )
    return (
        PairTable(pairs=kept, apps=table.apps, default_values=table.default_values),
        report,
    )
