"""Flag privacy leaks in traffic by exact blacklist matching."""

import json
import logging
from collections.abc import Iterable, Iterator
from pathlib import Path
from typing import IO

import pandas as pd
from pydantic import BaseModel

from service.aggregate.pair_table import PairKey
from service.aggregate.table_builder import default_matcher
from service.blacklist.blacklist import Blacklist
from service.ingest.traffic_record import TrafficRecord

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["group_by", "group", "leaks", "pairs", "apps"]
UNKNOWN_PI_TYPE = "unknown"


class LeakEvent(BaseModel):
    """A blacklisted key carrying a real value in one request."""

    user_id: str
    app_id: str
    timestamp: int
    domain: str
    key: str
    value: str

    def to_jsonl_dict(self) -> dict[str, str | int]:
        """Return the JSONL form of the event."""
        return {
            "user": self.user_id,
            "app": self.app_id,
            "ts": self.timestamp,
            "domain": self.domain,
            "key": self.key,
            "value": self.value,
        }


class LeakGroup(BaseModel):
    """Leak counts for one app, key or PI type."""

    leaks: int = 0
    pairs: int = 0
    apps: int = 0


class LeakSummary(BaseModel):
    """Aggregated leak counts of a matching run."""

    records_scanned: int = 0
    total_leaks: int = 0
    per_app: dict[str, LeakGroup] = {}
    per_key: dict[str, LeakGroup] = {}
    per_pi_type: dict[str, LeakGroup] = {}


class UnseenPair(BaseModel):
    """A pair observed during matching that the training table never held."""

    app: str
    key: str
    requests: int
    users: int


class MatchResult(BaseModel):
    """Events, summary and unseen pairs of a matching run."""

    events: list[LeakEvent]
    summary: LeakSummary
    unseen_pairs: list[UnseenPair] = []


def iter_leak_events(blacklist: Blacklist, records: Iterable[TrafficRecord]) -> Iterator[LeakEvent]:
    """Yield one event per (record, blacklisted key occurrence with a valid value)."""
    is_default = default_matcher(blacklist.default_values)
    for record in records:
        for kv in record.kvs:
            if is_default(kv.value):
                continue
            if PairKey(app_id=record.app_id, key=kv.key) not in blacklist:
                continue
            yield LeakEvent(
                user_id=record.user_id,
                app_id=record.app_id,
                timestamp=record.timestamp,
                domain=record.domain,
                key=kv.key,
                value=kv.value,
            )


def _groups(
    counts: dict[PairKey, int],
    group_of: dict[PairKey, str],
) -> dict[str, LeakGroup]:
    groups: dict[str, LeakGroup] = {}
    apps: dict[str, set[str]] = {}
    for pair, leaks in counts.items():
        name = group_of[pair]
        group = groups.setdefault(name, LeakGroup())
        group.leaks += leaks
        group.pairs += 1
        apps.setdefault(name, set()).add(pair.app_id)
    for name, group in groups.items():
        group.apps = len(apps[name])
    return {name: groups[name] for name in sorted(groups)}


def match_stream(
    blacklist: Blacklist,
    records: Iterable[TrafficRecord],
    pi_types: dict[PairKey, str] | None = None,
    known_pairs: set[PairKey] | None = None,
) -> MatchResult:
    """Match traffic against a blacklist and summarise the leaks.

    Args:
        blacklist (Blacklist): Pairs to flag.
        records (Iterable[TrafficRecord]): Parsed traffic.
        pi_types (dict[PairKey, str] | None): PI type per pair; falls back to the types
            stored in the blacklist.
        known_pairs (set[PairKey] | None): Pairs of the training table. When given, any
            other pair seen in the traffic is reported as unseen.

    Returns:
        MatchResult: Events in record order, a summary and the unseen pairs.

    """
    types = {**blacklist.pi_types, **(pi_types or {})}
    record_count = 0
    unseen: dict[PairKey, tuple[int, set[str]]] = {}

    def scanned() -> Iterator[TrafficRecord]:
        nonlocal record_count
        for record in records:
            record_count += 1
            if known_pairs is not None:
                for key in record.distinct_keys():
                    pair = PairKey(app_id=record.app_id, key=key)
                    if pair in known_pairs or pair in blacklist:
                        continue
                    requests, users = unseen.get(pair, (0, set()))
                    users.add(record.user_id)
                    unseen[pair] = (requests + 1, users)
            yield record

    events = list(iter_leak_events(blacklist, scanned()))
    per_pair: dict[PairKey, int] = {}
    for event in events:
        pair = PairKey(app_id=event.app_id, key=event.key)
        per_pair[pair] = per_pair.get(pair, 0) + 1

    summary = LeakSummary(
        records_scanned=record_count,
        total_leaks=len(events),
        per_app=_groups(per_pair, {pair: pair.app_id for pair in per_pair}),
        per_key=_groups(per_pair, {pair: pair.key for pair in per_pair}),
        per_pi_type=_groups(
            per_pair,
            {pair: types.get(pair, UNKNOWN_PI_TYPE) for pair in per_pair},
        ),
    )
    if not blacklist.entries:
        logger.warning("Blacklist is empty; no leaks can be flagged")
    logger.info(
        "✓ Scanned %d records: %d leaks in %d pairs",
        record_count,
        len(events),
        len(per_pair),
    )
    return MatchResult(
        events=events,
        summary=summary,
        unseen_pairs=[
            UnseenPair(app=pair.app_id, key=pair.key, requests=requests, users=len(users))
            for pair, (requests, users) in sorted(unseen.items())
        ],
    )


def write_events_jsonl(events: Iterable[LeakEvent], stream: IO[str]) -> int:
    """Write events as JSONL and return how many were written."""
    count = 0
    for event in events:
        stream.write(json.dumps(event.to_jsonl_dict(), ensure_ascii=False, separators=(",", ":")))
        stream.write("\n")
        count += 1
    return count


def write_unseen_pairs_jsonl(unseen_pairs: Iterable[UnseenPair], stream: IO[str]) -> int:
    """Append unseen pairs to a retraining side file as JSONL."""
    count = 0
    for unseen in unseen_pairs:
        stream.write(unseen.model_dump_json())
        stream.write("\n")
        count += 1
    return count


def write_summary_csv(summary: LeakSummary, path: Path) -> None:
    """Write the leak summary as CSV with columns group_by, group, leaks, pairs, apps."""
    rows = [
        {"group_by": group_by, "group": name, **group.model_dump()}
        for group_by, groups in (
            ("app", summary.per_app),
            ("key", summary.per_key),
            ("pi_type", summary.per_pi_type),
        )
        for name, group in groups.items()
    ]
    pd.DataFrame(rows, columns=SUMMARY_COLUMNS).to_csv(
        path,
        index=False,
        encoding="utf-8",
        lineterminator="\n",
    )
