"""Blacklist building and leak matching."""

from service.blacklist.blacklist import (
    Blacklist,
    BlacklistEntry,
    BlacklistMeta,
    build_blacklist,
    load_blacklist,
    meta_path,
    save_blacklist,
)
from service.blacklist.leak_matcher import (
    LeakEvent,
    LeakGroup,
    LeakSummary,
    MatchResult,
    UnseenPair,
    iter_leak_events,
    match_stream,
    write_events_jsonl,
    write_summary_csv,
    write_unseen_pairs_jsonl,
)

__all__ = [
    "Blacklist",
    "BlacklistEntry",
    "BlacklistMeta",
    "LeakEvent",
    "LeakGroup",
    "LeakSummary",
    "MatchResult",
    "UnseenPair",
    "build_blacklist",
    "iter_leak_events",
    "load_blacklist",
    "match_stream",
    "meta_path",
    "save_blacklist",
    "write_events_jsonl",
    "write_summary_csv",
    "write_unseen_pairs_jsonl",
]
