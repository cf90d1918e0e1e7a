"""Traffic ingestion services."""

from service.ingest.corpus_reader import (
    IngestResult,
    LineError,
    parse_jsonl_corpus,
    parse_jsonl_lines,
    write_jsonl_corpus,
)
from service.ingest.http_parser import ParsedRequest, parse_http_request
from service.ingest.traffic_record import KVPair, KVSource, TrafficRecord

__all__ = [
    "IngestResult",
    "KVPair",
    "KVSource",
    "LineError",
    "ParsedRequest",
    "TrafficRecord",
    "parse_http_request",
    "parse_jsonl_corpus",
    "parse_jsonl_lines",
    "write_jsonl_corpus",
]
