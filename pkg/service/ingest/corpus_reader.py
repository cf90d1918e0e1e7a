"""Read and write JSONL traffic corpora."""

import json
import logging
from collections.abc import Iterable
from typing import IO

from pydantic import BaseModel, ValidationError

from service.errors import CorpusError, RequestParseError
from service.ingest.body_parser import BodyParserChain, ParserTally, ParsingAudit
from service.ingest.http_parser import parse_http_request
from service.ingest.traffic_record import KVPair, KVSource, TrafficRecord

logger = logging.getLogger(__name__)


class CorpusKV(BaseModel):
    """A key-value entry of the structured corpus schema."""

    k: str
    v: str = ""
    src: KVSource = KVSource.QUERY


class CorpusLine(BaseModel):
    """One corpus line, either structured (domain, path, kv) or raw HTTP text."""

    user: str
    app: str
    ts: int
    domain: str | None = None
    path: str = ""
    kv: list[CorpusKV] | None = None
    raw: str | None = None


class LineError(BaseModel):
    """A corpus line that was skipped."""

    line_number: int
    reason: str


class IngestResult(BaseModel):
    """Records parsed from a corpus together with the error tallies."""

    records: list[TrafficRecord] = []
    errors: list[LineError] = []
    unparsed_bodies: int = 0
    parser_tallies: dict[str, ParserTally] = {}

    @property
    def error_count(self) -> int:
        """Return the number of skipped lines."""
        return len(self.errors)


def _line_to_record(
    line: CorpusLine,
    chain: BodyParserChain,
) -> tuple[TrafficRecord, bool, list[ParsingAudit]]:
    """Convert a validated corpus line to a record, an unparsed-body flag and audits."""
    if line.raw is not None:
        parsed = parse_http_request(line.raw, chain)
        record = TrafficRecord(
            user_id=line.user,
            app_id=line.app,
            timestamp=line.ts,
            domain=parsed.domain,
            path=parsed.path,
            kvs=parsed.kvs,
        )
        return record, parsed.body_unparsed, parsed.audits
    if line.domain is None or line.kv is None:
        raise ValueError("structured line needs 'domain' and 'kv' (or a 'raw' request)")
    record = TrafficRecord(
        user_id=line.user,
        app_id=line.app,
        timestamp=line.ts,
        domain=line.domain,
        path=line.path,
        kvs=[KVPair(key=kv.k, value=kv.v, source=kv.src) for kv in line.kv],
    )
    return record, False, []


def parse_jsonl_lines(
    lines: Iterable[bytes | str],
    first_line_number: int = 1,
    chain: BodyParserChain | None = None,
) -> IngestResult:
    """Parse an iterable of corpus lines.

    Lines are independent, so shards of a corpus can be parsed separately and their
    results concatenated in shard order.
    """
    chain = chain or BodyParserChain()
    result = IngestResult()
    for line_number, line in enumerate(lines, start=first_line_number):
        try:
            text = line.decode("utf-8") if isinstance(line, bytes) else line
            if not text.strip():
                continue
            corpus_line = CorpusLine.model_validate_json(text)
            record, body_unparsed, audits = _line_to_record(corpus_line, chain)
        except (UnicodeDecodeError, ValidationError, RequestParseError, ValueError) as e:
            reason = str(e).splitlines()[0]
            result.errors.append(LineError(line_number=line_number, reason=reason))
            continue
        result.records.append(record)
        result.unparsed_bodies += int(body_unparsed)
        for audit in audits:
            result.parser_tallies.setdefault(audit.parser_name, ParserTally()).add(audit)
    return result


def parse_jsonl_corpus(stream: IO[bytes]) -> IngestResult:
    """Parse a newline-delimited JSON corpus.

    Args:
        stream (IO[bytes]): UTF-8 encoded corpus.

    Returns:
        IngestResult: One record per valid line in input order, plus the error tally.

    Raises:
        CorpusError: If the stream cannot be read.

    """
    try:
        result = parse_jsonl_lines(stream)
    except OSError as e:
        raise CorpusError(f"Unreadable corpus stream: {e}") from e
    if result.errors:
        logger.warning(
            "Skipped %d malformed corpus lines (first at line %d: %s)",
            result.error_count,
            result.errors[0].line_number,
            result.errors[0].reason,
        )
    logger.info("✓ Parsed %d traffic records", len(result.records))
    return result


def write_jsonl_corpus(records: Iterable[TrafficRecord], stream: IO[str]) -> int:
    """Write records using the structured corpus schema.

    Returns:
        int: The number of records written.

    """
    count = 0
    for record in records:
        stream.write(json.dumps(record.to_jsonl_dict(), ensure_ascii=False))
        stream.write("\n")
        count += 1
    return count
