"""Strategies for harvesting key-value pairs from HTTP request bodies."""

import json
import logging
import time
from abc import ABC, abstractmethod
from urllib.parse import parse_qsl

from pydantic import BaseModel

from service.ingest.traffic_record import KVPair, KVSource

logger = logging.getLogger(__name__)


class BodyParser(ABC):
    """Abstract base class for request body parsers."""

    def __str__(self) -> str:
        """Return the name of the body parser."""
        return self.__class__.__name__

    @abstractmethod
    def accepts(self, content_type: str, body: str) -> bool:
        """Return True when this parser should handle the body.

        Args:
            content_type (str): Lowercased Content-Type header value, may be empty.
            body (str): The raw request body.

        """
        ...

    @abstractmethod
    def parse_body(self, body: str) -> list[KVPair]:
        """Parse the body into key-value pairs.

        Raises:
            ValueError: If the body cannot be parsed by this parser.

        """
        ...


def parse_query_string(query: str, source: KVSource) -> list[KVPair]:
    """Split a urlencoded string into pairs, percent-decoding exactly once.

    Duplicate keys and empty values are preserved; pairs with an empty key are dropped.
    """
    return [
        KVPair(key=key, value=value, source=source)
        for key, value in parse_qsl(query, keep_blank_values=True)
        if key
    ]


class FormBodyParser(BodyParser):
    """Parser for application/x-www-form-urlencoded bodies."""

    def accepts(self, content_type: str, body: str) -> bool:
        """Accept declared form bodies, or undeclared bodies that look like one."""
        if "application/x-www-form-urlencoded" in content_type:
            return True
        stripped = body.strip()
        return not content_type and "=" in stripped and not stripped.startswith("{")

    def parse_body(self, body: str) -> list[KVPair]:
        """Parse a form-urlencoded body."""
        pairs = parse_query_string(body.strip(), KVSource.BODY_FORM)
        if body.strip() and not pairs:
            raise ValueError("form body carries no key-value pairs")
        return pairs


class JsonBodyParser(BodyParser):
    """Parser for JSON object bodies.

    Top-level string and number members become pairs. Object members are flattened one
    level with "parent.child" keys; anything nested deeper, arrays, booleans and nulls
    are ignored.
    """

    def accepts(self, content_type: str, body: str) -> bool:
        """Accept declared JSON bodies, or undeclared bodies that start with '{'."""
        if "json" in content_type:
            return True
        return not content_type and body.lstrip().startswith("{")

    def parse_body(self, body: str) -> list[KVPair]:
        """Parse a JSON body, keeping numbers in their original textual form."""
        document = json.loads(body, parse_int=str, parse_float=str)
        if not isinstance(document, dict):
            raise TypeError("JSON body is not an object")
        pairs: list[KVPair] = []
        for key, value in document.items():
            if isinstance(value, str) and key:
                pairs.append(KVPair(key=key, value=value, source=KVSource.BODY_JSON))
            elif isinstance(value, dict):
                pairs.extend(
                    KVPair(
                        key=f"{key}.{child_key}",
                        value=child_value,
                        source=KVSource.BODY_JSON,
                    )
                    for child_key, child_value in value.items()
                    if isinstance(child_value, str) and child_key
                )
        return pairs


class ParsingAudit(BaseModel):
    """A record of one body parsing attempt."""

    parser_name: str
    body_size: int
    pair_count: int
    parsed: bool
    processing_duration_seconds: float


class ParserTally(BaseModel):
    """Body parsing attempts of one parser over a corpus."""

    attempts: int = 0
    parsed: int = 0
    pair_count: int = 0
    processing_duration_seconds: float = 0.0

    def add(self, audit: ParsingAudit) -> None:
        """Count one parsing attempt."""
        self.attempts += 1
        self.parsed += int(audit.parsed)
        self.pair_count += audit.pair_count
        self.processing_duration_seconds += audit.processing_duration_seconds


class BodyParserChain:
    """Try body parsers in order and keep an audit of each attempt."""

    def __init__(self, parsers: list[BodyParser] | None = None) -> None:
        """Initialize the chain, defaulting to JSON then form parsing."""
        self.parsers = parsers if parsers is not None else [
            JsonBodyParser(),
            FormBodyParser(),
        ]

    def parse(
        self,
        body: str,
        content_type: str,
    ) -> tuple[list[KVPair] | None, list[ParsingAudit]]:
        """Parse the body with the first accepting parser.

        Args:
            body (str): The raw request body.
            content_type (str): The Content-Type header value, may be empty.

        Returns:
            tuple: The pairs (None when the body could not be parsed) and the audits.

        """
        audits: list[ParsingAudit] = []
        if not body.strip():
            return [], audits
        content_type = content_type.lower()
        for parser in self.parsers:
            if not parser.accepts(content_type, body):
                continue
            start = time.perf_counter()
            try:
                pairs = parser.parse_body(body)
            except (ValueError, TypeError) as e:
                logger.debug("%s rejected body: %s", parser, e)
                pairs = None
            audits.append(
                ParsingAudit(
                    parser_name=str(parser),
                    body_size=len(body),
                    pair_count=len(pairs) if pairs is not None else 0,
                    parsed=pairs is not None,
                    processing_duration_seconds=time.perf_counter() - start,
                ),
            )
            if pairs is not None:
                return pairs, audits
        return None, audits
