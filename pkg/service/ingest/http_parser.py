"""Parse raw HTTP/1.x request text into key-value pairs."""

import logging
import re
from urllib.parse import urlsplit

from pydantic import BaseModel

from service.errors import RequestParseError
from service.ingest.body_parser import BodyParserChain, ParsingAudit, parse_query_string
from service.ingest.traffic_record import KVPair, KVSource

logger = logging.getLogger(__name__)

REQUEST_LINE_PATTERN = re.compile(r"^([A-Z]+)\s+(\S+)\s+HTTP/1\.[01]$")
HEAD_BODY_SEPARATOR = re.compile(r"\r?\n\r?\n")


class ParsedRequest(BaseModel):
    """The parts of a request the pipeline needs."""

    domain: str
    path: str
    kvs: list[KVPair] = []
    body_unparsed: bool = False
    audits: list[ParsingAudit] = []


def _split_head_and_body(raw: str) -> tuple[list[str], str]:
    parts = HEAD_BODY_SEPARATOR.split(raw, maxsplit=1)
    head = parts[0]
    body = parts[1] if len(parts) > 1 else ""
    return head.splitlines(), body


def _read_headers(lines: list[str]) -> dict[str, str]:
    headers: dict[str, str] = {}
    for line in lines:
        name, separator, value = line.partition(":")
        if separator:
            headers.setdefault(name.strip().lower(), value.strip())
    return headers


def _host_to_domain(host: str) -> str:
    """Strip any port and lowercase the host."""
    if host.startswith("["):
        return host.split("]", 1)[0].lstrip("[").lower()
    return host.rsplit(":", 1)[0].lower() if host.count(":") == 1 else host.lower()


def parse_http_request(
    raw: str,
    body_parsers: BodyParserChain | None = None,
) -> ParsedRequest:
    """Parse a raw HTTP/1.x request.

    Pairs are harvested from the URL query string and from a form-urlencoded or JSON
    object body. Headers and cookies are never harvested.

    Args:
        raw (str): Request line, headers and optional body.
        body_parsers (BodyParserChain | None): Body parsing strategies to use.

    Returns:
        ParsedRequest: Domain (from the Host header, lowercased), path and pairs.

    Raises:
        RequestParseError: If the request line or the Host header is missing.

    """
    lines, body = _split_head_and_body(raw.lstrip("\r\n"))
    if not lines:
        raise RequestParseError("empty request")
    match = REQUEST_LINE_PATTERN.match(lines[0].strip())
    if match is None:
        raise RequestParseError(f"missing or malformed request line: {lines[0][:80]!r}")
    target = match.group(2)
    headers = _read_headers(lines[1:])
    host = headers.get("host", "")
    if not host:
        raise RequestParseError("missing Host header")

    url = urlsplit(target)
    kvs = parse_query_string(url.query, KVSource.QUERY)

    chain = body_parsers or BodyParserChain()
    body_pairs, audits = chain.parse(body, headers.get("content-type", ""))
    if body_pairs is None:
        logger.debug("Unparsed body of %d bytes for %s", len(body), host)
    else:
        kvs.extend(body_pairs)

    return ParsedRequest(
        domain=_host_to_domain(host),
        path=url.path or "/",
        kvs=kvs,
        body_unparsed=body_pairs is None,
        audits=audits,
    )
