import io
import json
from urllib.parse import parse_qsl, unquote_plus

import pytest

from service.errors import RequestParseError
from service.ingest import (
    KVPair,
    KVSource,
    parse_http_request,
    parse_jsonl_corpus,
    write_jsonl_corpus,
)
from service.ingest.body_parser import BodyParserChain, parse_query_string


def _jsonl(*lines: dict | str) -> io.BytesIO:
    text = "\n".join(line if isinstance(line, str) else json.dumps(line) for line in lines)
    return io.BytesIO(text.encode("utf-8"))


def _pairs(kvs: list[KVPair]) -> list[tuple[str, str]]:
    return [(kv.key, kv.value) for kv in kvs]


def test_wechat_request_yields_three_query_pairs(wechat_request: str) -> None:
    parsed = parse_http_request(wechat_request)

    assert parsed.domain == "szextshort.weixin.qq.com"
    assert parsed.path == "/cgi-bin/micromsg-bin/getreport"
    assert _pairs(parsed.kvs) == [
        ("imei", "HJS5T19626000575"),
        ("startDate", "20200526"),
        ("endDate", "20200527"),
    ]
    assert all(kv.source == KVSource.QUERY for kv in parsed.kvs)


def test_request_without_query_or_body_has_no_pairs() -> None:
    parsed = parse_http_request("GET /p HTTP/1.1\r\nHost: x.com\r\n\r\n")

    assert parsed.kvs == []
    assert parsed.domain == "x.com"
    assert not parsed.body_unparsed


def test_query_keeps_duplicates_and_empty_values() -> None:
    parsed = parse_http_request("GET /p?a=1&b=&a=2 HTTP/1.1\r\nHost: x.com\r\n\r\n")

    assert _pairs(parsed.kvs) == [("a", "1"), ("b", ""), ("a", "2")]
    assert _pairs(parsed.kvs) == parse_qsl("a=1&b=&a=2", keep_blank_values=True)


def test_percent_decoding_is_applied_once() -> None:
    pairs = parse_query_string("mail=a%40b.com&raw=%2541", KVSource.QUERY)

    assert _pairs(pairs) == [("mail", "a@b.com"), ("raw", "%41")]


def test_host_port_is_stripped_and_domain_lowercased() -> None:
    parsed = parse_http_request("GET / HTTP/1.1\r\nHost: API.Example.COM:8080\r\n\r\n")

    assert parsed.domain == "api.example.com"


def test_form_body_pairs_follow_query_pairs() -> None:
    raw = (
        "POST /submit?v=3 HTTP/1.1\r\n"
        "Host: x.com\r\n"
        "Content-Type: application/x-www-form-urlencoded\r\n"
        "\r\n"
        "imsi=460001234567890&city=S%C3%A3o+Paulo"
    )
    parsed = parse_http_request(raw)

    assert _pairs(parsed.kvs) == [
        ("v", "3"),
        ("imsi", "460001234567890"),
        ("city", "São Paulo"),
    ]
    assert [kv.source for kv in parsed.kvs] == [
        KVSource.QUERY,
        KVSource.BODY_FORM,
        KVSource.BODY_FORM,
    ]


def test_json_body_is_flattened_one_level() -> None:
    body = json.dumps(
        {
            "uid": "abc123",
            "n": 42,
            "ratio": 0.5,
            "flag": True,
            "none": None,
            "list": ["x"],
            "dev": {"mac": "ab:cd:ef:01:23:45", "deep": {"ignored": "1"}},
        },
    )
    raw = f"POST /j HTTP/1.1\r\nHost: x.com\r\nContent-Type: application/json\r\n\r\n{body}"
    parsed = parse_http_request(raw)

    assert _pairs(parsed.kvs) == [
        ("uid", "abc123"),
        ("n", "42"),
        ("ratio", "0.5"),
        ("dev.mac", "ab:cd:ef:01:23:45"),
    ]


def test_unparseable_body_keeps_query_pairs() -> None:
    raw = (
        "POST /j?a=1 HTTP/1.1\r\nHost: x.com\r\nContent-Type: application/json\r\n\r\n"
        "{not json"
    )
    parsed = parse_http_request(raw)

    assert _pairs(parsed.kvs) == [("a", "1")]
    assert parsed.body_unparsed
    assert parsed.audits[0].parser_name == "JsonBodyParser"
    assert not parsed.audits[0].parsed


def test_body_parser_chain_sniffs_undeclared_bodies() -> None:
    pairs, audits = BodyParserChain().parse("a=1&b=2", "")

    assert _pairs(pairs) == [("a", "1"), ("b", "2")]
    assert [audit.parser_name for audit in audits] == ["FormBodyParser"]


@pytest.mark.parametrize(
    "raw",
    [
        "Host: x.com\r\n\r\n",
        "GET /p HTTP/1.1\r\nAccept: */*\r\n\r\n",
        "",
    ],
)
def test_missing_request_line_or_host_is_an_error(raw: str) -> None:
    with pytest.raises(RequestParseError):
        parse_http_request(raw)


def test_emitted_keys_occur_in_decoded_request(wechat_request: str) -> None:
    raw = wechat_request.replace("startDate", "start%20Date")
    decoded = unquote_plus(raw)

    for kv in parse_http_request(raw).kvs:
        assert kv.key in decoded
        assert kv.value in decoded


def test_corpus_line_with_single_pair() -> None:
    stream = _jsonl(
        {"user": "u1", "app": "a1", "ts": 1, "domain": "d.com", "path": "/",
         "kv": [{"k": "k", "v": "v", "src": "query"}]},
    )
    result = parse_jsonl_corpus(stream)

    assert result.error_count == 0
    assert len(result.records) == 1
    assert _pairs(result.records[0].kvs) == [("k", "v")]


def test_empty_corpus_has_no_records_and_no_errors() -> None:
    result = parse_jsonl_corpus(io.BytesIO(b""))

    assert result.records == []
    assert result.error_count == 0


def test_malformed_lines_are_counted() -> None:
    good = {"user": "u1", "app": "a1", "ts": 1, "domain": "d.com", "kv": []}
    stream = _jsonl(
        good,
        {**good, "ts": 2},
        {"user": "u1", "ts": 3, "domain": "d.com", "kv": []},
        {**good, "ts": 4},
    )
    result = parse_jsonl_corpus(stream)

    assert [r.timestamp for r in result.records] == [1, 2, 4]
    assert result.error_count == 1
    assert result.errors[0].line_number == 3


def test_invalid_utf8_line_is_skipped() -> None:
    good = json.dumps({"user": "u1", "app": "a1", "ts": 1, "domain": "d.com", "kv": []})
    bad = b'{"user": "u1", "app": "a1", "ts": 2, "domain": "d.com", "kv": [{"k": "k", "v": "\xff\xfe"}]}'
    stream = io.BytesIO(good.encode() + b"\n" + bad + b"\n" + good.encode() + b"\n")

    result = parse_jsonl_corpus(stream)

    assert len(result.records) == 2
    assert result.error_count == 1
    assert result.errors[0].line_number == 2


def test_body_parsing_is_tallied_per_parser() -> None:
    head = "POST /p HTTP/1.1\r\nHost: x.com\r\nContent-Type: application/json\r\n\r\n"
    stream = _jsonl(
        {"user": "u1", "app": "a1", "ts": 1, "raw": head + '{"uid": "abc", "n": 1}'},
        {"user": "u1", "app": "a1", "ts": 2, "raw": head + "{broken"},
        {"user": "u1", "app": "a1", "ts": 3, "raw": "GET /q?a=1 HTTP/1.1\r\nHost: x.com\r\n\r\n"},
    )

    result = parse_jsonl_corpus(stream)

    assert result.unparsed_bodies == 1
    tally = result.parser_tallies["JsonBodyParser"]
    assert (tally.attempts, tally.parsed, tally.pair_count) == (2, 1, 2)
    assert set(result.parser_tallies) == {"JsonBodyParser"}


def test_raw_corpus_lines_are_parsed(wechat_request: str) -> None:
    stream = _jsonl({"user": "u1", "app": "WeChat", "ts": 7, "raw": wechat_request}, "not json")
    result = parse_jsonl_corpus(stream)

    assert result.error_count == 1
    record = result.records[0]
    assert record.app_id == "WeChat"
    assert record.domain == "szextshort.weixin.qq.com"
    assert [kv.key for kv in record.kvs] == ["imei", "startDate", "endDate"]


def test_records_survive_a_jsonl_round_trip(wechat_request: str) -> None:
    first = parse_jsonl_corpus(
        _jsonl({"user": "u1", "app": "WeChat", "ts": 7, "raw": wechat_request}),
    ).records
    buffer = io.StringIO()
    assert write_jsonl_corpus(first, buffer) == 1

    second = parse_jsonl_corpus(io.BytesIO(buffer.getvalue().encode("utf-8"))).records

    assert second == first
