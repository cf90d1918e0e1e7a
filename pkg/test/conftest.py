"""Shared fixtures: the hand-counted corpus T1 and the WeChat request."""

import pytest

from service.aggregate import PairKey, PairTable, build_table
from service.ingest import KVPair, TrafficRecord

WECHAT_REQUEST = (
    "GET /cgi-bin/micromsg-bin/getreport?imei=HJS5T19626000575&startDate=20200526"
    "&endDate=20200527 HTTP/1.1\r\n"
    "Host: szextshort.weixin.qq.com\r\n"
    "User-Agent: MicroMessenger Client\r\n"
    "Accept: */*\r\n"
    "Cookie: sid=should-not-be-harvested\r\n"
    "\r\n"
)

PAIR_AK = PairKey(app_id="A", key="k")
PAIR_BQ = PairKey(app_id="B", key="q")


def record(  # noqa: PLR0913
    user: str,
    app: str,
    pairs: list[tuple[str, str]],
    domain: str = "d1",
    ts: int = 0,
    path: str = "/",
) -> TrafficRecord:
    """Build a record from (key, value) tuples."""
    return TrafficRecord(
        user_id=user,
        app_id=app,
        timestamp=ts,
        domain=domain,
        path=path,
        kvs=[KVPair(key=key, value=value) for key, value in pairs],
    )


def t1_records(b_sender: str = "u1") -> list[TrafficRecord]:
    """Six records over apps A and B; B reuses x1 (sent by b_sender) under key q."""
    return [
        record("u1", "A", [("k", "x1")], ts=1),
        record("u1", "A", [("k", "x1")], ts=2),
        record("u1", "A", [("k", "x2")], ts=3),
        record("u2", "A", [("k", "x1")], ts=4),
        record(b_sender, "B", [("q", "x1")], ts=5),
        record("u2", "B", [("q", "y1")], domain="d2", ts=6),
    ]


@pytest.fixture
def corpus_t1() -> list[TrafficRecord]:
    return t1_records()


@pytest.fixture
def table_t1(corpus_t1: list[TrafficRecord]) -> PairTable:
    return build_table(corpus_t1)


@pytest.fixture
def wechat_request() -> str:
    return WECHAT_REQUEST
