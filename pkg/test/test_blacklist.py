import io
import json
import logging

import pandas as pd
import pytest
from conftest import record

from service.aggregate import PairKey
from service.blacklist import (
    Blacklist,
    build_blacklist,
    load_blacklist,
    match_stream,
    meta_path,
    save_blacklist,
    write_events_jsonl,
    write_summary_csv,
    write_unseen_pairs_jsonl,
)
from service.detector import PredictedLabel, Prediction
from service.errors import MissingInputError, ModelError, SchemaVersionError
from service.ingest import TrafficRecord, parse_http_request

WECHAT = PairKey(app_id="com.tencent.mm", key="imei")


def _prediction(app: str, key: str, label: PredictedLabel) -> Prediction:
    return Prediction(
        pair=PairKey(app_id=app, key=key),
        probability_positive=1.0 if label == PredictedLabel.POSITIVE else 0.5,
        label=label,
        threshold=0.75,
    )


def _wechat_record(raw: str, user: str = "u1", ts: int = 1590969600000) -> TrafficRecord:
    parsed = parse_http_request(raw)
    return TrafficRecord(
        user_id=user,
        app_id=WECHAT.app_id,
        timestamp=ts,
        domain=parsed.domain,
        path=parsed.path,
        kvs=parsed.kvs,
    )


def test_wechat_imei_is_flagged(wechat_request: str) -> None:
    blacklist = Blacklist(entries={WECHAT}, pi_types={WECHAT: "Device Identifier"})

    result = match_stream(blacklist, [_wechat_record(wechat_request)])

    assert len(result.events) == 1
    event = result.events[0]
    assert event.to_jsonl_dict() == {
        "user": "u1",
        "app": "com.tencent.mm",
        "ts": 1590969600000,
        "domain": "szextshort.weixin.qq.com",
        "key": "imei",
        "value": "HJS5T19626000575",
    }
    assert result.summary.total_leaks == 1
    assert result.summary.per_pi_type["Device Identifier"].leaks == 1


def test_default_value_is_not_a_leak(wechat_request: str) -> None:
    raw = wechat_request.replace("HJS5T19626000575", "none")
    blacklist = Blacklist(entries={WECHAT})

    result = match_stream(blacklist, [_wechat_record(raw)])

    assert result.events == []
    assert result.summary.records_scanned == 1


def test_matching_is_exact_on_app_and_key() -> None:
    blacklist = Blacklist(entries={PairKey(app_id="A", key="imei")})
    records = [
        record("u1", "A", [("IMEI", "123456789012345")]),
        record("u1", "B", [("imei", "123456789012345")]),
        record("u1", "A", [("imei", "123456789012345"), ("imei", "123456789012345")]),
    ]

    result = match_stream(blacklist, records)

    assert len(result.events) == 2
    assert {event.app_id for event in result.events} == {"A"}


def test_events_keep_record_order() -> None:
    blacklist = Blacklist(entries={PairKey(app_id="A", key="k")})
    records = [record(f"u{i}", "A", [("k", f"v{i}")], ts=i) for i in range(5)]

    result = match_stream(blacklist, records)

    assert [event.timestamp for event in result.events] == list(range(5))


def test_duplicate_predictions_collapse() -> None:
    predictions = [
        _prediction("A", "imei", PredictedLabel.POSITIVE),
        _prediction("A", "imei", PredictedLabel.POSITIVE),
        _prediction("A", "ts", PredictedLabel.NEGATIVE),
        _prediction("B", "zx1", PredictedLabel.REJECTED),
    ]

    blacklist = build_blacklist(predictions, 0.75, built_from="model.json")

    assert blacklist.entries == {PairKey(app_id="A", key="imei")}
    assert blacklist.threshold == 0.75


def test_positives_below_the_blacklist_threshold_are_left_out() -> None:
    lenient = [
        Prediction(
            pair=PairKey(app_id="A", key=key),
            probability_positive=p,
            label=PredictedLabel.POSITIVE,
            threshold=0.5,
        )
        for key, p in (("imei", 0.9), ("zx1", 0.6), ("tie", 0.75))
    ]

    assert build_blacklist(lenient, 0.75).entries == {
        PairKey(app_id="A", key="imei"),
        PairKey(app_id="A", key="tie"),
    }
    assert len(build_blacklist(lenient, 0.5).entries) == 3


def test_all_rejected_gives_empty_blacklist(caplog: pytest.LogCaptureFixture) -> None:
    predictions = [_prediction("A", f"k{i}", PredictedLabel.REJECTED) for i in range(3)]

    with caplog.at_level(logging.WARNING):
        blacklist = build_blacklist(predictions, 0.75)
        result = match_stream(blacklist, [record("u1", "A", [("k0", "secret")])])

    assert blacklist.entries == set()
    assert result.events == []
    assert "empty" in caplog.text


def test_summary_groups_by_app_key_and_type() -> None:
    imei_a = PairKey(app_id="A", key="imei")
    imei_b = PairKey(app_id="B", key="imei")
    mail_a = PairKey(app_id="A", key="mail")
    blacklist = Blacklist(
        entries={imei_a, imei_b, mail_a},
        pi_types={imei_a: "Device Identifier", imei_b: "Device Identifier"},
    )
    records = [
        record("u1", "A", [("imei", "1"), ("mail", "a@b.cn")]),
        record("u2", "A", [("imei", "2")]),
        record("u1", "B", [("imei", "1")]),
    ]

    summary = match_stream(blacklist, records).summary

    assert summary.total_leaks == 4
    assert summary.per_app["A"].leaks == 3
    assert summary.per_app["A"].pairs == 2
    assert summary.per_key["imei"].apps == 2
    assert summary.per_pi_type["Device Identifier"].leaks == 3
    assert summary.per_pi_type["unknown"].leaks == 1
    assert sum(group.leaks for group in summary.per_app.values()) == summary.total_leaks


def test_unseen_pairs_are_reported() -> None:
    known = {PairKey(app_id="A", key="k")}
    blacklist = Blacklist(entries={PairKey(app_id="A", key="imei")})
    records = [
        record("u1", "A", [("k", "1"), ("new", "x"), ("imei", "1")]),
        record("u2", "A", [("new", "y"), ("new", "z")]),
    ]

    unseen = match_stream(blacklist, records, known_pairs=known).unseen_pairs

    assert [(pair.app, pair.key, pair.requests, pair.users) for pair in unseen] == [
        ("A", "new", 2, 2),
    ]
    stream = io.StringIO()
    assert write_unseen_pairs_jsonl(unseen, stream) == 1
    assert json.loads(stream.getvalue()) == {"app": "A", "key": "new", "requests": 2, "users": 2}


def test_events_and_summary_files(tmp_path) -> None:  # noqa: ANN001
    blacklist = Blacklist(entries={PairKey(app_id="A", key="k")})
    result = match_stream(blacklist, [record("u1", "A", [("k", "v")], ts=9)])
    stream = io.StringIO()

    assert write_events_jsonl(result.events, stream) == 1
    assert stream.getvalue() == (
        '{"user":"u1","app":"A","ts":9,"domain":"d1","key":"k","value":"v"}\n'
    )
    write_summary_csv(result.summary, tmp_path / "summary.csv")
    frame = pd.read_csv(tmp_path / "summary.csv")
    assert list(frame.columns) == ["group_by", "group", "leaks", "pairs", "apps"]
    assert set(frame["group_by"]) == {"app", "key", "pi_type"}


def test_blacklist_file_round_trip(tmp_path) -> None:  # noqa: ANN001
    pair = PairKey(app_id="A", key="imei")
    blacklist = Blacklist(
        entries={pair, PairKey(app_id="B", key="zx1")},
        default_values={"none", "[IMEI]"},
        built_from="model.json",
        threshold=0.75,
        pi_types={pair: "Device Identifier"},
    )
    path = tmp_path / "blacklist.json"
    sidecar = save_blacklist(blacklist, path)

    loaded = load_blacklist(path)

    assert loaded == blacklist
    assert sidecar == meta_path(path) == tmp_path / "blacklist_meta.json"
    assert json.loads(path.read_text(encoding="utf-8")) == [
        {"app": "A", "key": "imei"},
        {"app": "B", "key": "zx1"},
    ]
    meta = json.loads(sidecar.read_text(encoding="utf-8"))
    assert meta["schema_version"] == 1
    assert meta["pi_types"] == [{"app": "A", "key": "imei", "pi_type": "Device Identifier"}]


def test_blacklist_without_metadata_uses_shipped_defaults(tmp_path) -> None:  # noqa: ANN001
    path = tmp_path / "blacklist.json"
    path.write_text('[{"app": "A", "key": "imei"}]', encoding="utf-8")

    loaded = load_blacklist(path)

    assert loaded.entries == {PairKey(app_id="A", key="imei")}
    assert "none" in loaded.default_values
    assert loaded.pi_types == {}


def test_blacklist_file_errors(tmp_path) -> None:  # noqa: ANN001
    stale = tmp_path / "stale.json"
    stale.write_text("[]", encoding="utf-8")
    meta_path(stale).write_text('{"schema_version": 2}', encoding="utf-8")
    not_a_list = tmp_path / "object.json"
    not_a_list.write_text('{"schema_version": 1, "entries": []}', encoding="utf-8")
    missing_key = tmp_path / "missing_key.json"
    missing_key.write_text('[{"app": "A"}]', encoding="utf-8")

    with pytest.raises(MissingInputError):
        load_blacklist(tmp_path / "absent.json")
    with pytest.raises(SchemaVersionError):
        load_blacklist(stale)
    with pytest.raises(ModelError):
        load_blacklist(not_a_list)
    with pytest.raises(ModelError):
        load_blacklist(missing_key)
