import json

import pytest
from conftest import PAIR_AK, WECHAT_REQUEST, record, t1_records

from service.aggregate import (
    DEFAULT_VALUES,
    PairKey,
    PairTable,
    build_table,
    default_matcher,
    load_default_values,
    merge,
    prune,
)
from service.errors import EmptyTableError, MissingInputError, PairNotFoundError, SchemaVersionError
from service.ingest import TrafficRecord, parse_http_request


def test_single_record_table() -> None:
    table = build_table([record("u", "a", [("k", "v")])])

    assert table.pairs[PairKey(app_id="a", key="k")].per_user_values == {"u": {"v": 1}}
    assert table.apps["a"].total_requests == 1


def test_wechat_request_gives_three_pairs() -> None:
    parsed = parse_http_request(WECHAT_REQUEST)
    wechat = TrafficRecord(
        user_id="u1",
        app_id="WeChat",
        timestamp=0,
        domain=parsed.domain,
        kvs=parsed.kvs,
    )
    table = build_table([wechat])

    assert table.sorted_pairs() == [
        PairKey(app_id="WeChat", key="endDate"),
        PairKey(app_id="WeChat", key="imei"),
        PairKey(app_id="WeChat", key="startDate"),
    ]
    assert all(len(stats.value_counts()) == 1 for stats in table.pairs.values())


def test_t1_per_user_values(table_t1: PairTable) -> None:
    stats = table_t1.pairs[PAIR_AK]

    assert stats.per_user_values == {"u1": {"x1": 2, "x2": 1}, "u2": {"x1": 1}}
    assert stats.requests_with_key == 4
    assert stats.domains == {"d1"}
    assert table_t1.apps["B"].value_index["x1"].users == {"u1"}
    assert table_t1.apps["B"].domains == {"d1", "d2"}


def test_empty_corpus_is_an_error() -> None:
    with pytest.raises(EmptyTableError):
        build_table([])


def test_unknown_pair_lookup_is_an_error(table_t1: PairTable) -> None:
    with pytest.raises(PairNotFoundError):
        table_t1.get_pair(PairKey(app_id="A", key="missing"))


def test_defaults_count_presence_but_not_values() -> None:
    table = build_table(
        [
            record("u1", "a", [("k", "none")]),
            record("u1", "a", [("k", "NONE")]),
            record("u1", "a", [("k", "[imei]")]),
            record("u1", "a", [("k", "")]),
        ],
    )
    stats = table.pairs[PairKey(app_id="a", key="k")]

    assert stats.requests_with_key == 4
    assert stats.per_user_values == {"u1": {"[imei]": 1}}
    assert set(table.apps["a"].value_index) == {"[imei]"}


def test_default_matcher_is_case_insensitive_for_words_only() -> None:
    is_default = default_matcher({"none", "unknown", "-", "[IMEI]", "[MAC]"})

    assert is_default("Unknown")
    assert is_default("")
    assert is_default("[MAC]")
    assert not is_default("[mac]")
    assert not is_default("nonempty")


def test_duplicate_key_counts_presence_once_and_values_twice() -> None:
    table = build_table(
        [
            record("u1", "a", [("k", "v"), ("k", "v")]),
            record("u1", "a", [("k", "w")]),
        ],
    )
    stats = table.pairs[PairKey(app_id="a", key="k")]

    assert stats.requests_with_key == 2
    assert stats.per_user_values == {"u1": {"v": 2, "w": 1}}


def test_requests_with_key_sum_equals_key_incidences(corpus_t1: list[TrafficRecord]) -> None:
    corpus = [*corpus_t1, record("u3", "A", [("k", "x9"), ("k", "x8"), ("m", "z")])]
    table = build_table(corpus)

    incidences = sum(len(r.distinct_keys()) for r in corpus)
    assert sum(stats.requests_with_key for stats in table.pairs.values()) == incidences


def test_value_index_users_are_union_over_pairs() -> None:
    table = build_table(
        [
            record("u1", "a", [("k", "v"), ("m", "v")]),
            record("u2", "a", [("m", "v")]),
            record("u3", "a", [("k", "w")]),
        ],
    )
    for value, usage in table.apps["a"].value_index.items():
        holders = set()
        for pair, stats in table.pairs.items():
            if pair.app_id == "a":
                holders |= stats.value_users().get(value, set())
        assert usage.users == holders
    assert table.apps["a"].value_index["v"].count == 3


def _prune_fixture() -> list[TrafficRecord]:
    return [
        record("u1", "a", [("dflt", "none"), ("keep", "abc"), ("once", "abc"), ("gone", "-")]),
        record("u2", "a", [("dflt", "-"), ("keep", "abc")]),
        record("u2", "b", [("keep", "x")]),
    ]


def test_prune_removes_default_only_and_singleton_pairs() -> None:
    pruned, report = prune(build_table(_prune_fixture()))

    assert pruned.sorted_pairs() == [PairKey(app_id="a", key="keep")]
    assert report.default_only == 2
    assert report.singleton == 2
    assert report.retained == 1
    assert report.removed == 4


def test_prune_is_idempotent() -> None:
    once, _ = prune(build_table(_prune_fixture()))
    twice, report = prune(once)

    assert twice == once
    assert report.removed == 0


def test_prune_keeps_app_statistics() -> None:
    table = build_table(_prune_fixture())
    pruned, _ = prune(table)

    assert pruned.apps == table.apps


def test_merge_equals_single_pass_and_commutes(corpus_t1: list[TrafficRecord]) -> None:
    left = build_table(corpus_t1[:3])
    right = build_table(corpus_t1[3:])

    assert merge(left, right) == build_table(corpus_t1)
    assert merge(left, right) == merge(right, left)


def test_snapshot_round_trip(table_t1: PairTable) -> None:
    snapshot = json.loads(json.dumps(table_t1.to_snapshot()))

    assert PairTable.from_snapshot(snapshot) == table_t1


def test_snapshot_version_mismatch_is_rejected(table_t1: PairTable) -> None:
    snapshot = table_t1.to_snapshot()
    snapshot["schema_version"] = 99

    with pytest.raises(SchemaVersionError):
        PairTable.from_snapshot(snapshot)


def test_load_default_values(tmp_path) -> None:  # noqa: ANN001
    path = tmp_path / "defaults.txt"
    path.write_text("null\nN/A\n", encoding="utf-8")

    assert load_default_values(path) == {"null", "N/A", ""}
    with pytest.raises(MissingInputError):
        load_default_values(tmp_path / "absent.txt")
    assert load_default_values() == set(DEFAULT_VALUES)


def test_variant_corpus_changes_only_sender() -> None:
    table = build_table(t1_records(b_sender="u3"))

    assert table.apps["B"].value_index["x1"].users == {"u3"}
    assert table.apps["A"].users == {"u1", "u2"}
