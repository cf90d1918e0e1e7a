import io
from collections import defaultdict

import pytest
from pydantic import ValidationError

from service.aggregate import build_table, prune
from service.blacklist import Blacklist, match_stream
from service.errors import ConfigError
from service.ingest import parse_jsonl_corpus
from service.labeling import Label
from service.synth import (
    KeyNaming,
    NonPiKind,
    PiKind,
    PiPlant,
    SynthConfig,
    generate,
    ground_truth_blacklist_pairs,
    read_ground_truth_csv,
    write_ground_truth_csv,
)
from service.synth.generator import LOCALES, PLANTED_DEFAULTS, RESERVED_KEY_NAMES, TrafficGenerator

SMALL = SynthConfig(seed=11, n_users=12, n_apps=10, requests_per_app_user=(3, 8))


def _generate(config: SynthConfig = SMALL):  # noqa: ANN202
    corpus = io.StringIO()
    result = generate(config, corpus)
    records = parse_jsonl_corpus(io.BytesIO(corpus.getvalue().encode("utf-8"))).records
    return corpus.getvalue(), result, records


def test_same_config_gives_same_bytes() -> None:
    first, first_result, _ = _generate()
    second, second_result, _ = _generate()

    assert first == second
    assert first_result == second_result
    assert _generate(SMALL.model_copy(update={"seed": 12}))[0] != first


def test_records_parse_without_errors() -> None:
    text, result, records = _generate()

    parsed = parse_jsonl_corpus(io.BytesIO(text.encode("utf-8")))

    assert parsed.error_count == 0
    assert len(records) == result.record_count == text.count("\n")


def test_infeasible_coverage_is_rejected() -> None:
    config = SynthConfig(n_users=5, n_apps=2)

    with pytest.raises(ConfigError):
        generate(config, io.StringIO())


def test_inverted_request_range_is_rejected() -> None:
    with pytest.raises(ValidationError):
        SynthConfig(requests_per_app_user=(8, 3))


def test_imei_is_constant_per_user() -> None:
    _, _, records = _generate()
    values: dict[tuple[str, str], set[str]] = defaultdict(set)
    for record in records:
        for kv in record.kvs:
            if kv.key == "imei" and kv.value not in PLANTED_DEFAULTS:
                values[(record.app_id, record.user_id)].add(kv.value)

    assert values
    assert all(len(seen) == 1 for seen in values.values())


def test_timestamp_values_are_unique_per_request() -> None:
    _, result, records = _generate()
    timestamp_pairs = {
        pair for pair, entry in result.ground_truth.items() if entry.pi_kind == "timestamp"
    }
    for pair in timestamp_pairs:
        app_records = [record for record in records if record.app_id == pair.app_id]
        values = [kv.value for record in app_records for kv in record.kvs if kv.key == pair.key]
        assert len(values) == len(app_records)
        assert len(set(values)) == len(values)


def test_ground_truth_covers_every_pair() -> None:
    _, result, records = _generate()

    pruned, _ = prune(build_table(records))

    assert set(pruned.pairs) <= set(result.ground_truth)
    assert {entry.label for entry in result.ground_truth.values()} == {
        Label.POSITIVE,
        Label.NEGATIVE,
    }


def test_unknown_type_keys_avoid_rule_keywords() -> None:
    _, result, _ = _generate()

    unknown = [pair for pair, entry in result.ground_truth.items() if entry.is_unknown_type()]

    assert unknown
    assert all(pair.key not in RESERVED_KEY_NAMES for pair in unknown)


def test_planted_leaks_equal_ground_truth_match_events() -> None:
    _, result, records = _generate()
    blacklist = Blacklist(entries=ground_truth_blacklist_pairs(result.ground_truth))

    matched = match_stream(blacklist, records)

    assert len(matched.events) == result.planted_leaks
    assert result.planted_leaks > 0


def test_manual_negatives_are_true_negatives() -> None:
    _, result, _ = _generate()
    negatives = [
        pair for pair, entry in result.ground_truth.items() if entry.label == Label.NEGATIVE
    ]

    assert len(result.manual_negatives) == round(0.5 * len(negatives))
    assert all(result.ground_truth[pair].label == Label.NEGATIVE for pair in result.manual_negatives)


def test_obfuscated_plants_send_digests() -> None:
    config = SMALL.model_copy(
        update={
            "pi_plant_spec": [
                PiPlant(
                    pi_kind=PiKind.IMEI,
                    key_naming=KeyNaming.OBFUSCATED,
                    app_coverage=1.0,
                ),
            ],
            "default_value_rate": 0.0,
        },
    )
    _, result, records = _generate(config)
    planted = {pair for pair, entry in result.ground_truth.items() if entry.label == Label.POSITIVE}

    values = {
        kv.value
        for record in records
        for kv in record.kvs
        if (record.app_id, kv.key) in {(pair.app_id, pair.key) for pair in planted}
    }

    assert values
    assert all(len(value) == 32 and int(value, 16) >= 0 for value in values)


def test_ground_truth_csv_round_trip(tmp_path) -> None:  # noqa: ANN001
    _, result, _ = _generate()
    path = tmp_path / "ground_truth.csv"

    write_ground_truth_csv(result.ground_truth, path)

    assert read_ground_truth_csv(path) == result.ground_truth


def test_locale_is_stable_per_user_and_shared_across_users() -> None:
    config = SMALL.model_copy(update={"n_users": 30, "niche_app_share": 0.0, "key_presence": 1.0})
    _, result, records = _generate(config)
    locale_pairs = {
        (pair.app_id, pair.key)
        for pair, entry in result.ground_truth.items()
        if entry.pi_kind == NonPiKind.LOCALE
    }
    per_user: dict[str, set[str]] = defaultdict(set)
    for record in records:
        for kv in record.kvs:
            if (record.app_id, kv.key) in locale_pairs:
                per_user[record.user_id].add(kv.value)

    assert locale_pairs
    assert all(len(values) == 1 for values in per_user.values())
    seen = set().union(*per_user.values())
    assert seen <= set(LOCALES)
    assert len(per_user) > len(seen)


def test_niche_apps_reach_fewer_users() -> None:
    config = SynthConfig(
        seed=5,
        n_users=60,
        n_apps=10,
        requests_per_app_user=(2, 3),
        niche_app_share=0.5,
        niche_install_probability=0.05,
    )
    niche = {
        app.app_id
        for app in TrafficGenerator(config).apps
        if app.install_probability == config.niche_install_probability
    }
    _, _, records = _generate(config)
    users: dict[str, set[str]] = defaultdict(set)
    for record in records:
        users[record.app_id].add(record.user_id)

    assert niche
    assert len(niche) < config.n_apps
    largest_niche = max(len(users[app_id]) for app_id in niche)
    smallest_regular = min(len(users[app_id]) for app_id in users if app_id not in niche)
    assert largest_niche < smallest_regular
