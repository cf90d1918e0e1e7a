"""Seeded synthetic multi-user, multi-app traffic with planted PI."""

import hashlib
import json
import logging
import string
from collections.abc import Iterator
from enum import StrEnum
from typing import IO

import numpy as np
from pydantic import BaseModel, Field, model_validator

from service.aggregate.pair_table import PairKey
from service.errors import ConfigError
from service.labeling.labeler import Label
from service.synth.ground_truth import GroundTruth, GroundTruthEntry, KeyNaming

logger = logging.getLogger(__name__)

START_TIMESTAMP_MS = 1_590_969_600_000
MAX_TIMESTAMP_GAP_MS = 5_000
SDK_REQUEST_SHARE = 0.25
PLANTED_DEFAULTS = ("none", "unknown", "-", "")
LOCALES = ("zh_CN", "en_US", "zh_TW", "ja_JP")
RESERVED_KEY_NAMES = frozenset(
    {
        "user", "userid", "user_cid", "user_id", "user-id", "imei", "meid", "imsi",
        "misi", "deviceid", "device_id", "serialnumber", "mac", "mac_address",
        "location", "gps", "latlng", "longitude", "ltt", "lat", "latitude", "lgt",
        "lng", "lon", "address",
    },
)


class PiKind(StrEnum):
    """Kinds of PI the generator can plant."""

    IMEI = "imei"
    MAC = "mac"
    EMAIL = "email"
    PHONE = "phone"
    USER_ID = "user_id"
    ANDROID_ID = "android_id"
    AD_ID = "ad_id"
    SIM_SERIAL = "sim_serial"


class NonPiKind(StrEnum):
    """Kinds of non-PI fields the generator can emit."""

    TIMESTAMP = "timestamp"
    COUNTER = "counter"
    APP_VERSION = "app_version"
    RESOURCE_PATH = "resource_path"
    RANDOM_TOKEN = "random_token"
    LOCALE = "locale"


KEYWORD_KEY_NAMES: dict[PiKind, str] = {
    PiKind.IMEI: "imei",
    PiKind.MAC: "mac",
    PiKind.EMAIL: "email",
    PiKind.PHONE: "phone",
    PiKind.USER_ID: "userid",
    PiKind.ANDROID_ID: "deviceid",
    PiKind.AD_ID: "adid",
    PiKind.SIM_SERIAL: "iccid",
}

NON_PI_KEY_NAMES: dict[NonPiKind, tuple[str, ...]] = {
    NonPiKind.TIMESTAMP: ("ts", "t", "time", "timestamp"),
    NonPiKind.COUNTER: ("seq", "cnt", "n", "count"),
    NonPiKind.APP_VERSION: ("ver", "v", "appver", "version"),
    NonPiKind.RESOURCE_PATH: ("res", "page", "path", "item"),
    NonPiKind.RANDOM_TOKEN: ("nonce", "sign", "token", "rid"),
    NonPiKind.LOCALE: ("lang", "locale", "lc", "hl"),
}


class PiPlant(BaseModel):
    """One kind of PI planted into a share of the apps."""

    pi_kind: PiKind
    key_naming: KeyNaming = KeyNaming.KEYWORD
    app_coverage: float = Field(gt=0.0, le=1.0)
    third_party: bool = False


def default_pi_plants() -> list[PiPlant]:
    """Return the default plants: rule-visible kinds plus neutral and obfuscated ones."""
    return [
        PiPlant(pi_kind=PiKind.IMEI, app_coverage=0.4),
        PiPlant(pi_kind=PiKind.MAC, app_coverage=0.3),
        PiPlant(pi_kind=PiKind.EMAIL, app_coverage=0.2),
        PiPlant(pi_kind=PiKind.PHONE, app_coverage=0.2),
        PiPlant(pi_kind=PiKind.USER_ID, app_coverage=0.4),
        PiPlant(pi_kind=PiKind.ANDROID_ID, app_coverage=0.3, third_party=True),
        PiPlant(
            pi_kind=PiKind.AD_ID,
            key_naming=KeyNaming.NEUTRAL,
            app_coverage=0.3,
            third_party=True,
        ),
        PiPlant(pi_kind=PiKind.SIM_SERIAL, key_naming=KeyNaming.NEUTRAL, app_coverage=0.2),
        PiPlant(pi_kind=PiKind.IMEI, key_naming=KeyNaming.OBFUSCATED, app_coverage=0.3),
    ]


class SynthConfig(BaseModel):
    """Parameters of a synthetic corpus."""

    seed: int = 7
    n_users: int = Field(default=100, ge=2)
    n_apps: int = Field(default=50, ge=1)
    install_probability: float = Field(default=0.4, gt=0.0, le=1.0)
    niche_app_share: float = Field(default=0.2, ge=0.0, le=1.0)
    niche_install_probability: float = Field(default=0.05, gt=0.0, le=1.0)
    requests_per_app_user: tuple[int, int] = (30, 70)
    pi_plant_spec: list[PiPlant] = Field(default_factory=default_pi_plants)
    non_pi_spec: list[NonPiKind] = list(NonPiKind)
    key_presence: float = Field(default=0.8, gt=0.0, le=1.0)
    default_value_rate: float = Field(default=0.03, ge=0.0, lt=1.0)
    manual_negative_fraction: float = Field(default=0.5, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def feasible(self) -> "SynthConfig":
        """Reject request ranges that are empty or negative."""
        low, high = self.requests_per_app_user
        if low < 1 or high < low:
            raise ValueError(f"requests_per_app_user must satisfy 1 <= low <= high, got {low, high}")
        return self


def default_s1_config() -> SynthConfig:
    """Return the configuration of the synthetic acceptance corpus."""
    return SynthConfig()


class SynthResult(BaseModel):
    """Counts and truth produced by a generation run."""

    config: SynthConfig
    ground_truth: GroundTruth
    record_count: int = 0
    planted_leaks: int = 0
    planted_defaults: int = 0
    manual_negatives: list[PairKey] = []


class _AppKey(BaseModel):
    """A key an app sends, with what it carries."""

    name: str
    pi_plant: PiPlant | None = None
    non_pi: NonPiKind | None = None


class _AppProfile(BaseModel):
    """Generated layout of one app."""

    app_id: str
    domain: str
    install_probability: float
    version: str
    resource_paths: list[str]
    first_party_keys: list[_AppKey]
    sdk_keys: list[tuple[str, _AppKey]]


def _hex(rng: np.random.Generator, n_bytes: int) -> str:
    return rng.bytes(n_bytes).hex()


def _digits(rng: np.random.Generator, count: int) -> str:
    return "".join(str(d) for d in rng.integers(0, 10, size=count))


def _letters(rng: np.random.Generator, count: int) -> str:
    return "".join(rng.choice(list(string.ascii_lowercase), size=count))


class TrafficGenerator:
    """Generate a corpus for a SynthConfig.

    Every value drawn comes from one seeded numpy Generator consumed in a fixed order,
    so a configuration always produces the same bytes.
    """

    def __init__(self, config: SynthConfig) -> None:
        """Validate feasibility and prepare the random stream."""
        for plant in config.pi_plant_spec:
            if plant.app_coverage * config.n_apps < 1:
                raise ConfigError(
                    f"{plant.pi_kind} coverage {plant.app_coverage} x {config.n_apps} apps "
                    "plants no app",
                )
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.users = [f"user{index:03d}" for index in range(config.n_users)]
        self.user_pi = {user: self._user_pi_values() for user in self.users}
        self.user_locale = {user: str(self.rng.choice(LOCALES)) for user in self.users}
        self.used_names: set[str] = set(RESERVED_KEY_NAMES)
        self.sdk_names = {
            index: self._neutral_name() if plant.key_naming != KeyNaming.KEYWORD
            else KEYWORD_KEY_NAMES[plant.pi_kind]
            for index, plant in enumerate(config.pi_plant_spec)
            if plant.third_party
        }
        self.apps = self._app_profiles()
        self.ground_truth: GroundTruth = {}
        self.planted_leaks = 0
        self.planted_defaults = 0

    def _user_pi_values(self) -> dict[PiKind, str]:
        rng = self.rng
        imei = "86" + _digits(rng, 13)
        return {
            PiKind.IMEI: imei,
            PiKind.MAC: ":".join(_hex(rng, 1) for _ in range(6)),
            PiKind.EMAIL: f"{_letters(rng, 8)}@{_letters(rng, 5)}.com",
            PiKind.PHONE: "13" + _digits(rng, 9),
            PiKind.ANDROID_ID: _hex(rng, 8),
            PiKind.AD_ID: "-".join(_hex(rng, n) for n in (4, 2, 2, 2, 6)),
            PiKind.SIM_SERIAL: "8986" + _digits(rng, 16),
        }

    def _neutral_name(self) -> str:
        while True:
            name = _letters(self.rng, 2) + _digits(self.rng, 1)
            if name not in self.used_names:
                self.used_names.add(name)
                return name

    def _plant_apps(self) -> list[set[int]]:
        n_apps = self.config.n_apps
        return [
            {
                int(i)
                for i in self.rng.choice(
                    n_apps,
                    size=max(1, round(plant.app_coverage * n_apps)),
                    replace=False,
                )
            }
            for plant in self.config.pi_plant_spec
        ]

    def _app_profiles(self) -> list[_AppProfile]:
        plant_apps = self._plant_apps()
        profiles = []
        for app_index in range(self.config.n_apps):
            app_id = f"com.synth.app{app_index:03d}"
            niche = self.rng.random() < self.config.niche_app_share
            first_party: list[_AppKey] = []
            names_in_app: set[str] = set()
            for kind in self.config.non_pi_spec:
                if kind != NonPiKind.TIMESTAMP and self.rng.random() >= self.config.key_presence:
                    continue
                name = str(self.rng.choice(NON_PI_KEY_NAMES[kind]))
                if name in names_in_app:
                    continue
                names_in_app.add(name)
                first_party.append(_AppKey(name=name, non_pi=kind))
            sdk_keys: list[tuple[str, _AppKey]] = []
            for index, plant in enumerate(self.config.pi_plant_spec):
                if app_index not in plant_apps[index]:
                    continue
                if plant.third_party:
                    domain = f"sdk.{plant.pi_kind.value.replace('_', '')}-hub.com"
                    sdk_keys.append((domain, _AppKey(name=self.sdk_names[index], pi_plant=plant)))
                    continue
                if plant.key_naming == KeyNaming.KEYWORD:
                    name = KEYWORD_KEY_NAMES[plant.pi_kind]
                else:
                    name = self._neutral_name()
                if name in names_in_app:
                    continue
                names_in_app.add(name)
                first_party.append(_AppKey(name=name, pi_plant=plant))
            profiles.append(
                _AppProfile(
                    app_id=app_id,
                    domain=f"api.app{app_index:03d}.com",
                    install_probability=(
                        self.config.niche_install_probability
                        if niche
                        else self.config.install_probability
                    ),
                    version=(
                        f"{self.rng.integers(1, 10)}.{self.rng.integers(0, 21)}."
                        f"{self.rng.integers(0, 51)}"
                    ),
                    resource_paths=[
                        f"/static/{_hex(self.rng, 3)}.png" for _ in range(20)
                    ],
                    first_party_keys=first_party,
                    sdk_keys=sdk_keys,
                ),
            )
        return profiles

    def _pi_value(self, plant: PiPlant, user: str, app_id: str) -> str:
        if plant.pi_kind == PiKind.USER_ID:
            digest = hashlib.sha256(f"{self.config.seed}:{user}:{app_id}".encode()).hexdigest()
            value = "u" + str(int(digest[:12], 16))
        else:
            value = self.user_pi[user][plant.pi_kind]
        if plant.key_naming == KeyNaming.OBFUSCATED:
            return hashlib.md5(value.encode(), usedforsecurity=False).hexdigest()
        return value

    def _non_pi_value(
        self,
        kind: NonPiKind,
        app: _AppProfile,
        user: str,
        context: tuple[int, int],
    ) -> str:
        timestamp, counter = context
        if kind == NonPiKind.TIMESTAMP:
            return str(timestamp)
        if kind == NonPiKind.COUNTER:
            return str(counter)
        if kind == NonPiKind.APP_VERSION:
            return app.version
        if kind == NonPiKind.RESOURCE_PATH:
            return str(self.rng.choice(app.resource_paths))
        if kind == NonPiKind.LOCALE:
            return self.user_locale[user]
        return _hex(self.rng, 16)

    def _record_truth(self, app: _AppProfile, key: _AppKey) -> None:
        pair = PairKey(app_id=app.app_id, key=key.name)
        if pair in self.ground_truth:
            return
        if key.pi_plant is not None:
            entry = GroundTruthEntry(
                label=Label.POSITIVE,
                pi_kind=key.pi_plant.pi_kind.value,
                key_naming=key.pi_plant.key_naming,
                third_party=key.pi_plant.third_party,
            )
        else:
            entry = GroundTruthEntry(
                label=Label.NEGATIVE,
                pi_kind=key.non_pi.value if key.non_pi else "",
            )
        self.ground_truth[pair] = entry

    def _emit(
        self,
        user: str,
        app: _AppProfile,
        key: _AppKey,
        context: tuple[int, int],
    ) -> dict[str, str]:
        self._record_truth(app, key)
        if key.pi_plant is None:
            value = self._non_pi_value(key.non_pi, app, user, context)
        elif self.rng.random() < self.config.default_value_rate:
            value = str(self.rng.choice(PLANTED_DEFAULTS))
            self.planted_defaults += 1
        else:
            value = self._pi_value(key.pi_plant, user, app.app_id)
            self.planted_leaks += 1
        return {"k": key.name, "v": value, "src": "query"}

    def records(self) -> Iterator[dict]:
        """Yield corpus lines (structured schema) app by app, user by user."""
        timestamp = START_TIMESTAMP_MS
        low, high = self.config.requests_per_app_user
        for app in self.apps:
            timestamp_key = next(
                key for key in app.first_party_keys if key.non_pi == NonPiKind.TIMESTAMP
            ) if NonPiKind.TIMESTAMP in self.config.non_pi_spec else None
            for user in self.users:
                if self.rng.random() >= app.install_probability:
                    continue
                for counter in range(1, int(self.rng.integers(low, high + 1)) + 1):
                    timestamp += int(self.rng.integers(1, MAX_TIMESTAMP_GAP_MS))
                    context = (timestamp, counter)
                    if app.sdk_keys and self.rng.random() < SDK_REQUEST_SHARE:
                        domain, sdk_key = app.sdk_keys[
                            int(self.rng.integers(0, len(app.sdk_keys)))
                        ]
                        keys = [sdk_key]
                        path = "/collect"
                    else:
                        domain = app.domain
                        keys = [
                            key
                            for key in app.first_party_keys
                            if key.non_pi == NonPiKind.TIMESTAMP
                            or self.rng.random() < self.config.key_presence
                        ]
                        path = "/api"
                    if timestamp_key is not None and timestamp_key not in keys:
                        keys = [timestamp_key, *keys]
                    yield {
                        "user": user,
                        "app": app.app_id,
                        "ts": timestamp,
                        "domain": domain,
                        "path": path,
                        "kv": [self._emit(user, app, key, context) for key in keys],
                    }

    def manual_negatives(self) -> list[PairKey]:
        """Sample true-negative pairs standing in for manually labeled negatives."""
        negatives = sorted(
            pair for pair, entry in self.ground_truth.items() if entry.label == Label.NEGATIVE
        )
        count = round(self.config.manual_negative_fraction * len(negatives))
        chosen = self.rng.choice(len(negatives), size=count, replace=False)
        return [negatives[int(i)] for i in sorted(chosen)]


def generate(config: SynthConfig, corpus: IO[str]) -> SynthResult:
    """Write a synthetic JSONL corpus and return its ground truth and counts.

    Raises:
        ConfigError: If a plant's coverage leaves it without any app.

    """
    generator = TrafficGenerator(config)
    record_count = 0
    for line in generator.records():
        corpus.write(json.dumps(line, ensure_ascii=False, separators=(",", ":")))
        corpus.write("\n")
        record_count += 1
    result = SynthResult(
        config=config,
        ground_truth=generator.ground_truth,
        record_count=record_count,
        planted_leaks=generator.planted_leaks,
        planted_defaults=generator.planted_defaults,
        manual_negatives=generator.manual_negatives(),
    )
    logger.info(
        "✓ Generated %d records for %d apps and %d users (%d planted leaks, %d pairs)",
        record_count,
        config.n_apps,
        config.n_users,
        result.planted_leaks,
        len(result.ground_truth),
    )
    return result
