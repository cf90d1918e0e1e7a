"""Pair table models: per-<app, key> and per-app occurrence statistics."""

from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from service.errors import PairNotFoundError, SchemaVersionError

TABLE_SCHEMA_VERSION = 1

DEFAULT_VALUES = frozenset({"none", "unknown", "-", "[IMEI]", "[MAC]", ""})


class PairKey(BaseModel):
    """Identity of an <app, key> pair."""

    model_config = ConfigDict(frozen=True)

    app_id: str = Field(min_length=1)
    key: str = Field(min_length=1)

    def __lt__(self, other: "PairKey") -> bool:
        """Order pairs by app, then key."""
        return (self.app_id, self.key) < (other.app_id, other.key)

    def __str__(self) -> str:
        """Return the pair as <app, key>."""
        return f"<{self.app_id}, {self.key}>"


class PairStats(BaseModel):
    """Occurrence statistics of one <app, key> pair.

    per_user_values excludes default and empty values; requests_with_key counts every
    request carrying the key, whatever its value.
    """

    per_user_values: dict[str, dict[str, int]] = {}
    domains: set[str] = set()
    requests_with_key: int = 0

    def users(self) -> set[str]:
        """Return the users holding at least one valid value."""
        return set(self.per_user_values)

    def value_counts(self) -> dict[str, int]:
        """Return occurrence counts of each distinct valid value over all users."""
        counts: dict[str, int] = {}
        for values in self.per_user_values.values():
            for value, count in values.items():
                counts[value] = counts.get(value, 0) + count
        return counts

    def value_users(self) -> dict[str, set[str]]:
        """Return the users holding each distinct valid value."""
        holders: dict[str, set[str]] = {}
        for user, values in self.per_user_values.items():
            for value in values:
                holders.setdefault(value, set()).add(user)
        return holders


class ValueUsage(BaseModel):
    """Users and occurrence count of one value inside an app's traffic."""

    users: set[str] = set()
    count: int = 0


class AppStats(BaseModel):
    """Traffic totals of one app."""

    total_requests: int = 0
    users: set[str] = set()
    keys: set[str] = set()
    domains: set[str] = set()
    value_index: dict[str, ValueUsage] = {}


class PairTable(BaseModel):
    """All statistics feature extraction needs, keyed by pair and by app."""

    pairs: dict[PairKey, PairStats] = {}
    apps: dict[str, AppStats] = {}
    default_values: set[str] = set(DEFAULT_VALUES)

    def get_pair(self, pair: PairKey) -> PairStats:
        """Return the statistics of a pair.

        Raises:
            PairNotFoundError: If the pair is not in the table.

        """
        stats = self.pairs.get(pair)
        if stats is None:
            raise PairNotFoundError(f"Pair {pair} is not in the table")
        return stats

    def sorted_pairs(self) -> list[PairKey]:
        """Return the pair keys ordered by app, then key."""
        return sorted(self.pairs)

    def to_snapshot(self) -> dict[str, Any]:
        """Return a JSON-ready snapshot with every collection in sorted order."""
        return {
            "schema_version": TABLE_SCHEMA_VERSION,
            "default_values": sorted(self.default_values),
            "apps": {
                app_id: {
                    "total_requests": app.total_requests,
                    "users": sorted(app.users),
                    "keys": sorted(app.keys),
                    "domains": sorted(app.domains),
                    "value_index": {
                        value: {"users": sorted(usage.users), "count": usage.count}
                        for value, usage in sorted(app.value_index.items())
                    },
                }
                for app_id, app in sorted(self.apps.items())
            },
            "pairs": [
                {
                    "app": pair.app_id,
                    "key": pair.key,
                    "requests_with_key": stats.requests_with_key,
                    "domains": sorted(stats.domains),
                    "per_user_values": {
                        user: dict(sorted(values.items()))
                        for user, values in sorted(stats.per_user_values.items())
                    },
                }
                for pair, stats in sorted(self.pairs.items())
            ],
        }

    @classmethod
    def from_snapshot(cls, snapshot: dict[str, Any]) -> "PairTable":
        """Rebuild a table from a snapshot written by to_snapshot.

        Raises:
            SchemaVersionError: If the snapshot has another schema version.

        """
        version = snapshot.get("schema_version")
        if version != TABLE_SCHEMA_VERSION:
            raise SchemaVersionError(
                f"Pair table schema version {version}, expected {TABLE_SCHEMA_VERSION}",
            )
        apps = {
            app_id: AppStats(
                total_requests=data["total_requests"],
                users=set(data["users"]),
                keys=set(data["keys"]),
                domains=set(data["domains"]),
                value_index={
                    value: ValueUsage(users=set(usage["users"]), count=usage["count"])
                    for value, usage in data["value_index"].items()
                },
            )
            for app_id, data in snapshot["apps"].items()
        }
        pairs = {
            PairKey(app_id=entry["app"], key=entry["key"]): PairStats(
                per_user_values=entry["per_user_values"],
                domains=set(entry["domains"]),
                requests_with_key=entry["requests_with_key"],
            )
            for entry in snapshot["pairs"]
        }
        return cls(
            pairs=pairs,
            apps=apps,
            default_values=set(snapshot["default_values"]),
        )
