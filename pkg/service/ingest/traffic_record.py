"""Traffic record models shared by every pipeline stage."""

from enum import StrEnum
from typing import Any

from pydantic import BaseModel, Field, field_validator


class KVSource(StrEnum):
    """Request region a key-value pair was harvested from."""

    QUERY = "query"
    BODY_FORM = "body_form"
    BODY_JSON = "body_json"


class KVPair(BaseModel):
    """A single <key, value> pair carried by an HTTP request."""

    key: str = Field(min_length=1)
    value: str = ""
    source: KVSource = KVSource.QUERY

    def to_jsonl_dict(self) -> dict[str, str]:
        """Return the corpus schema representation of the pair."""
        return {"k": self.key, "v": self.value, "src": self.source.value}


class TrafficRecord(BaseModel):
    """One HTTP request attributed to a user and an app."""

    user_id: str = Field(min_length=1)
    app_id: str = Field(min_length=1)
    timestamp: int
    domain: str = Field(min_length=1)
    path: str = ""
    kvs: list[KVPair] = []

    @field_validator("domain")
    @classmethod
    def lowercase_domain(cls, value: str) -> str:
        """Domains compare case-insensitively, so they are stored lowercased."""
        return value.lower()

    def distinct_keys(self) -> list[str]:
        """Return the keys of this record, each once, in first-seen order."""
        return list(dict.fromkeys(kv.key for kv in self.kvs))

    def to_jsonl_dict(self) -> dict[str, Any]:
        """Return the structured corpus schema representation of the record."""
        return {
            "user": self.user_id,
            "app": self.app_id,
            "ts": self.timestamp,
            "domain": self.domain,
            "path": self.path,
            "kv": [kv.to_jsonl_dict() for kv in self.kvs],
        }
