"""Blacklist of PI-related pairs built from positive predictions."""

import json
import logging
from collections.abc import Iterable
from pathlib import Path

from pydantic import BaseModel, ValidationError

from service.aggregate.pair_table import DEFAULT_VALUES, PairKey
from service.detector.evaluation import PredictedLabel, Prediction
from service.errors import MissingInputError, ModelError, SchemaVersionError
from service.util import canonical_json

logger = logging.getLogger(__name__)

BLACKLIST_SCHEMA_VERSION = 1
META_SUFFIX = "_meta.json"


class BlacklistEntry(BaseModel):
    """One blacklisted pair as stored in the blacklist file."""

    app: str
    key: str


class PiTypeEntry(BlacklistEntry):
    """The PI type known for a blacklisted pair."""

    pi_type: str


class BlacklistMeta(BaseModel):
    """Provenance and matching settings stored beside the blacklist file."""

    schema_version: int = BLACKLIST_SCHEMA_VERSION
    built_from: str = ""
    threshold: float = 0.0
    default_values: list[str] = sorted(DEFAULT_VALUES)
    pi_types: list[PiTypeEntry] = []


class Blacklist(BaseModel):
    """Pairs whose non-default values are treated as leaks."""

    entries: set[PairKey]
    default_values: set[str] = set(DEFAULT_VALUES)
    built_from: str = ""
    threshold: float = 0.0
    pi_types: dict[PairKey, str] = {}

    def __contains__(self, pair: PairKey) -> bool:
        """Return True when the exact (app, key) pair is blacklisted."""
        return pair in self.entries

    def file_entries(self) -> list[dict[str, str]]:
        """Return the sorted JSON array written to the blacklist file."""
        return [
            BlacklistEntry(app=pair.app_id, key=pair.key).model_dump()
            for pair in sorted(self.entries)
        ]

    def meta(self) -> BlacklistMeta:
        """Return the sidecar metadata of the blacklist."""
        return BlacklistMeta(
            built_from=self.built_from,
            threshold=self.threshold,
            default_values=sorted(self.default_values),
            pi_types=[
                PiTypeEntry(app=pair.app_id, key=pair.key, pi_type=self.pi_types[pair])
                for pair in sorted(self.pi_types)
            ],
        )


def meta_path(path: Path) -> Path:
    """Return the sidecar path of a blacklist file, e.g. blacklist_meta.json."""
    return path.with_name(path.stem + META_SUFFIX)


def _passes_gate(prediction: Prediction, threshold: float) -> bool:
    p = prediction.probability_positive
    return prediction.label == PredictedLabel.POSITIVE and p > 1 - p and p >= threshold


def build_blacklist(
    predictions: Iterable[Prediction],
    threshold: float,
    built_from: str = "",
    pi_types: dict[PairKey, str] | None = None,
) -> Blacklist:
    """Collect the pairs of positive predictions that also clear the given threshold.

    Predictions gated at a lower threshold than the one given are gated again, so a
    pair predicted positive at 0.5 with p = 0.6 stays out of a 0.75 blacklist.

    Args:
        predictions (Iterable[Prediction]): Gated detector output; duplicates collapse.
        threshold (float): Confidence threshold of the blacklist.
        built_from (str): Identifier of the model that produced the predictions.
        pi_types (dict[PairKey, str] | None): Known PI types to carry into the list.

    Returns:
        Blacklist: The blacklist, possibly empty.

    """
    positives = [p for p in predictions if p.label == PredictedLabel.POSITIVE]
    entries = {p.pair for p in positives if _passes_gate(p, threshold)}
    regated = len({p.pair for p in positives} - entries)
    if regated:
        logger.info("%d positive pairs fall below threshold %s and are left out", regated, threshold)
    if not entries:
        logger.warning("No positive predictions; the blacklist is empty")
    known = pi_types or {}
    blacklist = Blacklist(
        entries=entries,
        built_from=built_from,
        threshold=threshold,
        pi_types={pair: known[pair] for pair in entries if pair in known},
    )
    logger.info("✓ Built blacklist with %d entries", len(entries))
    return blacklist


def save_blacklist(blacklist: Blacklist, path: Path) -> Path:
    """Write the blacklist as a sorted JSON array of {app, key} plus its metadata sidecar.

    Returns:
        Path: The path of the sidecar file.

    """
    path.write_text(canonical_json(blacklist.file_entries()), encoding="utf-8")
    sidecar = meta_path(path)
    sidecar.write_text(canonical_json(blacklist.meta()), encoding="utf-8")
    return sidecar


def _load_meta(path: Path) -> BlacklistMeta:
    sidecar = meta_path(path)
    if not sidecar.exists():
        logger.info("No metadata beside %s; using the shipped default values", path)
        return BlacklistMeta()
    data = json.loads(sidecar.read_text(encoding="utf-8"))
    version = data.get("schema_version")
    if version != BLACKLIST_SCHEMA_VERSION:
        raise SchemaVersionError(
            f"Blacklist schema version {version}, expected {BLACKLIST_SCHEMA_VERSION}",
        )
    return BlacklistMeta.model_validate(data)


def load_blacklist(path: Path) -> Blacklist:
    """Read a blacklist file and, when present, its metadata sidecar.

    Raises:
        MissingInputError: If the file does not exist.
        SchemaVersionError: If the sidecar schema version differs.
        ModelError: If either file is not valid.

    """
    if not path.exists():
        raise MissingInputError(f"Blacklist file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(data, list):
            raise ModelError(f"Blacklist file {path} is not a JSON array")
        entries = [BlacklistEntry.model_validate(item) for item in data]
        meta = _load_meta(path)
    except (json.JSONDecodeError, AttributeError, ValidationError) as e:
        raise ModelError(f"Invalid blacklist file {path}: {e}") from e
    return Blacklist(
        entries={PairKey(app_id=entry.app, key=entry.key) for entry in entries},
        default_values=set(meta.default_values),
        built_from=meta.built_from,
        threshold=meta.threshold,
        pi_types={PairKey(app_id=e.app, key=e.key): e.pi_type for e in meta.pi_types},
    )
