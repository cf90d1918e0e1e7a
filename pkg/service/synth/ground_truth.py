"""Ground truth labels of generated pairs."""

from enum import StrEnum
from pathlib import Path

import pandas as pd
from pydantic import BaseModel

from service.aggregate.pair_table import PairKey
from service.features.feature_store import read_pair_frame
from service.labeling.labeler import Label

GROUND_TRUTH_COLUMNS = ["app", "key", "label", "pi_kind", "key_naming", "third_party"]


class KeyNaming(StrEnum):
    """How a planted PI key is named and encoded."""

    KEYWORD = "keyword"
    NEUTRAL = "neutral"
    OBFUSCATED = "obfuscated"


class GroundTruthEntry(BaseModel):
    """Generator truth for one pair."""

    label: Label
    pi_kind: str
    key_naming: KeyNaming | None = None
    third_party: bool = False

    def is_unknown_type(self) -> bool:
        """Return True for PI no string-form rule can see."""
        return self.label == Label.POSITIVE and self.key_naming in {
            KeyNaming.NEUTRAL,
            KeyNaming.OBFUSCATED,
        }


GroundTruth = dict[PairKey, GroundTruthEntry]


def write_ground_truth_csv(ground_truth: GroundTruth, path: Path) -> None:
    """Write ground truth as app, key, label, pi_kind, key_naming, third_party."""
    rows = [
        {
            "app": pair.app_id,
            "key": pair.key,
            "label": entry.label.value,
            "pi_kind": entry.pi_kind,
            "key_naming": entry.key_naming.value if entry.key_naming else "",
            "third_party": int(entry.third_party),
        }
        for pair, entry in sorted(ground_truth.items())
    ]
    pd.DataFrame(rows, columns=GROUND_TRUTH_COLUMNS).to_csv(
        path,
        index=False,
        encoding="utf-8",
        lineterminator="\n",
    )


def read_ground_truth_csv(path: Path) -> GroundTruth:
    """Read ground truth written by write_ground_truth_csv."""
    frame = read_pair_frame(path, GROUND_TRUTH_COLUMNS)
    return {
        PairKey(app_id=row["app"], key=row["key"]): GroundTruthEntry(
            label=Label(row["label"]),
            pi_kind=str(row["pi_kind"]),
            key_naming=KeyNaming(row["key_naming"]) if row["key_naming"] else None,
            third_party=bool(int(row["third_party"])),
        )
        for row in frame.to_dict(orient="records")
    }


def ground_truth_blacklist_pairs(ground_truth: GroundTruth) -> set[PairKey]:
    """Return every pair the generator planted PI under."""
    return {pair for pair, entry in ground_truth.items() if entry.label == Label.POSITIVE}
