"""CSV persistence of labeled datasets."""

from pathlib import Path

import pandas as pd

from service.aggregate.pair_table import PairKey
from service.features.feature_store import read_pair_frame
from service.features.feature_vector import FEATURE_NAMES, FeatureVector
from service.labeling.labeler import Label, LabeledSample, LabelSource

DATASET_COLUMNS = ["app", "key", "label", "source", "pi_type", *FEATURE_NAMES]


def write_dataset_csv(samples: list[LabeledSample], path: Path) -> None:
    """Write labeled samples, one row per pair ordered by app then key."""
    rows = [
        {
            "app": sample.pair.app_id,
            "key": sample.pair.key,
            "label": sample.label.value,
            "source": sample.source.value,
            "pi_type": sample.pi_type or "",
            **sample.features.model_dump(),
        }
        for sample in sorted(samples, key=lambda s: s.pair)
    ]
    pd.DataFrame(rows, columns=DATASET_COLUMNS).to_csv(
        path,
        index=False,
        encoding="utf-8",
        lineterminator="\n",
    )


def read_dataset_csv(path: Path) -> list[LabeledSample]:
    """Read samples written by write_dataset_csv."""
    frame = read_pair_frame(path, DATASET_COLUMNS)
    frame["pi_type"] = frame["pi_type"].astype(str)
    return [
        LabeledSample(
            pair=PairKey(app_id=row["app"], key=row["key"]),
            features=FeatureVector.from_values(row),
            label=Label(row["label"]),
            source=LabelSource(row["source"]),
            pi_type=row["pi_type"] or None,
        )
        for row in frame.to_dict(orient="records")
    ]
