"""CSV persistence of feature matrices."""

from pathlib import Path

import pandas as pd

from service.aggregate.pair_table import PairKey
from service.errors import MissingInputError, SchemaVersionError
from service.features.feature_vector import FEATURE_NAMES, FeatureVector

PAIR_COLUMNS = ["app", "key"]


def feature_frame(matrix: dict[PairKey, FeatureVector]) -> pd.DataFrame:
    """Return the matrix as a frame with columns app, key and the 17 features."""
    rows = [
        {"app": pair.app_id, "key": pair.key, **vector.model_dump()}
        for pair, vector in sorted(matrix.items())
    ]
    return pd.DataFrame(rows, columns=PAIR_COLUMNS + list(FEATURE_NAMES))


def write_feature_csv(matrix: dict[PairKey, FeatureVector], path: Path) -> None:
    """Write the matrix as UTF-8 CSV, one row per pair ordered by app then key."""
    feature_frame(matrix).to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def read_pair_frame(path: Path, required: list[str]) -> pd.DataFrame:
    """Read a CSV whose app and key columns must stay strings.

    Raises:
        MissingInputError: If the file does not exist.
        SchemaVersionError: If a required column is missing.

    """
    if not path.exists():
        raise MissingInputError(f"File not found: {path}")
    frame = pd.read_csv(
        path,
        dtype={"app": str, "key": str},
        keep_default_na=False,
        float_precision="round_trip",
        encoding="utf-8",
    )
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise SchemaVersionError(f"{path} lacks columns {missing}")
    return frame


def read_feature_csv(path: Path) -> dict[PairKey, FeatureVector]:
    """Read a matrix written by write_feature_csv."""
    frame = read_pair_frame(path, PAIR_COLUMNS + list(FEATURE_NAMES))
    return {
        PairKey(app_id=row["app"], key=row["key"]): FeatureVector.from_values(row)
        for row in frame.to_dict(orient="records")
    }
