"""The 17 statistical features of an <app, key> pair."""

from enum import StrEnum

import numpy as np
from pydantic import BaseModel

LOCAL_FEATURE_NAMES: tuple[str, ...] = (
    "max_distinct_per_user",
    "min_distinct_per_user",
    "avg_distinct_per_user",
    "var_distinct_per_user",
    "max_entropy_per_user",
    "min_entropy_per_user",
    "avg_entropy_per_user",
    "var_entropy_per_user",
    "lvrd",
    "key_frequency",
    "num_users",
)

GLOBAL_FEATURE_NAMES: tuple[str, ...] = (
    "krd",
    "drd",
    "weighted_gvrd",
    "weighted_ard",
    "weighted_urd",
    "weighted_nurd",
)

FEATURE_NAMES: tuple[str, ...] = LOCAL_FEATURE_NAMES + GLOBAL_FEATURE_NAMES


class FeatureSet(StrEnum):
    """Subsets of features a detector can be trained on."""

    LOCAL = "local"
    GLOBAL = "global"
    ALL = "all"

    def names(self) -> tuple[str, ...]:
        """Return the feature names of this subset in export order."""
        if self is FeatureSet.LOCAL:
            return LOCAL_FEATURE_NAMES
        if self is FeatureSet.GLOBAL:
            return GLOBAL_FEATURE_NAMES
        return FEATURE_NAMES

    def indices(self) -> list[int]:
        """Return the column positions of this subset in a full feature row."""
        return [FEATURE_NAMES.index(name) for name in self.names()]


class FeatureVector(BaseModel):
    """Local (first 11) and global (last 6) features of one pair."""

    max_distinct_per_user: float
    min_distinct_per_user: float
    avg_distinct_per_user: float
    var_distinct_per_user: float
    max_entropy_per_user: float
    min_entropy_per_user: float
    avg_entropy_per_user: float
    var_entropy_per_user: float
    lvrd: float
    key_frequency: float
    num_users: int
    krd: int
    drd: int
    weighted_gvrd: float
    weighted_ard: float
    weighted_urd: float
    weighted_nurd: float

    def as_array(self) -> np.ndarray:
        """Return the features as a float row in FEATURE_NAMES order."""
        return np.array([float(getattr(self, name)) for name in FEATURE_NAMES])

    @classmethod
    def from_values(cls, values: dict[str, float]) -> "FeatureVector":
        """Build a vector from a name to value mapping, e.g. a CSV row."""
        return cls(**{name: float(values[name]) for name in FEATURE_NAMES})
