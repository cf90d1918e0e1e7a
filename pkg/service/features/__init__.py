"""Pair feature extraction services."""

from service.features.feature_extractor import (
    FeatureExtractor,
    LocalFeatures,
    ValueDistributionFeatures,
    drd,
    feature_matrix,
    krd,
    local_features,
    value_entropy,
    weighted_vdm_features,
)
from service.features.feature_store import (
    feature_frame,
    read_feature_csv,
    write_feature_csv,
)
from service.features.feature_vector import (
    FEATURE_NAMES,
    GLOBAL_FEATURE_NAMES,
    LOCAL_FEATURE_NAMES,
    FeatureSet,
    FeatureVector,
)

__all__ = [
    "FEATURE_NAMES",
    "GLOBAL_FEATURE_NAMES",
    "LOCAL_FEATURE_NAMES",
    "FeatureExtractor",
    "FeatureSet",
    "FeatureVector",
    "LocalFeatures",
    "ValueDistributionFeatures",
    "drd",
    "feature_frame",
    "feature_matrix",
    "krd",
    "local_features",
    "read_feature_csv",
    "value_entropy",
    "weighted_vdm_features",
    "write_feature_csv",
]
