"""Synthetic traffic corpora with planted PI and ground truth."""

from service.synth.generator import (
    NonPiKind,
    PiKind,
    PiPlant,
    SynthConfig,
    SynthResult,
    TrafficGenerator,
    default_s1_config,
    generate,
)
from service.synth.ground_truth import (
    GroundTruth,
    GroundTruthEntry,
    KeyNaming,
    ground_truth_blacklist_pairs,
    read_ground_truth_csv,
    write_ground_truth_csv,
)

__all__ = [
    "GroundTruth",
    "GroundTruthEntry",
    "KeyNaming",
    "NonPiKind",
    "PiKind",
    "PiPlant",
    "SynthConfig",
    "SynthResult",
    "TrafficGenerator",
    "default_s1_config",
    "generate",
    "ground_truth_blacklist_pairs",
    "read_ground_truth_csv",
    "write_ground_truth_csv",
]
