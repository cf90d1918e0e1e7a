"""Random forest detector with confidence-gated predictions."""

from service.detector.evaluation import (
    DEFAULT_SPLIT,
    DEFAULT_THRESHOLD,
    EvalReport,
    ExperimentConfig,
    GroundTruthReport,
    PredictedLabel,
    Prediction,
    RepeatedEvaluation,
    SweepPoint,
    evaluate,
    evaluate_ground_truth,
    gate,
    predict,
    predict_matrix,
    read_predictions_csv,
    repeated_evaluation,
    split,
    threshold_sweep,
    write_predictions_csv,
)
from service.detector.forest import (
    DEFAULT_TREES,
    ForestModel,
    TreeNode,
    load_model,
    save_model,
    train,
)

__all__ = [
    "DEFAULT_SPLIT",
    "DEFAULT_THRESHOLD",
    "DEFAULT_TREES",
    "EvalReport",
    "ExperimentConfig",
    "ForestModel",
    "GroundTruthReport",
    "PredictedLabel",
    "Prediction",
    "RepeatedEvaluation",
    "SweepPoint",
    "TreeNode",
    "evaluate",
    "evaluate_ground_truth",
    "gate",
    "load_model",
    "predict",
    "predict_matrix",
    "read_predictions_csv",
    "repeated_evaluation",
    "save_model",
    "split",
    "threshold_sweep",
    "train",
    "write_predictions_csv",
]
