"""Uncertainty-aware classification pipeline.

Feature-table ingestion, PCA reduction, multi-source feature fusion, dropout
MLPs trained with an optional predictive-entropy loss, classical baselines,
and three uncertainty inference engines (MC dropout, deep ensembles, and
their hybrid), scored with standard and uncertainty-aware metrics.
"""

from .data import (
    ClassVocabulary,
    FeatureTable,
    SplitIndices,
    default_vocabulary,
    load_feature_table,
    save_feature_table,
    stratified_split,
    synth_blobs,
)
from .fusion import FusedTable, fuse
from .metrics import (
    MetricReport,
    UncertaintyCounts,
    UncertaintyMetrics,
    standard_metrics,
    threshold_sweep,
    uncertainty_confusion,
    uncertainty_metrics,
)
from .mlp import (
    MlpModel,
    TrainConfig,
    cross_entropy,
    forward,
    pe_batch_loss,
    predictive_entropy,
    train,
)
from .runner import ExperimentConfig, run_experiment, run_grid
from .uq import (
    EnsembleSet,
    PredictionRecord,
    emcd_predict,
    ensemble_predict,
    flag_certainty,
    mcd_predict,
)

__version__ = "0.1.0"

__all__ = [
    "ClassVocabulary",
    "EnsembleSet",
    "ExperimentConfig",
    "FeatureTable",
    "FusedTable",
    "MetricReport",
    "MlpModel",
    "PredictionRecord",
    "SplitIndices",
    "TrainConfig",
    "UncertaintyCounts",
    "UncertaintyMetrics",
    "cross_entropy",
    "default_vocabulary",
    "emcd_predict",
    "ensemble_predict",
    "flag_certainty",
    "forward",
    "fuse",
    "load_feature_table",
    "mcd_predict",
    "pe_batch_loss",
    "predictive_entropy",
    "run_experiment",
    "run_grid",
    "save_feature_table",
    "standard_metrics",
    "stratified_split",
    "synth_blobs",
    "threshold_sweep",
    "train",
    "uncertainty_confusion",
    "uncertainty_metrics",
]
