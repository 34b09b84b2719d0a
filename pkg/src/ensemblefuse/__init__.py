"""Model-agnostic toolkit for long-tail multi-label ensembles.

Works purely on prediction/label matrices: imbalance-aware losses with
analytic gradients, tie-corrected AUC evaluation, weighted-average fusion
with differential-evolution weight search, and a synthetic long-tail data
lab that exercises the whole pipeline at desk scale.
"""

from ensemblefuse.ensemble import (
    DEConfig,
    DEResult,
    EnsembleWeights,
    de_optimize,
    de_search,
    fuse,
    project_to_simplex,
)
from ensemblefuse.errors import EnsembleFuseError, ValidationError
from ensemblefuse.losses import (
    ClassPrevalence,
    LossConfig,
    asl_loss,
    combined_loss,
    combined_loss_grad,
    compute_prevalence,
    sample_class_weight,
    wbce_loss,
)
from ensemblefuse.metrics import AucReport, RocCurve, auc, evaluate, roc_curve
from ensemblefuse.model_io import (
    ClassList,
    LabelMatrix,
    PredictionMatrix,
    align,
    read_labels,
    read_predictions,
    write_labels,
    write_predictions,
)
from ensemblefuse.synthlab import (
    CHESTXRAY14_PREVALENCES,
    LinearModel,
    SynthConfig,
    SynthDataset,
    ToyTrainConfig,
    TrainResult,
    generate,
    simulate_models,
    split_indices,
    train_toy,
)

__version__ = "0.1.0"

__all__ = [
    "AucReport",
    "CHESTXRAY14_PREVALENCES",
    "ClassList",
    "ClassPrevalence",
    "DEConfig",
    "DEResult",
    "EnsembleFuseError",
    "EnsembleWeights",
    "LabelMatrix",
    "LinearModel",
    "LossConfig",
    "PredictionMatrix",
    "RocCurve",
    "SynthConfig",
    "SynthDataset",
    "ToyTrainConfig",
    "TrainResult",
    "ValidationError",
    "align",
    "asl_loss",
    "auc",
    "combined_loss",
    "combined_loss_grad",
    "compute_prevalence",
    "de_optimize",
    "de_search",
    "evaluate",
    "fuse",
    "generate",
    "project_to_simplex",
    "read_labels",
    "read_predictions",
    "roc_curve",
    "sample_class_weight",
    "simulate_models",
    "split_indices",
    "train_toy",
    "wbce_loss",
    "write_labels",
    "write_predictions",
]
