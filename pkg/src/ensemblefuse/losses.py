"""Multi-label losses for long-tail class imbalance, with analytic gradients.

Three related losses over probability matrices p and binary labels y, all
reduced as the arithmetic mean over samples of a per-sample sum over classes:

* ``wbce_loss``      prevalence-weighted binary cross-entropy,
                     per entry  -w * (y*log(p) + (1-y)*log(1-p))
                     with w = e**(1-rho) on positives and e**rho on negatives,
                     rho being the class's positive ratio;
* ``asl_loss``       asymmetric focal loss with separate focusing exponents,
                     per entry  -((1-p)**g+ * y*log(p) + pm**g- * (1-y)*log(1-pm))
                     where pm = max(p - margin, 0) shifts easy negatives to
                     zero contribution;
* ``combined_loss``  the product of both ideas: the asymmetric entry scaled
                     by the prevalence weight w.

Probabilities are clamped to [eps, 1-eps] before any log, so inputs at
exactly 0/1 are legal. ``combined_loss`` / ``combined_loss_grad`` run on the
selectable kernel backend (numba by default); ``wbce_loss`` and ``asl_loss``
are kept as independent straight-numpy routes so the reduction identities
between the three are meaningful checks rather than tautologies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ensemblefuse import kernels
from ensemblefuse.errors import ValidationError
from ensemblefuse.model_io import LabelMatrix, PredictionMatrix


@dataclass(frozen=True)
class ClassPrevalence:
    """Per-class positive ratio, computed exactly as positives / samples."""

    rho: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(np.asarray(self.rho, dtype=np.float64))
        if arr.ndim != 1:
            raise ValidationError("prevalence must be a 1-D vector")
        if arr.size == 0:
            raise ValidationError("prevalence vector is empty")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValidationError("prevalence entries must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "rho", arr)

    def __len__(self) -> int:
        return self.rho.size


@dataclass(frozen=True)
class LossConfig:
    """Hyperparameters of the combined loss.

    The defaults (gamma_pos=1, gamma_neg=4, margin=0.05) are the standard
    operating point for long-tail chest-pathology classification; setting
    both gammas and the margin to zero with class weights off reduces the
    combined loss to plain binary cross-entropy.
    """

    gamma_pos: float = 1.0
    gamma_neg: float = 4.0
    margin: float = 0.05
    use_class_weights: bool = True
    prob_clamp_epsilon: float = 1e-7

    def __post_init__(self) -> None:
        if self.gamma_pos < 0.0 or self.gamma_neg < 0.0:
            raise ValidationError("focusing exponents must be nonnegative")
        if not 0.0 <= self.margin < 1.0:
            raise ValidationError("margin must lie in [0, 1)")
        if not 0.0 < self.prob_clamp_epsilon < 0.5:
            raise ValidationError("prob_clamp_epsilon must lie in (0, 0.5)")


def compute_prevalence(labels: LabelMatrix) -> ClassPrevalence:
    """Exact per-class mean of the binary label columns."""
    return ClassPrevalence(labels.values.mean(axis=0))


def sample_class_weight(y: int, rho: float) -> float:
    """Per-entry imbalance weight: e**(1-rho) for a positive, e**rho for a negative."""
    if y not in (0, 1):
        raise ValidationError(f"label must be 0 or 1, got {y!r}")
    if not 0.0 <= rho <= 1.0:
        raise ValidationError(f"prevalence must lie in [0, 1], got {rho!r}")
    return math.exp(1.0 - rho) if y == 1 else math.exp(rho)


def _class_weight_vectors(
    prevalence: ClassPrevalence | None, n_classes: int, enabled: bool
) -> tuple[np.ndarray, np.ndarray]:
    if not enabled:
        ones = np.ones(n_classes)
        return ones, ones
    if prevalence is None:
        raise ValidationError("class weights enabled but no prevalence given")
    if len(prevalence) != n_classes:
        raise ValidationError(
            f"prevalence has {len(prevalence)} classes, matrices have {n_classes}"
        )
    return np.exp(1.0 - prevalence.rho), np.exp(prevalence.rho)


def _require_aligned(preds: PredictionMatrix, labels: LabelMatrix) -> None:
    if preds.classes != labels.classes:
        raise ValidationError("prediction and label class lists differ")
    if preds.n_samples != labels.n_samples:
        raise ValidationError(
            f"predictions have {preds.n_samples} samples, labels {labels.n_samples}"
        )


def wbce_loss(
    preds: PredictionMatrix,
    labels: LabelMatrix,
    prevalence: ClassPrevalence,
    cfg: LossConfig | None = None,
) -> float:
    """Prevalence-weighted binary cross-entropy, mean over samples."""
    cfg = cfg or LossConfig()
    _require_aligned(preds, labels)
    eps = cfg.prob_clamp_epsilon
    p = np.clip(preds.values, eps, 1.0 - eps)
    y = labels.values
    w_pos, w_neg = _class_weight_vectors(prevalence, preds.n_classes, cfg.use_class_weights)
    w = y * w_pos + (1.0 - y) * w_neg
    per_entry = w * (y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    return -float(per_entry.sum()) / preds.n_samples


def asl_loss(preds: PredictionMatrix, labels: LabelMatrix, cfg: LossConfig) -> float:
    """Asymmetric focal loss, mean over samples (no class weighting)."""
    _require_aligned(preds, labels)
    eps = cfg.prob_clamp_epsilon
    p = np.clip(preds.values, eps, 1.0 - eps)
    y = labels.values
    pm = np.maximum(p - cfg.margin, 0.0)
    per_entry = (1.0 - p) ** cfg.gamma_pos * y * np.log(p) + pm**cfg.gamma_neg * (
        1.0 - y
    ) * np.log(1.0 - pm)
    return -float(per_entry.sum()) / preds.n_samples


def combined_loss(
    preds: PredictionMatrix,
    labels: LabelMatrix,
    prevalence: ClassPrevalence,
    cfg: LossConfig,
) -> float:
    """Class-weighted asymmetric loss, mean over samples."""
    _require_aligned(preds, labels)
    w_pos, w_neg = _class_weight_vectors(prevalence, preds.n_classes, cfg.use_class_weights)
    return float(
        kernels.loss_value(
            preds.values,
            labels.values,
            w_pos,
            w_neg,
            float(cfg.gamma_pos),
            float(cfg.gamma_neg),
            float(cfg.margin),
            float(cfg.prob_clamp_epsilon),
        )
    )


def combined_loss_grad(
    preds: PredictionMatrix,
    labels: LabelMatrix,
    prevalence: ClassPrevalence,
    cfg: LossConfig,
) -> np.ndarray:
    """Entrywise d(combined_loss)/d(p), shape (n_samples, n_classes).

    At the margin kink (negative entry with p == margin) the one-sided
    derivative from below, exactly 0, is returned.
    """
    _require_aligned(preds, labels)
    w_pos, w_neg = _class_weight_vectors(prevalence, preds.n_classes, cfg.use_class_weights)
    return kernels.loss_grad(
        preds.values,
        labels.values,
        w_pos,
        w_neg,
        float(cfg.gamma_pos),
        float(cfg.gamma_neg),
        float(cfg.margin),
        float(cfg.prob_clamp_epsilon),
    )
