"""Desk-scale experiment harness: synthetic long-tail data and a toy trainer.

The generator draws standard-normal features, gives every class a latent
score (a random linear map of the features plus class-specific noise), and
labels the top round(N * prevalence) samples per class positive. Quantile
thresholding, rather than independent Bernoulli draws, hits the target
prevalences exactly; with tail classes at fractions of a percent, Bernoulli
sampling would regularly produce zero positives at desk scale.

``simulate_models`` turns the latent scores into K stand-in model outputs of
decreasing quality (additive noise per model, partially shared across models
to control ensemble diversity). ``train_toy`` fits a linear-sigmoid probe
with the combined loss, decoupled-weight-decay Adam, and early stopping on
validation mean AUC. The point of the probe is to exercise the loss and
ensemble machinery end to end, not to learn representations.

Every random draw descends from the single config seed, so repeated runs are
bit-identical.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ensemblefuse import kernels
from ensemblefuse.errors import EnsembleFuseError, ValidationError
from ensemblefuse.losses import ClassPrevalence, LossConfig
from ensemblefuse.metrics import mean_defined_auc
from ensemblefuse.model_io import ClassList, LabelMatrix, PredictionMatrix

# Published per-class positive rates of the ChestX-ray14 chest-pathology
# benchmark, the canonical long-tail multi-label profile (head class at 38%,
# tail class at 0.44%). Used as the default synthetic prevalence targets.
CHESTXRAY14_PREVALENCES: tuple[tuple[str, float], ...] = (
    ("Atelectasis", 0.2233),
    ("Consolidation", 0.0902),
    ("Infiltration", 0.3844),
    ("Pneumothorax", 0.1024),
    ("Edema", 0.0445),
    ("Emphysema", 0.0486),
    ("Fibrosis", 0.0326),
    ("Effusion", 0.2573),
    ("Pneumonia", 0.0276),
    ("Pleural_Thickening", 0.0654),
    ("Cardiomegaly", 0.0536),
    ("Nodule", 0.1223),
    ("Mass", 0.1117),
    ("Hernia", 0.0044),
)

# Std-dev of the intrinsic label noise relative to the unit-variance linear
# signal; keeps the best achievable AUC below 1 so training has headroom.
_LATENT_NOISE_STD = 0.5


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic dataset parameters; defaults mirror the long-tail benchmark."""

    n_samples: int = 5000
    class_names: tuple[str, ...] = tuple(name for name, _ in CHESTXRAY14_PREVALENCES)
    prevalences: tuple[float, ...] = tuple(p for _, p in CHESTXRAY14_PREVALENCES)
    n_features: int = 16
    model_noise: tuple[float, ...] = (0.5, 0.8)
    model_correlation: float = 0.6
    seed: int = 42

    def __post_init__(self) -> None:
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "prevalences", tuple(float(p) for p in self.prevalences))
        object.__setattr__(self, "model_noise", tuple(float(s) for s in self.model_noise))
        if self.n_samples < 1:
            raise ValidationError("n_samples must be positive")
        if self.n_features < 1:
            raise ValidationError("n_features must be positive")
        ClassList(self.class_names)  # reuse its name validation
        if len(self.prevalences) != len(self.class_names):
            raise ValidationError(
                f"{len(self.prevalences)} prevalences for {len(self.class_names)} classes"
            )
        for p in self.prevalences:
            if not 0.0 < p < 1.0:
                raise ValidationError(f"prevalence {p!r} must lie in (0, 1)")
        if any(s < 0.0 for s in self.model_noise):
            raise ValidationError("model noise levels must be nonnegative")
        if not self.model_noise:
            raise ValidationError("need at least one simulated model")
        if not 0.0 <= self.model_correlation <= 1.0:
            raise ValidationError("model_correlation must lie in [0, 1]")
        if self.seed < 0:
            raise ValidationError("seed must be nonnegative")
        if self.n_samples * min(self.prevalences) < 5.0:
            warnings.warn(
                "rarest class expects fewer than 5 positives at this n_samples; "
                "AUC estimates for it will be very noisy",
                stacklevel=2,
            )

    @property
    def classes(self) -> ClassList:
        return ClassList(self.class_names)


@dataclass(frozen=True)
class SynthDataset:
    """Features, exact-prevalence labels, and the label-defining latent scores."""

    features: np.ndarray
    labels: LabelMatrix
    latents: np.ndarray
    config: SynthConfig


def _rng_for(seed: int, stream: int) -> np.random.Generator:
    # independent deterministic streams per purpose, all derived from one seed
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stream,)))


def generate(cfg: SynthConfig) -> SynthDataset:
    """Draw the synthetic dataset with exact per-class positive counts."""
    rng = _rng_for(cfg.seed, 0)
    n, d, c = cfg.n_samples, cfg.n_features, len(cfg.class_names)
    features = rng.standard_normal((n, d))
    class_maps = rng.standard_normal((d, c))
    latents = features @ class_maps / np.sqrt(d) + _LATENT_NOISE_STD * rng.standard_normal((n, c))

    label_values = np.zeros((n, c))
    for j, prevalence in enumerate(cfg.prevalences):
        n_pos = _round_half_up(n * prevalence)
        if n_pos == 0:
            warnings.warn(
                f"class {cfg.class_names[j]!r}: target prevalence {prevalence} rounds "
                f"to 0 positives at n_samples={n}; class kept all-negative",
                stacklevel=2,
            )
            continue
        top = np.argpartition(latents[:, j], n - n_pos)[n - n_pos :]
        label_values[top, j] = 1.0

    labels = LabelMatrix(cfg.classes, label_values)
    return SynthDataset(features=features, labels=labels, latents=latents, config=cfg)


def simulate_models(latents: np.ndarray, cfg: SynthConfig) -> list[PredictionMatrix]:
    """Stand-in model outputs: noisy views of the latents, sigmoid-squashed.

    Model k adds noise of std model_noise[k]; a model_correlation fraction of
    the noise variance is shared across models, so correlation 1 makes the
    models redundant and correlation 0 makes their errors independent.
    """
    rng = _rng_for(cfg.seed, 1)
    classes = cfg.classes
    shared = rng.standard_normal(latents.shape)
    mix_shared = np.sqrt(cfg.model_correlation)
    mix_own = np.sqrt(1.0 - cfg.model_correlation)
    models = []
    for sigma in cfg.model_noise:
        own = rng.standard_normal(latents.shape)
        scores = latents + sigma * (mix_shared * shared + mix_own * own)
        models.append(PredictionMatrix(classes, _sigmoid(scores)))
    return models


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint train/test/val row indices covering the whole dataset."""

    train: np.ndarray
    test: np.ndarray
    val: np.ndarray

    def to_dict(self) -> dict:
        return {
            "train": [int(i) for i in self.train],
            "test": [int(i) for i in self.test],
            "val": [int(i) for i in self.val],
        }


def _validate_fractions(fractions) -> tuple[float, float, float]:
    if len(fractions) != 3:
        raise ValidationError("fractions must be (train, test, val)")
    fractions = tuple(float(f) for f in fractions)
    if any(f <= 0.0 for f in fractions):
        raise ValidationError("split fractions must be positive")
    if abs(sum(fractions) - 1.0) > 1e-12:
        raise ValidationError(f"split fractions sum to {sum(fractions)!r}, expected 1")
    return fractions


def split_indices(n_samples: int, fractions: tuple[float, float, float], seed: int) -> SplitIndices:
    """Seeded shuffle, then contiguous train/test/val partition.

    Test and val take round(n * fraction) rows each; train absorbs the
    rounding remainder.
    """
    fractions = _validate_fractions(fractions)
    n_test = _round_half_up(n_samples * fractions[1])
    n_val = _round_half_up(n_samples * fractions[2])
    n_train = n_samples - n_test - n_val
    if n_train < 1 or n_test < 1 or n_val < 1:
        raise ValidationError(
            f"empty partition: n={n_samples} with fractions {fractions} "
            f"gives train/test/val sizes {n_train}/{n_test}/{n_val}"
        )
    perm = np.random.default_rng(seed).permutation(n_samples)
    return SplitIndices(
        train=perm[:n_train],
        test=perm[n_train : n_train + n_test],
        val=perm[n_train + n_test :],
    )


@dataclass(frozen=True)
class ToyTrainConfig:
    """Linear-probe training protocol: Adam with decoupled weight decay,
    batch 64, 70/20/10 split, early stopping on validation mean AUC.

    Setting beta1 = beta2 = 0 switches the update to plain gradient descent
    (no moment estimates, no denominator), which is the mode the monotone
    full-batch descent check runs in.
    """

    learning_rate: float = 1e-2
    weight_decay: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    batch_size: int = 64
    max_epochs: int = 60
    patience: int = 10
    split: tuple[float, float, float] = (0.7, 0.2, 0.1)
    seed: int = 42

    def __post_init__(self) -> None:
        if self.learning_rate <= 0.0:
            raise ValidationError("learning_rate must be positive")
        if self.weight_decay < 0.0:
            raise ValidationError("weight_decay must be nonnegative")
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ValidationError("betas must lie in [0, 1)")
        if (self.beta1 == 0.0) != (self.beta2 == 0.0):
            raise ValidationError("set both betas to 0 (plain GD) or neither")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be positive")
        if self.max_epochs < 1:
            raise ValidationError("max_epochs must be positive")
        if self.patience < 1:
            raise ValidationError("patience must be positive")
        if self.seed < 0:
            raise ValidationError("seed must be nonnegative")
        object.__setattr__(self, "split", _validate_fractions(self.split))


@dataclass(frozen=True)
class LinearModel:
    """Linear-sigmoid probe: prediction = sigmoid(x @ weight + bias)."""

    weight: np.ndarray
    bias: np.ndarray

    def predict(self, features: np.ndarray) -> np.ndarray:
        return _sigmoid(features @ self.weight + self.bias)

    def predict_matrix(self, features: np.ndarray, classes: ClassList) -> PredictionMatrix:
        return PredictionMatrix(classes, self.predict(features))


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_mean_auc: float

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_mean_auc": self.val_mean_auc,
        }


@dataclass(frozen=True)
class TrainResult:
    model: LinearModel
    history: list[EpochStats]
    split: SplitIndices
    best_epoch: int
    prevalence: ClassPrevalence


_ADAM_EPS = 1e-8


def train_toy(
    features: np.ndarray,
    labels: LabelMatrix,
    loss_cfg: LossConfig,
    train_cfg: ToyTrainConfig,
) -> TrainResult:
    """Fit the linear probe on the train split, early-stop on val mean AUC.

    Class prevalence for the loss weights is computed on the training
    partition only. Early stopping restores the parameters of the best
    validation epoch. Raises on a non-finite training loss.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != labels.n_samples:
        raise ValidationError("features and labels disagree on sample count")
    n, d = features.shape
    c = labels.n_classes
    split = split_indices(n, train_cfg.split, train_cfg.seed)

    x_train = features[split.train]
    y_train = labels.values[split.train]
    x_val = features[split.val]
    y_val = labels.values[split.val]
    prevalence = ClassPrevalence(y_train.mean(axis=0))
    if loss_cfg.use_class_weights:
        w_pos, w_neg = np.exp(1.0 - prevalence.rho), np.exp(prevalence.rho)
    else:
        w_pos = w_neg = np.ones(c)

    weight = np.zeros((d, c))
    bias = np.zeros(c)
    m_w = np.zeros_like(weight)
    v_w = np.zeros_like(weight)
    m_b = np.zeros_like(bias)
    v_b = np.zeros_like(bias)
    step = 0
    plain_gd = train_cfg.beta1 == 0.0 and train_cfg.beta2 == 0.0

    shuffle_rng = _rng_for(train_cfg.seed, 2)
    n_train = x_train.shape[0]
    lr, wd = train_cfg.learning_rate, train_cfg.weight_decay
    gamma_pos, gamma_neg = float(loss_cfg.gamma_pos), float(loss_cfg.gamma_neg)
    margin, eps = float(loss_cfg.margin), float(loss_cfg.prob_clamp_epsilon)

    history: list[EpochStats] = []
    best_auc = -np.inf
    best_epoch = 0
    best_params = (weight.copy(), bias.copy())
    stall = 0

    for epoch in range(1, train_cfg.max_epochs + 1):
        order = shuffle_rng.permutation(n_train)
        for start in range(0, n_train, train_cfg.batch_size):
            idx = order[start : start + train_cfg.batch_size]
            x_b = x_train[idx]
            y_b = y_train[idx]
            probs = _sigmoid(x_b @ weight + bias)
            g_prob = kernels.loss_grad(probs, y_b, w_pos, w_neg, gamma_pos, gamma_neg, margin, eps)
            g_logit = g_prob * probs * (1.0 - probs)
            g_w = x_b.T @ g_logit
            g_b = g_logit.sum(axis=0)
            if plain_gd:
                weight -= lr * (g_w + wd * weight)
                bias -= lr * g_b
            else:
                step += 1
                m_w = train_cfg.beta1 * m_w + (1.0 - train_cfg.beta1) * g_w
                v_w = train_cfg.beta2 * v_w + (1.0 - train_cfg.beta2) * g_w**2
                m_b = train_cfg.beta1 * m_b + (1.0 - train_cfg.beta1) * g_b
                v_b = train_cfg.beta2 * v_b + (1.0 - train_cfg.beta2) * g_b**2
                bc1 = 1.0 - train_cfg.beta1**step
                bc2 = 1.0 - train_cfg.beta2**step
                weight -= lr * ((m_w / bc1) / (np.sqrt(v_w / bc2) + _ADAM_EPS) + wd * weight)
                bias -= lr * ((m_b / bc1) / (np.sqrt(v_b / bc2) + _ADAM_EPS) + wd * bias)

        train_probs = _sigmoid(x_train @ weight + bias)
        train_loss = float(
            kernels.loss_value(train_probs, y_train, w_pos, w_neg, gamma_pos, gamma_neg, margin, eps)
        )
        if not np.isfinite(train_loss):
            raise EnsembleFuseError(
                f"training diverged: non-finite loss at epoch {epoch} "
                f"(learning_rate={lr}, weight_decay={wd})"
            )
        val_probs = _sigmoid(x_val @ weight + bias)
        val_auc = mean_defined_auc(val_probs, y_val)
        if np.isnan(val_auc):
            raise ValidationError("AUC is undefined for every class on the validation split")
        history.append(EpochStats(epoch=epoch, train_loss=train_loss, val_mean_auc=val_auc))

        if val_auc > best_auc:
            best_auc = val_auc
            best_epoch = epoch
            best_params = (weight.copy(), bias.copy())
            stall = 0
        else:
            stall += 1
            if stall >= train_cfg.patience:
                break

    model = LinearModel(weight=best_params[0], bias=best_params[1])
    return TrainResult(
        model=model,
        history=history,
        split=split,
        best_epoch=best_epoch,
        prevalence=prevalence,
    )
