"""Simplex-constrained weighted-average fusion and the weight search.

Fusion is an entrywise convex combination of K prediction matrices, so the
result is always a valid probability matrix. The fusion weights are found
with differential evolution (rand/1/bin: random base vector, one scaled
difference pair, binomial crossover), maximizing the mean per-class AUC of
the fused matrix. Every candidate is projected back onto the simplex by
clipping negatives and renormalizing, so each evaluated point stays a legal
probability mixture.

The initial population always contains the K unit vectors and the uniform
vector. That makes "the ensemble is at least as good as its best member"
a deterministic guarantee rather than a statistical tendency: greedy
selection can never lose a seeded unit vector's objective.
"""

from __future__ import annotations

import json
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from ensemblefuse.errors import ValidationError
from ensemblefuse.metrics import mean_defined_auc
from ensemblefuse.model_io import LabelMatrix, PredictionMatrix, align

_STALL_TOLERANCE = 1e-12


@dataclass(frozen=True)
class EnsembleWeights:
    """Nonnegative per-model weights summing to 1."""

    w: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(np.asarray(self.w, dtype=np.float64))
        if arr.ndim != 1 or arr.size < 1:
            raise ValidationError("weights must be a non-empty 1-D vector")
        if np.any(arr < 0.0):
            raise ValidationError("weights must be nonnegative")
        if abs(float(arr.sum()) - 1.0) > 1e-12:
            raise ValidationError(f"weights sum to {arr.sum()!r}, expected 1")
        arr.setflags(write=False)
        object.__setattr__(self, "w", arr)

    def __len__(self) -> int:
        return self.w.size


@dataclass(frozen=True)
class DEConfig:
    """Differential-evolution hyperparameters (rand/1/bin defaults)."""

    population_size: int | None = None  # None: max(16, 10*K)
    mutation_factor: float = 0.5
    crossover_rate: float = 0.9
    max_generations: int = 200
    stall_generations: int = 30
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population_size is not None and self.population_size < 4:
            raise ValidationError("population_size must be at least 4")
        if not 0.0 < self.mutation_factor <= 2.0:
            raise ValidationError("mutation_factor must lie in (0, 2]")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValidationError("crossover_rate must lie in [0, 1]")
        if self.max_generations < 0:
            raise ValidationError("max_generations must be nonnegative")
        if self.stall_generations < 1:
            raise ValidationError("stall_generations must be positive")
        if self.seed < 0:
            raise ValidationError("seed must be nonnegative")


@dataclass(frozen=True)
class DEResult:
    """Best weights found, their objective, and the per-generation best trace."""

    weights: EnsembleWeights
    objective: float
    generations_run: int
    history: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "weights": [float(v) for v in self.weights.w],
            "objective": self.objective,
            "generations": self.generations_run,
            "history": [float(v) for v in self.history],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def project_to_simplex(v) -> EnsembleWeights:
    """Clip negatives to zero and renormalize; uniform if everything clips."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValidationError("weight vector must be non-empty and 1-D")
    clipped = np.maximum(arr, 0.0)
    total = float(clipped.sum())
    if total <= 0.0 or not np.isfinite(total):
        return EnsembleWeights(np.full(arr.size, 1.0 / arr.size))
    return EnsembleWeights(clipped / total)


def fuse(preds: Sequence[PredictionMatrix], weights: EnsembleWeights) -> PredictionMatrix:
    """Entrywise convex combination of K aligned prediction matrices."""
    preds = list(preds)
    if not preds:
        raise ValidationError("need at least one prediction matrix")
    if len(weights) != len(preds):
        raise ValidationError(f"{len(weights)} weights for {len(preds)} matrices")
    ref = preds[0]
    for k, m in enumerate(preds[1:], start=2):
        if m.classes != ref.classes:
            raise ValidationError(f"matrix {k}: class list differs from matrix 1")
        if m.n_samples != ref.n_samples:
            raise ValidationError(
                f"matrix {k}: {m.n_samples} samples, expected {ref.n_samples}"
            )
    stack = np.stack([m.values for m in preds])
    fused = np.tensordot(weights.w, stack, axes=1)
    # convexity keeps entries in [0, 1] up to rounding; clip the last ulp
    np.clip(fused, 0.0, 1.0, out=fused)
    return PredictionMatrix(ref.classes, fused)


def de_search(
    objective: Callable[[np.ndarray], float], n_weights: int, cfg: DEConfig
) -> DEResult:
    """Maximize an objective over the n_weights-simplex with rand/1/bin DE.

    Deterministic for a fixed seed. The population is at least K+1 so the
    seeded unit and uniform vectors always fit; remaining members are drawn
    uniformly from the simplex. Selection is greedy (ties replace, which
    keeps the search moving on the plateaus a rank objective produces), and
    the loop stops after ``stall_generations`` generations without the best
    objective improving by more than 1e-12.
    """
    k = int(n_weights)
    if k < 1:
        raise ValidationError("need at least one weight")
    rng = np.random.default_rng(cfg.seed)
    pop_size = cfg.population_size if cfg.population_size is not None else max(16, 10 * k)
    pop_size = max(pop_size, k + 1)

    pop = np.empty((pop_size, k))
    pop[:k] = np.eye(k)
    pop[k] = np.full(k, 1.0 / k)
    if pop_size > k + 1:
        pop[k + 1 :] = rng.dirichlet(np.ones(k), size=pop_size - k - 1)

    cache: dict[bytes, float] = {}

    def evaluate_cached(w: np.ndarray) -> float:
        key = w.tobytes()
        value = cache.get(key)
        if value is None:
            value = float(objective(w))
            cache[key] = value
        return value

    fitness = np.array([evaluate_cached(member) for member in pop])
    history = [float(fitness.max())]
    stall = 0
    generation = 0
    for generation in range(1, cfg.max_generations + 1):
        for i in range(pop_size):
            picks = rng.choice(pop_size - 1, size=3, replace=False)
            r1, r2, r3 = np.where(picks >= i, picks + 1, picks)
            mutant = pop[r1] + cfg.mutation_factor * (pop[r2] - pop[r3])
            cross = rng.random(k) < cfg.crossover_rate
            cross[rng.integers(k)] = True
            trial = project_to_simplex(np.where(cross, mutant, pop[i])).w
            trial_fitness = evaluate_cached(trial)
            if trial_fitness >= fitness[i]:
                pop[i] = trial
                fitness[i] = trial_fitness
        best = float(fitness.max())
        improved = best - history[-1] > _STALL_TOLERANCE
        history.append(best)
        stall = 0 if improved else stall + 1
        if stall >= cfg.stall_generations:
            break

    best_index = int(np.argmax(fitness))
    return DEResult(
        weights=EnsembleWeights(pop[best_index].copy()),
        objective=float(fitness[best_index]),
        generations_run=generation,
        history=history,
    )


def de_optimize(
    preds: Sequence[PredictionMatrix], labels: LabelMatrix, cfg: DEConfig
) -> DEResult:
    """Search fusion weights that maximize the fused matrix's mean AUC."""
    preds = list(preds)
    if len(preds) < 2:
        raise ValidationError(f"weight optimization needs at least 2 models, got {len(preds)}")
    align(preds, labels)
    label_values = labels.values
    pos_counts = label_values.sum(axis=0)
    if not np.any((pos_counts > 0) & (pos_counts < label_values.shape[0])):
        raise ValidationError("AUC is undefined for every class")

    stack = np.stack([m.values for m in preds])

    def objective(w: np.ndarray) -> float:
        fused = np.tensordot(w, stack, axes=1)
        np.clip(fused, 0.0, 1.0, out=fused)
        return mean_defined_auc(fused, label_values)

    return de_search(objective, len(preds), cfg)
