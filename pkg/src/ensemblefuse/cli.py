"""Batch command-line surface binding the modules into one workflow.

Subcommands::

    evaluate   per-class + mean AUC of one prediction file   -> JSON report
    optimize   differential-evolution fusion weights         -> JSON result
    fuse       weighted-average fusion of K prediction files -> CSV matrix
    loss       combined loss of predictions vs labels        -> JSON to stdout
    roc        ROC curve for one named class                 -> CSV curve
    synth      synthetic long-tail dataset + simulated models-> CSV/JSON files
    train      linear probe trained on a synth config        -> model + history

Conventions: JSON for reports, CSV for matrices; human-readable tables on
stdout, diagnostics on stderr. Exit codes: 0 success, 2 input validation
failure, 3 runtime failure. Every command is deterministic given its
arguments and seed; ``ENSEMBLEFUSE_SEED`` serves as a seed fallback when no
--seed flag is given.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from ensemblefuse import ensemble, losses, metrics, model_io, synthlab
from ensemblefuse.errors import EnsembleFuseError, ValidationError

_EXIT_OK = 0
_EXIT_VALIDATION = 2
_EXIT_RUNTIME = 3


def _resolve_seed(flag_value: int | None, config_value: int | None = None, default: int = 42) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get("ENSEMBLEFUSE_SEED", "").strip()
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"ENSEMBLEFUSE_SEED={env!r} is not an integer") from None
    if config_value is not None:
        return config_value
    return default


def _parse_fractions(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValidationError(f"--split must be three comma-separated fractions, got {text!r}")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise ValidationError(f"--split contains a non-numeric field: {text!r}") from None


def _parse_weights(text: str) -> np.ndarray:
    try:
        values = np.array([float(p) for p in text.split(",")], dtype=np.float64)
    except ValueError:
        raise ValidationError(f"--weights contains a non-numeric field: {text!r}") from None
    if values.size == 0:
        raise ValidationError("--weights is empty")
    return values


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _print_auc_table(report: metrics.AucReport) -> None:
    names = list(report.per_class) + ["Mean"]
    values = [
        "-" if report.per_class[n] is None else f"{report.per_class[n]:.4f}"
        for n in report.per_class
    ] + [f"{report.mean:.4f}"]
    widths = [max(len(n), len(v)) for n, v in zip(names, values)]
    print("  ".join(n.ljust(w) for n, w in zip(names, widths)))
    print("  ".join(v.ljust(w) for v, w in zip(values, widths)))


def _cmd_evaluate(args) -> int:
    preds = model_io.read_predictions(args.pred)
    labels = model_io.read_labels(args.labels)
    report = metrics.evaluate(preds, labels)
    _write_json(args.out, report.to_dict())
    _print_auc_table(report)
    for name in report.undefined_classes:
        print(f"note: AUC undefined for class {name!r} (single-valued labels)", file=sys.stderr)
    return _EXIT_OK


def _cmd_optimize(args) -> int:
    if len(args.pred) < 2:
        raise ValidationError(f"need at least 2 --pred files, got {len(args.pred)}")
    preds = [model_io.read_predictions(p) for p in args.pred]
    labels = model_io.read_labels(args.labels)
    cfg = ensemble.DEConfig(
        population_size=args.pop,
        mutation_factor=args.F,
        crossover_rate=args.CR,
        max_generations=args.max_gen,
        stall_generations=args.stall_gen,
        seed=_resolve_seed(args.seed),
    )
    result = ensemble.de_optimize(preds, labels, cfg)
    singles = [metrics.evaluate(m, labels).mean for m in preds]
    best_single = max(singles)
    ok = result.objective >= best_single - 1e-12
    print(
        f"seeded-population guarantee: fused mean AUC {result.objective:.6f} "
        f">= best single {best_single:.6f}: {'ok' if ok else 'VIOLATED'}",
        file=sys.stderr,
    )
    if not ok:
        raise EnsembleFuseError(
            "seeding guarantee violated; this indicates a defect in the weight search"
        )
    _write_json(args.out, result.to_dict())
    print(
        f"weights: {[round(float(w), 6) for w in result.weights.w]}  "
        f"mean AUC: {result.objective:.6f}  generations: {result.generations_run}"
    )
    return _EXIT_OK


def _cmd_fuse(args) -> int:
    preds = [model_io.read_predictions(p) for p in args.pred]
    raw = _parse_weights(args.weights)
    if raw.size != len(preds):
        raise ValidationError(f"{raw.size} weights for {len(preds)} prediction files")
    if np.any(raw < 0.0) or abs(float(raw.sum()) - 1.0) > 1e-12:
        weights = ensemble.project_to_simplex(raw)
        print(
            f"warning: weights {raw.tolist()} projected onto the simplex "
            f"-> {[float(w) for w in weights.w]}",
            file=sys.stderr,
        )
    else:
        weights = ensemble.EnsembleWeights(raw)
    fused = ensemble.fuse(preds, weights)
    model_io.write_predictions(fused, args.out)
    return _EXIT_OK


def _cmd_loss(args) -> int:
    preds = model_io.read_predictions(args.pred)
    labels = model_io.read_labels(args.labels)
    cfg = losses.LossConfig(
        gamma_pos=args.gamma_pos,
        gamma_neg=args.gamma_neg,
        margin=args.margin,
        use_class_weights=args.weighted,
    )
    prevalence = losses.compute_prevalence(labels)
    value = losses.combined_loss(preds, labels, prevalence, cfg)
    payload = {
        "loss": value,
        "config": {
            "gamma_pos": cfg.gamma_pos,
            "gamma_neg": cfg.gamma_neg,
            "margin": cfg.margin,
            "weighted": cfg.use_class_weights,
            "prob_clamp_epsilon": cfg.prob_clamp_epsilon,
        },
    }
    print(json.dumps(payload, indent=2))
    return _EXIT_OK


def _cmd_roc(args) -> int:
    preds = model_io.read_predictions(args.pred)
    labels = model_io.read_labels(args.labels)
    model_io.align([preds], labels)
    column = preds.classes.index(getattr(args, "class"))
    curve = metrics.roc_curve(preds.values[:, column], labels.values[:, column])
    curve.write_csv(args.out)
    return _EXIT_OK


# ---------------------------------------------------------------------------
# synth / train configuration files


def _dataclass_from_dict(cls, data: dict, context: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(
            f"{context}: unknown key(s) {sorted(unknown)}; known: {sorted(known)}"
        )
    return cls(**data)


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: top level must be a JSON object")
    known = {"seed", "synth", "loss", "train"}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"{path}: unknown section(s) {sorted(unknown)}; known: {sorted(known)}")
    return data


def _build_configs(args) -> tuple[synthlab.SynthConfig, losses.LossConfig, synthlab.ToyTrainConfig]:
    data = _load_config(args.config)
    seed = _resolve_seed(args.seed, data.get("seed"))

    synth_data = dict(data.get("synth", {}))
    synth_data.setdefault("seed", seed)
    if "class_names" in synth_data:
        synth_data["class_names"] = tuple(synth_data["class_names"])
    if "prevalences" in synth_data:
        synth_data["prevalences"] = tuple(synth_data["prevalences"])
    if "model_noise" in synth_data:
        synth_data["model_noise"] = tuple(synth_data["model_noise"])
    synth_cfg = _dataclass_from_dict(synthlab.SynthConfig, synth_data, "config section 'synth'")

    loss_cfg = _dataclass_from_dict(
        losses.LossConfig, dict(data.get("loss", {})), "config section 'loss'"
    )

    train_data = dict(data.get("train", {}))
    train_data.setdefault("seed", seed)
    if args.split is not None:
        train_data["split"] = _parse_fractions(args.split)
    elif "split" in train_data:
        train_data["split"] = tuple(train_data["split"])
    train_cfg = _dataclass_from_dict(synthlab.ToyTrainConfig, train_data, "config section 'train'")
    return synth_cfg, loss_cfg, train_cfg


def _effective_config_dict(
    synth_cfg: synthlab.SynthConfig,
    loss_cfg: losses.LossConfig,
    train_cfg: synthlab.ToyTrainConfig,
) -> dict:
    return {
        "synth": dataclasses.asdict(synth_cfg),
        "loss": dataclasses.asdict(loss_cfg),
        "train": dataclasses.asdict(train_cfg),
    }


def _write_split_slices(
    out: Path,
    labels: model_io.LabelMatrix,
    models: list[model_io.PredictionMatrix],
    model_names: list[str],
    split: synthlab.SplitIndices,
) -> None:
    for split_name, idx in (("train", split.train), ("test", split.test), ("val", split.val)):
        model_io.write_labels(
            model_io.LabelMatrix(labels.classes, labels.values[idx]),
            out / f"labels_{split_name}.csv",
        )
        for name, m in zip(model_names, models):
            model_io.write_predictions(
                model_io.PredictionMatrix(m.classes, m.values[idx]),
                out / f"{name}_{split_name}.csv",
            )


def _write_features_csv(features: np.ndarray, path) -> None:
    names = [f"f{j}" for j in range(features.shape[1])]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(names))
        fh.write("\n")
        for row in features:
            fh.write(",".join(format(v, ".17g") for v in row))
            fh.write("\n")


def _cmd_synth(args) -> int:
    synth_cfg, loss_cfg, train_cfg = _build_configs(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    dataset = synthlab.generate(synth_cfg)
    models = synthlab.simulate_models(dataset.latents, synth_cfg)
    model_names = [f"model_{k}" for k in range(1, len(models) + 1)]
    split = synthlab.split_indices(synth_cfg.n_samples, train_cfg.split, train_cfg.seed)

    _write_json(out / "synth_config.json", _effective_config_dict(synth_cfg, loss_cfg, train_cfg))
    _write_features_csv(dataset.features, out / "features.csv")
    model_io.write_labels(dataset.labels, out / "labels.csv")
    for name, m in zip(model_names, models):
        model_io.write_predictions(m, out / f"{name}.csv")
    _write_json(out / "splits.json", split.to_dict())
    _write_split_slices(out, dataset.labels, models, model_names, split)

    counts = dataset.labels.values.sum(axis=0).astype(int)
    print(
        f"wrote {len(models)} simulated models over {synth_cfg.n_samples} samples to {out}; "
        f"positives per class: {dict(zip(synth_cfg.class_names, (int(c) for c in counts)))}",
        file=sys.stderr,
    )
    return _EXIT_OK


def _cmd_train(args) -> int:
    synth_cfg, loss_cfg, train_cfg = _build_configs(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    # the dataset is regenerated from the config (cheap and bit-reproducible),
    # so train needs no handle to a synth output directory
    dataset = synthlab.generate(synth_cfg)
    result = synthlab.train_toy(dataset.features, dataset.labels, loss_cfg, train_cfg)

    _write_json(out / "train_config.json", _effective_config_dict(synth_cfg, loss_cfg, train_cfg))
    _write_json(
        out / "model.json",
        {
            "classes": list(synth_cfg.class_names),
            "weight": [[float(v) for v in row] for row in result.model.weight],
            "bias": [float(v) for v in result.model.bias],
            "best_epoch": result.best_epoch,
        },
    )
    _write_json(out / "history.json", {"epochs": [e.to_dict() for e in result.history]})

    classes = dataset.labels.classes
    for split_name, idx in (("val", result.split.val), ("test", result.split.test)):
        probe = result.model.predict_matrix(dataset.features[idx], classes)
        model_io.write_predictions(probe, out / f"toy_{split_name}.csv")
        model_io.write_labels(
            model_io.LabelMatrix(classes, dataset.labels.values[idx]),
            out / f"labels_{split_name}.csv",
        )
    best = result.history[result.best_epoch - 1]
    print(
        f"trained {len(result.history)} epochs (best epoch {result.best_epoch}, "
        f"val mean AUC {best.val_mean_auc:.4f}); outputs in {out}",
        file=sys.stderr,
    )
    return _EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ensemblefuse",
        description="Multi-label AUC evaluation, imbalance-aware losses, and "
        "differential-evolution ensemble weighting over prediction CSVs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="per-class and mean AUC of one prediction file")
    p.add_argument("--pred", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True, help="path of the JSON report")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("optimize", help="search fusion weights by differential evolution")
    p.add_argument("--pred", action="append", required=True, help="repeat for each model")
    p.add_argument("--labels", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--pop", type=int, default=None, help="population size (default max(16, 10K))")
    p.add_argument("--F", type=float, default=0.5, help="mutation factor")
    p.add_argument("--CR", type=float, default=0.9, help="crossover rate")
    p.add_argument("--max-gen", type=int, default=200, dest="max_gen")
    p.add_argument("--stall-gen", type=int, default=30, dest="stall_gen")
    p.add_argument("--out", required=True, help="path of the JSON result")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("fuse", help="weighted-average fusion of prediction files")
    p.add_argument("--pred", action="append", required=True, help="repeat for each model")
    p.add_argument("--weights", required=True, help="comma-separated weights, e.g. 0.6,0.4")
    p.add_argument("--out", required=True, help="path of the fused CSV")
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("loss", help="combined loss of predictions against labels")
    p.add_argument("--pred", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--gamma-pos", type=float, default=1.0, dest="gamma_pos")
    p.add_argument("--gamma-neg", type=float, default=4.0, dest="gamma_neg")
    p.add_argument("--margin", type=float, default=0.05)
    p.add_argument(
        "--weighted",
        action="store_true",
        help="scale entries by the prevalence weights e^(1-rho) / e^rho",
    )
    p.set_defaults(func=_cmd_loss)

    p = sub.add_parser("roc", help="ROC curve CSV for one class")
    p.add_argument("--pred", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--class", required=True, help="class name from the header")
    p.add_argument("--out", required=True, help="path of the threshold,fpr,tpr CSV")
    p.set_defaults(func=_cmd_roc)

    for name, func, help_text in (
        ("synth", _cmd_synth, "generate the synthetic long-tail dataset and simulated models"),
        ("train", _cmd_train, "train the linear probe on a synth config"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="JSON config; defaults when omitted")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--split", default=None, help="train,test,val fractions (default 0.7,0.2,0.1)")
        p.set_defaults(func=func)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_VALIDATION
    except (EnsembleFuseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
