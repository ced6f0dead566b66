"""Configuration-driven pipeline: ingest, reduce, fuse, train, infer, report.

A single JSON config fully determines one experiment; a single seed fixes the
split, every weight initialization, every dropout stream, and therefore every
output byte. Unknown config keys are rejected so typos fail loudly. The
environment variable ``UQCLF_OUTPUT_ROOT`` may override where relative output
directories land; all other configuration lives in the config file.
"""

from __future__ import annotations

import json
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import baselines, mlp, pca, uq
from .data import (
    ClassVocabulary,
    FeatureTable,
    SplitIndices,
    default_vocabulary,
    load_feature_table,
    stratified_split,
)
from .fusion import fuse
from .metrics import (
    MetricReport,
    ReportRow,
    default_threshold_grid,
    evaluate_records,
    render_report_markdown,
    threshold_sweep,
    write_report_csv,
)
from .uq import EnsembleSet, PredictionRecord, write_pass_dump

OUTPUT_ROOT_ENV = "UQCLF_OUTPUT_ROOT"

MODELS = ("mlp", "logistic", "knn", "gaussian-nb")
UQ_METHODS = ("none", "mcd", "ensemble", "emcd")

_METHOD_LABEL = {"mcd": "MCD", "ensemble": "Ensemble", "emcd": "EMCD"}


class ConfigError(Exception):
    """Invalid experiment configuration; reported before any compute."""


@dataclass
class ExperimentConfig:
    inputs: list[str]
    output_dir: str
    model: str = "mlp"
    name: str = "experiment"
    vocab: tuple[str, ...] | None = None
    test_fraction: float = 0.2
    pca_components: list[int | None] | None = None
    fuse: bool | None = None
    uq_method: str = "none"
    n_members: int = 6
    t_passes: int = 50
    dropout_rate: float = 0.3
    pe_loss_enabled: bool = False
    t_train_passes: int = 5
    threshold: str | float = "auto"
    seed: int = 0
    epochs: int = 40
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    knn_k: int = 5
    l2_penalty: float = 0.0

    def __post_init__(self) -> None:
        if not self.inputs:
            raise ConfigError("inputs must list at least one feature-table path")
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.uq_method not in UQ_METHODS:
            raise ConfigError(f"uq_method must be one of {UQ_METHODS}, got {self.uq_method!r}")
        if self.uq_method in ("ensemble", "emcd"):
            if self.model != "mlp":
                raise ConfigError(f"uq_method {self.uq_method!r} requires model 'mlp'")
            if self.n_members < 2:
                raise ConfigError("ensemble and emcd require n_members >= 2")
        if self.uq_method == "mcd" and self.model != "mlp":
            raise ConfigError("uq_method 'mcd' requires model 'mlp'")
        if self.fuse is None:
            self.fuse = len(self.inputs) >= 2
        if self.fuse and len(self.inputs) < 2:
            raise ConfigError("fuse requires at least 2 input paths")
        if not self.fuse and len(self.inputs) >= 2:
            raise ConfigError("multiple inputs require fuse: true")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must be in (0, 1)")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout_rate must be in [0, 1)")
        if isinstance(self.threshold, str):
            if self.threshold != "auto":
                raise ConfigError("threshold must be 'auto' or a number in [0, 1]")
        elif not 0.0 <= float(self.threshold) <= 1.0:
            raise ConfigError("threshold must be 'auto' or a number in [0, 1]")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if self.t_passes < 1 or self.t_train_passes < 1:
            raise ConfigError("t_passes and t_train_passes must be >= 1")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError("optimizer must be 'adam' or 'sgd'")
        if isinstance(self.pca_components, int):
            self.pca_components = [self.pca_components] * len(self.inputs)
        if self.pca_components is not None and len(self.pca_components) != len(self.inputs):
            raise ConfigError(
                f"pca_components has {len(self.pca_components)} entries "
                f"for {len(self.inputs)} inputs"
            )
        if self.vocab is not None:
            self.vocab = tuple(self.vocab)

    @classmethod
    def from_dict(cls, raw: dict, name: str | None = None, base_dir: Path | None = None):
        """Build a config from parsed JSON, rejecting unknown keys."""
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(raw)
        if name is not None and "name" not in data:
            data["name"] = name
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        if base_dir is not None:
            cfg.inputs = [str((base_dir / p)) if not Path(p).is_absolute() else p for p in cfg.inputs]
            if not Path(cfg.output_dir).is_absolute() and OUTPUT_ROOT_ENV not in os.environ:
                cfg.output_dir = str(base_dir / cfg.output_dir)
        return cfg

    @classmethod
    def from_json_file(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(raw, name=path.stem, base_dir=path.parent)

    def resolved_output_dir(self) -> Path:
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root:
            return Path(root) / self.output_dir
        return Path(self.output_dir)

    def to_manifest_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["vocab"] = list(self.vocab) if self.vocab else list(default_vocabulary().names)
        return d


@dataclass
class RunOutcome:
    row: ReportRow
    report: MetricReport
    threshold: float
    output_dir: Path
    test_records: list[PredictionRecord] = field(repr=False, default_factory=list)


@contextmanager
def _stage(name: str):
    try:
        yield
    except ConfigError:
        raise
    except Exception as exc:
        raise RuntimeError(f"stage '{name}': {exc}") from exc


def _sample_seed(base_seed: int, ordinal: int) -> int:
    return int(np.random.SeedSequence([base_seed, ordinal]).generate_state(1)[0])


def _all_train_split(n: int, seed: int) -> SplitIndices:
    return SplitIndices(train=tuple(range(n)), test=(), seed=seed)


def _predict_records(cfg: ExperimentConfig, predictor, table: FeatureTable):
    records = []
    for i in range(table.n):
        x = table.features[i]
        sid = table.ids[i]
        label = int(table.labels[i])
        records.append(predictor(x, sid, label, _sample_seed(cfg.seed, i)))
    return records


def _make_predictor(cfg: ExperimentConfig, trained):
    """Close over the trained model(s) and return a per-sample record maker."""
    if cfg.model != "mlp":

        def baseline_pred(x, sid, label, _seed):
            probs = trained.predict_proba(x)
            return PredictionRecord(
                sample_id=sid,
                mean_probs=probs,
                entropy=mlp.predictive_entropy(probs),
                predicted=int(np.argmax(probs)),
                true_label=label,
                pass_probs=probs[None, :],
            )

        return baseline_pred

    if cfg.uq_method == "none":

        def det_pred(x, sid, label, _seed):
            probs = mlp.forward(trained, x)
            return PredictionRecord(
                sample_id=sid,
                mean_probs=probs,
                entropy=mlp.predictive_entropy(probs),
                predicted=int(np.argmax(probs)),
                true_label=label,
                pass_probs=probs[None, :],
            )

        return det_pred

    if cfg.uq_method == "mcd":
        return lambda x, sid, label, seed: uq.mcd_predict(
            trained, x, cfg.t_passes, seed, sample_id=sid, true_label=label, keep_passes=True
        )
    if cfg.uq_method == "ensemble":
        return lambda x, sid, label, _seed: uq.ensemble_predict(
            trained, x, sample_id=sid, true_label=label, keep_passes=True
        )
    return lambda x, sid, label, seed: uq.emcd_predict(
        trained, x, cfg.t_passes, seed, sample_id=sid, true_label=label, keep_passes=True
    )


def run_experiment(cfg: ExperimentConfig) -> RunOutcome:
    """Execute the full pipeline for one config and write its artifact files."""
    vocab = ClassVocabulary(cfg.vocab) if cfg.vocab else default_vocabulary()
    for path in cfg.inputs:
        if not Path(path).is_file():
            raise ConfigError(f"input file not found: {path}")
    out_dir = cfg.resolved_output_dir()

    with _stage("ingest"):
        sources = [load_feature_table(p, vocab) for p in cfg.inputs]
        first = sources[0]
        for s, other in enumerate(sources[1:], start=1):
            if other.ids != first.ids or not np.array_equal(other.labels, first.labels):
                raise ValueError(f"source {s} ids/labels disagree with source 0")

    with _stage("split"):
        split = stratified_split(first, cfg.test_fraction, cfg.seed)
        train_rows = list(split.train)
        val_rows: list[int] = []
        if cfg.threshold == "auto":
            # Threshold selection must never see test rows; carve 10% of train.
            train_sub = first.subset(train_rows)
            try:
                val_split = stratified_split(train_sub, 0.1, cfg.seed)
                val_rows = [train_rows[i] for i in val_split.test]
                train_rows = [train_rows[i] for i in val_split.train]
            except ValueError:
                val_rows = []  # classes too small to carve; fall back below

    with _stage("pca"):
        pca_models: list[pca.PcaModel | None] = []
        reduced = {"train": [], "val": [], "test": []}
        for s, src in enumerate(sources):
            k = cfg.pca_components[s] if cfg.pca_components else None
            if k is None:
                model = None
                parts = {
                    "train": src.subset(train_rows),
                    "val": src.subset(val_rows),
                    "test": src.subset(split.test),
                }
            else:
                model = pca.fit(src.features[train_rows], int(k))
                parts = {}
                for part, rows in (("train", train_rows), ("val", val_rows), ("test", split.test)):
                    sub = src.subset(rows)
                    parts[part] = FeatureTable(
                        ids=sub.ids,
                        features=pca.transform(model, sub.features),
                        labels=sub.labels,
                    )
            pca_models.append(model)
            for part in reduced:
                reduced[part].append(parts[part])

    with _stage("fuse"):
        if cfg.fuse:
            tables = {part: fuse(reduced[part]) for part in reduced}
        else:
            tables = {part: reduced[part][0] for part in reduced}

    with _stage("train"):
        train_tbl = tables["train"]
        member_seeds: list[int] = []
        if cfg.model == "mlp":
            train_all = _all_train_split(train_tbl.n, cfg.seed)
            n_models = cfg.n_members if cfg.uq_method in ("ensemble", "emcd") else 1
            members = []
            for i in range(n_models):
                seed_i = cfg.seed + i
                member_seeds.append(seed_i)
                model_i = mlp.init(train_tbl.d, vocab, cfg.dropout_rate, seed=seed_i)
                tc = mlp.TrainConfig(
                    epochs=cfg.epochs,
                    batch_size=cfg.batch_size,
                    learning_rate=cfg.learning_rate,
                    seed=seed_i,
                    pe_loss_enabled=cfg.pe_loss_enabled,
                    pe_train_passes=cfg.t_train_passes,
                    optimizer=cfg.optimizer,
                )
                members.append(mlp.train(model_i, train_tbl, train_all, tc))
            trained = members[0] if n_models == 1 else EnsembleSet(tuple(members))
        else:
            members = []
            trained = baselines.fit_baseline(
                cfg.model,
                train_tbl,
                _all_train_split(train_tbl.n, cfg.seed),
                vocab,
                knn_k=cfg.knn_k,
                l2_penalty=cfg.l2_penalty,
            )

    predictor = _make_predictor(cfg, trained)

    with _stage("threshold"):
        threshold_selection = "fixed"
        if cfg.threshold == "auto":
            if val_rows:
                val_records = _predict_records(cfg, predictor, tables["val"])
                threshold_selection = "sweep-val"
            else:
                # Degenerate carve (tiny classes): sweep on train, never test.
                val_records = _predict_records(cfg, predictor, tables["train"])
                threshold_selection = "sweep-train-fallback"
            threshold, _ = threshold_sweep(val_records, default_threshold_grid(), vocab)
        else:
            threshold = float(cfg.threshold)

    with _stage("inference"):
        test_records = _predict_records(cfg, predictor, tables["test"])

    with _stage("report"):
        report = evaluate_records(test_records, threshold, vocab)
        method = _METHOD_LABEL.get(cfg.uq_method, cfg.model)
        row = ReportRow(experiment=cfg.name, method=method, report=report)

        out_dir.mkdir(parents=True, exist_ok=True)
        write_report_csv([row], out_dir / "report.csv")
        (out_dir / "report.md").write_text(render_report_markdown([row]), encoding="utf-8")
        passes_dir = out_dir / "passes"
        passes_dir.mkdir(exist_ok=True)
        write_pass_dump(test_records, vocab, passes_dir / "test_passes.csv")

        models_dir = out_dir / "models"
        models_dir.mkdir(exist_ok=True)
        for s, pm in enumerate(pca_models):
            if pm is not None:
                pca.save(pm, models_dir / f"pca_src{s}")
        for i, member in enumerate(members):
            mlp.save_checkpoint(member, models_dir / f"member_{i:02d}")

        manifest = {
            "config": cfg.to_manifest_dict(),
            "package": "uqclf 0.1.0",
            "n_train": tables["train"].n,
            "n_val": len(val_rows),
            "n_test": tables["test"].n,
            "member_seeds": member_seeds,
            "threshold_resolved": threshold,
            "threshold_selection": threshold_selection,
            "reduced_dims": [t.d for t in reduced["train"]],
        }
        (out_dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    return RunOutcome(
        row=row,
        report=report,
        threshold=threshold,
        output_dir=out_dir,
        test_records=test_records,
    )


@dataclass
class GridOutcome:
    rows: list[ReportRow]
    failures: list[tuple[str, str]]  # (experiment name, error message)


def run_grid(configs: Sequence[ExperimentConfig]) -> GridOutcome:
    """Run every config; failures are recorded and the grid continues.

    Successful rows come back sorted by UAcc, descending.
    """
    if not configs:
        raise ConfigError("grid needs at least one config")
    rows: list[ReportRow] = []
    failures: list[tuple[str, str]] = []
    for cfg in configs:
        try:
            rows.append(run_experiment(cfg).row)
        except Exception as exc:
            failures.append((cfg.name, str(exc)))
    rows.sort(key=lambda r: -r.report.uacc)
    return GridOutcome(rows=rows, failures=failures)
