"""Configuration-driven experiment runner wiring features, models and metrics.

Every hyperparameter has a working default, so a bare run needs nothing
beyond input paths.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io as stio
from .autoencoder import encode, train_autoencoder
from .cluster import clustering_accuracy, evaluate_pipeline, kmeans, nmi
from .gae import train_stn_gae
from .graph import knn_graph_from_embeddings
from .io import EmbeddingMatrix
from .neural import NetworkSpec
from .sca import finetune_sca

SCHEMA_VERSION = 1
PIPELINES = ("baseline", "ae", "stn_gae", "sca_ae")
BASELINE_FEATURES = ("embeddings", "bow", "word2vec")


class ConfigError(ValueError):
    """Invalid or inconsistent pipeline configuration."""


@dataclass
class PipelineConfig:
    pipeline: str = "baseline"
    embeddings: str | None = None
    corpus: str | None = None
    labels: str | None = None
    word_vectors: str | None = None
    k: int | None = None

    baseline_features: str = "embeddings"
    bow_weighting: str = "tfidf"
    standardize: bool = False

    ae_layers: str = "d:500:500:2000:10"
    ae_epochs: int = 15
    ae_batch_size: int = 64
    ae_lr: float = 0.001

    knn_k: int = 10
    gae_layers: str = "d:64:32"
    gae_epochs: int = 300
    gae_lr: float = 0.002
    gae_neg_ratio: float = 1.0

    sca_layers: str = "d:500:500:2000:20"
    sca_pretrain_epochs: int = 15
    sca_batch_size: int = 64
    sca_lr: float = 0.01
    sca_momentum: float = 0.9
    sca_max_epochs: int = 100
    sca_tol: float = 0.001

    runs: int = 5
    base_seed: int = 0
    kmeans_restarts: int = 10
    reseed: str = "full"  # "full" retrains per run, "kmeans" reseeds only K-means

    def validate(self) -> None:
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"unknown pipeline {self.pipeline!r}; expected one of {PIPELINES}")
        if self.baseline_features not in BASELINE_FEATURES:
            raise ConfigError(f"unknown baseline_features {self.baseline_features!r}")
        if self.bow_weighting not in ("binary", "tfidf"):
            raise ConfigError(f"unknown bow_weighting {self.bow_weighting!r}")
        if self.reseed not in ("full", "kmeans"):
            raise ConfigError(f"unknown reseed mode {self.reseed!r}")
        for name in ("ae_epochs", "ae_batch_size", "gae_epochs", "knn_k", "sca_pretrain_epochs",
                     "sca_batch_size", "sca_max_epochs", "runs", "kmeans_restarts"):
            if getattr(self, name) < (0 if name == "gae_epochs" else 1):
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("ae_lr", "gae_lr", "sca_lr", "sca_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 <= self.sca_momentum < 1.0:
            raise ConfigError("sca_momentum must be in [0, 1)")
        if self.k is not None and self.k < 2:
            raise ConfigError("k must be >= 2")
        if self.k is None and self.labels is None:
            raise ConfigError("either k or a labels file is required")

        needs_corpus = self.pipeline == "baseline" and self.baseline_features in ("bow", "word2vec")
        if needs_corpus and self.corpus is None:
            raise ConfigError(f"baseline_features={self.baseline_features} requires a corpus file")
        if self.pipeline == "baseline" and self.baseline_features == "word2vec" and self.word_vectors is None:
            raise ConfigError("baseline_features=word2vec requires a word_vectors file")
        if not needs_corpus and self.embeddings is None:
            raise ConfigError(f"pipeline {self.pipeline!r} requires an embeddings file")
        for field_name in ("embeddings", "corpus", "labels", "word_vectors"):
            path = getattr(self, field_name)
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"{field_name} file not found: {path}")

    def to_dict(self) -> dict:
        out = {}
        for key, value in dataclasses.asdict(self).items():
            out[key] = str(value) if isinstance(value, Path) else value
        return out

    def replace(self, **kwargs) -> "PipelineConfig":
        return dataclasses.replace(self, **kwargs)

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "PipelineConfig":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in fields:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(fields[key], raw)
        return cls(**kwargs)


def _coerce(field: dataclasses.Field, raw):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if text == "" or text.lower() in ("none", "null"):
        return None
    ftype = field.type
    if "bool" in ftype:
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{field.name}: expected a boolean, got {raw!r}")
    try:
        if "int" in ftype:
            return int(text)
        if "float" in ftype:
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"{field.name}: {exc}") from exc
    return text


def parse_config_file(path) -> dict[str, str]:
    """Flat "key = value" lines; '#' starts a comment."""
    mapping: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line {lineno}: expected 'key = value', got {line!r}")
            key, value = line.split("=", 1)
            mapping[key.strip()] = value.strip()
    return mapping


def write_config_file(config: PipelineConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for key, value in config.to_dict().items():
            f.write(f"{key} = {'' if value is None else value}\n")


def load_config(path=None, overrides: dict[str, str] | None = None) -> PipelineConfig:
    mapping = parse_config_file(path) if path else {}
    mapping.update(overrides or {})
    return PipelineConfig.from_mapping(mapping)


def parse_layer_spec(spec: str, d: int) -> list[int]:
    """Expand "d:500:500:2000:10" with the actual input dimension."""
    sizes = []
    for part in spec.split(":"):
        part = part.strip()
        if part.lower() == "d":
            sizes.append(d)
        else:
            try:
                sizes.append(int(part))
            except ValueError as exc:
                raise ConfigError(f"bad layer spec {spec!r}: {exc}") from exc
    if len(sizes) < 2:
        raise ConfigError(f"layer spec {spec!r} needs at least two sizes")
    if any(s < 1 for s in sizes):
        raise ConfigError(f"layer spec {spec!r} has non-positive sizes")
    return sizes


def stream_seed(base_seed: int, name: str, index: int = 0) -> int:
    """Stable named sub-seed: independent streams per (name, index)."""
    digest = hashlib.sha256(f"{base_seed}:{name}:{index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def _standardize(X: np.ndarray) -> np.ndarray:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0.0] = 1.0
    return ((X - mean) / std).astype(np.float32)


def _load_features(config: PipelineConfig) -> tuple[np.ndarray, "stio.LabelVector | None", int]:
    labels = stio.read_labels(config.labels) if config.labels else None
    if config.pipeline == "baseline" and config.baseline_features == "bow":
        corpus = stio.read_corpus(config.corpus)
        X = stio.bow_features(corpus, weighting=config.bow_weighting).data
    elif config.pipeline == "baseline" and config.baseline_features == "word2vec":
        corpus = stio.read_corpus(config.corpus)
        table = stio.read_word_vectors(config.word_vectors)
        X = stio.average_word_vectors(corpus, table, oov_seed=stream_seed(config.base_seed, "oov")).embeddings.data
    else:
        X = stio.read_embeddings(config.embeddings).data
    if labels is not None and labels.n != X.shape[0]:
        raise ConfigError(f"{labels.n} labels for {X.shape[0]} samples")
    if config.standardize:
        X = _standardize(X)
    k = config.k if config.k is not None else labels.k
    if k > X.shape[0]:
        raise ConfigError(f"k={k} exceeds the {X.shape[0]} samples")
    return X, labels, k


def _metrics_from_runs(per_run: list[dict]) -> dict:
    accs = [r["acc"] for r in per_run]
    nmis = [r["nmi"] for r in per_run]
    return {
        "acc_mean": float(np.mean(accs)),
        "acc_std": float(np.std(accs)),
        "nmi_mean": float(np.mean(nmis)),
        "nmi_std": float(np.std(nmis)),
        "runs": len(per_run),
        "seeds": [r["seed"] for r in per_run],
    }


def _run_dir(out_dir: Path, seed: int) -> Path:
    d = out_dir / "runs" / f"seed_{seed}"
    d.mkdir(parents=True, exist_ok=True)
    return d


def _export_latent(Z: np.ndarray, path: Path) -> None:
    stio.write_embeddings(EmbeddingMatrix(data=np.asarray(Z, dtype=np.float32)), path)


def run_pipeline(config: PipelineConfig, out_dir) -> dict:
    """Execute the configured pipeline end to end and write all artifacts.

    Returns the report dict (also written to <out_dir>/report.json). Reports
    carry no timestamps so identical configs produce byte-identical files.
    """
    config.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    X, labels, k = _load_features(config)
    run_seeds = [config.base_seed + r for r in range(config.runs)]
    per_run: list[dict] = []

    if config.pipeline == "baseline":
        _export_latent(X, out_dir / "features.stce")
        report_metrics, per_run = _evaluate_fixed(X, labels, k, config, out_dir)
    elif config.reseed == "kmeans":
        Z = _train_latent(config, X, config.base_seed, _run_dir(out_dir, config.base_seed))
        report_metrics, per_run = _evaluate_fixed(Z, labels, k, config, out_dir)
    else:
        for seed in run_seeds:
            rd = _run_dir(out_dir, seed)
            if config.pipeline == "sca_ae":
                result_labels, Z = _train_sca(config, X, labels, k, seed, rd)
                entry = {"seed": seed}
                if labels is not None:
                    entry["acc"] = clustering_accuracy(labels, result_labels)
                    entry["nmi"] = nmi(labels, result_labels)
                per_run.append(entry)
            else:
                Z = _train_latent(config, X, seed, rd)
                km = kmeans(Z, k, restarts=config.kmeans_restarts, seed=seed)
                entry = {"seed": seed}
                if labels is not None:
                    entry["acc"] = clustering_accuracy(labels, km.labels)
                    entry["nmi"] = nmi(labels, km.labels)
                per_run.append(entry)
        report_metrics = _metrics_from_runs(per_run) if labels is not None else None

    report = {
        "schema_version": SCHEMA_VERSION,
        "pipeline": config.pipeline,
        "config": config.to_dict(),
        "metrics": report_metrics,
        "per_run": per_run,
    }
    with open(out_dir / "report.json", "w", encoding="utf-8") as f:
        json.dump(report, f, sort_keys=True, indent=2)
        f.write("\n")
    write_config_file(config, out_dir / "config.txt")
    return report


def _evaluate_fixed(Z: np.ndarray, labels, k: int, config: PipelineConfig, out_dir: Path):
    """Metrics for a fixed representation: K-means reseeded per run."""
    if labels is None:
        return None, [{"seed": s} for s in range(config.base_seed, config.base_seed + config.runs)]
    ev = evaluate_pipeline(Z, labels, k, runs=config.runs, base_seed=config.base_seed,
                           restarts=config.kmeans_restarts)
    per_run = [
        {"seed": s, "acc": a, "nmi": v}
        for s, a, v in zip(ev.seeds, ev.acc_values, ev.nmi_values)
    ]
    return ev.to_dict(), per_run


def _train_latent(config: PipelineConfig, X: np.ndarray, seed: int, run_dir: Path) -> np.ndarray:
    """Train the configured representation learner; exports latent + checkpoint."""
    if config.pipeline == "ae":
        spec = NetworkSpec(layer_sizes=parse_layer_spec(config.ae_layers, X.shape[1]))
        model, history = train_autoencoder(
            X, spec, epochs=config.ae_epochs, batch_size=config.ae_batch_size,
            lr=config.ae_lr, seed=stream_seed(seed, "init"))
        Z = encode(model, X)
        model.save(run_dir / "model.stck")
        _write_history(run_dir / "train_log.jsonl", [{"epoch": i, "mse": v} for i, v in enumerate(history)])
    elif config.pipeline == "stn_gae":
        graph = knn_graph_from_embeddings(X, config.knn_k)
        graph.save_edge_list(run_dir / "graph_edges.txt")
        spec = NetworkSpec(layer_sizes=parse_layer_spec(config.gae_layers, X.shape[1]))
        model, Z, history = train_stn_gae(
            X, graph, spec, epochs=config.gae_epochs, lr=config.gae_lr,
            seed=stream_seed(seed, "init"), neg_ratio=config.gae_neg_ratio)
        model.save(run_dir / "model.stck")
        _write_history(run_dir / "train_log.jsonl", [{"epoch": i, "bce": v} for i, v in enumerate(history)])
    else:
        raise ConfigError(f"pipeline {config.pipeline!r} does not produce a trained latent")
    _export_latent(Z, run_dir / "latent.stce")
    return Z


def _train_sca(config: PipelineConfig, X: np.ndarray, labels, k: int, seed: int, run_dir: Path):
    spec = NetworkSpec(layer_sizes=parse_layer_spec(config.sca_layers, X.shape[1]))
    model, _ = train_autoencoder(
        X, spec, epochs=config.sca_pretrain_epochs, batch_size=config.sca_batch_size,
        lr=config.ae_lr, seed=stream_seed(seed, "init"))
    result = finetune_sca(
        model, X, k, lr=config.sca_lr, momentum=config.sca_momentum,
        batch_size=config.sca_batch_size, max_epochs=config.sca_max_epochs,
        tol=config.sca_tol, seed=stream_seed(seed, "finetune"),
        true_labels=None if labels is None else labels.labels,
        log_path=run_dir / "sca_log.jsonl")
    model.save(run_dir / "model.stck")
    _export_latent(result.Z, run_dir / "latent.stce")
    return result.labels, result.Z


def _write_history(path: Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True) + "\n")


SWEEP_AXES = {
    "epochs": {"ae": "ae_epochs", "sca_ae": "sca_pretrain_epochs", "stn_gae": "gae_epochs"},
    "layer_spec": {"ae": "ae_layers", "sca_ae": "sca_layers", "stn_gae": "gae_layers"},
}


def run_sweep(config: PipelineConfig, axis: str, values: list, out_dir) -> list[dict]:
    """One run_pipeline per value; emits sweep.csv. Failed cells keep their row."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {sorted(SWEEP_AXES)}")
    if config.pipeline not in SWEEP_AXES[axis]:
        raise ConfigError(f"axis {axis!r} is not valid for pipeline {config.pipeline!r}")
    if not values:
        raise ConfigError("sweep needs a non-empty list of values")
    field_name = SWEEP_AXES[axis][config.pipeline]
    ftype = int if axis == "epochs" else str

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, value in enumerate(values):
        cell = {"value": value, "acc_mean": "", "acc_std": "", "nmi_mean": "", "nmi_std": ""}
        try:
            sub = config.replace(**{field_name: ftype(value)})
            report = run_pipeline(sub, out_dir / f"cell_{i}")
            if report["metrics"]:
                for key in ("acc_mean", "acc_std", "nmi_mean", "nmi_std"):
                    cell[key] = report["metrics"][key]
        except Exception as exc:  # keep sweeping, mark the cell
            cell["error"] = str(exc)
        rows.append(cell)

    with open(out_dir / "sweep.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["value", "acc_mean", "acc_std", "nmi_mean", "nmi_std"])
        for cell in rows:
            writer.writerow([cell["value"], cell["acc_mean"], cell["acc_std"],
                             cell["nmi_mean"], cell["nmi_std"]])
    return rows
