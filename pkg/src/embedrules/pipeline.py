"""End-to-end orchestration: ingest, cluster, fit rulebases, write reports.

A run directory after ``fit`` contains diff-able artifacts only:

    clusters.csv        id -> cluster assignment used as the fit target
    silhouette.csv/.png the k sweep (when a k range was given)
    features.csv        the interpretable features actually used
    trials.csv          per-trial metrics (accuracy, MCC, rules, antecedents)
    summary.csv/.md     mean +/- std over trials
    best_rulebase.json  winning trial's pruned rulebase (reloadable)
    rules.md            per-rule table: labels, dominance, accuracy
    history.csv/fitness.png   GA progress of the winning trial
    partitions.png      membership functions behind the winning rulebase
    config.json         resolved configuration echo

Trial i draws its GA seed from ``split_seed(seed, i)`` where index 1 is the
run seed itself, so a t-trial run is replayable as t single-trial runs.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import dataio, report
from .cluster import EmbeddingSet, kmeans, local_subset, sweep_k
from .dataio import FeatureMatrix
from .errors import ConfigError, IngestionMismatch
from .fuzzy import build_partition
from .ga import GaConfig, evolve, mcc
from .rules import RuleBase, ScoringContext, classify_batch, majority_class, per_rule_report
from .sentiment import batch_features, default_lexicon, load_lexicon


def split_seed(seed: int, index: int) -> int:
    """Deterministic seed for trial ``index`` (1-based); index 1 is the seed."""
    if index == 1:
        return int(seed)
    return int(np.random.SeedSequence((int(seed), int(index))).generate_state(1)[0])


@dataclass
class LocalConfig:
    anchor: str = "random"
    m: int = 1000


@dataclass
class RunConfig:
    embeddings: Path
    output_dir: Path
    seed: int
    texts: Optional[Path] = None
    features: Optional[Path] = None
    lexicon: Optional[Path] = None
    k: Optional[int] = None
    k_range: Optional[tuple[int, int]] = None
    kind: str = "it2"
    loss: str = "composite"
    trials: int = 30
    train_fraction: float = 1.0
    ga: GaConfig = field(default_factory=GaConfig)
    local: Optional[LocalConfig] = None

    def __post_init__(self):
        self.kind = self.kind.lower()
        self.loss = self.loss.lower()
        if (self.texts is None) == (self.features is None):
            raise ConfigError("provide exactly one of 'texts' or 'features'")
        if self.k is None and self.k_range is None:
            raise ConfigError("provide 'k' or 'k_range'")
        if self.k is not None and self.k_range is not None:
            raise ConfigError("'k' and 'k_range' are mutually exclusive")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not 0.0 < self.train_fraction <= 1.0:
            raise ConfigError("train_fraction must be in (0, 1]")
        if self.kind not in ("t1", "it2"):
            raise ConfigError(f"kind must be 't1' or 'it2', got {self.kind!r}")
        if self.local is not None and self.local.m < 1:
            raise ConfigError("local subset size must be positive")

    @classmethod
    def from_file(cls, path: str | Path, overrides: Optional[dict] = None) -> "RunConfig":
        path = Path(path)
        if path.suffix == ".json":
            doc = json.loads(path.read_text(encoding="utf-8"))
        elif path.suffix == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            doc = tomllib.loads(path.read_text(encoding="utf-8"))
        else:
            raise ConfigError(f"config must be .toml or .json, got {path.name}")
        if overrides:
            doc.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(doc, base_dir=path.parent)

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Optional[Path] = None) -> "RunConfig":
        doc = dict(doc)
        base = Path(base_dir) if base_dir else Path(".")

        def path_of(key):
            value = doc.pop(key, None)
            if value is None:
                return None
            value = Path(value)
            return value if value.is_absolute() else base / value

        ga_doc = doc.pop("ga", {})
        local_doc = doc.pop("local", None)
        known = {f.name for f in dataclasses.fields(cls)} - {"ga", "local"}
        paths = {key: path_of(key) for key in ("embeddings", "texts", "features", "lexicon", "output_dir")}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config option(s): {sorted(unknown)}")
        if paths["embeddings"] is None:
            raise ConfigError("config needs an 'embeddings' path")
        if paths["output_dir"] is None:
            raise ConfigError("config needs an 'output_dir' path")
        if "seed" not in doc:
            raise ConfigError("config needs a 'seed'")
        if "k_range" in doc and doc["k_range"] is not None:
            lo, hi = doc["k_range"]
            doc["k_range"] = (int(lo), int(hi))
        try:
            ga = GaConfig.from_dict(ga_doc) if not isinstance(ga_doc, GaConfig) else ga_doc
            local = None
            if local_doc is not None:
                local = local_doc if isinstance(local_doc, LocalConfig) else LocalConfig(**local_doc)
            return cls(
                embeddings=paths["embeddings"],
                texts=paths["texts"],
                features=paths["features"],
                lexicon=paths["lexicon"],
                output_dir=paths["output_dir"],
                ga=ga,
                local=local,
                **{k: v for k, v in doc.items() if k in known and k not in
                   ("embeddings", "texts", "features", "lexicon", "output_dir")},
            )
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        doc = {
            "embeddings": str(self.embeddings),
            "texts": None if self.texts is None else str(self.texts),
            "features": None if self.features is None else str(self.features),
            "lexicon": None if self.lexicon is None else str(self.lexicon),
            "output_dir": str(self.output_dir),
            "seed": self.seed,
            "k": self.k,
            "k_range": None if self.k_range is None else list(self.k_range),
            "kind": self.kind,
            "loss": self.loss,
            "trials": self.trials,
            "train_fraction": self.train_fraction,
            "ga": dataclasses.asdict(self.ga),
        }
        if self.local is not None:
            doc["local"] = dataclasses.asdict(self.local)
        return doc


@dataclass
class TrialSummary:
    trial: int
    seed: int
    accuracy: float
    mcc: float
    rule_count: int
    antecedent_count: int
    fitness: float
    heldout_accuracy: Optional[float] = None
    heldout_mcc: Optional[float] = None


def _ingest(config: RunConfig) -> tuple[EmbeddingSet, FeatureMatrix]:
    embeddings = dataio.read_embeddings_csv(config.embeddings)
    if config.features is not None:
        features = dataio.read_features_csv(config.features)
    else:
        lexicon = load_lexicon(config.lexicon) if config.lexicon else default_lexicon()
        pairs = dataio.read_texts_jsonl(config.texts)
        features = batch_features(
            [text for _, text in pairs], lexicon, ids=[doc_id for doc_id, _ in pairs]
        )
    return embeddings, dataio.align_by_id(embeddings, features)


def _aggregate(trials: list[TrialSummary]) -> dict:
    """Mean and population std (ddof=0) of the headline per-trial metrics."""
    out = {}
    for metric in ("accuracy", "mcc", "rule_count", "antecedent_count"):
        values = np.array([getattr(t, metric) for t in trials], dtype=float)
        out[metric] = (float(values.mean()), float(values.std()))
    return out


def _write_trials_csv(path: Path, trials: list[TrialSummary]) -> None:
    import csv

    heldout = any(t.heldout_accuracy is not None for t in trials)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["trial", "seed", "accuracy", "mcc", "rule_count", "antecedent_count", "fitness"]
        if heldout:
            header += ["heldout_accuracy", "heldout_mcc"]
        writer.writerow(header)
        for t in trials:
            row = [t.trial, t.seed, repr(t.accuracy), repr(t.mcc),
                   t.rule_count, t.antecedent_count, repr(t.fitness)]
            if heldout:
                row += [repr(t.heldout_accuracy), repr(t.heldout_mcc)]
            writer.writerow(row)


def _write_summary(outdir: Path, aggregate: dict) -> None:
    import csv

    with (outdir / "summary.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "mean", "std"])
        for metric, (mean, std) in aggregate.items():
            writer.writerow([metric, repr(mean), repr(std)])
    (outdir / "summary.md").write_text(
        report.markdown_summary_table(aggregate), encoding="utf-8"
    )


def fit_trials(
    features: FeatureMatrix, y: np.ndarray, config: RunConfig, class_count: int
) -> tuple[list[TrialSummary], dict]:
    """Run the multi-trial protocol; returns per-trial rows and the best trial."""
    trials: list[TrialSummary] = []
    best = None
    n = len(features)
    for index in range(1, config.trials + 1):
        trial_seed = split_seed(config.seed, index)
        if config.train_fraction < 1.0:
            rng = np.random.default_rng(trial_seed)
            perm = rng.permutation(n)
            cut = max(1, int(round(config.train_fraction * n)))
            train_idx, test_idx = perm[:cut], perm[cut:]
        else:
            train_idx, test_idx = np.arange(n), np.array([], dtype=int)
        X_train, y_train = features.values[train_idx], y[train_idx]
        variables = [
            build_partition(X_train[:, j], config.kind, name)
            for j, name in enumerate(features.columns)
        ]
        ga = dataclasses.replace(config.ga, seed=trial_seed, loss=config.loss)
        result = evolve(X_train, y_train, variables, ga, class_count=class_count)
        ctx = ScoringContext(variables, X_train, y_train)
        preds, _, _ = classify_batch(result.rulebase, ctx)
        accuracy = float((preds == y_train).mean())
        row = TrialSummary(
            trial=index,
            seed=trial_seed,
            accuracy=accuracy,
            mcc=result.fitness.mcc,
            rule_count=len(result.rulebase),
            antecedent_count=result.rulebase.antecedent_count(),
            fitness=result.fitness.total,
        )
        if len(test_idx):
            test_ctx = ScoringContext(variables, features.values[test_idx], y[test_idx])
            test_preds, _, _ = classify_batch(result.rulebase, test_ctx)
            row.heldout_accuracy = float((test_preds == y[test_idx]).mean())
            row.heldout_mcc = mcc(test_preds, y[test_idx], class_count)
        trials.append(row)
        if best is None or row.fitness > best["summary"].fitness:
            best = {"summary": row, "result": result, "variables": variables,
                    "train_idx": train_idx}
    return trials, best


def _run_core(embeddings: EmbeddingSet, features: FeatureMatrix,
              config: RunConfig, outdir: Path) -> dict:
    outdir.mkdir(parents=True, exist_ok=True)

    if config.k_range is not None:
        lo, hi = config.k_range
        rows, k = sweep_k(embeddings, range(lo, hi + 1), seed=config.seed)
        dataio.write_silhouette_csv(outdir / "silhouette.csv", rows)
        report.plot_silhouette_sweep(rows, outdir / "silhouette.png", best_k=k)
    else:
        rows, k = None, config.k
    assignment = kmeans(embeddings, k, seed=config.seed)
    dataio.write_clusters_csv(outdir / "clusters.csv", embeddings.ids, assignment.labels)
    dataio.write_features_csv(outdir / "features.csv", features)

    y = assignment.labels
    trials, best = fit_trials(features, y, config, class_count=k)

    _write_trials_csv(outdir / "trials.csv", trials)
    aggregate = _aggregate(trials)
    _write_summary(outdir, aggregate)

    best_rb: RuleBase = best["result"].rulebase
    dataio.save_rulebase(
        outdir / "best_rulebase.json",
        best_rb,
        extra={"trial": best["summary"].trial, "seed": best["summary"].seed},
    )
    train_idx = best["train_idx"]
    X_best, y_best = features.values[train_idx], y[train_idx]
    rows_report = per_rule_report(best_rb, X_best, y_best)
    (outdir / "rules.md").write_text(
        report.markdown_rule_table(best_rb, rows_report), encoding="utf-8"
    )
    dataio.write_history_csv(outdir / "history.csv", best["result"].history)
    report.plot_fitness_history(
        [dataclasses.asdict(h) for h in best["result"].history], outdir / "fitness.png"
    )
    report.plot_partitions(best["variables"], outdir / "partitions.png")
    (outdir / "config.json").write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return {
        "outdir": outdir,
        "k": k,
        "trials": trials,
        "aggregate": aggregate,
        "best": best,
        "silhouette": rows,
    }


def run_pipeline(config: RunConfig) -> dict:
    """The full global run: ingest, cluster, fit, report."""
    embeddings, features = _ingest(config)
    return _run_core(embeddings, features, config, Path(config.output_dir))


def _safe_dirname(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)


def run_local_explanation(config: RunConfig) -> dict:
    """Fit a rulebase on the neighbourhood of one anchor sample.

    The subset keeps the original file order, so a subset of size n
    reproduces the global run bit for bit.
    """
    if config.local is None:
        raise ConfigError("local explanation needs a [local] section or --anchor/--m")
    embeddings, features = _ingest(config)
    anchor = config.local.anchor
    if anchor == "random":
        rng = np.random.default_rng(config.seed)
        anchor = embeddings.ids[int(rng.integers(len(embeddings)))]
    subset = local_subset(embeddings, anchor, config.local.m)
    chosen = set(subset.ids)
    keep = [i for i, doc_id in enumerate(embeddings.ids) if doc_id in chosen]
    ordered = EmbeddingSet(
        ids=[embeddings.ids[i] for i in keep], matrix=embeddings.matrix[keep]
    )
    features_subset = features.select(ordered.ids)
    outdir = Path(config.output_dir) / "local" / _safe_dirname(anchor)
    result = _run_core(ordered, features_subset, config, outdir)
    result["anchor"] = anchor
    return result


def evaluate(rulebase_file: str | Path, features_file: str | Path,
             labels_file: str | Path) -> dict:
    """Re-score a saved rulebase on a feature file with ground-truth labels.

    Feature columns bind to rulebase variables by name, so column order in
    the CSV does not matter.
    """
    rulebase = dataio.load_rulebase(rulebase_file)
    features = dataio.read_features_csv(features_file)
    label_ids, labels = dataio.read_labels_csv(labels_file)
    features = features.select(label_ids)

    names = [v.name for v in rulebase.variables]
    missing = [name for name in names if name not in features.columns]
    if missing:
        raise ConfigError(
            f"feature file lacks column(s) {missing}; has {list(features.columns)}"
        )
    X = np.column_stack([features.column(name) for name in names])
    ctx = ScoringContext(rulebase.variables, X, labels)
    preds, _, _ = classify_batch(rulebase, ctx)
    accuracy = float((preds == labels).mean())
    rows = per_rule_report(rulebase, X, labels)
    return {
        "accuracy": accuracy,
        "mcc": mcc(preds, labels, rulebase.class_count),
        "n_samples": int(len(labels)),
        "rules": [
            {
                "rule": i,
                "dominance": row.dominance,
                "accuracy": row.accuracy,
                "fire_count": row.fire_count,
            }
            for i, row in enumerate(rows)
        ],
        "markdown": report.markdown_rule_table(rulebase, rows),
    }
