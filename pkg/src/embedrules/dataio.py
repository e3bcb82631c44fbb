"""File formats: delimited inputs and outputs, rulebase JSON, run configs.

Everything is plain CSV / JSON-lines / JSON so runs diff cleanly.  Floats are
written with ``repr`` (shortest round-trip form), which makes write -> read
bit-exact and two identical runs byte-identical.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .cluster import EmbeddingSet
from .errors import IngestionMismatch
from .rules import RuleBase

FEATURE_COLUMNS = ("positivity", "negativity", "subjectivity", "polarity")


@dataclass
class FeatureMatrix:
    """Rows of interpretable feature values with column names attached."""

    values: np.ndarray
    columns: tuple[str, ...]
    ids: list[str]
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.columns):
            raise ValueError("feature matrix shape does not match its columns")
        if len(self.ids) != self.values.shape[0]:
            raise ValueError("one id per feature row required")

    def __len__(self):
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def select(self, ids: Sequence[str]) -> "FeatureMatrix":
        index = {doc_id: i for i, doc_id in enumerate(self.ids)}
        missing = [doc_id for doc_id in ids if doc_id not in index]
        if missing:
            raise IngestionMismatch(
                f"{len(missing)} requested id(s) missing from features", missing
            )
        rows = [index[doc_id] for doc_id in ids]
        return FeatureMatrix(
            values=self.values[rows],
            columns=self.columns,
            ids=list(ids),
            labels=None if self.labels is None else self.labels[rows],
        )


def _fmt(value: float) -> str:
    return repr(float(value))


def read_embeddings_csv(path: str | Path) -> EmbeddingSet:
    """Read ``id,e0,...,e{d-1}`` rows; the width is inferred from the header."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "id" or len(header) < 2:
            raise IngestionMismatch(f"{path}: expected header id,e0,...,e{{d-1}}")
        width = len(header) - 1
        ids, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width + 1:
                raise IngestionMismatch(
                    f"{path}:{lineno}: expected {width + 1} columns, got {len(row)}"
                )
            ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
    if not rows:
        raise IngestionMismatch(f"{path}: no embedding rows")
    return EmbeddingSet(ids=ids, matrix=np.array(rows, dtype=float))


def write_embeddings_csv(path: str | Path, embeddings: EmbeddingSet) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"e{i}" for i in range(embeddings.dim)])
        for doc_id, row in zip(embeddings.ids, embeddings.matrix):
            writer.writerow([doc_id] + [_fmt(v) for v in row])


def read_texts_jsonl(path: str | Path) -> list[tuple[str, str]]:
    """JSON-lines of {"id": ..., "text": ...} pairs."""
    pairs = []
    path = Path(path)
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        doc = json.loads(line)
        if "id" not in doc or "text" not in doc:
            raise IngestionMismatch(f"{path}:{lineno}: object needs 'id' and 'text'")
        pairs.append((str(doc["id"]), str(doc["text"])))
    if not pairs:
        raise IngestionMismatch(f"{path}: no text records")
    return pairs


def read_features_csv(path: str | Path) -> FeatureMatrix:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "id":
            raise IngestionMismatch(f"{path}: first column must be 'id'")
        columns = tuple(header[1:])
        ids, rows = [], []
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
    if not rows:
        raise IngestionMismatch(f"{path}: no feature rows")
    return FeatureMatrix(values=np.array(rows, dtype=float), columns=columns, ids=ids)


def write_features_csv(path: str | Path, features: FeatureMatrix) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + list(features.columns))
        for doc_id, row in zip(features.ids, features.values):
            writer.writerow([doc_id] + [_fmt(v) for v in row])


def read_labels_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Cluster labels as written by write_clusters_csv (header id,cluster)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["id", "cluster"]:
            raise IngestionMismatch(f"{path}: expected header id,cluster")
        ids, labels = [], []
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            labels.append(int(row[1]))
    if not ids:
        raise IngestionMismatch(f"{path}: no label rows")
    return ids, np.array(labels, dtype=int)


def write_clusters_csv(path: str | Path, ids: Sequence[str], labels: np.ndarray) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "cluster"])
        for doc_id, label in zip(ids, labels):
            writer.writerow([doc_id, int(label)])


def write_silhouette_csv(path: str | Path, rows: Iterable[tuple[int, float]]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "silhouette"])
        for k, score in rows:
            writer.writerow([int(k), _fmt(score)])


def read_silhouette_csv(path: str | Path) -> list[tuple[int, float]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        return [(int(k), float(s)) for k, s in reader]


def write_history_csv(path: str | Path, history) -> None:
    """Per-generation GA progress for plotting."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["generation", "best_fitness", "mean_fitness", "best_mcc", "rules", "antecedents"]
        )
        for row in history:
            writer.writerow(
                [
                    row.generation,
                    _fmt(row.best_fitness),
                    _fmt(row.mean_fitness),
                    _fmt(row.best_mcc),
                    row.rules,
                    row.antecedents,
                ]
            )


def read_history_csv(path: str | Path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [
        {
            "generation": int(r["generation"]),
            "best_fitness": float(r["best_fitness"]),
            "mean_fitness": float(r["mean_fitness"]),
            "best_mcc": float(r["best_mcc"]),
            "rules": int(r["rules"]),
            "antecedents": int(r["antecedents"]),
        }
        for r in rows
    ]


def save_rulebase(path: str | Path, rulebase: RuleBase, extra: Optional[dict] = None) -> None:
    doc = rulebase.to_dict()
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_rulebase(path: str | Path) -> RuleBase:
    return RuleBase.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def align_by_id(embeddings: EmbeddingSet, features: FeatureMatrix) -> FeatureMatrix:
    """Reorder features to the embedding id order; complain listing strays."""
    emb_ids = set(embeddings.ids)
    feat_ids = set(features.ids)
    if emb_ids != feat_ids:
        offending = sorted(emb_ids.symmetric_difference(feat_ids))
        raise IngestionMismatch(
            f"embeddings and features disagree on {len(offending)} id(s): "
            + ", ".join(offending[:10])
            + ("..." if len(offending) > 10 else ""),
            offending,
        )
    return features.select(embeddings.ids)
