#!/usr/bin/env python3
"""Compute CLIP text embeddings for a JSON-lines corpus and write the
embeddings CSV consumed by the embedrules pipeline.

Texts longer than the 77-character window are split into greedy fixed-width
chunks and the per-chunk embeddings are averaged (elementwise mean).  With
--tokens the split happens on tokenizer tokens instead (75 content tokens
per chunk, leaving room for the BOS/EOS specials); spans are then mapped
back to character offsets so they still tile the text exactly.

Output values carry 9 significant digits, which round-trips through the
CSV reader at well below 1e-6 relative error.

Usage:
    extract.py --input texts.jsonl --output embeddings.csv [--tokens] [--model <name>]
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CHAR_LIMIT = 77
TOKEN_LIMIT = 75  # CLIP context of 77 minus the two special tokens
DEFAULT_MODEL = "openai/clip-vit-base-patch32"


class ExtractorError(Exception):
    pass


@dataclass(frozen=True)
class ChunkPlan:
    """Ordered, non-overlapping character spans that tile one text."""

    text_id: str
    spans: tuple[tuple[int, int], ...]

    def pieces(self, text: str) -> list[str]:
        return [text[a:b] for a, b in self.spans]


def chunk(text: str, text_id: str = "", limit: int = CHAR_LIMIT) -> ChunkPlan:
    """Greedy fixed-width character spans; the final span may be shorter."""
    if len(text) == 0:
        raise ExtractorError(f"text {text_id!r} is empty")
    spans = tuple(
        (start, min(start + limit, len(text))) for start in range(0, len(text), limit)
    )
    return ChunkPlan(text_id=text_id, spans=spans)


def chunk_by_tokens(text: str, token_offsets, text_id: str = "",
                    limit: int = TOKEN_LIMIT) -> ChunkPlan:
    """Spans holding at most ``limit`` tokens each, widened to tile the text.

    ``token_offsets`` is the tokenizer's (start, end) character offset per
    token.  Each chunk runs from its first token's start to the next chunk's
    first token start (end of text for the last one), so inter-token gaps
    stay attached and the spans reconstruct the text exactly.
    """
    if len(text) == 0:
        raise ExtractorError(f"text {text_id!r} is empty")
    offsets = [(a, b) for a, b in token_offsets if b > a]
    if not offsets:
        return ChunkPlan(text_id=text_id, spans=((0, len(text)),))
    starts = [offsets[i][0] for i in range(0, len(offsets), limit)]
    starts[0] = 0
    bounds = starts + [len(text)]
    spans = tuple((bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1))
    return ChunkPlan(text_id=text_id, spans=spans)


def average_chunks(vectors: np.ndarray) -> np.ndarray:
    """Elementwise mean over the chunk axis; identity for a single chunk."""
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2 or vectors.shape[0] == 0:
        raise ExtractorError("expected a non-empty (chunks, dim) array")
    return vectors.mean(axis=0)


def write_embeddings_csv(path, ids, matrix) -> None:
    """The primary pipeline's ingestion format, 9 significant digits."""
    matrix = np.asarray(matrix, dtype=float)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("id," + ",".join(f"e{i}" for i in range(matrix.shape[1])) + "\n")
        for doc_id, row in zip(ids, matrix):
            fh.write(str(doc_id) + "," + ",".join(f"{v:.9g}" for v in row) + "\n")


def read_texts_jsonl(path) -> list[tuple[str, str]]:
    pairs = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        doc = json.loads(line)
        if "id" not in doc or "text" not in doc:
            raise ExtractorError(f"{path}:{lineno}: object needs 'id' and 'text'")
        pairs.append((str(doc["id"]), str(doc["text"])))
    if not pairs:
        raise ExtractorError(f"{path}: no text records")
    return pairs


class ClipEncoder:
    """Text encoder backed by a locally available CLIP checkpoint."""

    def __init__(self, model_name: str = DEFAULT_MODEL):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise ExtractorError(f"transformers/torch unavailable: {exc}") from exc
        try:
            self.model = CLIPModel.from_pretrained(model_name)
            self.processor = CLIPProcessor.from_pretrained(model_name)
        except Exception as exc:
            raise ExtractorError(f"cannot load CLIP model {model_name!r}: {exc}") from exc
        self.torch = torch
        self.model.eval()

    def encode(self, pieces: list[str]) -> np.ndarray:
        inputs = self.processor(
            text=pieces, return_tensors="pt", padding=True, truncation=True, max_length=77
        )
        with self.torch.no_grad():
            feats = self.model.get_text_features(**inputs)
        return feats.cpu().numpy().astype(float)

    def token_offsets(self, text: str):
        enc = self.processor.tokenizer(
            text, add_special_tokens=False, return_offsets_mapping=True
        )
        return enc["offset_mapping"]


def embed_and_average(pairs, encoder, by_tokens: bool = False) -> tuple[list[str], np.ndarray]:
    """Per text: chunk, encode each piece, average.  Returns (ids, matrix)."""
    ids, rows = [], []
    for doc_id, text in pairs:
        if by_tokens:
            plan = chunk_by_tokens(text, encoder.token_offsets(text), text_id=doc_id)
        else:
            plan = chunk(text, text_id=doc_id)
        vectors = encoder.encode(plan.pieces(text))
        rows.append(average_chunks(vectors))
        ids.append(doc_id)
    return ids, np.vstack(rows)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--input", required=True, help="texts.jsonl with {id, text} lines")
    parser.add_argument("--output", required=True, help="embeddings CSV to write")
    parser.add_argument("--tokens", action="store_true",
                        help="split on tokenizer tokens instead of characters")
    parser.add_argument("--model", default=DEFAULT_MODEL, help="CLIP checkpoint name/path")
    args = parser.parse_args(argv)
    try:
        pairs = read_texts_jsonl(args.input)
        encoder = ClipEncoder(args.model)
        ids, matrix = embed_and_average(pairs, encoder, by_tokens=args.tokens)
        write_embeddings_csv(args.output, ids, matrix)
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(ids)} x {matrix.shape[1]} embeddings to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
