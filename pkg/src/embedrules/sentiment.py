"""Lexicon-driven extraction of the four interpretable text features.

The scorer is deliberately simple and fully documented so its output is
reproducible anywhere.  Normative formula, applied after tokenizing and
lemmatizing:

1. A token "hits" when the token itself, or its lemma, is a lexicon entry
   with valence v in [-1, 1] and subjectivity weight u in [0, 1].
2. Each hit is adjusted by its context window (the 3 tokens before it):
   ``a = clamp(v * product(intensifier multipliers in window), -1, 1)``,
   and the sign flips when the window contains a negator.
3. With W = number of word tokens (tokens containing a letter or digit)
   and H = number of hits:
       positivity   = clamp(sum of positive a / W, 0, 1)
       negativity   = clamp(sum of |negative a| / W, 0, 1)
       polarity     = clamp(sum of a / H, -1, 1)        (0 when H = 0)
       subjectivity = mean of u over hits               (0 when H = 0)

Because |a| <= 1 and every hit is a word token, positivity + negativity
never exceeds 1, and polarity always carries the sign of
positivity - negativity.

Precomputed features from any external analyzer can be ingested instead via
a CSV with header id,positivity,negativity,subjectivity,polarity.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dataio import FEATURE_COLUMNS, FeatureMatrix

NEGATION_WINDOW = 3

# words (incl. apostrophes inside), numbers, or single punctuation marks
_TOKEN_RE = re.compile(r"[^\W\d_]+(?:'[^\W\d_]+)*|\d+(?:[.,]\d+)*|[^\w\s]")

# clitics split off the host word, Penn-treebank style
_CONTRACTION_SUFFIXES = ("n't", "'s", "'re", "'ve", "'ll", "'d", "'m")

_WORDISH_RE = re.compile(r"\w", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercased word and punctuation tokens.

    Contractions are split on the clitic: don't -> do + n't, it's -> it + 's.
    """
    tokens: list[str] = []
    for raw in _TOKEN_RE.findall(text.lower()):
        for suffix in _CONTRACTION_SUFFIXES:
            if raw.endswith(suffix) and len(raw) > len(suffix):
                tokens.append(raw[: -len(suffix)])
                tokens.append(suffix)
                break
        else:
            tokens.append(raw)
    return tokens


_IRREGULAR = {
    "ran": "run", "went": "go", "gone": "go", "was": "be", "were": "be", "is": "be",
    "are": "be", "been": "be", "did": "do", "done": "do", "had": "have", "has": "have",
    "made": "make", "said": "say", "saw": "see", "seen": "see", "got": "get",
    "gave": "give", "given": "give", "took": "take", "taken": "take", "felt": "feel",
    "found": "find", "thought": "think", "told": "tell", "knew": "know", "known": "know",
    "men": "man", "women": "woman", "children": "child", "people": "person",
    "feet": "foot", "teeth": "tooth", "mice": "mouse", "geese": "goose",
    "better": "good", "best": "good", "worse": "bad", "worst": "bad",
}

_VOWELS = set("aeiou")


def _undouble(stem: str) -> str:
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in "lsz":
        return stem[:-1]
    return stem


def lemmatize(token: str) -> str:
    """Suffix-stripping lemmatizer; identity when no rule applies.

    Rules, in order: irregular table, plural -es/-s, participle -ing,
    past -ed, superlative -est / comparative -er.  Stems keep a minimum of
    three characters and doubled final consonants are collapsed.
    """
    if token in _IRREGULAR:
        return _IRREGULAR[token]
    if not token.isalpha() or len(token) <= 3:
        return token
    if token.endswith("sses"):
        return token[:-2]
    if token.endswith("es") and len(token) > 4 and token[-3] in "sxz":
        return token[:-2]
    if token.endswith("s") and not token.endswith(("ss", "us", "is")):
        return token[:-1]
    if token.endswith("ing") and len(token) > 5:
        stem = _undouble(token[:-3])
        if any(ch in _VOWELS for ch in stem):
            return stem
    if token.endswith("ed") and len(token) > 4:
        stem = _undouble(token[:-2])
        if stem.endswith("i"):
            return stem[:-1] + "y"
        if any(ch in _VOWELS for ch in stem):
            return stem
    if token.endswith("est") and len(token) > 5:
        return _undouble(token[:-3])
    if token.endswith("er") and len(token) > 4:
        return _undouble(token[:-2])
    return token


@dataclass(frozen=True)
class Lexicon:
    entries: dict
    negators: frozenset
    intensifiers: dict

    def __post_init__(self):
        for token in self.entries:
            if token != token.lower():
                raise ValueError(f"lexicon token not lowercase: {token!r}")

    def __len__(self):
        return len(self.entries)

    def lookup(self, token: str, lemma: str) -> Optional[tuple[float, float]]:
        hit = self.entries.get(token)
        if hit is None:
            hit = self.entries.get(lemma)
        return hit


@dataclass(frozen=True)
class SentimentFeatures:
    positivity: float
    negativity: float
    subjectivity: float
    polarity: float

    def as_row(self) -> tuple[float, float, float, float]:
        return (self.positivity, self.negativity, self.subjectivity, self.polarity)


def _read_lexicon_tsv(text: str) -> dict:
    entries = {}
    for i, line in enumerate(text.splitlines()):
        if not line.strip() or (i == 0 and line.startswith("token\t")):
            continue
        token, valence, weight = line.split("\t")
        entries[token] = (float(valence), float(weight))
    return entries


def _read_intensifiers_tsv(text: str) -> dict:
    out = {}
    for i, line in enumerate(text.splitlines()):
        if not line.strip() or (i == 0 and line.startswith("token\t")):
            continue
        token, mult = line.split("\t")
        out[token] = float(mult)
    return out


def load_lexicon(directory: str | Path) -> Lexicon:
    """Load lexicon.tsv, negators.txt and intensifiers.tsv from a directory."""
    directory = Path(directory)
    entries = _read_lexicon_tsv((directory / "lexicon.tsv").read_text(encoding="utf-8"))
    negators = frozenset(
        (directory / "negators.txt").read_text(encoding="utf-8").split()
    )
    intensifiers = _read_intensifiers_tsv(
        (directory / "intensifiers.tsv").read_text(encoding="utf-8")
    )
    return Lexicon(entries=entries, negators=negators, intensifiers=intensifiers)


def default_lexicon() -> Lexicon:
    """The lexicon bundled with the package (about 2k graded entries)."""
    data = resources.files("embedrules").joinpath("data")
    entries = _read_lexicon_tsv(data.joinpath("lexicon.tsv").read_text(encoding="utf-8"))
    negators = frozenset(data.joinpath("negators.txt").read_text(encoding="utf-8").split())
    intensifiers = _read_intensifiers_tsv(
        data.joinpath("intensifiers.tsv").read_text(encoding="utf-8")
    )
    return Lexicon(entries=entries, negators=negators, intensifiers=intensifiers)


def extract_features(
    text: str, lexicon: Lexicon, negation_window: int = NEGATION_WINDOW
) -> SentimentFeatures:
    """Score one text; see the module docstring for the exact formula."""
    if len(lexicon) == 0:
        raise ValueError("empty lexicon")
    tokens = tokenize(text)
    word_count = sum(1 for t in tokens if _WORDISH_RE.search(t))
    if word_count == 0:
        return SentimentFeatures(0.0, 0.0, 0.0, 0.0)

    adjusted: list[float] = []
    weights: list[float] = []
    for i, token in enumerate(tokens):
        hit = lexicon.lookup(token, lemmatize(token))
        if hit is None:
            continue
        valence, weight = hit
        window = tokens[max(0, i - negation_window) : i]
        for w in window:
            mult = lexicon.intensifiers.get(w)
            if mult is not None:
                valence *= mult
        if any(w in lexicon.negators for w in window):
            valence = -valence
        adjusted.append(min(1.0, max(-1.0, valence)))
        weights.append(weight)

    if not adjusted:
        return SentimentFeatures(0.0, 0.0, 0.0, 0.0)
    pos = sum(a for a in adjusted if a > 0) / word_count
    neg = sum(-a for a in adjusted if a < 0) / word_count
    polarity = sum(adjusted) / len(adjusted)
    return SentimentFeatures(
        positivity=min(1.0, max(0.0, pos)),
        negativity=min(1.0, max(0.0, neg)),
        subjectivity=float(np.mean(weights)),
        polarity=min(1.0, max(-1.0, polarity)),
    )


def batch_features(
    texts: Sequence[str], lexicon: Lexicon, ids: Optional[Sequence[str]] = None
) -> FeatureMatrix:
    """One row per text in the fixed column order of FEATURE_COLUMNS."""
    texts = list(texts)
    rows = [extract_features(text, lexicon).as_row() for text in texts]
    if ids is None:
        ids = [str(i) for i in range(len(texts))]
    return FeatureMatrix(
        values=np.array(rows, dtype=float).reshape(len(rows), len(FEATURE_COLUMNS)),
        columns=FEATURE_COLUMNS,
        ids=list(ids),
    )
