"""Fuzzy rules: firing strengths, dominance scores and winner-take-all inference.

A rule is a conjunction of (variable, label) antecedents with a class
consequent.  Its quality on a labelled dataset is the dominance score
``ds = support * confidence`` where

* support    - mean firing strength over the samples of the rule's own class;
* confidence - the rule's share of the total firing mass those samples give
               to the whole rulebase.

At inference time each sample goes to the consequent of the rule with the
highest association degree ``firing * ds``; samples no rule touches fall back
to the default class.  Interval (IT2) firing strengths are reduced to a
scalar by the midpoint of the interval before any of the statistics above.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyRuleBase, NotScored
from .fuzzy import LABELS, LinguisticVariable, TruthDegree

DEFAULT_MAX_RULES = 15
DEFAULT_MAX_ANTS = 3
DEFAULT_PRUNE_THRESHOLD = 0.05

_LABEL_INDEX = {label: i for i, label in enumerate(LABELS)}

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Antecedent:
    variable: int
    label: str

    def __post_init__(self):
        if self.label not in _LABEL_INDEX:
            raise ValueError(f"unknown label {self.label!r}")


@dataclass(frozen=True)
class Rule:
    antecedents: tuple[Antecedent, ...]
    consequent: int

    def __post_init__(self):
        if len(self.antecedents) == 0:
            raise ValueError("a rule needs at least one antecedent")
        seen = [a.variable for a in self.antecedents]
        if len(set(seen)) != len(seen):
            raise ValueError("duplicate variable in rule antecedents")

    def __len__(self):
        return len(self.antecedents)


@dataclass(frozen=True)
class ScoredPrediction:
    predicted_class: int
    winning_rule: Optional[int]
    association: float
    covered: bool


@dataclass
class RuleBase:
    """An ordered rule list over a fixed set of linguistic variables.

    ``support``, ``confidence`` and ``dominance`` are filled in by
    :meth:`score`; classification and pruning require them.
    """

    rules: list[Rule]
    variables: list[LinguisticVariable]
    class_count: int
    default_class: int = 0
    support: Optional[np.ndarray] = field(default=None, repr=False)
    confidence: Optional[np.ndarray] = field(default=None, repr=False)
    dominance: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        for rule in self.rules:
            if not 0 <= rule.consequent < self.class_count:
                raise ValueError(f"consequent {rule.consequent} outside [0, {self.class_count})")
            for ant in rule.antecedents:
                if not 0 <= ant.variable < len(self.variables):
                    raise ValueError(f"antecedent variable {ant.variable} out of range")

    def __len__(self):
        return len(self.rules)

    @property
    def scored(self) -> bool:
        return self.dominance is not None

    def require_scored(self):
        if not self.scored:
            raise NotScored("rulebase has no dominance scores yet; call score() first")

    def score(self, X: np.ndarray, y: np.ndarray) -> "RuleBase":
        """Compute and cache support, confidence and dominance on (X, y)."""
        return self.score_with(ScoringContext(self.variables, X, y))

    def score_with(self, ctx: "ScoringContext") -> "RuleBase":
        self.support, self.confidence = ctx.support_confidence(self.rules)
        self.dominance = self.support * self.confidence
        return self

    def antecedent_count(self) -> int:
        return sum(len(r) for r in self.rules)

    def to_dict(self) -> dict:
        self.require_scored()
        return {
            "class_count": self.class_count,
            "default_class": self.default_class,
            "variables": [v.to_dict() for v in self.variables],
            "rules": [
                {
                    "antecedents": [
                        {"variable": self.variables[a.variable].name, "label": a.label}
                        for a in rule.antecedents
                    ],
                    "consequent": rule.consequent,
                    "support": float(self.support[i]),
                    "confidence": float(self.confidence[i]),
                    "dominance": float(self.dominance[i]),
                }
                for i, rule in enumerate(self.rules)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RuleBase":
        variables = [LinguisticVariable.from_dict(v) for v in doc["variables"]]
        index = {v.name: i for i, v in enumerate(variables)}
        rules = []
        for entry in doc["rules"]:
            ants = tuple(
                Antecedent(index[a["variable"]], a["label"]) for a in entry["antecedents"]
            )
            rules.append(Rule(ants, entry["consequent"]))
        rb = cls(
            rules=rules,
            variables=variables,
            class_count=doc["class_count"],
            default_class=doc["default_class"],
        )
        rb.support = np.array([s["support"] for s in doc["rules"]], dtype=float)
        rb.confidence = np.array([s["confidence"] for s in doc["rules"]], dtype=float)
        rb.dominance = np.array([s["dominance"] for s in doc["rules"]], dtype=float)
        return rb


class ScoringContext:
    """Precomputed membership degrees for a fixed dataset and partition set.

    Building the (n, variables, labels) degree tensor once makes repeated
    rule evaluation (the GA inner loop) a handful of vector products per
    rule instead of per-sample membership calls.  Firing columns are memoised
    by antecedent signature because evolving populations re-evaluate many
    identical rules.
    """

    def __init__(self, variables: Sequence[LinguisticVariable], X: np.ndarray, y=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(variables):
            raise ValueError(
                f"feature matrix has {X.shape[1] if X.ndim == 2 else '?'} columns, "
                f"expected {len(variables)}"
            )
        n, n_vars = X.shape
        self.n = n
        self.y = None if y is None else np.asarray(y, dtype=int)
        self.lower = np.empty((n, n_vars, len(LABELS)))
        self.upper = np.empty((n, n_vars, len(LABELS)))
        for j, var in enumerate(variables):
            for k, label in enumerate(LABELS):
                lo, up = var.degree_bounds(label, X[:, j])
                self.lower[:, j, k] = lo
                self.upper[:, j, k] = up
        self._firing_cache: dict[tuple, np.ndarray] = {}

    def firing_column(self, rule: Rule) -> np.ndarray:
        """Scalar (midpoint-reduced) firing strength of one rule per sample."""
        key = tuple(sorted((a.variable, _LABEL_INDEX[a.label]) for a in rule.antecedents))
        cached = self._firing_cache.get(key)
        if cached is not None:
            return cached
        lo = np.ones(self.n)
        up = np.ones(self.n)
        for var, label in key:
            lo = lo * self.lower[:, var, label]
            up = up * self.upper[:, var, label]
        w = 0.5 * (lo + up)
        self._firing_cache[key] = w
        return w

    def firing_matrix(self, rules: Sequence[Rule]) -> np.ndarray:
        if len(rules) == 0:
            return np.zeros((self.n, 0))
        return np.column_stack([self.firing_column(r) for r in rules])

    def support_confidence(self, rules: Sequence[Rule]) -> tuple[np.ndarray, np.ndarray]:
        if self.y is None:
            raise ValueError("scoring needs ground-truth labels")
        W = self.firing_matrix(rules)
        support = np.zeros(len(rules))
        confidence = np.zeros(len(rules))
        consequents = np.array([r.consequent for r in rules], dtype=int)
        for cls in np.unique(consequents):
            mask = self.y == cls
            in_class = W[mask]
            rule_idx = np.flatnonzero(consequents == cls)
            if not mask.any():
                log.warning("no samples of class %d; support of its rules is 0", cls)
                continue
            numerators = in_class[:, rule_idx].sum(axis=0)
            support[rule_idx] = numerators / mask.sum()
            total_mass = in_class.sum()
            if total_mass > 0.0:
                confidence[rule_idx] = numerators / total_mass
        return support, confidence


def firing_strength(
    rule: Rule, x: Sequence[float], variables: Sequence[LinguisticVariable]
) -> TruthDegree:
    """Interval firing strength: the product of the antecedent truth degrees."""
    lo, up = 1.0, 1.0
    for ant in rule.antecedents:
        deg = variables[ant.variable].membership(ant.label, x[ant.variable])
        lo *= deg.lower
        up *= deg.upper
    return TruthDegree(lo, up)


def scalar_strength(degree: TruthDegree) -> float:
    """Midpoint reduction of an interval strength (identity for T1)."""
    return 0.5 * (degree.lower + degree.upper)


def support(rule: Rule, X: np.ndarray, y: np.ndarray,
            variables: Sequence[LinguisticVariable]) -> float:
    """Mean firing strength over the samples of the rule's consequent class."""
    ctx = ScoringContext(variables, X, y)
    mask = ctx.y == rule.consequent
    if not mask.any():
        return 0.0
    return float(ctx.firing_column(rule)[mask].mean())


def confidence(rule: Rule, rulebase: RuleBase, X: np.ndarray, y: np.ndarray) -> float:
    """The rule's share of the whole rulebase's firing mass on its class."""
    ctx = ScoringContext(rulebase.variables, X, y)
    mask = ctx.y == rule.consequent
    if not mask.any():
        return 0.0
    W = ctx.firing_matrix(rulebase.rules)
    denom = W[mask].sum()
    if denom <= 0.0:
        return 0.0
    return float(ctx.firing_column(rule)[mask].sum() / denom)


def dominance_score(rule: Rule, rulebase: RuleBase, X: np.ndarray, y: np.ndarray) -> float:
    return support(rule, X, y, rulebase.variables) * confidence(rule, rulebase, X, y)


def association_degree(rulebase: RuleBase, rule_index: int, x: Sequence[float]) -> float:
    """Inference-time score of one rule: scalar firing times cached dominance."""
    rulebase.require_scored()
    rule = rulebase.rules[rule_index]
    w = scalar_strength(firing_strength(rule, x, rulebase.variables))
    return w * float(rulebase.dominance[rule_index])


def classify(rulebase: RuleBase, x: Sequence[float]) -> ScoredPrediction:
    """Winner-take-all over association degrees; ties go to the lowest rule
    index, and a sample with all-zero associations falls back to the default
    class as uncovered."""
    rulebase.require_scored()
    if len(rulebase.rules) == 0:
        raise EmptyRuleBase("cannot classify with an empty rulebase")
    assoc = np.array([
        association_degree(rulebase, i, x) for i in range(len(rulebase.rules))
    ])
    best = int(np.argmax(assoc))
    if assoc[best] <= 0.0:
        return ScoredPrediction(rulebase.default_class, None, 0.0, False)
    return ScoredPrediction(rulebase.rules[best].consequent, best, float(assoc[best]), True)


def classify_batch(
    rulebase: RuleBase, ctx: ScoringContext
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised inference over a precomputed context.

    Returns (predictions, winning rule index with -1 for uncovered, covered).
    """
    rulebase.require_scored()
    if len(rulebase.rules) == 0:
        raise EmptyRuleBase("cannot classify with an empty rulebase")
    A = ctx.firing_matrix(rulebase.rules) * rulebase.dominance[None, :]
    winners = A.argmax(axis=1)
    covered = A[np.arange(ctx.n), winners] > 0.0
    consequents = np.array([r.consequent for r in rulebase.rules], dtype=int)
    preds = np.where(covered, consequents[winners], rulebase.default_class)
    return preds, np.where(covered, winners, -1), covered


def prune(rulebase: RuleBase, X: np.ndarray, y: np.ndarray, h: float) -> RuleBase:
    """Drop rules with dominance below ``h`` and rescore the survivors.

    Confidence depends on the rule population, so it (and the dominance
    built on it) is recomputed on the retained set.  Rule order is kept.
    """
    return prune_with(rulebase, ScoringContext(rulebase.variables, X, y), h)


def prune_with(rulebase: RuleBase, ctx: "ScoringContext", h: float) -> RuleBase:
    rulebase.require_scored()
    keep = [i for i, ds in enumerate(rulebase.dominance) if ds >= h]
    if not keep:
        raise EmptyRuleBase(f"no rule reaches dominance {h}")
    pruned = RuleBase(
        rules=[rulebase.rules[i] for i in keep],
        variables=rulebase.variables,
        class_count=rulebase.class_count,
        default_class=rulebase.default_class,
    )
    return pruned.score_with(ctx)


@dataclass(frozen=True)
class RuleReportRow:
    rule: Rule
    dominance: float
    accuracy: Optional[float]
    fire_count: int


def per_rule_report(rulebase: RuleBase, X: np.ndarray, y: np.ndarray) -> list[RuleReportRow]:
    """Per-rule dominance plus the accuracy over the samples the rule wins."""
    rulebase.require_scored()
    ctx = ScoringContext(rulebase.variables, X, y)
    _, winners, covered = classify_batch(rulebase, ctx)
    y = np.asarray(y, dtype=int)
    rows = []
    for i, rule in enumerate(rulebase.rules):
        won = (winners == i) & covered
        count = int(won.sum())
        accuracy = float((y[won] == rule.consequent).mean()) if count else None
        rows.append(RuleReportRow(rule, float(rulebase.dominance[i]), accuracy, count))
    return rows


def majority_class(y: np.ndarray) -> int:
    """Most frequent label, lowest index on ties; the uncovered-sample fallback."""
    counts = np.bincount(np.asarray(y, dtype=int))
    return int(counts.argmax())
