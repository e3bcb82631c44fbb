"""Genetic search over rulebases plus the fitness functions it maximizes.

Candidate rulebases live in a fixed-length integer genome: ``max_rules``
blocks, each holding ``max_ants`` (variable, label) slots and one consequent
gene.  A variable gene of -1 marks an unused slot; blocks with no used slot
decode to nothing, so the genome can express anything from an empty rulebase
up to the full budget.

Fitness is either the Matthews correlation coefficient alone or a composite
that trades a little MCC for smaller rulebases:

    0.95 * MCC + 0.05 * (0.5 * (1 - mean_antecedent_fill) + 0.5 * high_ds_fraction)

The antecedent term enters as (1 - fill) so that leaner rules score higher;
both regularizers are bounded by the 0.05 weight.

Each individual is decoded, scored on the training data, pruned at the
dominance threshold, and only then evaluated, so the fitness reflects the
rulebase a user would actually get.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DegenerateSearch, EmptyRuleBase
from .fuzzy import LABELS, LinguisticVariable
from .rules import (
    DEFAULT_MAX_ANTS,
    DEFAULT_MAX_RULES,
    DEFAULT_PRUNE_THRESHOLD,
    Antecedent,
    Rule,
    RuleBase,
    ScoringContext,
    classify_batch,
    majority_class,
    prune_with,
)

UNUSED = -1

LOSS_MCC = "mcc"
LOSS_COMPOSITE = "composite"

# sentinel fitness for individuals that decode or prune to nothing;
# strictly below every attainable loss value
INVALID_FITNESS = -2.0


def mcc(predictions, truths, class_count: int) -> float:
    """Matthews correlation coefficient in [-1, 1].

    Two classes use the textbook TP/TN/FP/FN form; more classes use the
    confusion-matrix generalization.  A zero denominator yields 0.
    """
    preds = np.asarray(predictions, dtype=int)
    truth = np.asarray(truths, dtype=int)
    if preds.size == 0 or preds.shape != truth.shape:
        raise ValueError("predictions and truths must be equal-length and non-empty")
    if np.array_equal(preds, truth):
        # mathematically exactly 1 (or 0/0 -> 0 with a single class); the
        # general formula can land one ulp off
        return 1.0 if np.unique(truth).size > 1 else 0.0
    if class_count == 2:
        tp = float(np.sum((preds == 1) & (truth == 1)))
        tn = float(np.sum((preds == 0) & (truth == 0)))
        fp = float(np.sum((preds == 1) & (truth == 0)))
        fn = float(np.sum((preds == 0) & (truth == 1)))
        denom = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
        if denom == 0.0:
            return 0.0
        value = (tp * tn - fp * fn) / denom
    else:
        cm = np.zeros((class_count, class_count), dtype=float)
        np.add.at(cm, (truth, preds), 1.0)
        t = cm.sum(axis=1)  # true counts per class
        p = cm.sum(axis=0)  # predicted counts per class
        s = cm.sum()
        c = np.trace(cm)
        denom = math.sqrt(s * s - float(p @ p)) * math.sqrt(s * s - float(t @ t))
        if denom == 0.0:
            return 0.0
        value = (c * s - float(p @ t)) / denom
    return float(min(1.0, max(-1.0, value)))


def l1_size(rulebase: RuleBase, max_ants: int) -> float:
    """Mean antecedent fill: average of n_ants / max_ants over the rules."""
    if len(rulebase) == 0:
        raise EmptyRuleBase("antecedent-size term needs at least one rule")
    return sum(len(r) / max_ants for r in rulebase.rules) / len(rulebase)


def l2_quality(rulebase: RuleBase, h: float) -> float:
    """Fraction of rules whose dominance score strictly exceeds ``h``."""
    rulebase.require_scored()
    if len(rulebase) == 0:
        raise EmptyRuleBase("rule-quality term needs at least one rule")
    return float(np.mean(rulebase.dominance > h))


def composite_fitness(mcc_value: float, l1: float, l2: float) -> float:
    """Size-regularized loss; the antecedent term is flipped so smaller is better."""
    return 0.95 * mcc_value + 0.05 * (0.5 * (1.0 - l1) + 0.5 * l2)


@dataclass(frozen=True)
class FitnessBreakdown:
    mcc: float
    l1: float
    l2: float
    total: float


@dataclass
class GaConfig:
    max_rules: int = DEFAULT_MAX_RULES
    max_ants: int = DEFAULT_MAX_ANTS
    generations: int = 300
    population: int = 30
    crossover_prob: float = 0.9
    mutation_prob: Optional[float] = None  # None -> 1 / genome_length
    elitism_count: int = 1
    tournament_size: int = 3
    prune_threshold: float = DEFAULT_PRUNE_THRESHOLD
    loss: str = LOSS_COMPOSITE
    seed: int = 0

    def __post_init__(self):
        self.loss = self.loss.lower()
        if self.population < 2:
            raise ConfigError("population must be at least 2")
        if not 0 <= self.elitism_count <= self.population:
            raise ConfigError("elitism_count must lie in [0, population]")
        if self.generations < 1 or self.max_rules < 1 or self.max_ants < 1:
            raise ConfigError("generations, max_rules and max_ants must be positive")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ConfigError("crossover_prob must be a probability")
        if self.mutation_prob is not None and not 0.0 <= self.mutation_prob <= 1.0:
            raise ConfigError("mutation_prob must be a probability")
        if self.tournament_size < 1:
            raise ConfigError("tournament_size must be positive")
        if self.loss not in (LOSS_MCC, LOSS_COMPOSITE):
            raise ConfigError(f"loss must be 'mcc' or 'composite', got {self.loss!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "GaConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown GA option(s): {sorted(unknown)}")
        return cls(**doc)


class Encoding:
    """Gene layout for a fixed rule budget over a fixed variable set."""

    def __init__(self, max_rules: int, max_ants: int, n_vars: int, n_classes: int):
        self.max_rules = max_rules
        self.max_ants = max_ants
        self.n_vars = n_vars
        self.n_classes = n_classes
        self.block = 2 * max_ants + 1
        self.length = max_rules * self.block
        lows, highs = [], []
        for _ in range(max_rules):
            for _ in range(max_ants):
                lows += [UNUSED, 0]
                highs += [n_vars - 1, len(LABELS) - 1]
            lows.append(0)
            highs.append(n_classes - 1)
        self.lows = np.array(lows, dtype=np.int64)
        self.highs = np.array(highs, dtype=np.int64)

    def random(self, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(self.lows, self.highs + 1)

    def decode(
        self,
        genome: np.ndarray,
        variables: Sequence[LinguisticVariable],
        default_class: int,
    ) -> RuleBase:
        """Total decoding: any in-range genome yields a (possibly empty) rulebase.

        Blocks with no used slot vanish, duplicate variables within a rule
        keep their first occurrence, and exact duplicate rules (same
        antecedent set and consequent) collapse to one: under winner-take-all
        inference a copy can never change a decision, it only splits the
        confidence mass.
        """
        rules = []
        seen_rules = set()
        for r in range(self.max_rules):
            base = r * self.block
            seen = set()
            ants = []
            for a in range(self.max_ants):
                var = int(genome[base + 2 * a])
                label = int(genome[base + 2 * a + 1])
                if var == UNUSED or var in seen:
                    continue
                seen.add(var)
                ants.append(Antecedent(var, LABELS[label]))
            if not ants:
                continue
            consequent = int(genome[base + self.block - 1])
            key = (frozenset((a.variable, a.label) for a in ants), consequent)
            if key in seen_rules:
                continue
            seen_rules.add(key)
            rules.append(Rule(tuple(ants), consequent))
        return RuleBase(
            rules=rules,
            variables=list(variables),
            class_count=self.n_classes,
            default_class=default_class,
        )


def evaluate_rulebase(rulebase: RuleBase, ctx: ScoringContext, config: GaConfig) -> FitnessBreakdown:
    """Loss of an already scored (typically pruned) rulebase on ``ctx``."""
    preds, _, _ = classify_batch(rulebase, ctx)
    m = mcc(preds, ctx.y, rulebase.class_count)
    l1 = l1_size(rulebase, config.max_ants)
    l2 = l2_quality(rulebase, config.prune_threshold)
    total = m if config.loss == LOSS_MCC else composite_fitness(m, l1, l2)
    return FitnessBreakdown(mcc=m, l1=l1, l2=l2, total=total)


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_mcc: float
    rules: int
    antecedents: int


@dataclass
class EvolveResult:
    rulebase: RuleBase
    fitness: FitnessBreakdown
    history: list[GenerationStats]
    genome: np.ndarray = field(repr=False, default=None)


def _tournament(rng: np.random.Generator, keys: list, size: int) -> int:
    contenders = rng.integers(0, len(keys), size=size)
    return int(min(contenders, key=lambda c: (keys[c], c)))


def _two_point(rng, p1: np.ndarray, p2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    i, j = sorted(rng.integers(0, len(p1) + 1, size=2))
    c1 = np.concatenate([p1[:i], p2[i:j], p1[j:]])
    c2 = np.concatenate([p2[:i], p1[i:j], p2[j:]])
    return c1, c2


def evolve(
    X: np.ndarray,
    y: np.ndarray,
    variables: Sequence[LinguisticVariable],
    config: GaConfig,
    class_count: Optional[int] = None,
    default_class: Optional[int] = None,
) -> EvolveResult:
    """Run the seeded genetic search and return the best pruned rulebase.

    Selection is tournament, variation is two-point crossover plus per-gene
    uniform redraws, and the top ``elitism_count`` genomes survive unchanged,
    which makes the best-fitness history non-decreasing.  Comparisons use
    lexicographic parsimony pressure: equal fitness is broken toward fewer
    rules, then fewer antecedents, so redundant rules that do not pay for
    themselves drift out.  Everything is driven by one generator seeded from
    ``config.seed``, so identical configurations reproduce gene-for-gene.
    """
    y = np.asarray(y, dtype=int)
    if class_count is None:
        class_count = int(y.max()) + 1
    present = np.unique(y)
    missing = sorted(set(range(class_count)) - set(present.tolist()))
    if missing:
        raise ValueError(f"training data has no samples of class(es) {missing}")
    if default_class is None:
        default_class = majority_class(y)

    rng = np.random.default_rng(config.seed)
    encoding = Encoding(config.max_rules, config.max_ants, len(variables), class_count)
    mutation_prob = (
        config.mutation_prob if config.mutation_prob is not None else 1.0 / encoding.length
    )
    ctx = ScoringContext(variables, X, y)

    def assess(genome):
        decoded = encoding.decode(genome, variables, default_class)
        if len(decoded) == 0:
            return INVALID_FITNESS, None, None, True
        decoded.score_with(ctx)
        try:
            pruned = prune_with(decoded, ctx, config.prune_threshold)
        except EmptyRuleBase:
            return INVALID_FITNESS, None, None, False
        breakdown = evaluate_rulebase(pruned, ctx, config)
        return breakdown.total, breakdown, pruned, False

    population = [encoding.random(rng) for _ in range(config.population)]
    history: list[GenerationStats] = []
    best_ever = None  # (key, genome, breakdown, rulebase)

    for generation in range(config.generations):
        fitness = np.empty(config.population)
        breakdowns, rulebases = [], []
        keys = []
        all_empty = True
        for i, genome in enumerate(population):
            fitness[i], breakdown, pruned, empty = assess(genome)
            breakdowns.append(breakdown)
            rulebases.append(pruned)
            if pruned is None:
                keys.append((-INVALID_FITNESS, 0, 0))
            else:
                keys.append((-fitness[i], len(pruned), pruned.antecedent_count()))
            all_empty = all_empty and empty
        if all_empty:
            raise DegenerateSearch(
                f"every individual of generation {generation} decoded to an empty rulebase"
            )

        order = sorted(range(config.population), key=lambda i: (keys[i], i))
        top = order[0]
        if breakdowns[top] is not None and (best_ever is None or keys[top] < best_ever[0]):
            best_ever = (keys[top], population[top].copy(), breakdowns[top], rulebases[top])

        valid = fitness > INVALID_FITNESS
        best_breakdown = breakdowns[top]
        history.append(
            GenerationStats(
                generation=generation,
                best_fitness=float(fitness[top]),
                mean_fitness=float(fitness[valid].mean()) if valid.any() else INVALID_FITNESS,
                best_mcc=best_breakdown.mcc if best_breakdown else float("nan"),
                rules=len(rulebases[top]) if rulebases[top] else 0,
                antecedents=rulebases[top].antecedent_count() if rulebases[top] else 0,
            )
        )

        if generation == config.generations - 1:
            break

        next_population = [population[i].copy() for i in order[: config.elitism_count]]
        while len(next_population) < config.population:
            p1 = population[_tournament(rng, keys, config.tournament_size)]
            p2 = population[_tournament(rng, keys, config.tournament_size)]
            if rng.random() < config.crossover_prob:
                c1, c2 = _two_point(rng, p1, p2)
            else:
                c1, c2 = p1.copy(), p2.copy()
            for child in (c1, c2):
                mask = rng.random(encoding.length) < mutation_prob
                redraw = rng.integers(encoding.lows, encoding.highs + 1)
                child[mask] = redraw[mask]
            next_population.append(c1)
            if len(next_population) < config.population:
                next_population.append(c2)
        population = next_population

    if best_ever is None:
        raise DegenerateSearch("no individual survived pruning in any generation")
    _, genome, breakdown, rulebase = best_ever
    return EvolveResult(rulebase=rulebase, fitness=breakdown, history=history, genome=genome)
