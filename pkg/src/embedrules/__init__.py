"""embedrules: explain the cluster structure of text embeddings with a
compact fuzzy rulebase learned by a genetic algorithm."""

from .cluster import EmbeddingSet, kmeans, local_subset, silhouette, sweep_k
from .dataio import FEATURE_COLUMNS, FeatureMatrix, read_embeddings_csv, write_embeddings_csv
from .fuzzy import LinguisticVariable, TruthDegree, build_partition, empirical_quantile, membership
from .ga import FitnessBreakdown, GaConfig, composite_fitness, evolve, l1_size, l2_quality, mcc
from .pipeline import RunConfig, evaluate, run_local_explanation, run_pipeline, split_seed
from .rules import (
    Antecedent,
    Rule,
    RuleBase,
    ScoredPrediction,
    classify,
    dominance_score,
    firing_strength,
    per_rule_report,
    prune,
    scalar_strength,
)
from .sentiment import Lexicon, batch_features, default_lexicon, extract_features, tokenize

__version__ = "0.1.0"

__all__ = [
    "Antecedent",
    "EmbeddingSet",
    "FEATURE_COLUMNS",
    "FeatureMatrix",
    "FitnessBreakdown",
    "GaConfig",
    "Lexicon",
    "LinguisticVariable",
    "Rule",
    "RuleBase",
    "RunConfig",
    "ScoredPrediction",
    "TruthDegree",
    "batch_features",
    "build_partition",
    "classify",
    "composite_fitness",
    "default_lexicon",
    "dominance_score",
    "empirical_quantile",
    "evaluate",
    "evolve",
    "extract_features",
    "firing_strength",
    "kmeans",
    "l1_size",
    "l2_quality",
    "local_subset",
    "mcc",
    "membership",
    "per_rule_report",
    "prune",
    "read_embeddings_csv",
    "run_local_explanation",
    "run_pipeline",
    "scalar_strength",
    "silhouette",
    "split_seed",
    "sweep_k",
    "tokenize",
    "write_embeddings_csv",
]
