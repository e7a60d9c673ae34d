"""Melody generation with genetic algorithms and a learned bi-LSTM scorer."""

__version__ = "0.1.0"

from ._jit import backend_name
from .chromosome import (
    Chromosome,
    GeneDistributions,
    Note,
    gene_distributions,
    random_melody,
    random_melody_uniform,
    transpose_octave,
)
from .evolution import FitnessConfig, GaConfig, RunHistory, evolve, main_fitness
from .notation import TuneHeader, parse_corpus, serialize_tune
from .records import DatasetRecord
from .rhythm import rhythm_cost
from .similarity import SimilarityConfig, corpus_similarity, ngram_similarity

__all__ = [
    "Chromosome",
    "DatasetRecord",
    "FitnessConfig",
    "GaConfig",
    "GeneDistributions",
    "Note",
    "RunHistory",
    "SimilarityConfig",
    "TuneHeader",
    "backend_name",
    "corpus_similarity",
    "evolve",
    "gene_distributions",
    "main_fitness",
    "ngram_similarity",
    "parse_corpus",
    "random_melody",
    "random_melody_uniform",
    "rhythm_cost",
    "serialize_tune",
    "transpose_octave",
]
