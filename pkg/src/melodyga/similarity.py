"""Directional n-gram containment similarity between melodies.

The similarity of a candidate to a target is the fraction of the candidate's
contiguous n-note windows that also occur somewhere in the target, comparing
notes by exact gene equality on the selected rows. Against a corpus the
maximum over targets is used. The function is pluggable: anything with the
signature of :func:`ngram_similarity` can drive the initial GA.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chromosome import GENE_ROWS, Chromosome

_FIELD_COLUMNS = {
    "accidental": (0,),
    "step": (1,),
    "octave": (2,),
    "duration": (3, 4),
}


class DegenerateSpectrumError(ValueError):
    """All raw scores of a run are equal, so min-max scaling is undefined."""


@dataclass(frozen=True)
class SimilarityConfig:
    n: int = 4
    match_fields: tuple[str, ...] = GENE_ROWS

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n-gram order must be at least 1")
        unknown = set(self.match_fields) - set(GENE_ROWS)
        if unknown or not self.match_fields:
            raise ValueError(f"bad match fields {self.match_fields!r}")
        object.__setattr__(self, "match_fields", tuple(self.match_fields))

    def columns(self) -> tuple[int, ...]:
        cols = []
        for name in GENE_ROWS:
            if name in self.match_fields:
                cols.extend(_FIELD_COLUMNS[name])
        return tuple(cols)


def _keys(c: Chromosome, cfg: SimilarityConfig):
    keys = c.note_keys()
    if cfg.match_fields == GENE_ROWS:
        return keys
    cols = cfg.columns()
    return [tuple(k[i] for i in cols) for k in keys]


def ngram_set(c: Chromosome, cfg: SimilarityConfig) -> frozenset:
    keys = _keys(c, cfg)
    n = cfg.n
    return frozenset(tuple(keys[i : i + n]) for i in range(len(keys) - n + 1))


def _ratio(cand_keys, target_grams, n) -> float:
    windows = len(cand_keys) - n + 1
    hits = sum(1 for i in range(windows) if tuple(cand_keys[i : i + n]) in target_grams)
    return hits / windows


def ngram_similarity(candidate: Chromosome, target: Chromosome, cfg: SimilarityConfig = SimilarityConfig()) -> float:
    if len(candidate) < cfg.n:
        raise ValueError(f"candidate has {len(candidate)} notes, fewer than n={cfg.n}")
    if len(target) < cfg.n:
        return 0.0
    return _ratio(_keys(candidate, cfg), ngram_set(target, cfg), cfg.n)


class TargetIndex:
    """Precomputed n-gram set of one target, for repeated scoring."""

    def __init__(self, target: Chromosome, cfg: SimilarityConfig = SimilarityConfig()):
        self.cfg = cfg
        self.target = target
        self.grams = ngram_set(target, cfg) if len(target) >= cfg.n else frozenset()

    def __call__(self, candidate: Chromosome) -> float:
        if len(candidate) < self.cfg.n:
            raise ValueError(f"candidate has {len(candidate)} notes, fewer than n={self.cfg.n}")
        if not self.grams:
            return 0.0
        return _ratio(_keys(candidate, self.cfg), self.grams, self.cfg.n)


class CorpusIndex:
    """N-gram sets for every member of a corpus."""

    def __init__(self, corpus: Sequence[Chromosome], cfg: SimilarityConfig = SimilarityConfig()):
        if not corpus:
            raise ValueError("corpus is empty")
        self.cfg = cfg
        self.targets = [TargetIndex(t, cfg) for t in corpus]

    def scores(self, candidate: Chromosome) -> list[float]:
        return [t(candidate) for t in self.targets]

    def best(self, candidate: Chromosome) -> tuple[int, float]:
        s = self.scores(candidate)
        i = int(np.argmax(s))
        return i, s[i]

    def __call__(self, candidate: Chromosome) -> float:
        return self.best(candidate)[1]


def corpus_similarity(candidate: Chromosome, corpus: Sequence[Chromosome], cfg: SimilarityConfig = SimilarityConfig()) -> float:
    if not corpus:
        raise ValueError("corpus is empty")
    return max(ngram_similarity(candidate, t, cfg) for t in corpus)


def normalize_spectrum(raw_scores: Sequence[float]) -> list[float]:
    """Min-max scale to [0, 100]."""
    if len(raw_scores) == 0:
        raise ValueError("no scores to normalize")
    s = np.asarray(raw_scores, dtype=np.float64)
    lo, hi = s.min(), s.max()
    if hi == lo:
        raise DegenerateSpectrumError("all raw scores are equal")
    out = 100.0 * (s - lo) / (hi - lo)
    return np.clip(out, 0.0, 100.0).tolist()
