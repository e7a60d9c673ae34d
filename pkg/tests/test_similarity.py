from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from melodyga.chromosome import Chromosome, random_melody_uniform
from melodyga.similarity import (
    CorpusIndex,
    DegenerateSpectrumError,
    SimilarityConfig,
    TargetIndex,
    corpus_similarity,
    ngram_similarity,
    normalize_spectrum,
)

from .strategies import chromosomes


def naive_similarity(cand, target, n=4, fields=(0, 1, 2, 3)):
    """All-pairs window comparison, note by note."""
    cn, tn = cand.notes, target.notes
    if len(tn) < n:
        return 0.0

    def same(a, b):
        va = (a.accidental, a.step, a.octave, a.duration)
        vb = (b.accidental, b.step, b.octave, b.duration)
        return all(va[f] == vb[f] for f in fields)

    windows = len(cn) - n + 1
    hits = 0
    for i in range(windows):
        for j in range(len(tn) - n + 1):
            if all(same(cn[i + k], tn[j + k]) for k in range(n)):
                hits += 1
                break
    return hits / windows


def small_melody(rng, lo=4, hi=30, steps=8):
    n = int(rng.integers(lo, hi + 1))
    return Chromosome(
        np.zeros(n, dtype=int), rng.integers(1, steps, n), np.full(n, 4), rng.integers(1, 3, n), np.ones(n, dtype=int)
    )


def test_identity_and_disjoint():
    rng = np.random.default_rng(0)
    c = random_melody_uniform(12, rng)
    assert ngram_similarity(c, c) == 1.0
    a = Chromosome.from_tuples([(0, s, 4, 1) for s in (1, 2, 3, 1, 2)])
    b = Chromosome.from_tuples([(0, s, 4, 1) for s in (5, 6, 7, 5, 6, 7)])
    assert ngram_similarity(a, b) == 0.0


def test_one_of_three_windows_matches():
    target = Chromosome.from_tuples([(0, s, 4, 1) for s in (7, 1, 2, 3, 4, 7)])
    cand = Chromosome.from_tuples([(0, s, 4, 1) for s in (1, 2, 3, 4, 5, 5)])
    assert ngram_similarity(cand, target) == pytest.approx(1 / 3, abs=0)
    assert ngram_similarity(cand, target) == naive_similarity(cand, target)


def test_not_symmetric():
    short = Chromosome.from_tuples([(0, s, 4, 1) for s in (1, 2, 3, 4)])
    long = Chromosome.from_tuples([(0, s, 4, 1) for s in (1, 2, 3, 4, 5, 6, 7, 1)])
    assert ngram_similarity(short, long) == 1.0
    assert ngram_similarity(long, short) == 0.2


def test_length_guards():
    c3 = Chromosome.from_tuples([(0, 1, 4, 1)] * 3)
    c5 = Chromosome.from_tuples([(0, 1, 4, 1)] * 5)
    with pytest.raises(ValueError):
        ngram_similarity(c3, c5)
    assert ngram_similarity(c5, c3) == 0.0


def test_duration_compared_exactly():
    a = Chromosome.from_tuples([(0, 1, 4, F(1, 2))] * 4)
    b = Chromosome.from_tuples([(0, 1, 4, F(1, 2))] * 3 + [(0, 1, 4, F(2, 4))])
    assert ngram_similarity(a, b) == 1.0
    c = Chromosome.from_tuples([(0, 1, 4, F(1, 2))] * 3 + [(0, 1, 4, F(1, 3))])
    assert ngram_similarity(a, c) == 0.0


def test_match_fields_subset():
    a = Chromosome.from_tuples([(0, s, 4, 1) for s in (1, 2, 3, 4)])
    b = Chromosome.from_tuples([(0, s, 5, 2) for s in (1, 2, 3, 4)])
    assert ngram_similarity(a, b) == 0.0
    assert ngram_similarity(a, b, SimilarityConfig(match_fields=("step",))) == 1.0
    with pytest.raises(ValueError):
        SimilarityConfig(match_fields=("pitch",))
    with pytest.raises(ValueError):
        SimilarityConfig(n=0)


def test_production_matches_naive_oracle_on_1000_pairs():
    rng = np.random.default_rng(123)
    for _ in range(1000):
        # few step values so that partial overlaps are common
        a = small_melody(rng, steps=4)
        b = small_melody(rng, lo=1, steps=4)
        assert ngram_similarity(a, b) == naive_similarity(a, b)
        assert TargetIndex(b)(a) == naive_similarity(a, b)


def test_corpus_max_oracle():
    rng = np.random.default_rng(4)
    targets = [small_melody(rng, steps=4) for _ in range(5)]
    cand = small_melody(rng, steps=4)
    expected = max(naive_similarity(cand, t) for t in targets)
    assert corpus_similarity(cand, targets) == expected
    idx = CorpusIndex(targets)
    i, v = idx.best(cand)
    assert v == expected and naive_similarity(cand, targets[i]) == expected
    assert corpus_similarity(cand, [targets[0]]) == ngram_similarity(cand, targets[0])
    assert corpus_similarity(cand, targets + [cand]) == 1.0
    with pytest.raises(ValueError):
        corpus_similarity(cand, [])


@settings(max_examples=200, deadline=None)
@given(chromosomes(min_size=4, max_size=30), chromosomes(max_size=30), st.integers(1, 5))
def test_hypothesis_against_oracle(a, b, n):
    if len(a) < n:
        return
    cfg = SimilarityConfig(n=n)
    v = ngram_similarity(a, b, cfg)
    assert v == naive_similarity(a, b, n)
    assert 0.0 <= v <= 1.0


@settings(max_examples=100, deadline=None)
@given(chromosomes(min_size=4, max_size=20), st.lists(chromosomes(max_size=20), min_size=1, max_size=4),
       chromosomes(max_size=20))
def test_corpus_similarity_monotone(c, corpus, extra):
    assert corpus_similarity(c, corpus + [extra]) >= corpus_similarity(c, corpus)


def test_normalize_spectrum():
    assert normalize_spectrum([0.1, 0.5, 0.9]) == pytest.approx([0, 50, 100], abs=1e-12)
    out = normalize_spectrum([3.0, -1.0, 7.5, 2.0])
    assert min(out) == 0.0 and max(out) == 100.0
    with pytest.raises(DegenerateSpectrumError):
        normalize_spectrum([0.2, 0.2])
    with pytest.raises(ValueError):
        normalize_spectrum([])
