"""End-to-end data flow: spectra, dataset assembly, training and generation.

Seeding scheme: every random stream is derived from one master seed with
``numpy.random.SeedSequence(master, spawn_key=key)``. The keys are

====================  ===================================
``(0, i)``            initial GA run for corpus tune ``i``
``(1,)``              fully random dataset melodies
``(2,)``              distribution-matched dataset melodies
``(3,)``              scorer training (split, init, shuffles)
``(4,)``              main GA generation
====================  ===================================

so spectra can be built in any order or in parallel with identical results.
"""

from __future__ import annotations

import dataclasses
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from .chromosome import (
    Chromosome,
    GeneDistributions,
    OctaveRangeError,
    gene_distributions,
    random_melody,
    random_melody_uniform,
    transpose_octave,
)
from .evolution import FitnessConfig, GaConfig, RunHistory, evolve, main_fitness, run_snapshots
from .notation import TuneHeader, UnknownHeaderWarning, parse_corpus, serialize_tune
from .records import DatasetRecord, read_dataset, split_dataset, write_dataset
from .similarity import (
    CorpusIndex,
    DegenerateSpectrumError,
    SimilarityConfig,
    TargetIndex,
    normalize_spectrum,
)

__all__ = [
    "DatasetCounts",
    "OCTAVE_OFFSETS",
    "assemble_dataset",
    "build_spectrum",
    "bundled_corpus_text",
    "derive_rng",
    "generate",
    "load_bundled_corpus",
    "read_dataset",
    "split_dataset",
    "write_dataset",
]

OCTAVE_OFFSETS = (-2, -1, 1)

KEY_SPECTRUM = 0
KEY_RANDOM_UNIFORM = 1
KEY_RANDOM_DISTRIBUTION = 2
KEY_TRAIN = 3
KEY_GENERATE = 4


def derive_rng(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=tuple(key)))


def bundled_corpus_text() -> str:
    return resources.files("melodyga").joinpath("data/essen_kinder.abc").read_text(encoding="utf-8")


def load_bundled_corpus() -> list[tuple[TuneHeader, Chromosome]]:
    """The 60 Essen children's songs shipped with the package."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnknownHeaderWarning)
        return parse_corpus(bundled_corpus_text())


# ---------------------------------------------------------------------------
# spectra


def build_spectrum(
    target: Chromosome,
    ga: GaConfig = GaConfig(),
    sim: SimilarityConfig = SimilarityConfig(),
    stride: int = 100,
    *,
    init_dist: GeneDistributions | None = None,
    rng: np.random.Generator | None = None,
    header: TuneHeader | None = None,
    id_prefix: str = "t00000",
) -> list[DatasetRecord]:
    """Snapshots of one initial GA run toward ``target``, scored 0..100, plus the target.

    The run evolves chromosomes of the target's length, starts from
    ``init_dist`` (the target's own distribution when omitted) and always
    mutates from the target's distribution. Raises
    :class:`DegenerateSpectrumError` if all snapshot similarities are equal.
    """
    if len(target) < sim.n:
        raise ValueError(f"target has {len(target)} notes, fewer than the n-gram order {sim.n}")
    header = header or TuneHeader()
    own = gene_distributions([target])
    run_cfg = dataclasses.replace(ga, n_notes=len(target))
    score_fn = TargetIndex(target, sim)
    _, history = evolve(score_fn, init_dist or own, run_cfg, mutation_dist=own, rng=rng)
    snaps = run_snapshots(history, stride)
    scores = normalize_spectrum([f for _, f in snaps])
    meta = dict(meter=header.meter, unit_length=header.unit_length)
    out = [
        DatasetRecord(f"{id_prefix}-s{k:04d}", "spectrum", c, s, **meta)
        for k, ((c, _), s) in enumerate(zip(snaps, scores))
    ]
    out.append(DatasetRecord(f"{id_prefix}-target", "corpus", target, 100.0, **meta))
    return out


@dataclass(frozen=True)
class DatasetCounts:
    n_random_uniform: int = 4000
    n_random_distribution: int = 4000


def _spectrum_job(args):
    i, header, target, ga, sim, stride, init_dist, seed = args
    try:
        recs = build_spectrum(
            target, ga, sim, stride,
            init_dist=init_dist, rng=derive_rng(seed, KEY_SPECTRUM, i),
            header=header, id_prefix=f"t{i:05d}",
        )
    except DegenerateSpectrumError:
        return i, None
    return i, recs


def _random_records(kind, n, corpus, index, lengths, dist, rng):
    prefix = "ru" if kind == "random_uniform" else "rd"
    out = []
    for k in range(n):
        length = int(rng.integers(lengths[0], lengths[1] + 1))
        if kind == "random_uniform":
            c = random_melody_uniform(length, rng)
        else:
            c = random_melody(dist, length, rng)
        best, value = index.best(c)
        h = corpus[best][0]
        out.append(DatasetRecord(f"{prefix}{k + 1:05d}", kind, c, 100.0 * value,
                                 meter=h.meter, unit_length=h.unit_length))
    return out


def assemble_dataset(
    corpus: Sequence[tuple[TuneHeader, Chromosome]],
    ga: GaConfig = GaConfig(),
    sim: SimilarityConfig = SimilarityConfig(),
    counts: DatasetCounts = DatasetCounts(),
    seed: int = 0,
    *,
    stride: int = 100,
    octave_offsets: Sequence[int] = OCTAVE_OFFSETS,
    jobs: int = 1,
    progress: Callable[[str], None] | None = None,
) -> list[DatasetRecord]:
    """Spectra for every tune, their octave copies, then scored random melodies.

    Records come out in a fixed order (tune by tune, originals before
    copies of each record, then the two random groups), independent of
    ``jobs``. Tunes shorter than the n-gram order or with a flat spectrum
    are skipped.
    """
    if not corpus:
        raise ValueError("corpus is empty")
    chroms = [c for _, c in corpus]
    dist = gene_distributions(chroms)
    tasks = [
        (i, h, c, ga, sim, stride, dist, seed)
        for i, (h, c) in enumerate(corpus)
        if len(c) >= sim.n
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_spectrum_job, tasks))
    else:
        results = []
        for t in tasks:
            results.append(_spectrum_job(t))
            if progress:
                progress(f"spectrum {t[0] + 1}/{len(corpus)}")

    records: list[DatasetRecord] = []
    for i, recs in results:
        if recs is None:
            if progress:
                progress(f"tune {i}: flat spectrum, skipped")
            continue
        for r in recs:
            records.append(r)
            for off in octave_offsets:
                try:
                    moved = transpose_octave(r.notes, off)
                except OctaveRangeError:
                    continue
                records.append(dataclasses.replace(r, id=f"{r.id}-o{off:+d}", origin="transposed", notes=moved))

    index = CorpusIndex(chroms, sim)
    lengths = (min(len(c) for c in chroms), max(len(c) for c in chroms))
    lengths = (max(lengths[0], sim.n), max(lengths[1], sim.n))
    records += _random_records("random_uniform", counts.n_random_uniform, corpus, index, lengths, dist,
                               derive_rng(seed, KEY_RANDOM_UNIFORM))
    records += _random_records("random_distribution", counts.n_random_distribution, corpus, index, lengths,
                               dist, derive_rng(seed, KEY_RANDOM_DISTRIBUTION))
    if progress:
        progress(f"{len(records)} records")
    return records


# ---------------------------------------------------------------------------
# generation


def generate(
    model,
    dist: GeneDistributions,
    ga: GaConfig = GaConfig(),
    fit: FitnessConfig = FitnessConfig(),
    meter=Fraction(1),
    unit_length=Fraction(1, 4),
    *,
    title: str = "",
    key: str = "C",
    rng: np.random.Generator | None = None,
    progress: Callable[[int, RunHistory], None] | None = None,
) -> tuple[Chromosome, RunHistory, str]:
    """Main GA run on the learned score plus rhythm term; returns best, history and ABC text."""
    meter, unit_length = Fraction(meter), Fraction(unit_length)

    def fitness(c):
        return main_fitness(c, model, meter, unit_length, fit)

    best, history = evolve(fitness, dist, ga, rng=rng, progress=progress)
    header = TuneHeader(index=1, title=title or f"Generated melody {ga.seed}", meter=meter,
                        unit_length=unit_length, key=key)
    return best, history, serialize_tune(header, best)
