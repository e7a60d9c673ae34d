"""Generative genetic algorithm shared by the initial and main runs.

One run keeps a fixed-length population. Each iteration carries the best
``ceil(elitism_fraction * pop_size)`` chromosomes over unchanged and refills
the rest with children: two roulette-wheel parents, uniform per-gene-cell
crossover, then (with probability ``mp``) per-gene-cell mutation. All random
draws come from one generator owned by the run, so a seed fixes the history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .chromosome import Chromosome, ChromosomeError, GeneDistributions, GeneSampler
from .rhythm import rhythm_cost_value
from .similarity import SimilarityConfig, ngram_similarity

FitnessFn = Callable[[Chromosome], float]

SELECTION_EPS = 1e-6


@dataclass(frozen=True)
class GaConfig:
    pop_size: int = 20
    max_iter: int = 6000
    cr: float = 0.5
    mp: float = 0.5
    mr: float = 0.1
    elitism_fraction: float = 0.5
    n_notes: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.pop_size < 1:
            raise ValueError("pop_size must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.n_notes < 1:
            raise ValueError("n_notes must be positive")
        for name in ("cr", "mp", "mr"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if not 0.0 < self.elitism_fraction < 1.0:
            raise ValueError("elitism_fraction must be in (0, 1)")

    @property
    def n_elite(self) -> int:
        return min(self.pop_size, math.ceil(self.elitism_fraction * self.pop_size))


@dataclass(frozen=True)
class FitnessConfig:
    alpha: float = 10.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


@dataclass
class RunHistory:
    """Per-iteration statistics; entry 0 describes the initial population."""

    best_fitness: list[float] = field(default_factory=list)
    mean_fitness: list[float] = field(default_factory=list)
    best: list[Chromosome] = field(default_factory=list)

    def __len__(self):
        return len(self.best_fitness)

    def record(self, population, fitness: np.ndarray) -> None:
        i = int(np.argmax(fitness))
        self.best_fitness.append(float(fitness[i]))
        self.mean_fitness.append(float(np.mean(fitness)))
        self.best.append(population[i])

    @property
    def iterations(self) -> range:
        return range(len(self.best_fitness))


# ---------------------------------------------------------------------------
# fitness functions


def rhythm_term(c: Chromosome, meter, unit_length, cfg: FitnessConfig = FitnessConfig()) -> float:
    return cfg.alpha / (cfg.alpha + rhythm_cost_value(c, meter, unit_length))


def main_fitness(c: Chromosome, model, meter, unit_length, cfg: FitnessConfig = FitnessConfig()) -> float:
    """Learned score plus ``alpha / (alpha + rhythm cost)``."""
    from .neural import lstm_score

    return lstm_score(model, c) + rhythm_term(c, meter, unit_length, cfg)


def initial_fitness(c: Chromosome, target: Chromosome, cfg: SimilarityConfig = SimilarityConfig()) -> float:
    return ngram_similarity(c, target, cfg)


# ---------------------------------------------------------------------------
# operators


def selection_weights(fitnesses) -> np.ndarray:
    """Roulette weights: raw fitness if none is negative, else shifted above the minimum."""
    f = np.asarray(fitnesses, dtype=np.float64)
    if f.size == 0:
        raise ValueError("cannot select from an empty population")
    lo = f.min()
    if lo >= 0.0:
        if f.sum() > 0.0:
            return f
        return np.ones_like(f)
    return f - lo + SELECTION_EPS


def _pick(cum: np.ndarray, rng: np.random.Generator) -> int:
    i = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return min(i, cum.shape[0] - 1)


def select_parent(fitnesses, rng: np.random.Generator) -> int:
    return _pick(np.cumsum(selection_weights(fitnesses)), rng)


def crossover(c1: Chromosome, c2: Chromosome, cr: float, rng: np.random.Generator) -> Chromosome:
    """Each of the 4N gene cells comes from ``c1`` when its draw exceeds ``cr``, else ``c2``."""
    n = len(c1)
    if len(c2) != n:
        raise ChromosomeError(f"crossover parents differ in length ({n} vs {len(c2)})")
    take1 = rng.random((4, n)) > cr
    return Chromosome._trusted(
        np.where(take1[0], c1.accidental, c2.accidental),
        np.where(take1[1], c1.step, c2.step),
        np.where(take1[2], c1.octave, c2.octave),
        np.where(take1[3], c1.dur_num, c2.dur_num),
        np.where(take1[3], c1.dur_den, c2.dur_den),
    )


def mutate(c: Chromosome, mr: float, dist, rng: np.random.Generator) -> Chromosome:
    """Resample each gene cell whose draw does not exceed ``mr`` from its row distribution.

    ``dist`` may be a :class:`GeneDistributions` or a prebuilt :class:`GeneSampler`.
    """
    if mr <= 0:
        return c
    sampler = dist if isinstance(dist, GeneSampler) else GeneSampler(dist)
    n = len(c)
    hit = rng.random((4, n)) <= mr
    rows = [c.accidental.copy(), c.step.copy(), c.octave.copy()]
    for r, name in enumerate(("accidental", "step", "octave")):
        k = int(hit[r].sum())
        if k:
            rows[r][hit[r]] = sampler.sample_row(name, k, rng)
    num, den = c.dur_num.copy(), c.dur_den.copy()
    k = int(hit[3].sum())
    if k:
        num[hit[3]], den[hit[3]] = sampler.sample_row("duration", k, rng)
    return Chromosome._trusted(rows[0], rows[1], rows[2], num, den)


# ---------------------------------------------------------------------------
# the loop


def evolve(
    fitness_fn: FitnessFn,
    dist: GeneDistributions,
    ga: GaConfig = GaConfig(),
    mutation_dist: GeneDistributions | None = None,
    rng: np.random.Generator | None = None,
    progress: Callable[[int, RunHistory], None] | None = None,
) -> tuple[Chromosome, RunHistory]:
    """Run ``ga.max_iter`` iterations and return the final best and the history.

    The initial population is sampled from ``dist``; mutation resamples from
    ``mutation_dist`` (defaults to ``dist``). Elites keep their cached
    fitness, so ``fitness_fn`` is called once per new chromosome.
    """
    if rng is None:
        rng = np.random.default_rng(ga.seed)
    init_sampler = GeneSampler(dist)
    mut_sampler = init_sampler if mutation_dist is None else GeneSampler(mutation_dist)

    pop = [init_sampler.sample(ga.n_notes, rng) for _ in range(ga.pop_size)]
    fit = np.array([fitness_fn(c) for c in pop], dtype=np.float64)
    history = RunHistory()
    history.record(pop, fit)
    n_elite = ga.n_elite
    n_children = ga.pop_size - n_elite

    for it in range(1, ga.max_iter + 1):
        order = np.argsort(-fit, kind="stable")
        cum = np.cumsum(selection_weights(fit))
        children = []
        for _ in range(n_children):
            p1 = pop[_pick(cum, rng)]
            p2 = pop[_pick(cum, rng)]
            child = crossover(p1, p2, ga.cr, rng)
            if rng.random() < ga.mp:
                child = mutate(child, ga.mr, mut_sampler, rng)
            children.append(child)
        elite = order[:n_elite]
        pop = [pop[i] for i in elite] + children
        fit = np.concatenate((fit[elite], [fitness_fn(c) for c in children]))
        history.record(pop, fit)
        if progress is not None:
            progress(it, history)

    return history.best[-1], history


def snapshot_indices(n_entries: int, stride: int) -> list[int]:
    """0, stride, 2*stride, ... and the last entry, without duplicates."""
    if stride < 1:
        raise ValueError("stride must be positive")
    if n_entries < 1:
        raise ValueError("history is empty")
    last = n_entries - 1
    idx = list(range(0, last + 1, stride))
    if idx[-1] != last:
        idx.append(last)
    return idx


def run_snapshots(history: RunHistory, stride: int = 100) -> list[tuple[Chromosome, float]]:
    """The bad-to-good spectrum: best chromosome at every ``stride``-th iteration plus both ends."""
    return [(history.best[i], history.best_fitness[i]) for i in snapshot_indices(len(history), stride)]
