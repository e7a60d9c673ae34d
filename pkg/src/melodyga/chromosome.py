"""Melody chromosomes, corpus gene statistics and random melody generation.

A chromosome is the 4 x N gene matrix of a melody: one column per note, with
rows accidental, step, octave and duration. Durations are exact rationals
(multipliers of the tune's default note length) stored as reduced
numerator/denominator integer arrays so that genetic operators stay
vectorized while rhythm arithmetic stays exact.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

GENE_ROWS = ("accidental", "step", "octave", "duration")

ACCIDENTALS = (-1, 0, 1)
STEPS = tuple(range(8))  # 0 = rest, 1..7 = c..b
OCTAVES = tuple(range(1, 8))
TABLE_DURATIONS = tuple(
    Fraction(v) for v in ("1/8", "1/4", "1/2", "3/4", "1", "3/2", "2", "4")
)

REST_STEP = 0
REST_ACCIDENTAL = 0
REST_OCTAVE = 4


class ChromosomeError(ValueError):
    """Invalid gene values or inconsistent chromosome shapes."""


class OctaveRangeError(ChromosomeError):
    """A transposition pushed a note outside the octave codes 1..7."""


@dataclass(frozen=True)
class Note:
    accidental: int
    step: int
    octave: int
    duration: Fraction

    def __post_init__(self):
        if self.accidental not in ACCIDENTALS:
            raise ChromosomeError(f"accidental must be -1, 0 or +1, got {self.accidental}")
        if not 0 <= self.step <= 7:
            raise ChromosomeError(f"step must be in 0..7, got {self.step}")
        if not 1 <= self.octave <= 7:
            raise ChromosomeError(f"octave must be in 1..7, got {self.octave}")
        if Fraction(self.duration) <= 0:
            raise ChromosomeError(f"duration must be positive, got {self.duration}")
        object.__setattr__(self, "duration", Fraction(self.duration))
        if self.step == REST_STEP and (self.accidental, self.octave) != (REST_ACCIDENTAL, REST_OCTAVE):
            raise ChromosomeError("rest notes must have accidental 0 and octave 4")

    @property
    def is_rest(self) -> bool:
        return self.step == REST_STEP

    @classmethod
    def rest(cls, duration) -> "Note":
        return cls(REST_ACCIDENTAL, REST_STEP, REST_OCTAVE, Fraction(duration))


def _frozen(a, dtype=np.int64):
    a = np.array(a, dtype=dtype, copy=True).reshape(-1)
    a.setflags(write=False)
    return a


class Chromosome:
    """Immutable melody: ``N >= 1`` canonical notes.

    The gene rows are exposed as read-only int64 arrays ``accidental``,
    ``step``, ``octave``, ``dur_num`` and ``dur_den`` (durations reduced to
    lowest terms, denominator positive).
    """

    __slots__ = ("accidental", "step", "octave", "dur_num", "dur_den", "_hash")

    def __init__(self, accidental, step, octave, dur_num, dur_den, *, canonicalize=False):
        acc = np.array(accidental, dtype=np.int64).reshape(-1)
        stp = np.array(step, dtype=np.int64).reshape(-1)
        octv = np.array(octave, dtype=np.int64).reshape(-1)
        num = np.array(dur_num, dtype=np.int64).reshape(-1)
        den = np.array(dur_den, dtype=np.int64).reshape(-1)
        n = acc.shape[0]
        if n < 1:
            raise ChromosomeError("a chromosome needs at least one note")
        if not (stp.shape[0] == octv.shape[0] == num.shape[0] == den.shape[0] == n):
            raise ChromosomeError("gene rows must have equal length")
        if canonicalize:
            rest = stp == REST_STEP
            acc = np.where(rest, REST_ACCIDENTAL, acc)
            octv = np.where(rest, REST_OCTAVE, octv)
        if np.any((acc < -1) | (acc > 1)):
            raise ChromosomeError("accidental genes must be in {-1, 0, +1}")
        if np.any((stp < 0) | (stp > 7)):
            raise ChromosomeError("step genes must be in 0..7")
        if np.any((octv < 1) | (octv > 7)):
            raise ChromosomeError("octave genes must be in 1..7")
        if np.any(den == 0) or np.any(num * np.sign(den) <= 0):
            raise ChromosomeError("durations must be positive rationals")
        rest = stp == REST_STEP
        if np.any(acc[rest] != REST_ACCIDENTAL) or np.any(octv[rest] != REST_OCTAVE):
            raise ChromosomeError("rest notes must have accidental 0 and octave 4")
        sign = np.sign(den)
        num, den = num * sign, den * sign
        g = np.gcd(num, den)
        self.accidental = _frozen(acc)
        self.step = _frozen(stp)
        self.octave = _frozen(octv)
        self.dur_num = _frozen(num // g)
        self.dur_den = _frozen(den // g)
        self._hash = None

    @classmethod
    def _trusted(cls, accidental, step, octave, dur_num, dur_den) -> "Chromosome":
        """Build from gene arrays already known to be valid and reduced."""
        self = object.__new__(cls)
        rest = step == REST_STEP
        if rest.any():
            accidental = np.where(rest, REST_ACCIDENTAL, accidental)
            octave = np.where(rest, REST_OCTAVE, octave)
        for name, a in zip(cls.__slots__, (accidental, step, octave, dur_num, dur_den)):
            a = np.array(a, dtype=np.int64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        self._hash = None
        return self

    @classmethod
    def from_notes(cls, notes: Iterable[Note]) -> "Chromosome":
        notes = list(notes)
        if not notes:
            raise ChromosomeError("a chromosome needs at least one note")
        return cls(
            [n.accidental for n in notes],
            [n.step for n in notes],
            [n.octave for n in notes],
            [n.duration.numerator for n in notes],
            [n.duration.denominator for n in notes],
        )

    @classmethod
    def from_tuples(cls, rows: Sequence[Sequence]) -> "Chromosome":
        """Build from ``(accidental, step, octave, duration)`` tuples."""
        return cls.from_notes(Note(a, s, o, Fraction(d)) for a, s, o, d in rows)

    def __len__(self):
        return int(self.step.shape[0])

    @property
    def notes(self) -> tuple[Note, ...]:
        return tuple(
            Note(int(a), int(s), int(o), Fraction(int(p), int(q)))
            for a, s, o, p, q in zip(self.accidental, self.step, self.octave, self.dur_num, self.dur_den)
        )

    @property
    def durations(self) -> list[Fraction]:
        return [Fraction(int(p), int(q)) for p, q in zip(self.dur_num, self.dur_den)]

    def as_matrix(self) -> np.ndarray:
        """The 4 x N gene matrix with durations as floats."""
        return np.vstack(
            [self.accidental, self.step, self.octave, self.dur_num / self.dur_den]
        ).astype(np.float64)

    def note_keys(self) -> list[tuple[int, int, int, int, int]]:
        return list(
            zip(
                self.accidental.tolist(),
                self.step.tolist(),
                self.octave.tolist(),
                self.dur_num.tolist(),
                self.dur_den.tolist(),
            )
        )

    def to_tuples(self) -> list[list[int]]:
        """Integer rows ``[accidental, step, octave, dur_num, dur_den]``."""
        return [list(k) for k in self.note_keys()]

    def _key(self):
        return (
            self.accidental.tobytes(),
            self.step.tobytes(),
            self.octave.tobytes(),
            self.dur_num.tobytes(),
            self.dur_den.tobytes(),
        )

    def __eq__(self, other):
        if not isinstance(other, Chromosome):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    def __repr__(self):
        body = ", ".join(f"({a},{s},{o},{Fraction(p, q)})" for a, s, o, p, q in self.note_keys()[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"Chromosome[{len(self)}]({body}{more})"


# ---------------------------------------------------------------------------
# gene statistics


@dataclass(frozen=True)
class GeneRow:
    values: tuple
    counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def probabilities(self) -> tuple[Fraction, ...]:
        t = self.total
        return tuple(Fraction(c, t) for c in self.counts)

    def float_probabilities(self) -> np.ndarray:
        p = np.asarray(self.counts, dtype=np.float64)
        return p / p.sum()

    def probability(self, value) -> Fraction:
        for v, c in zip(self.values, self.counts):
            if v == value:
                return Fraction(c, self.total)
        return Fraction(0)


@dataclass(frozen=True)
class GeneDistributions:
    """Empirical categorical distribution of each gene row."""

    accidental: GeneRow
    step: GeneRow
    octave: GeneRow
    duration: GeneRow

    def row(self, name: str) -> GeneRow:
        return getattr(self, name)

    def rows(self):
        return [(name, getattr(self, name)) for name in GENE_ROWS]

    @classmethod
    def from_counts(cls, counts: dict[str, dict]) -> "GeneDistributions":
        rows = {}
        for name in GENE_ROWS:
            c = counts[name]
            if not c:
                raise ChromosomeError(f"gene row {name!r} has an empty distribution")
            if any(int(n) <= 0 for n in c.values()):
                raise ChromosomeError(f"gene row {name!r} has non-positive counts")
            values = sorted(c)
            rows[name] = GeneRow(tuple(values), tuple(int(c[v]) for v in values))
        return cls(**rows)

    def to_json(self) -> dict:
        out = {}
        for name, row in self.rows():
            values = [str(v) if name == "duration" else int(v) for v in row.values]
            out[name] = {"values": values, "counts": list(row.counts)}
        return {"format": "melodyga-gene-distributions", "version": 1, "rows": out}

    @classmethod
    def from_json(cls, doc: dict) -> "GeneDistributions":
        if doc.get("format") != "melodyga-gene-distributions":
            raise ValueError("not a gene distribution document")
        if doc.get("version") != 1:
            raise ValueError(f"unsupported distribution file version {doc.get('version')!r}")
        counts = {}
        for name in GENE_ROWS:
            row = doc["rows"][name]
            conv = Fraction if name == "duration" else int
            counts[name] = {conv(v): int(c) for v, c in zip(row["values"], row["counts"])}
        return cls.from_counts(counts)


def gene_distributions(corpus: Sequence[Chromosome]) -> GeneDistributions:
    """Count every gene value over all notes of all chromosomes."""
    if not corpus:
        raise ChromosomeError("cannot compute gene distributions of an empty corpus")
    counts = {name: Counter() for name in GENE_ROWS}
    for c in corpus:
        counts["accidental"].update(c.accidental.tolist())
        counts["step"].update(c.step.tolist())
        counts["octave"].update(c.octave.tolist())
        counts["duration"].update(
            Fraction(p, q) for p, q in zip(c.dur_num.tolist(), c.dur_den.tolist())
        )
    return GeneDistributions.from_counts(counts)


class GeneSampler:
    """Vectorized sampler over a :class:`GeneDistributions`."""

    def __init__(self, dist: GeneDistributions):
        self.dist = dist
        self._vals = {}
        self._cdf = {}
        for name, row in dist.rows():
            if name == "duration":
                self._vals[name] = (
                    np.array([v.numerator for v in row.values], dtype=np.int64),
                    np.array([v.denominator for v in row.values], dtype=np.int64),
                )
            else:
                self._vals[name] = np.array(row.values, dtype=np.int64)
            cdf = np.cumsum(row.float_probabilities())
            cdf[-1] = 1.0
            self._cdf[name] = cdf

    def _index(self, name, size, rng):
        return np.searchsorted(self._cdf[name], rng.random(size), side="right")

    def sample_row(self, name, size, rng):
        idx = self._index(name, size, rng)
        if name == "duration":
            num, den = self._vals[name]
            return num[idx], den[idx]
        return self._vals[name][idx]

    def sample(self, n, rng) -> Chromosome:
        acc = self.sample_row("accidental", n, rng)
        stp = self.sample_row("step", n, rng)
        octv = self.sample_row("octave", n, rng)
        num, den = self.sample_row("duration", n, rng)
        return Chromosome(acc, stp, octv, num, den, canonicalize=True)


def random_melody(dist: GeneDistributions, n: int, rng: np.random.Generator) -> Chromosome:
    """Sample ``n`` notes, each gene drawn independently from its row."""
    if n < 1:
        raise ChromosomeError("melody length must be at least 1")
    return GeneSampler(dist).sample(n, rng)


_UNIFORM_NUM = np.array([d.numerator for d in TABLE_DURATIONS], dtype=np.int64)
_UNIFORM_DEN = np.array([d.denominator for d in TABLE_DURATIONS], dtype=np.int64)


def random_melody_uniform(n: int, rng: np.random.Generator) -> Chromosome:
    """Fully random melody over the closed value lists of the encoding table."""
    if n < 1:
        raise ChromosomeError("melody length must be at least 1")
    acc = rng.integers(-1, 2, size=n)
    stp = rng.integers(0, 8, size=n)
    octv = rng.integers(1, 8, size=n)
    d = rng.integers(0, len(TABLE_DURATIONS), size=n)
    return Chromosome(acc, stp, octv, _UNIFORM_NUM[d], _UNIFORM_DEN[d], canonicalize=True)


def transpose_octave(c: Chromosome, offset: int) -> Chromosome:
    """Shift every pitched note by ``offset`` octaves; rests stay put."""
    pitched = c.step != REST_STEP
    octv = np.where(pitched, c.octave + int(offset), c.octave)
    if np.any((octv < 1) | (octv > 7)):
        raise OctaveRangeError(f"octave offset {offset:+d} leaves the range 1..7")
    return Chromosome(c.accidental, c.step, octv, c.dur_num, c.dur_den)
