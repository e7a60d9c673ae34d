"""Labeled training melodies and their line-delimited JSON file format.

Each line of a dataset file is one record::

    {"id": "t00003-s0002", "origin": "spectrum", "meter": "2/4",
     "unit_length": "1/8", "score": 37.5, "notes": [[0, 6, 4, 1, 2], ...]}

``notes`` rows are ``[accidental, step, octave, duration_num, duration_den]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .chromosome import Chromosome

ORIGINS = ("spectrum", "transposed", "random_uniform", "random_distribution", "corpus")


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    origin: str
    notes: Chromosome
    score: float
    meter: Fraction = Fraction(1)
    unit_length: Fraction = Fraction(1, 4)

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown record origin {self.origin!r}")
        if not 0.0 <= self.score <= 100.0:
            raise ValueError(f"record {self.id}: score {self.score} outside [0, 100]")
        object.__setattr__(self, "meter", Fraction(self.meter))
        object.__setattr__(self, "unit_length", Fraction(self.unit_length))

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "origin": self.origin,
            "meter": f"{self.meter.numerator}/{self.meter.denominator}",
            "unit_length": f"{self.unit_length.numerator}/{self.unit_length.denominator}",
            "score": float(self.score),
            "notes": self.notes.to_tuples(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "DatasetRecord":
        rows = doc["notes"]
        cols = list(zip(*rows)) if rows else [(), (), (), (), ()]
        if len(cols) != 5:
            raise DatasetFormatError("note rows must have five integers")
        return cls(
            id=str(doc["id"]),
            origin=doc["origin"],
            notes=Chromosome(*cols),
            score=float(doc["score"]),
            meter=Fraction(doc["meter"]),
            unit_length=Fraction(doc["unit_length"]),
        )


def dumps_records(records: Iterable[DatasetRecord]) -> str:
    return "".join(json.dumps(r.to_json(), separators=(",", ":")) + "\n" for r in records)


def write_dataset(records: Iterable[DatasetRecord], path) -> None:
    Path(path).write_text(dumps_records(records), encoding="utf-8")


def read_dataset(path) -> list[DatasetRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(DatasetRecord.from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DatasetFormatError(f"{path}:{line_no}: {exc}") from None
    return out


def split_dataset(records: Sequence, fraction: float = 0.1, seed: int = 0):
    """Seeded shuffle, then (train, validation) with ``fraction`` held out."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("validation fraction must be in (0, 1)")
    if len(records) < 2:
        raise ValueError("need at least two records to split")
    order = np.random.default_rng(seed).permutation(len(records))
    n_val = min(len(records) - 1, max(1, int(round(fraction * len(records)))))
    val = [records[i] for i in order[:n_val]]
    train = [records[i] for i in order[n_val:]]
    return train, val
