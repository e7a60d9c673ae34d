"""Rhythm cost: how often a melody breaks its meter.

A bar boundary that falls strictly inside a note is one violation; a melody
whose total length is not a whole number of measures costs one more. All
arithmetic is exact: durations are rescaled to integer ticks on a common
denominator before any comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .chromosome import Chromosome

# numpy int64 fast path is used while all tick counts stay below this bound
_INT64_SAFE = 2**62


@dataclass(frozen=True)
class RhythmReport:
    cost: int
    total_duration: Fraction  # whole notes
    measure_length: Fraction  # whole notes
    violation_positions: list[tuple[int, int]] = field(default_factory=list)
    incomplete_final_measure: bool = False


def _ticks(c: Chromosome, meter: Fraction, unit_length: Fraction):
    """Note ends and measure length as integers on a shared time grid."""
    meter = Fraction(meter)
    unit_length = Fraction(unit_length)
    if meter <= 0 or unit_length <= 0:
        raise ValueError("meter and unit length must be positive")
    dens = set(c.dur_den.tolist())
    grid = math.lcm(meter.denominator, *(int(d) * unit_length.denominator for d in dens))
    measure = meter.numerator * (grid // meter.denominator)
    scale = [grid * unit_length.numerator // (int(d) * unit_length.denominator) for d in sorted(dens)]
    # every duration contributes num * grid * L_num / (den * L_den) ticks
    lookup = dict(zip(sorted(dens), scale))
    bound = max(scale) * int(c.dur_num.max()) * len(c)
    if bound < _INT64_SAFE and measure < _INT64_SAFE:
        per = np.fromiter((lookup[int(d)] for d in c.dur_den), dtype=np.int64, count=len(c))
        ticks = c.dur_num * per
        ends = np.cumsum(ticks)
        return ends, int(measure), False
    ticks = [int(n) * lookup[int(d)] for n, d in zip(c.dur_num.tolist(), c.dur_den.tolist())]
    ends, acc = [], 0
    for t in ticks:
        acc += t
        ends.append(acc)
    return ends, int(measure), True


def _interior_counts(ends, measure, big):
    if big:
        out, start = [], 0
        for e in ends:
            out.append((e - 1) // measure - start // measure)
            start = e
        return out
    starts = np.concatenate(([0], ends[:-1]))
    return (ends - 1) // measure - starts // measure


def rhythm_cost_value(c: Chromosome, meter, unit_length) -> int:
    """Just the integer cost of :func:`rhythm_cost` (no report)."""
    ends, measure, big = _ticks(c, meter, unit_length)
    counts = _interior_counts(ends, measure, big)
    total = int(ends[-1])
    return int(sum(counts) if big else counts.sum()) + (0 if total % measure == 0 else 1)


def rhythm_cost(c: Chromosome, meter, unit_length) -> RhythmReport:
    meter = Fraction(meter)
    unit_length = Fraction(unit_length)
    ends, measure, big = _ticks(c, meter, unit_length)
    counts = _interior_counts(ends, measure, big)
    positions = []
    start = 0
    for i, (e, k) in enumerate(zip(ends, counts)):
        e, k = int(e), int(k)
        first = start // measure + 1
        for b in range(first, first + k):
            positions.append((b, i))
        start = e
    total = int(ends[-1])
    incomplete = total % measure != 0
    grid_whole = measure / meter  # ticks per whole note
    return RhythmReport(
        cost=len(positions) + int(incomplete),
        total_duration=Fraction(total) / grid_whole,
        measure_length=meter,
        violation_positions=positions,
        incomplete_final_measure=incomplete,
    )
