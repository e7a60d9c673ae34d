from fractions import Fraction as F

from hypothesis import given, settings, strategies as st

from melodyga.chromosome import Chromosome, Note
from melodyga.rhythm import rhythm_cost, rhythm_cost_value

from .strategies import chromosomes


def melody(durations):
    return Chromosome.from_notes(Note(0, 6, 4, F(d)) for d in durations)


def oracle_cost(durations, meter, unit):
    """Walk boundaries one by one with Fractions."""
    total = sum((F(d) * unit for d in durations), F(0))
    cost = 0
    k = 1
    while k * meter < total:
        b = k * meter
        t = F(0)
        for d in durations:
            start, t = t, t + F(d) * unit
            if start < b < t:
                cost += 1
                break
        k += 1
    if total % meter != 0:
        cost += 1
    return cost


def test_two_full_measures():
    r = rhythm_cost(melody([1] * 8), F(1), F(1, 4))
    assert r.cost == 0 and r.total_duration == F(2) and not r.incomplete_final_measure


def test_boundary_inside_second_note():
    r = rhythm_cost(melody([3, 2, 3]), F(1), F(1, 4))
    assert r.cost == 1
    assert r.violation_positions == [(1, 1)]


def test_incomplete_final_measure():
    r = rhythm_cost(melody([1, 1, 1]), F(1), F(1, 4))
    assert r.cost == 1 and r.incomplete_final_measure and r.violation_positions == []


def test_long_note_spans_several_boundaries():
    # eight quarters in one note starting mid-bar: boundaries at 1, 2 inside
    r = rhythm_cost(melody([2, 8, 2]), F(1), F(1, 4))
    assert r.cost == 2
    assert [b for b, _ in r.violation_positions] == [1, 2]


def test_value_matches_report():
    c = melody([F(3, 2), F(1, 2), 3, 1, F(1, 8)])
    assert rhythm_cost_value(c, F(3, 4), F(1, 8)) == rhythm_cost(c, F(3, 4), F(1, 8)).cost


meters = st.sampled_from([F(1), F(1, 2), F(3, 4), F(3, 8), F(6, 8), F(5, 4)])
units = st.sampled_from([F(1, 4), F(1, 8), F(1, 16), F(1, 3)])


@settings(max_examples=300, deadline=None)
@given(chromosomes(max_size=25), meters, units)
def test_matches_fraction_oracle(c, meter, unit):
    r = rhythm_cost(c, meter, unit)
    assert r.cost == oracle_cost(c.durations, meter, unit)
    assert r.cost == len(r.violation_positions) + int(r.incomplete_final_measure)
    assert r.cost == rhythm_cost_value(c, meter, unit)


@settings(max_examples=200, deadline=None)
@given(chromosomes(max_size=20), meters, units, st.sampled_from([F(2), F(1, 3), F(7, 5)]))
def test_only_the_ratio_matters(c, meter, unit, k):
    assert rhythm_cost_value(c, meter, unit) == rhythm_cost_value(c, meter * k, unit * k)


@settings(max_examples=200, deadline=None)
@given(chromosomes(max_size=20), meters, units)
def test_zero_cost_closed_under_self_concatenation(c, meter, unit):
    if rhythm_cost_value(c, meter, unit) != 0:
        return
    doubled = Chromosome.from_notes(c.notes + c.notes)
    assert rhythm_cost_value(doubled, meter, unit) == 0


def test_huge_denominators_use_exact_path():
    c = melody([F(1, 2**40), F(2**40 - 1, 2**40), F(1, 3**20), F(3**20 - 1, 3**20)])
    assert rhythm_cost(c, F(1, 4), F(1, 4)).cost == 0
    c2 = melody([F(1, 2**40), F(1, 3**20)])
    assert rhythm_cost(c2, F(1, 4), F(1, 4)).cost == 1
