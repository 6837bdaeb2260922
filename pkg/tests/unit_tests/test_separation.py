from fractions import Fraction

import pytest

from conftest import c4_instance

from forient.demand import KLDemand, TableDemand
from forient.errors import CapExceededError
from forient.exactlp import LpProblem, LpVariable, solve_with_separation
from forient.instance import Instance
from forient.separation import (
    Lp2System,
    cut_capacity_feasible,
    feasibility_precheck_kl,
    instance_system,
    separate_lp2,
)
from forient.setfam import COPARTITION, PARTITION, partition

PATH = [(0, 1), (1, 2), (2, 3)]


def c4_system(**kwargs):
    return Lp2System(4, PATH, [(3, 0)], KLDemand(4, 1, 1, 0), **kwargs)


def triangle_system(skip_copartitions=None):
    """Triangle of variable edges, demand 1 on every two-node set."""
    demand = TableDemand.from_mapping(3, {6: 1, 5: 1, 3: 1})
    return Lp2System(
        3, [], [(0, 1), (1, 2), (0, 2)], demand, skip_copartitions=skip_copartitions
    )


def test_rows_of_the_path():
    system = c4_system()
    assert system.skip_copartitions
    assert system.n_rows == 14
    assert system.max_rhs() == 1
    assert len(system.all_rows()) == 14

    rows = system.violated([Fraction(0)], max_rows=None)
    assert rows
    assert all(r.chi == (0,) and r.rhs == 1 and r.slack == -1 for r in rows)
    assert system.violated([Fraction(1)]) == []

    limited = system.violated([Fraction(0)], max_rows=2)
    assert len(limited) == 2
    assert [r.pocp.key() for r in limited] == sorted(r.pocp.key() for r in rows)[:2]


def test_evaluate():
    row = c4_system().evaluate(partition([1, 14], 0, 4), [Fraction(1, 2)])
    assert row.chi == (0,)
    assert row.e_count == 1
    assert row.demand == 2
    assert row.rhs == 1
    assert row.slack == Fraction(-1, 2)

    lp_row = row.to_lp_row()
    assert lp_row.coefficients == {0: 1}
    assert lp_row.rhs == 1
    assert lp_row.tag == row.pocp


def test_tight_rows():
    tight = c4_system().tight([Fraction(1)])
    assert tight
    assert all(r.slack == 0 for r in tight)
    assert [r.pocp.key() for r in tight] == sorted(r.pocp.key() for r in tight)


def test_copartition_rows_of_table_demands():
    system = triangle_system()
    assert not system.skip_copartitions
    half = [Fraction(1, 2)] * 3

    rows = system.violated(half)
    assert len(rows) == 1
    assert rows[0].pocp.kind == COPARTITION
    assert rows[0].slack == Fraction(-3, 2)

    skipped = triangle_system(skip_copartitions=True)
    assert skipped.violated(half) == []
    tight = skipped.tight(half)
    assert [r.pocp.kind for r in tight] == [PARTITION] * 3


def test_separator_feeds_the_cutting_plane_loop():
    system = c4_system()
    problem = LpProblem([LpVariable("x_0")], [5], [])
    solution = solve_with_separation(problem, system.separator(5))
    assert solution.values == (1,)
    assert solution.objective == 5


def test_audit_copartitions():
    system = c4_system(skip_copartitions=False)
    assert system.audit_copartitions()
    assert system.max_rhs() == 1


def test_validation():
    with pytest.raises(CapExceededError):
        Lp2System(11, [], [], KLDemand(11, 1, 1), cap=10)
    with pytest.raises(ValueError):
        Lp2System(4, PATH, [], KLDemand(3, 1, 1))
    with pytest.raises(ValueError):
        c4_system().lhs([0, 0])


def test_instance_helpers():
    inst = c4_instance()
    assert instance_system(inst).n_rows == 14
    assert separate_lp2([Fraction(0)], inst, max_rows=None)
    assert separate_lp2([Fraction(0)], inst, audit_copartitions=True)
    assert separate_lp2([Fraction(1)], inst) == []


def test_flow_feasibility():
    assert cut_capacity_feasible(4, PATH, [(3, 0)], [Fraction(1)], 1)
    assert not cut_capacity_feasible(4, PATH, [(3, 0)], [Fraction(1, 2)], 1)
    assert cut_capacity_feasible(4, PATH, [(3, 0)], [Fraction(0)], 0)

    inst = c4_instance()
    assert feasibility_precheck_kl([Fraction(1)], inst)
    assert not feasibility_precheck_kl([Fraction(0)], inst)

    unequal = Instance(4, tuple(PATH), ((3, 0),), (5,), KLDemand(4, 1, 0, 0))
    assert feasibility_precheck_kl([Fraction(0)], unequal)

    table = Instance(4, tuple(PATH), ((3, 0),), (5,), TableDemand(4))
    with pytest.raises(ValueError):
        feasibility_precheck_kl([Fraction(1)], table)


def test_slacks_beyond_the_int64_range():
    # right hand sides times the common denominator leave int64
    system = Lp2System(4, [], PATH + [(3, 0)], KLDemand(4, 4096, 4096, 0), skip_copartitions=False)
    den = 2**58
    x = [Fraction(3, den), Fraction(1, 2), Fraction(2), Fraction(5, 4)]

    slack_p, slack_c, scale = system.slacks(x)
    assert scale == den
    for i in range(system.n_rows):
        assert slack_p[i] == system.row(i, PARTITION, x).slack * den
        if system.has_copartition[i]:
            assert slack_c[i] == system.row(i, COPARTITION, x).slack * den

    n_copartitions = int(system.has_copartition.sum())
    assert len(system.violated(x, max_rows=None)) == system.n_rows + n_copartitions
    assert len(system.violated(x, max_rows=3)) == 3
    assert system.tight(x) == []

    split = partition([1, 14], 0, 4)
    rhs = system.evaluate(split, x).rhs
    assert rhs == 8192
    at_rhs = [rhs - Fraction(1, den), Fraction(0), Fraction(0), Fraction(1, den)]
    assert [r.pocp for r in system.tight(at_rhs)] == [split]
