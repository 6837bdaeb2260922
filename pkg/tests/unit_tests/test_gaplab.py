from fractions import Fraction

import pytest

from forient.errors import CapExceededError
from forient.exactlp import is_vertex
from forient.gaplab import (
    build_gap_instance,
    closed_form_is_vertex,
    closed_form_solution,
    covers,
    cut_counts,
    fundamental_cuts,
    gap_report,
    integral_optimum,
    integral_witness,
    lp1_max_fraction,
    lp3_build,
    lp3_solve,
)


def test_build_gap_instance():
    gi = build_gap_instance(3)
    assert gi.nodes == 6
    assert len(gi.good_arcs) == 5
    assert len(gi.bad_arcs) == 10
    assert gi.cycle_arcs == ()
    assert len(gi.free_edges) == 4
    assert gi.e_r == (gi.u(3), gi.v(1)) == (2, 3)
    assert len(gi.lp_arcs) == 10

    with_cycles = build_gap_instance(3, k=4)
    assert len(with_cycles.cycle_arcs) == 2 * 6

    with pytest.raises(ValueError):
        build_gap_instance(1)
    with pytest.raises(ValueError):
        build_gap_instance(3, k=1)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_cut_counts(n):
    gi = build_gap_instance(n)
    assert len(fundamental_cuts(gi)) == 2 * n - 1
    supply, demand = cut_counts(gi)
    assert supply == 4 * n - 3
    assert demand == 4 * n - 2


@pytest.mark.parametrize("n", [2, 3, 4])
def test_relaxation_costs_one_over_n(n):
    gi = build_gap_instance(n)
    solution = lp3_solve(gi)
    assert solution.objective == Fraction(1, n)
    assert lp1_max_fraction(gi) == Fraction(1, n)

    values = closed_form_solution(gi)
    assert values[0] == Fraction(1, n)


def test_integral_optimum():
    gi = build_gap_instance(3)
    assert integral_optimum(gi) == 1
    assert covers(gi, integral_witness(gi))
    assert not covers(gi, list(gi.free_edges))

    with pytest.raises(CapExceededError):
        integral_optimum(build_gap_instance(7))


def test_closed_form_is_a_vertex():
    assert closed_form_is_vertex(build_gap_instance(2))
    assert closed_form_is_vertex(build_gap_instance(3))
    assert closed_form_is_vertex(build_gap_instance(5)) is None

    gi = build_gap_instance(2)
    problem = lp3_build(gi)
    assert is_vertex(problem, closed_form_solution(gi))


def test_caps():
    with pytest.raises(CapExceededError):
        lp3_build(build_gap_instance(8))
    with pytest.raises(CapExceededError):
        lp3_solve(build_gap_instance(7))
    with pytest.raises(CapExceededError):
        closed_form_solution(build_gap_instance(7))


def test_gap_report():
    report = gap_report([2, 3, 4], vertex_cap=6)
    assert list(report["n"]) == [2, 3, 4]
    assert list(report["lp_value"]) == [Fraction(1, 2), Fraction(1, 3), Fraction(1, 4)]
    assert list(report["integral_value"]) == [1, 1, 1]
    assert list(report["ratio"]) == [2, 3, 4]
    assert list(report["cut_supply"]) == [5, 9, 13]
    assert list(report["cut_demand"]) == [6, 10, 14]
    assert list(report["vertex"]) == [True, True, None]


def test_gap_report_with_extra_cycles():
    report = gap_report([3], k=3)
    assert report["ratio"][0] == 3


@pytest.mark.slow
def test_gap_report_slow():
    report = gap_report(range(2, 7))
    assert list(report["ratio"]) == [2, 3, 4, 5, 6]
