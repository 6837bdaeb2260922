from fractions import Fraction

import pytest

from forient.errors import ContractError, InfeasibleError
from forient.exactlp import (
    EQ,
    GE,
    FarkasCertificate,
    LpProblem,
    LpRow,
    LpVariable,
    SpanBasis,
    exact_rank,
    is_vertex,
    solve_basic,
    solve_linear_system,
    solve_with_separation,
)


def two_variables(rows=(), objective=(1, 1)):
    return LpProblem([LpVariable("a"), LpVariable("b")], list(objective), list(rows), name="test")


def test_validation():
    with pytest.raises(ValueError):
        LpVariable("x", 2, 1)
    with pytest.raises(ValueError):
        LpRow({0: 1}, 1, "<=")
    with pytest.raises(ValueError):
        LpProblem([LpVariable("x")], [1, 2])
    with pytest.raises(ValueError):
        two_variables([LpRow({2: 1}, 0)])


def test_row():
    row = LpRow({0: 1, 1: Fraction(1, 2), 2: 0}, 1)
    assert row.coefficients == {0: Fraction(1), 1: Fraction(1, 2)}
    values = [Fraction(1, 2), 1, 0]
    assert row.activity(values) == 1
    assert row.slack(values) == 0
    assert row.is_satisfied(values)
    assert not LpRow({0: 1}, 1, EQ).is_satisfied(values)


def test_add_rows_skips_duplicates():
    problem = two_variables()
    assert problem.add_rows([LpRow({0: 1, 1: 1}, 1, name="first")]) == 1
    assert problem.add_rows([LpRow({1: 1, 0: 1}, 1, name="again")]) == 0
    assert len(problem.rows) == 1


def test_solve_basic():
    problem = two_variables([LpRow({0: 1, 1: 1}, 1), LpRow({0: 1, 1: -1}, 0, EQ)])
    solution = solve_basic(problem)
    assert solution.values == (Fraction(1, 2), Fraction(1, 2))
    assert solution.objective == 1
    assert solution.rank == 2
    assert solution.fractional == [0, 1]
    assert set(solution.active_rows) == {0, 1}
    assert is_vertex(problem, solution.values)


def test_solve_basic_prefers_cheap_variable():
    problem = two_variables([LpRow({0: 1, 1: 1}, 1)], objective=(3, 2))
    solution = solve_basic(problem)
    assert solution.values == (0, 1)
    assert solution.objective == 2
    assert solution.active_lower == (0,)
    assert solution.active_upper == (1,)


def test_shifted_bounds():
    problem = LpProblem(
        [LpVariable("a", Fraction(1, 3), 2), LpVariable("b", -1, 1)],
        [1, -1],
        [LpRow({0: 1, 1: 1}, 2)],
    )
    solution = solve_basic(problem)
    assert solution.values == (1, 1)
    assert solution.objective == 0


def test_infeasible_with_certificate():
    problem = two_variables([LpRow({0: 1, 1: 1}, 3)])
    with pytest.raises(InfeasibleError) as e:
        solve_basic(problem)
    certificate = e.value.witness
    assert isinstance(certificate, FarkasCertificate)
    assert certificate.verify(problem)
    assert certificate.combined_rhs(problem) > 0


def test_rank_and_linear_systems():
    assert exact_rank([[1, 2], [2, 4]], 2) == 1
    assert exact_rank([[1, 2], [0, 1], [1, 1]], 2) == 2
    assert solve_linear_system([[2, 1], [1, 3]], [3, 5]) == [Fraction(4, 5), Fraction(7, 5)]
    assert solve_linear_system([[1, 2], [2, 4]], [1, 2]) is None

    basis = SpanBasis(3)
    assert basis.add([1, 1, 0])
    assert basis.add([0, 1, 1])
    assert not basis.add([1, 2, 1])
    assert basis.in_span([1, 0, -1])
    assert not basis.in_span([0, 0, 1])
    with pytest.raises(ValueError):
        basis.reduce([1, 0])


def test_is_vertex():
    problem = two_variables([LpRow({0: 1, 1: 1}, 1)])
    assert is_vertex(problem, [1, 0])
    assert not is_vertex(problem, [Fraction(1, 2), Fraction(1, 2)])
    assert not is_vertex(problem, [0, 0])


def _cover_separator(values):
    if values[0] + values[1] < 1:
        return [LpRow({0: 1, 1: 1}, 1, name="cover")]
    return []


def test_solve_with_separation():
    problem = two_variables(objective=(2, 3))
    solution = solve_with_separation(problem, _cover_separator)
    assert solution.values == (1, 0)
    assert solution.objective == 2
    assert solution.rounds == 2
    assert len(solution.rows) == 1
    # the input problem is left alone
    assert problem.rows == []


def test_separation_merges_rows_of_one_batch():
    def separate(values):
        return _cover_separator(values) * 3

    solution = solve_with_separation(two_variables(), separate)
    assert len(solution.rows) == 1


def test_separation_contract():
    def satisfied(values):
        return [LpRow({0: 1}, 0)]

    with pytest.raises(ContractError):
        solve_with_separation(two_variables(), satisfied)

    def repeating(values):
        return [LpRow({0: 1, 1: 1}, 3)]

    # the row is infeasible, the next solve reports it
    with pytest.raises(InfeasibleError):
        solve_with_separation(two_variables(), repeating)

    def endless(values):
        return [LpRow({0: 1}, values[0] + Fraction(1, 1000))]

    with pytest.raises((ContractError, InfeasibleError)):
        solve_with_separation(two_variables(), endless, max_rounds=5)


def test_lp_text():
    problem = two_variables([LpRow({0: 1, 1: Fraction(-1, 2)}, Fraction(1, 3), name="mix")])
    text = problem.to_lp_text()
    assert "Minimize" in text
    assert "Subject To" in text
    assert " mix: 1 a - 1/2 b >= 1/3" in text
    assert " obj: 1 a + 1 b" in text
    assert " 0 <= a <= 1" in text
    assert text.endswith("End\n")
