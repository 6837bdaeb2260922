from fractions import Fraction

import numpy as np
import pytest

from conftest import c4_instance, cycle_graph, fractional_instances, path_graph

from forient.demand import KLDemand, TableDemand
from forient.errors import CapExceededError, InfeasibleError
from forient.instance import Instance, random_instance
from forient.oracle import benchmark, exact_opt, exact_orientation_search
from forient.orient import verify_covers
from forient.solver import solve

PATH = ((0, 1), (1, 2), (2, 3))


def test_exact_opt_c4():
    result = exact_opt(c4_instance())
    assert result.cost == 5
    assert result.chosen == (0,)
    # the empty set is tested first
    assert result.checked == 2

    bounded = exact_opt(c4_instance(), lower_bound=5)
    assert bounded.cost == 5
    assert bounded.checked == 1


def test_exact_opt_prefers_the_cheaper_edge():
    inst = Instance(4, PATH, ((3, 0), (0, 3), (1, 3)), (5, 2, 2), KLDemand(4, 1, 1, 0))
    result = exact_opt(inst)
    assert result.cost == 2
    # ties go to the lexicographically first subset
    assert result.chosen == (1,)

    res = solve(inst)
    assert result.cost <= res.total_cost <= 6 * res.lp_lower_bound
    assert res.lp_lower_bound <= result.cost


def test_exact_opt_table_demand():
    inst = Instance(
        3, (), ((0, 1), (1, 2), (0, 2)), (1, 1, 1), TableDemand.from_mapping(3, {6: 1, 5: 1, 3: 1})
    )
    result = exact_opt(inst)
    assert result.cost == 3
    assert result.chosen == (0, 1, 2)


def test_exact_opt_caps_and_infeasibility():
    big = Instance(9, cycle_graph(9).edges, (), (), KLDemand(9, 1, 1))
    with pytest.raises(CapExceededError):
        exact_opt(big)
    with pytest.raises(CapExceededError):
        exact_opt(c4_instance(), purchasable_cap=0)

    infeasible = Instance(4, PATH, ((0, 2),), (1,), KLDemand(4, 1, 1, 0))
    with pytest.raises(InfeasibleError):
        exact_opt(infeasible)

    with pytest.raises(ValueError):
        exact_opt(c4_instance(), lower_bound=6)


def test_exact_orientation_search():
    f = KLDemand(4, 1, 1, 0)
    g = cycle_graph(4)
    orientation = exact_orientation_search(g, f)
    assert orientation is not None
    assert verify_covers(orientation, g, f)

    assert exact_orientation_search(path_graph(4), f) is None

    with pytest.raises(CapExceededError):
        exact_orientation_search(g, f, cap=3)
    with pytest.raises(ValueError):
        exact_orientation_search(g, KLDemand(3, 1, 1))


def test_benchmark():
    frame = benchmark(3, seed=1, n_max=4, max_purchasable=5)
    assert len(frame) == 3
    assert list(frame.columns[:3]) == ["name", "n", "purchasable"]
    for _, row in frame.iterrows():
        assert row["lp_bound"] <= row["opt"] <= row["cost"] <= 6 * row["lp_bound"]


def test_benchmark_on_prisms():
    frame = benchmark(2, seed=3, generator_kwargs={"structure": "prism"})
    assert list(frame["min_max_fraction"]) == [Fraction(1, 2)] * 2
    assert list(frame["rounds"]) == [1, 1]


@pytest.mark.slow
def test_benchmark_slow():
    frame = benchmark(200, seed=7, n_max=6, max_purchasable=10)
    assert len(frame) == 200
    ratios = [r for r in frame["ratio"] if r is not None]
    assert all(1 <= r <= 6 for r in ratios)
    for _, row in frame.iterrows():
        assert row["lp_bound"] <= row["opt"] <= row["cost"] <= 6 * row["lp_bound"]


RATIO_GENERATORS = [
    {"demand_kind": "kl", "kl_choices": ((2, 2),)},
    {"demand_kind": "kl"},
    {"demand_kind": "table"},
    {"structure": "prism"},
]


def _check_against_the_optimum(inst):
    res = solve(inst)
    opt = exact_opt(inst).cost
    assert res.lp_lower_bound <= opt <= res.total_cost <= 6 * opt
    assert res.total_cost <= 6 * res.lp_lower_bound
    assert all(r.max_fraction is None or r.max_fraction >= Fraction(1, 6) for r in res.rounds)
    return res


def test_fractional_instances_against_the_optimum():
    for inst in fractional_instances():
        res = _check_against_the_optimum(inst)
        assert res.rounds[0].max_fraction == Fraction(1, 2)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(200))
def test_rounding_against_the_optimum(seed):
    kwargs = RATIO_GENERATORS[seed % len(RATIO_GENERATORS)]
    rng = np.random.default_rng(1000 + seed)
    inst = random_instance(rng, n_min=3, n_max=7, max_purchasable=12, **kwargs)
    assert inst.n <= 7
    assert inst.n_purchasable <= 12
    res = _check_against_the_optimum(inst)
    if kwargs.get("structure") == "prism":
        assert res.rounds[0].max_fraction == Fraction(1, 2)
