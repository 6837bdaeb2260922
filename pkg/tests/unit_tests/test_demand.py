import numpy as np
import pytest

from conftest import cycle_graph

from forient.demand import (
    KLDemand,
    TableDemand,
    check_crossing_gsupermodular,
    demand_from_dict,
    label_demands,
    max_table_value,
    partition_demand,
)
from forient.errors import CapExceededError
from forient.graph import UGraph
from forient.setfam import copartition, enum_copartitions, enum_partitions, partition, partition_part_masks


def test_kl_demand():
    f = KLDemand(3, 2, 1, 0)
    assert f(0) == 0
    assert f(7) == 0
    assert f(1) == 1
    assert f(2) == 2
    assert f(6) == 2
    assert f.table.tolist() == [f(s) for s in range(8)]
    assert f.with_root(1)(1) == 2
    assert demand_from_dict(f.to_dict(), 3) == f


@pytest.mark.parametrize("k, l, r0", [(1, 2, 0), (1, -1, 0), (1, 1, 3)])
def test_kl_demand_validation(k, l, r0):
    with pytest.raises(ValueError):
        KLDemand(3, k, l, r0)


def test_table_demand():
    f = TableDemand(3, ((1, 2), (2, 0)))
    assert f.entries == ((1, 2),)
    assert f(1) == 2
    assert f(2) == 0
    assert f.to_dict() == {"table": [[[0], 2]]}
    assert max_table_value(3) == 6

    parsed = demand_from_dict({"table": [[[0, 1], 1], [[1, 0], 1]]}, 3)
    assert parsed.entries == ((3, 2),)


@pytest.mark.parametrize("entries", [((1, 7),), ((7, 1),), ((0, 1),), ((1, -1),), ((8, 1),)])
def test_table_demand_validation(entries):
    with pytest.raises(ValueError):
        TableDemand(3, entries)


def test_demand_from_dict_rejects_unknown_kinds():
    with pytest.raises(ValueError):
        demand_from_dict({"flow": {}}, 3)
    with pytest.raises(ValueError):
        demand_from_dict({"kl": {"k": 1, "l": 1}, "table": []}, 3)


def test_partition_demand():
    f = KLDemand(3, 2, 1, 0)
    assert partition_demand(f, partition([1, 2, 4], 0, 3)) == 5
    # k once for the part avoiding the root, l for the others
    assert partition_demand(f, copartition([6, 5, 3], 0, 3)) == 4


@pytest.mark.parametrize(
    "f",
    [
        KLDemand(4, 2, 1, 2),
        TableDemand.from_mapping(4, {1: 2, 6: 1, 14: 3, 9: 1}),
    ],
)
def test_label_demands_match_partition_demand(f):
    masks = partition_part_masks(4)
    demand_p, demand_c = label_demands(f, masks)
    partitions = list(enum_partitions(4))
    assert demand_p.tolist() == [partition_demand(f, p) for p in partitions]

    full = 15
    copartitions = {p.key(): partition_demand(f, p) for p in enum_copartitions(4)}
    for row, value in zip(masks, demand_c.tolist()):
        parts = [int(m) for m in row if m]
        if len(parts) >= 3:
            assert copartitions[copartition([full ^ m for m in parts], 0, 4).key()] == value


def test_crossing_supermodularity():
    assert check_crossing_gsupermodular(KLDemand(4, 2, 1, 0), UGraph(4))

    f = TableDemand.from_mapping(4, {3: 1, 6: 1})
    verdict = check_crossing_gsupermodular(f, UGraph(4))
    assert not verdict
    assert verdict.witness == (3, 5)

    # (k, l) tables are crossing modular
    table = TableDemand.from_table(4, KLDemand(4, 2, 1, 0).table)
    assert check_crossing_gsupermodular(table, UGraph(4))

    # d_G(S, T) pays for a unit violation when every S - T, T - S pair is joined
    single = TableDemand.from_mapping(4, {3: 1})
    assert not check_crossing_gsupermodular(single, UGraph(4))
    assert check_crossing_gsupermodular(single, cycle_graph(4).add_edges([(1, 3), (0, 2)]))


def test_crossing_supermodularity_cap():
    with pytest.raises(CapExceededError):
        check_crossing_gsupermodular(TableDemand(11), UGraph(11), cap=10)
    with pytest.raises(ValueError):
        check_crossing_gsupermodular(TableDemand(3), UGraph(4))
