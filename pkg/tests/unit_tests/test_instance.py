import os
from fractions import Fraction

import numpy as np
import pytest

from conftest import C4_PATH, c4_instance, random_tempfolder, write_instance

from forient.demand import KLDemand, TableDemand, check_crossing_gsupermodular
from forient.errors import InstanceFormatError
from forient.graph import UGraph, deg_cut, edge_connectivity
from forient.instance import (
    DynamicLoader,
    Instance,
    InstanceParser,
    LoadChain,
    RawInstance,
    SupermodularityGate,
    instance_from_dict,
    load_instance,
    prism_instance,
    random_instance,
    random_table_demand,
)
from forient.orient import is_f_orientable


def base_dict(**kwargs):
    data = {
        "format": "forient-instance",
        "version": 1,
        "nodes": 4,
        "free_edges": [[0, 1], [1, 2], [2, 3]],
        "purchasable_edges": [[3, 0, 5, 1]],
        "demand": {"kl": {"k": 1, "l": 1, "r0": 0}},
    }
    data.update(kwargs)
    return data


def test_load_packaged_instance():
    inst = load_instance(C4_PATH)
    assert inst == c4_instance()
    assert inst.gstar.m == 4
    assert inst.augmented_graph([0]).edges == ((0, 1), (1, 2), (2, 3), (3, 0))
    assert inst.cost_of([0]) == 5
    assert inst.cost_of([]) == 0


def test_costs_are_exact():
    inst = instance_from_dict(base_dict(purchasable_edges=[[3, 0, "5/2"], [0, 2, 7, 3], [1, 3, 2]]))
    assert inst.costs == (Fraction(5, 2), Fraction(7, 3), Fraction(2))

    with pytest.raises(InstanceFormatError) as e:
        instance_from_dict(base_dict(purchasable_edges=[[3, 0, 1.5]]))
    assert e.value.field == "purchasable_edges[0][2]"

    with pytest.raises(InstanceFormatError) as e:
        instance_from_dict(base_dict(purchasable_edges=[[3, 0, "0.5"]]))
    assert e.value.field == "purchasable_edges[0][2]"


@pytest.mark.parametrize(
    "update, field",
    [
        ({"nodes": 1}, "nodes"),
        ({"nodes": "4"}, "nodes"),
        ({"free_edges": [[0, 0]]}, "free_edges[0]"),
        ({"free_edges": [[0, 4]]}, "free_edges[0]"),
        ({"purchasable_edges": [[3, 0, -1]]}, "purchasable_edges[0][2]"),
        ({"purchasable_edges": [[3, 0]]}, "purchasable_edges[0]"),
        ({"demand": {"flow": {}}}, "demand"),
        ({"demand": {"kl": {"k": 1, "l": 2}}}, "demand.kl"),
        ({"demand": {"kl": {"l": 1}}}, "demand.kl.k"),
        ({"demand": {"table": [[[0], 13]]}}, "demand.table[0][1]"),
        ({"demand": {"table": [[[0, 9], 1]]}}, "demand.table[0][0][1]"),
        ({"root": 4}, "root"),
        ({"format": "other"}, "format"),
        ({"version": 2}, "version"),
    ],
)
def test_malformed_fields(update, field):
    with pytest.raises(InstanceFormatError) as e:
        instance_from_dict(base_dict(**update))
    assert e.value.field == field


def test_missing_fields():
    data = base_dict()
    del data["demand"]
    with pytest.raises(InstanceFormatError) as e:
        instance_from_dict(data)
    assert e.value.field == "demand"


def test_yaml_errors_carry_lines():
    folder = random_tempfolder()
    path = os.path.join(folder, "bad.yaml")
    with open(path, "w") as f:
        f.write("name: bad\nnodes: 1\ndemand:\n  kl: {k: 1, l: 1}\n")
    with pytest.raises(InstanceFormatError) as e:
        load_instance(path)
    assert e.value.field == "nodes"
    assert e.value.line == 2

    with open(path, "w") as f:
        f.write("nodes: [1, 2\n")
    with pytest.raises(InstanceFormatError) as e:
        load_instance(path)
    assert e.value.line is not None


def test_json_syntax_errors():
    folder = random_tempfolder()
    path = os.path.join(folder, "broken.json")
    with open(path, "w") as f:
        f.write('{"nodes": 4,\n "demand": }')
    with pytest.raises(InstanceFormatError) as e:
        load_instance(path)
    assert e.value.line == 2


def test_loader_validation():
    with pytest.raises(ValueError):
        load_instance("/does/not/exist.json")

    folder = random_tempfolder()
    path = os.path.join(folder, "instance.txt")
    with open(path, "w") as f:
        f.write("{}")
    with pytest.raises(InstanceFormatError):
        load_instance(path)


def test_name_defaults_to_the_file_stem():
    folder = random_tempfolder()
    path = write_instance(folder, "unnamed", base_dict())
    assert load_instance(path).name == "unnamed"


@pytest.mark.parametrize("suffix", ["json", "yaml"])
def test_save_and_load(suffix):
    folder = random_tempfolder()
    inst = Instance(
        4,
        ((0, 1), (1, 2)),
        ((2, 3), (3, 0), (1, 3)),
        (Fraction(1, 3), 2, 7),
        TableDemand.from_mapping(4, {1: 1, 14: 1}),
        root=0,
        name="saved",
    )
    path = os.path.join(folder, f"saved.{suffix}")
    inst.save(path)
    assert load_instance(path, check_supermodularity=False) == inst


def test_supermodularity_gate():
    folder = random_tempfolder()
    data = base_dict(free_edges=[], demand={"table": [[[0, 1], 1], [[1, 2], 1]]})
    path = write_instance(folder, "not_supermodular", data)
    with pytest.raises(InstanceFormatError) as e:
        load_instance(path)
    assert e.value.field == "demand"
    assert load_instance(path, check_supermodularity=False).n == 4


def test_load_stages():
    raw = DynamicLoader()(C4_PATH)
    assert isinstance(raw, RawInstance)
    inst = InstanceParser()(raw)
    assert SupermodularityGate()(inst) is inst

    chain = LoadChain([DynamicLoader(), InstanceParser()])
    assert chain.names == ["DynamicLoader", "InstanceParser"]
    assert chain(C4_PATH) == inst

    with pytest.raises(InstanceFormatError) as e:
        InstanceParser()("not raw")
    assert e.value.field == "<document>"
    with pytest.raises(InstanceFormatError):
        DynamicLoader()(os.path.join(os.path.dirname(C4_PATH), "missing.json"))
    with pytest.raises(InstanceFormatError):
        SupermodularityGate()(raw)


def test_instance_validation():
    f = KLDemand(3, 1, 1)
    with pytest.raises(ValueError):
        Instance(3, (), ((0, 1),), (-1,), f)
    with pytest.raises(ValueError):
        Instance(3, (), ((0, 1),), (), f)
    with pytest.raises(ValueError):
        Instance(3, (), (), (), f, root=3)
    with pytest.raises(ValueError):
        Instance(3, ((0, 0),), (), (), f)
    with pytest.raises(ValueError):
        Instance(3, (), (), (), KLDemand(4, 1, 1))


@pytest.mark.parametrize("seed", range(5))
def test_random_instances(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n_min=3, n_max=6, max_purchasable=7, name="r")
    assert 3 <= inst.n <= 6
    assert 1 <= inst.n_purchasable <= 7
    assert all(c > 0 for c in inst.costs)
    assert is_f_orientable(inst.gstar, inst.demand)
    if not inst.demand.is_kl:
        assert check_crossing_gsupermodular(inst.demand, inst.free_graph)

    again = random_instance(np.random.default_rng(seed), n_min=3, n_max=6, max_purchasable=7, name="r")
    assert again == inst


@pytest.mark.parametrize("kind", ["kl", "table"])
def test_random_instance_kinds(kind):
    inst = random_instance(np.random.default_rng(7), demand_kind=kind, n_max=5)
    assert inst.demand.is_kl == (kind == "kl")


def test_random_table_demand():
    rng = np.random.default_rng(3)
    g = UGraph(5, ((0, 1), (1, 2), (2, 3), (3, 4), (4, 0)))
    f = random_table_demand(rng, g)
    assert f.n == 5
    assert check_crossing_gsupermodular(f, g)


def test_prism_instance():
    inst = prism_instance(3, [1, Fraction(1, 2), 1], 2, root=1, labels=[5, 4, 3, 2, 1, 0], name="p")
    assert inst.n == 6
    assert inst.free_edges == ()
    assert inst.n_purchasable == 9
    assert inst.demand == KLDemand(6, 1, 1, 1)
    assert inst.root == 1
    assert inst.purchasable_edges[:3] == ((5, 4), (4, 3), (3, 5))
    assert inst.purchasable_edges[6:] == ((5, 2), (4, 1), (3, 0))
    assert inst.costs == (2,) * 6 + (1, Fraction(1, 2), 1)
    assert is_f_orientable(inst.gstar, inst.demand)

    with pytest.raises(ValueError):
        prism_instance(4, [1] * 4, 2)
    with pytest.raises(ValueError):
        prism_instance(3, [1, 1], 2)
    with pytest.raises(ValueError):
        prism_instance(3, [1, 2, 1], 2)
    with pytest.raises(ValueError):
        prism_instance(3, [1, 1, 1], 2, labels=[0, 0, 1, 2, 3, 4])


@pytest.mark.parametrize("seed", range(5))
def test_random_prism_structure(seed):
    inst = random_instance(np.random.default_rng(seed), n_max=10, max_purchasable=15, structure="prism")
    m = inst.n // 2
    assert m in (3, 5)
    assert inst.n_purchasable == 3 * m
    assert inst.free_edges == ()
    assert inst.demand == KLDemand(inst.n, 1, 1, inst.root)
    cycle_cost = max(inst.costs)
    assert sum(1 for c in inst.costs if c == cycle_cost) == 2 * m
    assert all(0 < c < cycle_cost for c in inst.costs if c != cycle_cost)
    assert [deg_cut(inst.gstar, s=1 << v) for v in range(inst.n)] == [3] * inst.n
    assert edge_connectivity(inst.gstar) == 3


def test_random_structure_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        random_instance(rng, structure="ladder")
    with pytest.raises(ValueError):
        random_instance(rng, structure="prism", demand_kind="table")
    with pytest.raises(ValueError):
        random_instance(rng, n_max=5, structure="prism")

    # no prism fits, mixed falls back to cycles
    small = random_instance(rng, n_max=5, structure="mixed")
    assert small.n <= 5

    rng = np.random.default_rng(1)
    shapes = {
        random_instance(rng, n_min=6, n_max=6, max_purchasable=9, structure="mixed").free_edges == ()
        for _ in range(20)
    }
    assert shapes == {True, False}
