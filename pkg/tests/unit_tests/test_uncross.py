import itertools
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from conftest import complete_graph, fractional_instances, path_graph

from forient.demand import KLDemand, TableDemand
from forient.errors import ContractError
from forient.instance import random_instance
from forient.separation import Lp2System
from forient.setfam import (
    COPARTITION,
    PARTITION,
    chi,
    copartition,
    cross_free,
    enum_copartitions,
    enum_partitions,
    from_labels,
    partition,
    precedes,
    strongly_cross_free,
    weakly_cross_free,
)
from forient.solver import first_relaxation
from forient.uncross import (
    PoCPFamily,
    characteristic_vector,
    decompose_regular_crossfree,
    domination_forest,
    extract_strongly_crossfree_basis,
    is_regular,
    psi,
    uncross_pair_sets,
    upsilon,
)

TRIANGLE = [(0, 1), (1, 2), (0, 2)]


def triangle_system():
    demand = TableDemand.from_mapping(3, {6: 1, 5: 1, 3: 1})
    return Lp2System(3, [], TRIANGLE, demand, skip_copartitions=True)


def test_uncross_pair_sets():
    assert uncross_pair_sets([3, 6], 4) == [2, 7]
    result = uncross_pair_sets([3, 6, 12, 9], 4)
    assert cross_free(result, 4)
    assert sorted(result) != sorted([3, 6, 12, 9])


def test_is_regular():
    assert is_regular([1, 14], 4) == 1
    assert is_regular([14, 13, 11, 7], 4) == 3
    assert is_regular([1, 2], 4) is None


@pytest.mark.parametrize(
    "fam, expected",
    [
        ([1, 14], [partition([1, 14], 0, 4)]),
        ([1, 2, 4, 8], [partition([1, 2, 4, 8], 0, 4)]),
        ([14, 13, 11, 7], [copartition([14, 13, 11, 7], 0, 4)]),
        ([1, 14, 3, 12], [partition([1, 14], 0, 4), partition([3, 12], 0, 4)]),
    ],
)
def test_decompose_regular_crossfree(fam, expected):
    members = decompose_regular_crossfree(fam, 0, 4)
    assert sorted(members, key=lambda p: p.key()) == sorted(expected, key=lambda p: p.key())


def test_decompose_rejects_bad_families():
    with pytest.raises(ContractError):
        decompose_regular_crossfree([3, 6, 12, 9], 0, 4)
    with pytest.raises(ContractError):
        decompose_regular_crossfree([1, 2], 0, 4)
    with pytest.raises(ContractError):
        decompose_regular_crossfree([0, 15], 0, 4)


def test_psi_vanishes_on_tight_partitions():
    f = KLDemand(4, 1, 1, 0)
    assert psi([Fraction(1)], [(3, 0)], path_graph(4), [1, 14], f) == 0
    assert psi([Fraction(1, 2)], [(3, 0)], path_graph(4), [1, 14], f) == Fraction(-1, 2)


def test_upsilon_of_a_partition_and_a_copartition():
    part = partition([1, 2, 12], 0, 4)
    cop = copartition([14, 13, 11, 7], 0, 4)
    assert upsilon(part, cop) == [
        partition([1, 14], 0, 4),
        partition([2, 13], 0, 4),
        copartition([12, 11, 7], 0, 4),
    ]
    assert upsilon(cop, part) == upsilon(part, cop)


def test_upsilon_rejects_strongly_cross_free_pairs():
    with pytest.raises(ContractError):
        upsilon(partition([1, 14], 0, 4), partition([3, 12], 0, 4))


def test_basis_of_the_triangle():
    system = triangle_system()
    x = [Fraction(1, 2)] * 3
    family = extract_strongly_crossfree_basis(x, system)

    assert family.coordinates == (0, 1, 2)
    assert family.members == [
        partition([1, 6], 0, 3),
        partition([3, 4], 0, 3),
        partition([5, 2], 0, 3),
    ]
    assert family.vectors[0] == (1, 0, 1)
    assert family.check() == {
        "strongly_cross_free": True,
        "independent": True,
        "full_dimension": True,
    }

    forest = domination_forest(family)
    assert set(forest.edges) == {(0, 1), (0, 2)}
    assert forest.nodes[0]["pocp"] == family.members[0]


def test_basis_rejects_points_that_are_not_basic():
    with pytest.raises(ContractError):
        extract_strongly_crossfree_basis([Fraction(2, 3)] * 3, triangle_system())


def test_basis_of_an_integral_point_is_empty():
    family = extract_strongly_crossfree_basis([Fraction(1)] * 3, triangle_system())
    assert len(family) == 0
    assert all(family.check().values())


def test_characteristic_vector():
    p = partition([1, 6], 0, 3)
    assert characteristic_vector(p, TRIANGLE, [0, 1, 2]) == (1, 0, 1)
    assert characteristic_vector(p, TRIANGLE, [1]) == (0,)


def test_domination_forest_rejects_crossing_members():
    with pytest.raises(ContractError):
        domination_forest([partition([1, 2, 12], 0, 4), copartition([14, 13, 11, 7], 0, 4)])

    fam = PoCPFamily((0,), [partition([1, 14], 0, 4), partition([3, 12], 0, 4)], [(1,), (1,)])
    forest = domination_forest(fam)
    assert list(forest.edges) == [(0, 1)]
    assert fam.rank == 1


@pytest.mark.parametrize("seed", range(6))
def test_basis_of_random_relaxations(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n_min=3, n_max=5, max_purchasable=8)
    system, solution = first_relaxation(inst)
    family = extract_strongly_crossfree_basis(solution.values, system)

    assert all(family.check().values())
    assert len(family) == len(family.coordinates)
    for p in family:
        assert system.evaluate(p, solution.values).slack == 0

    forest = domination_forest(family)
    if len(family):
        assert nx.is_forest(forest.to_undirected())
    assert all(forest.in_degree(v) <= 1 for v in forest.nodes)


def _chi_vector(p, g):
    return np.bincount(np.array(chi(p, g), dtype=np.int64), minlength=g.m)


def _random_partition(rng, n, root, max_parts=4):
    while True:
        p = from_labels(rng.integers(0, max_parts, n), PARTITION, root)
        if len(p) >= 2:
            return p


def _refine(rng, p, pieces=3):
    """Random partition each of whose parts lies inside a part of `p`."""
    labels = p.labels() * pieces + rng.integers(0, pieces, p.n)
    return from_labels(labels, PARTITION, p.root)


def _maybe_complement(rng, p):
    return p.complement() if rng.random() < 0.5 else p


def _weakly_cross_free_pairs(rng, count, n_min=4, n_max=8):
    """Every weakly cross-free pair on four nodes, then random refinement pairs up to `count`."""
    members = [p for p in enum_partitions(4) if len(p) >= 2] + list(enum_copartitions(4))
    pairs = [(p, q) for p, q in itertools.combinations(members, 2) if weakly_cross_free(p, q)]
    while len(pairs) < count:
        n = int(rng.integers(n_min, n_max + 1))
        q = _random_partition(rng, n, int(rng.integers(n)))
        p = _refine(rng, q)
        p, q = _maybe_complement(rng, p), _maybe_complement(rng, q)
        if weakly_cross_free(p, q):
            pairs.append((p, q) if rng.random() < 0.5 else (q, p))
    return pairs


def test_upsilon_of_two_partitions():
    coarse = partition([3, 28], 0, 5)
    fine = partition([1, 2, 4, 24], 0, 5)
    assert weakly_cross_free(fine, coarse)

    meet, join = upsilon(fine, coarse)
    assert meet == partition([3, 4, 24], 0, 5)
    assert join == partition([1, 2, 28], 0, 5)
    assert upsilon(coarse, fine) == [meet, join]

    g = complete_graph(5)
    assert np.array_equal(
        _chi_vector(fine, g) + _chi_vector(coarse, g), _chi_vector(meet, g) + _chi_vector(join, g)
    )
    for member in (meet, join):
        assert strongly_cross_free(member, fine)
        assert strongly_cross_free(member, coarse)
    assert strongly_cross_free(meet, join)


def test_upsilon_of_two_copartitions():
    coarse = partition([3, 4, 24], 0, 5).complement()
    fine = partition([1, 2, 4, 8, 16], 0, 5).complement()
    assert coarse.kind == fine.kind == COPARTITION
    assert weakly_cross_free(fine, coarse)

    meet, join = upsilon(fine, coarse)
    assert meet == partition([3, 4, 8, 16], 0, 5).complement()
    assert join == partition([1, 2, 4, 24], 0, 5).complement()

    g = complete_graph(5)
    assert np.array_equal(
        _chi_vector(fine, g) + _chi_vector(coarse, g), _chi_vector(meet, g) + _chi_vector(join, g)
    )
    for member in (meet, join):
        assert strongly_cross_free(member, fine)
        assert strongly_cross_free(member, coarse)


@pytest.mark.slow
def test_upsilon_on_weakly_cross_free_pairs():
    rng = np.random.default_rng(17)
    pairs = _weakly_cross_free_pairs(rng, 1000)
    assert len(pairs) >= 1000
    kinds = set()
    for p, q in pairs:
        members = upsilon(p, q)
        assert len(members) >= 2
        g = complete_graph(p.n)
        assert np.array_equal(
            _chi_vector(p, g) + _chi_vector(q, g), sum(_chi_vector(r, g) for r in members)
        ), (p, q)
        for r in members:
            assert strongly_cross_free(r, p), (p, q, r)
            assert strongly_cross_free(r, q), (p, q, r)
        kinds.add((p.kind, q.kind))
    assert len(kinds) == 4


def _relaxation_points(seeds):
    for inst in fractional_instances():
        yield inst, first_relaxation(inst)
    for seed in seeds:
        inst = random_instance(np.random.default_rng(seed), n_min=4, n_max=6, max_purchasable=9)
        yield inst, first_relaxation(inst)


def _check_tight_pairs(system, x, limit=300):
    tight = [row.pocp for row in system.tight(x)]
    checked = 0
    for p, q in itertools.combinations(tight, 2):
        if not weakly_cross_free(p, q):
            continue
        for r in upsilon(p, q):
            assert system.evaluate(r, x).slack == 0, (p, q, r)
        checked += 1
        if checked == limit:
            break
    return checked


def test_upsilon_keeps_tight_pairs_tight():
    inst = fractional_instances()[0]
    system, solution = first_relaxation(inst)
    assert _check_tight_pairs(system, solution.values) > 0


@pytest.mark.slow
def test_upsilon_keeps_tight_pairs_tight_on_random_relaxations():
    checked = 0
    for inst, (system, solution) in _relaxation_points(range(8)):
        checked += _check_tight_pairs(system, solution.values)
    assert checked > 0


def _regular_family(rng, n, root):
    """Parts of a chain of refinements, possibly with the complement of one of them.

    Each block is a partition or a co-partition, so the family is cross-free and regular.
    """
    chain = [_random_partition(rng, n, root)]
    for _ in range(int(rng.integers(0, 3))):
        chain.append(_refine(rng, chain[-1], pieces=2))
    blocks = list(chain)
    if rng.random() < 0.5:
        blocks.append(chain[int(rng.integers(len(chain)))].complement())
    if rng.random() < 0.3:
        blocks = blocks[-1:]
    return blocks, [s for block in blocks for s in block.parts]


@pytest.mark.slow
def test_psi_is_nonnegative_on_regular_families():
    rng = np.random.default_rng(23)
    count = 0
    for inst, (system, solution) in _relaxation_points(range(10)):
        x = solution.values
        for _ in range(100):
            blocks, fam = _regular_family(rng, inst.n, inst.root)
            assert cross_free(fam, inst.n)
            assert is_regular(fam, inst.n) is not None
            value = psi(x, inst.purchasable_edges, inst.free_graph, fam, inst.demand)
            assert value == sum(system.evaluate(b, x).slack for b in blocks)
            assert value >= 0
            count += 1
    assert count >= 1000


def _check_forest_order(members):
    forest = domination_forest(members)
    for i, p in enumerate(members):
        above = nx.ancestors(forest, i)
        for j, q in enumerate(members):
            if i == j:
                continue
            below = precedes(p, q) and (not precedes(q, p) or p.key() < q.key())
            assert (j in above) == below, (p, q)


def test_domination_forest_follows_precedes():
    _check_forest_order(extract_strongly_crossfree_basis([Fraction(1, 2)] * 3, triangle_system()).members)
    for inst in fractional_instances():
        system, solution = first_relaxation(inst)
        family = extract_strongly_crossfree_basis(solution.values, system)
        assert len(family) == inst.n
        _check_forest_order(family.members)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20))
def test_domination_forest_follows_precedes_on_random_bases(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n_min=4, n_max=6, max_purchasable=9, structure="mixed")
    system, solution = first_relaxation(inst)
    _check_forest_order(extract_strongly_crossfree_basis(solution.values, system).members)
