"""Orientability and covering orientations.

An undirected graph is f-orientable iff every partition and co-partition
P satisfies e_G(P) >= sum_{S in P} f(S). A covering orientation is read off
a vertex of the orientation system

    y_uv + y_vu = 1,  y >= 0,  y(delta_in(Z)) >= f(Z)  for all Z,

whose vertices are integral for crossing G-supermodular f.
"""

# native imports
import logging
import typing
from dataclasses import dataclass
from fractions import Fraction

logger = logging.getLogger()

# forient imports
from forient import kernels
from forient.demand import Demand, KLDemand, label_demands
from forient.errors import CapExceededError, ContractError
from forient.exactlp import (
    EQ,
    GE,
    BasicSolution,
    LpProblem,
    LpRow,
    LpVariable,
    solve_with_separation,
)
from forient.graph import (
    Edge,
    NodeSet,
    UGraph,
    full_mask,
    in_degree_table,
    max_flow,
    weighted_in_cut_table,
)
from forient.setfam import COPARTITION, PARTITION, from_labels, partition_labels
from forient.utils import Verdict

# third party imports
import numpy as np


@dataclass(frozen=True)
class Orientation:
    """Direction per edge: True orients ``(u, v)`` as u -> v."""

    edges: typing.Tuple[Edge, ...]
    forward: typing.Tuple[bool, ...]

    def __post_init__(self):
        if len(self.edges) != len(self.forward):
            raise ValueError("one direction per edge expected")

    def arcs(self) -> typing.List[Edge]:
        return [(u, v) if fwd else (v, u) for (u, v), fwd in zip(self.edges, self.forward)]

    def to_dict(self) -> dict:
        return {"arcs": [list(a) for a in self.arcs()]}

    @classmethod
    def from_arcs(cls, g: UGraph, arcs: typing.Sequence[Edge]) -> "Orientation":
        if len(arcs) != g.m:
            raise ValueError(f"expected {g.m} arcs, got {len(arcs)}")
        forward = []
        for (u, v), (a, b) in zip(g.edges, arcs):
            if (a, b) == (u, v):
                forward.append(True)
            elif (a, b) == (v, u):
                forward.append(False)
            else:
                raise ValueError(f"arc ({a}, {b}) does not orient edge ({u}, {v})")
        return cls(g.edges, tuple(forward))


def _partition_check(g: UGraph, f: Demand, partitions_only: bool, cap: int, root: int) -> Verdict:
    labels = partition_labels(g.n, cap)
    masks = kernels.part_masks(labels)
    edges = np.array(g.edges, dtype=np.int64).reshape(-1, 2)
    e = kernels.crossing_counts(labels, edges[:, 0], edges[:, 1])
    demand_p, demand_c = label_demands(f, masks)
    deficit_p = demand_p - e
    if partitions_only:
        deficit_c = np.full(len(labels), np.iinfo(np.int64).min, dtype=np.int64)
    else:
        deficit_c = np.where((masks != 0).sum(axis=1) >= 3, demand_c - e, np.iinfo(np.int64).min)
    worst = max(int(deficit_p.max()), int(deficit_c.max()))
    if worst <= 0:
        return Verdict(True)
    candidates = [from_labels(labels[i], PARTITION, root) for i in np.flatnonzero(deficit_p == worst)]
    candidates += [
        from_labels(labels[i], COPARTITION, root) for i in np.flatnonzero(deficit_c == worst)
    ]
    witness = min(candidates, key=lambda p: p.key())
    return Verdict(False, witness)


def is_f_orientable(
    g: UGraph, f: Demand, partitions_only: bool = False, cap: int = 12, root: int = None
) -> Verdict:
    """Partition / co-partition test of f-orientability.

    Parameters
    ----------

    g : UGraph
        The undirected graph.

    f : Demand
        Nonnegative crossing G-supermodular demand.

    partitions_only : bool, default False
        Check partition rows only, which suffices for (k, l) demands.

    cap : int, default 12
        Largest node count accepted.

    root : int, default None
        Root used for the witness; r0 of a (k, l) demand or 0.

    Returns
    -------

    Verdict
        On failure the witness is the most violated partition or co-partition.
    """
    if f.n != g.n:
        raise ValueError(f"demand on {f.n} nodes, graph on {g.n} nodes")
    if root is None:
        root = f.r0 if isinstance(f, KLDemand) else 0
    return _partition_check(g, f, partitions_only, cap, root)


def kl_partition_condition(g: UGraph, k: int, l: int, cap: int = 12) -> Verdict:
    """Whether e_G(P) >= k(|P| - 1) + l for every partition with at least two parts."""
    if not k >= l >= 0:
        raise ValueError(f"expected k >= l >= 0, got k={k}, l={l}")
    labels = partition_labels(g.n, cap)
    edges = np.array(g.edges, dtype=np.int64).reshape(-1, 2)
    e = kernels.crossing_counts(labels, edges[:, 0], edges[:, 1])
    n_parts = labels.max(axis=1).astype(np.int64) + 1
    violated = np.flatnonzero(e < k * (n_parts - 1) + l)
    if len(violated):
        return Verdict(False, from_labels(labels[violated[0]], PARTITION, 0))
    return Verdict(True)


def _entering_row(arcs: typing.Sequence[Edge], z: NodeSet, rhs, offset: int, name: str) -> LpRow:
    coefficients = {
        offset + a: Fraction(1)
        for a, (u, v) in enumerate(arcs)
        if (z >> v) & 1 and not (z >> u) & 1
    }
    return LpRow(coefficients, rhs, GE, name=name, tag=z)


def enumerated_cut_rows(
    arcs: typing.Sequence[Edge],
    weights: typing.Sequence[Fraction],
    n: int,
    requirement: np.ndarray,
    offset: int,
    max_rows: int,
) -> typing.List[LpRow]:
    """Most violated cut rows ``y(delta_in(Z)) >= requirement[Z]`` by enumeration."""
    table, den = weighted_in_cut_table(arcs, weights, n)
    slack = table - requirement * den
    slack[0] = 0
    slack[full_mask(n)] = 0
    violated = np.flatnonzero(slack < 0)
    if not len(violated):
        return []
    order = sorted(violated, key=lambda z: (slack[z], z))[:max_rows]
    return [
        _entering_row(arcs, int(z), int(requirement[z]), offset, f"cut_{int(z)}")
        for z in order
    ]


def _kl_cut_rows(
    arcs: typing.Sequence[Edge],
    weights: typing.Sequence[Fraction],
    f: KLDemand,
    offset: int,
) -> typing.List[LpRow]:
    """Cut rows violated by the current weights, found with 2(n - 1) maximum flows."""
    n = f.n
    full = full_mask(n)
    rows = {}
    for v in range(n):
        if v == f.r0:
            continue
        if f.k > 0:
            value, source_side = max_flow(arcs, weights, f.r0, v, n)
            if value < f.k:
                z = full ^ source_side
                rows.setdefault(z, _entering_row(arcs, z, f.k, offset, f"cut_{z}"))
        if f.l > 0:
            value, source_side = max_flow(arcs, weights, v, f.r0, n)
            if value < f.l:
                z = full ^ source_side
                rows.setdefault(z, _entering_row(arcs, z, f.l, offset, f"cut_{z}"))
    return list(rows.values())


def both_directions(edges: typing.Sequence[Edge]) -> typing.List[Edge]:
    arcs = []
    for u, v in edges:
        arcs += [(u, v), (v, u)]
    return arcs


def extract_orientation(
    g: UGraph, f: Demand, cap: int = 12, max_rows: int = 5, max_rounds: int = 1000
) -> Orientation:
    """Covering orientation from a vertex of the orientation system.

    Cut rows are generated by maximum flows for (k, l) demands and by
    enumeration of all node sets otherwise.

    Raises
    ------

    InfeasibleError
        If `g` is not f-orientable.

    ContractError
        If the vertex found is fractional or does not cover f.
    """
    if f.n != g.n:
        raise ValueError(f"demand on {f.n} nodes, graph on {g.n} nodes")
    arcs = both_directions(g.edges)
    variables = [LpVariable(f"y_{u}_{v}_{a}") for a, (u, v) in enumerate(arcs)]
    rows = [
        LpRow({2 * i: 1, 2 * i + 1: 1}, 1, EQ, name=f"edge_{i}") for i in range(g.m)
    ]
    problem = LpProblem(variables, [0] * len(arcs), rows, name="orientation")

    if isinstance(f, KLDemand):

        def separate(y):
            return _kl_cut_rows(arcs, y, f, 0)

    else:
        if g.n > cap:
            raise CapExceededError("enumeration_max_nodes", g.n, cap, "cut enumeration")
        requirement = f.table

        def separate(y):
            return enumerated_cut_rows(arcs, y, g.n, requirement, 0, max_rows)

    solution = solve_with_separation(problem, separate, max_rounds)
    if any(v not in (0, 1) for v in solution.values):
        raise ContractError("orientation system returned a fractional vertex")
    orientation = Orientation(
        g.edges, tuple(solution.values[2 * i] == 1 for i in range(g.m))
    )
    if not verify_covers(orientation, g, f):
        raise ContractError("extracted orientation does not cover the demand")
    logger.debug(f"orientation found after {solution.rounds} separation rounds")
    return orientation


def verify_covers(o: Orientation, g: UGraph, f: Demand) -> bool:
    """Whether every node set Z has in-degree at least f(Z)."""
    if tuple(o.edges) != tuple(g.edges):
        return False
    arcs = o.arcs()
    if isinstance(f, KLDemand):
        unit = [1] * len(arcs)
        for v in range(g.n):
            if v == f.r0:
                continue
            if f.k and max_flow(arcs, unit, f.r0, v, g.n)[0] < f.k:
                return False
            if f.l and max_flow(arcs, unit, v, f.r0, g.n)[0] < f.l:
                return False
        return True
    return bool(np.all(in_degree_table(arcs, g.n) >= f.table))


def solve_cut_relaxation(inst, cap: int = 12, max_rows: int = 5) -> BasicSolution:
    """Vertex optimum of the cut relaxation over x and y.

    Variables are x for every purchasable edge, then y for both directions
    of every edge of G* (free edges first). Rows tie ``y_uv + y_vu`` to 1 on
    free edges and to x on purchasable ones; cut rows are generated by
    enumeration of all node sets.
    """
    if inst.n > cap:
        raise CapExceededError("enumeration_max_nodes", inst.n, cap, "cut enumeration")
    p = inst.n_purchasable
    edges = list(inst.free_edges) + list(inst.purchasable_edges)
    arcs = both_directions(edges)
    variables = [LpVariable(f"x_{j}") for j in range(p)]
    variables += [LpVariable(f"y_{u}_{v}_{a}") for a, (u, v) in enumerate(arcs)]
    objective = list(inst.costs) + [0] * len(arcs)

    rows = []
    n_free = len(inst.free_edges)
    for i in range(len(edges)):
        coefficients = {p + 2 * i: 1, p + 2 * i + 1: 1}
        if i < n_free:
            rows.append(LpRow(coefficients, 1, EQ, name=f"free_{i}"))
        else:
            coefficients[i - n_free] = -1
            rows.append(LpRow(coefficients, 0, EQ, name=f"buy_{i - n_free}"))
    problem = LpProblem(variables, objective, rows, name="cut_relaxation")
    requirement = inst.demand.table

    def separate(values):
        return enumerated_cut_rows(arcs, values[p:], inst.n, requirement, p, max_rows)

    return solve_with_separation(problem, separate)
