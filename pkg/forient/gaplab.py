"""Integrality gap of the cut relaxation for mixed graphs.

The ladder instance has nodes u_1..u_n and v_1..v_n, a fixed arc set A
made of the arcs (u_i, v_i), (u_i, v_{i+1}) and two reversed copies of
each, free rails {u_i, u_{i+1}} and {v_i, v_{i+1}}, and one purchasable
edge {u_n, v_1} of cost 1. Covering every node set Z with k - d_in_A(Z)
arcs costs 1 integrally and 1/n fractionally. For k > 2 the instance
carries k - 2 extra directed Hamiltonian cycles.
"""

# native imports
import functools
import logging
import typing
from dataclasses import dataclass
from fractions import Fraction

logger = logging.getLogger()

# forient imports
from forient.demand import TableDemand
from forient.errors import CapExceededError, ContractError, InfeasibleError
from forient.exactlp import (
    EQ,
    GE,
    BasicSolution,
    LpProblem,
    LpRow,
    LpVariable,
    is_vertex,
    solve_with_separation,
)
from forient.graph import Edge, MixedGraph, NodeSet, UGraph, full_mask, in_degree_table, weighted_in_cut_table
from forient.oracle import exact_orientation_search
from forient.orient import both_directions, enumerated_cut_rows
from forient.reporting import Backend, Pipeline

# third party imports
import numpy as np
import pandas as pd


@dataclass(frozen=True)
class GapInstance:
    """Ladder instance on 2n nodes; u_i is node i - 1 and v_i is node n + i - 1."""

    n: int
    k: int
    mixed: MixedGraph
    good_arcs: typing.Tuple[Edge, ...]
    bad_arcs: typing.Tuple[Edge, ...]
    cycle_arcs: typing.Tuple[Edge, ...]
    e_r: Edge
    cost: Fraction = Fraction(1)

    @property
    def nodes(self) -> int:
        return 2 * self.n

    @property
    def arcs(self) -> typing.Tuple[Edge, ...]:
        return self.mixed.arcs

    @property
    def free_edges(self) -> typing.Tuple[Edge, ...]:
        return self.mixed.uedges

    def u(self, i: int) -> int:
        return i - 1

    def v(self, i: int) -> int:
        return self.n + i - 1

    @functools.cached_property
    def requirement(self) -> np.ndarray:
        """``k - d_in_A(Z)`` per node set, zero on the empty and the full set."""
        table = self.k - in_degree_table(self.arcs, self.nodes)
        table[0] = 0
        table[full_mask(self.nodes)] = 0
        return table

    @property
    def lp_edges(self) -> typing.List[Edge]:
        """Free rails followed by the purchasable edge."""
        return list(self.free_edges) + [self.e_r]

    @property
    def lp_arcs(self) -> typing.List[Edge]:
        """Both directions of every edge in `lp_edges`; arc a is variable a + 1."""
        return both_directions(self.lp_edges)


def build_gap_instance(n: int, k: int = 2) -> GapInstance:
    """Ladder instance with 2n nodes for connectivity target k."""
    if n < 2:
        raise ValueError(f"expected n >= 2, got {n}")
    if k < 2:
        raise ValueError(f"expected k >= 2, got {k}")

    def u(i):
        return i - 1

    def v(i):
        return n + i - 1

    good = [(u(i), v(i)) for i in range(1, n + 1)]
    good += [(u(i), v(i + 1)) for i in range(1, n)]
    bad = []
    for a, b in good:
        bad += [(b, a), (b, a)]
    cycle = [(u(i), u(i + 1)) for i in range(1, n)] + [(u(n), v(n))]
    cycle += [(v(i + 1), v(i)) for i in range(n - 1, 0, -1)] + [(v(1), u(1))]
    cycles = cycle * (k - 2)
    rails = [(u(i), u(i + 1)) for i in range(1, n)] + [(v(i), v(i + 1)) for i in range(1, n)]
    mixed = MixedGraph(2 * n, tuple(good + bad + cycles), tuple(rails))
    return GapInstance(
        n=n,
        k=k,
        mixed=mixed,
        good_arcs=tuple(good),
        bad_arcs=tuple(bad),
        cycle_arcs=tuple(cycles),
        e_r=(u(n), v(1)),
    )


def fundamental_cuts(gi: GapInstance) -> typing.List[NodeSet]:
    """S_1..S_n followed by T_1..T_{n-1}."""
    cuts = []
    for i in range(1, gi.n + 1):
        nodes = [gi.u(j) for j in range(1, i)] + [gi.v(j) for j in range(1, i + 1)]
        cuts.append(sum(1 << w for w in nodes))
    for i in range(1, gi.n):
        nodes = [gi.u(j) for j in range(i + 1, gi.n + 1)] + [gi.v(j) for j in range(i + 1, gi.n + 1)]
        cuts.append(sum(1 << w for w in nodes))
    return cuts


def _enters(arc: Edge, z: NodeSet) -> bool:
    u, v = arc
    return bool((z >> v) & 1) and not (z >> u) & 1


def cut_counts(gi: GapInstance) -> typing.Tuple[int, int]:
    """Arc supply and total demand k over the fundamental cuts.

    The supply counts the fixed arcs entering a fundamental cut plus one per
    free rail, which enters exactly one fundamental cut in either direction.

    Raises
    ------

    ContractError
        If a reversed arc enters a fundamental cut or a rail direction does
        not enter exactly one.
    """
    cuts = fundamental_cuts(gi)
    for arc in gi.bad_arcs:
        if any(_enters(arc, z) for z in cuts):
            raise ContractError(f"reversed arc {arc} enters a fundamental cut")
    for arc in both_directions(gi.free_edges):
        hits = sum(_enters(arc, z) for z in cuts)
        if hits != 1:
            raise ContractError(f"rail direction {arc} enters {hits} fundamental cuts")
    supply = sum(_enters(arc, z) for arc in gi.arcs for z in cuts) + len(gi.free_edges)
    return supply, gi.k * len(cuts)


def _lp3_base(gi: GapInstance) -> LpProblem:
    arcs = gi.lp_arcs
    variables = [LpVariable("x_r")]
    variables += [LpVariable(f"y_{u}_{v}") for u, v in arcs]
    rows = []
    n_rails = len(gi.free_edges)
    for i in range(n_rails + 1):
        coefficients = {1 + 2 * i: 1, 2 + 2 * i: 1}
        if i < n_rails:
            rows.append(LpRow(coefficients, 1, EQ, name=f"rail_{i}"))
        else:
            coefficients[0] = -1
            rows.append(LpRow(coefficients, 0, EQ, name="buy_r"))
    objective = [gi.cost] + [0] * len(arcs)
    return LpProblem(variables, objective, rows, name=f"gap_{gi.n}_{gi.k}")


def lp3_build(gi: GapInstance, cap: int = 14) -> LpProblem:
    """The mixed-graph cut relaxation with every cut row written out.

    Rows with a nonpositive right-hand side are kept.

    Raises
    ------

    CapExceededError
        If the instance has more than `cap` nodes.
    """
    if gi.nodes > cap:
        raise CapExceededError("lp3_materialize_max_nodes", gi.nodes, cap, "cut row materialisation")
    problem = _lp3_base(gi)
    arcs = gi.lp_arcs
    rows = []
    for z in range(1, full_mask(gi.nodes)):
        coefficients = {1 + a: Fraction(1) for a, arc in enumerate(arcs) if _enters(arc, z)}
        rows.append(LpRow(coefficients, int(gi.requirement[z]), GE, name=f"cut_{z}", tag=z))
    problem.add_rows(rows)
    return problem


def lp3_solve(gi: GapInstance, cap: int = 12, max_rows: int = 10) -> BasicSolution:
    """Basic optimum of the mixed-graph cut relaxation, cut rows generated by enumeration."""
    if gi.nodes > cap:
        raise CapExceededError("enumeration_max_nodes", gi.nodes, cap, "cut enumeration")
    problem = _lp3_base(gi)
    arcs = gi.lp_arcs
    requirement = gi.requirement

    def separate(values):
        return enumerated_cut_rows(arcs, values[1:], gi.nodes, requirement, 1, max_rows)

    solution = solve_with_separation(problem, separate)
    logger.debug(
        f"gap n={gi.n} k={gi.k}: relaxation optimum {solution.objective} "
        f"after {solution.rounds} separation rounds"
    )
    return solution


def closed_form_solution(gi: GapInstance, cap: int = 12) -> typing.List[Fraction]:
    """Fractional point of cost 1/n in the variable order of `lp3_build`.

    The rail u_i u_{i+1} carries 1 - i/n forward and i/n backward, the rail
    v_i v_{i+1} carries i/n forward and 1 - i/n backward, and the purchased
    edge is oriented u_n -> v_1 with weight 1/n.

    Raises
    ------

    ContractError
        If some cut row is violated by the point.
    """
    if gi.nodes > cap:
        raise CapExceededError("enumeration_max_nodes", gi.nodes, cap, "cut enumeration")
    n = gi.n
    weight = {}
    for i in range(1, n):
        t = Fraction(i, n)
        weight[(gi.u(i), gi.u(i + 1))] = 1 - t
        weight[(gi.u(i + 1), gi.u(i))] = t
        weight[(gi.v(i), gi.v(i + 1))] = t
        weight[(gi.v(i + 1), gi.v(i))] = 1 - t
    weight[gi.e_r] = Fraction(1, n)
    weight[(gi.e_r[1], gi.e_r[0])] = Fraction(0)
    values = [Fraction(1, n)] + [weight[arc] for arc in gi.lp_arcs]

    table, den = weighted_in_cut_table(gi.lp_arcs, values[1:], gi.nodes)
    deficit = gi.requirement * den - table
    deficit[0] = 0
    deficit[full_mask(gi.nodes)] = 0
    if np.any(deficit > 0):
        z = int(np.argmax(deficit))
        raise ContractError(f"closed form misses the cut row of node set {z:#x}")
    return values


def closed_form_is_vertex(gi: GapInstance, cap: int = 8) -> typing.Optional[bool]:
    """Whether the closed-form point is a vertex, None above `cap` nodes."""
    if gi.nodes > cap:
        return None
    return is_vertex(lp3_build(gi, cap=cap), closed_form_solution(gi))


def integral_witness(gi: GapInstance) -> typing.List[Edge]:
    """Cost 1 orientation: rails oriented u_i -> u_{i+1} and v_i -> v_{i+1}, u_n -> v_1 bought."""
    return list(gi.free_edges) + [gi.e_r]


def covers(gi: GapInstance, arcs: typing.Sequence[Edge]) -> bool:
    """Whether the fixed arcs together with `arcs` enter every node set at least k times."""
    table = in_degree_table(list(gi.arcs) + list(arcs), gi.nodes)
    table[0] = gi.k
    table[full_mask(gi.nodes)] = gi.k
    return bool(np.all(table >= gi.k))


def integral_optimum(gi: GapInstance, cap: int = 6) -> Fraction:
    """Cheapest integral solution by searching every orientation of the rails, with and without e_r.

    Raises
    ------

    CapExceededError
        If n exceeds `cap`.

    InfeasibleError
        If no orientation covers the requirement, which the construction rules out.
    """
    if gi.n > cap:
        raise CapExceededError("gap_brute_force_max_n", gi.n, cap, "integral gap optimum")
    demand = TableDemand.from_table(gi.nodes, np.maximum(gi.requirement, 0))
    for buy in (False, True):
        edges = list(gi.free_edges) + ([gi.e_r] if buy else [])
        orientation = exact_orientation_search(UGraph(gi.nodes, edges), demand, cap=len(edges))
        if orientation is not None:
            return gi.cost if buy else Fraction(0)
    raise InfeasibleError(f"gap instance n={gi.n} k={gi.k} has no covering orientation")


def lp1_max_fraction(gi: GapInstance, cap: int = 12) -> Fraction:
    """Largest purchase variable at the optimal vertex of the relaxation.

    The only purchase variable sits at 1/n, below the 1/6 fixing threshold
    once n exceeds 6.
    """
    return lp3_solve(gi, cap=cap).value(0)


def gap_report(
    n_values: typing.Iterable[int],
    k: int = 2,
    brute_force_cap: int = 6,
    enumeration_cap: int = 12,
    vertex_cap: int = 8,
    reporter: typing.Optional[typing.Union[Backend, Pipeline]] = None,
) -> pd.DataFrame:
    """Relaxation value, integral optimum and their ratio per ladder size.

    Parameters
    ----------

    n_values : iterable of int
        Ladder sizes.

    k : int, default 2
        Connectivity target.

    brute_force_cap : int, default 6
        Largest n for which the integral optimum is searched.

    enumeration_cap : int, default 12
        Largest node count for cut enumeration.

    vertex_cap : int, default 8
        Largest node count for which the closed-form point is checked to be a vertex.

    reporter : Backend or Pipeline, default None
        Receives one ``gap_row`` event per size.

    Returns
    -------

    pd.DataFrame
        Columns ``n``, ``k``, ``lp_value``, ``integral_value``, ``ratio``,
        ``cut_supply``, ``cut_demand``, ``max_fraction`` and ``vertex``;
        values are exact fractions.
    """
    records = []
    for n in n_values:
        gi = build_gap_instance(n, k)
        solution = lp3_solve(gi, cap=enumeration_cap)
        closed_form = closed_form_solution(gi, cap=enumeration_cap)
        if _lp3_base(gi).objective_value(closed_form) != solution.objective:
            raise ContractError(
                f"closed form costs {closed_form[0]}, relaxation optimum is {solution.objective}"
            )
        integral = integral_optimum(gi, cap=brute_force_cap)
        supply, demand = cut_counts(gi)
        record = {
            "n": n,
            "k": k,
            "lp_value": solution.objective,
            "integral_value": integral,
            "ratio": integral / solution.objective if solution.objective else None,
            "cut_supply": supply,
            "cut_demand": demand,
            "max_fraction": solution.value(0),
            "vertex": closed_form_is_vertex(gi, cap=vertex_cap),
        }
        records.append(record)
        if reporter is not None:
            reporter.log_event("gap_row", record)
        logger.progress(
            f"gap n={n} k={k}: relaxation {record['lp_value']}, integral {integral}, "
            f"ratio {record['ratio']}"
        )
    columns = [
        "n",
        "k",
        "lp_value",
        "integral_value",
        "ratio",
        "cut_supply",
        "cut_demand",
        "max_fraction",
        "vertex",
    ]
    return pd.DataFrame(records, columns=columns)
