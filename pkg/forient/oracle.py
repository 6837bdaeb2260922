"""Exhaustive ground truth for small instances.

`exact_opt` walks the subsets of purchasable edges in nondecreasing cost
and tests f-orientability of each block of subsets at once against every
partition and co-partition. `exact_orientation_search` tries every
orientation of a graph, and `benchmark` compares iterative rounding with
the exact optimum on random instances.
"""

# native imports
import logging
import math
import typing
from dataclasses import dataclass
from fractions import Fraction

logger = logging.getLogger()

# forient imports
from forient import kernels
from forient.demand import Demand, label_demands
from forient.errors import CapExceededError, InfeasibleError
from forient.graph import UGraph, membership
from forient.instance import Instance, random_instance
from forient.orient import Orientation
from forient.reporting import Backend, Pipeline
from forient.setfam import partition_labels
from forient.utils import scale_to_int64

# third party imports
import numpy as np
import pandas as pd


@dataclass(frozen=True)
class OracleResult:
    cost: Fraction
    chosen: typing.Tuple[int, ...]
    checked: int = 0


class _SubsetFeasibility:
    """Orientability of free edges plus subsets of purchasable edges, vectorised over subsets."""

    def __init__(self, inst: Instance, cap: int):
        labels = partition_labels(inst.n, cap)
        masks = kernels.part_masks(labels)
        free = np.array(inst.free_edges, dtype=np.int64).reshape(-1, 2)
        self.e_free = kernels.crossing_counts(labels, free[:, 0], free[:, 1])
        purchasable = np.array(inst.purchasable_edges, dtype=np.int64).reshape(-1, 2)
        self.crossing = (
            labels[:, purchasable[:, 0]] != labels[:, purchasable[:, 1]]
        ).astype(np.int64)
        demand_p, demand_c = label_demands(inst.demand, masks)
        has_copartition = (masks != 0).sum(axis=1) >= 3
        # a co-partition row with fewer than three parts is its partition row
        self.required = np.where(has_copartition, np.maximum(demand_p, demand_c), demand_p)
        self.n_purchasable = inst.n_purchasable

    def feasible(self, subsets: np.ndarray) -> np.ndarray:
        """Boolean per subset bitmask in `subsets`."""
        bits = (subsets[:, None] >> np.arange(self.n_purchasable, dtype=np.int64)[None, :]) & 1
        e = self.e_free[:, None] + self.crossing @ bits.T
        return np.all(e >= self.required[:, None], axis=0)


def exact_opt(
    inst: Instance,
    node_cap: int = 8,
    purchasable_cap: int = 20,
    lower_bound: typing.Optional[Fraction] = None,
    block: int = 4096,
) -> OracleResult:
    """Cheapest set of purchasable edges making the free graph f-orientable.

    Parameters
    ----------

    inst : Instance
        The instance.

    node_cap : int, default 8
        Largest node count accepted.

    purchasable_cap : int, default 20
        Largest number of purchasable edges accepted.

    lower_bound : Fraction, default None
        Known lower bound on the optimum, cheaper subsets are skipped.

    block : int, default 4096
        Number of subsets tested at once.

    Returns
    -------

    OracleResult
        Optimum cost and the lexicographically first cheapest subset with the
        fewest edges.

    Raises
    ------

    CapExceededError
        If the instance is above a cap.

    InfeasibleError
        If buying every purchasable edge does not suffice.
    """
    if inst.n > node_cap:
        raise CapExceededError("oracle_max_nodes", inst.n, node_cap, "exhaustive optimum")
    p = inst.n_purchasable
    if p > purchasable_cap:
        raise CapExceededError(
            "oracle_max_purchasable", p, purchasable_cap, "exhaustive optimum"
        )
    check = _SubsetFeasibility(inst, max(node_cap, inst.n))
    if not check.feasible(np.array([(1 << p) - 1], dtype=np.int64))[0]:
        raise InfeasibleError(
            f"instance {inst.name or '<unnamed>'} is infeasible even with every purchasable edge"
        )

    scaled, den = scale_to_int64(inst.costs)
    if scaled is None:
        raise ValueError("costs are too large for the exhaustive optimum")
    subsets = np.arange(1 << p, dtype=np.int64)
    costs = np.zeros(1 << p, dtype=np.int64)
    sizes = np.zeros(1 << p, dtype=np.int64)
    for j in range(p):
        bit = (subsets >> j) & 1
        costs += bit * scaled[j]
        sizes += bit
    order = np.lexsort((subsets, sizes, costs))
    if lower_bound is not None:
        floor = math.ceil(Fraction(lower_bound) * den)
        order = order[costs[order] >= floor]

    checked = 0
    for start in range(0, len(order), block):
        candidates = subsets[order[start : start + block]]
        ok = check.feasible(candidates)
        if ok.any():
            first = int(np.argmax(ok))
            checked += first + 1
            mask = int(candidates[first])
            chosen = tuple(j for j in range(p) if (mask >> j) & 1)
            cost = inst.cost_of(chosen)
            logger.info(f"optimum {cost} after testing {checked} subsets")
            return OracleResult(cost, chosen, checked)
        checked += len(candidates)
    # the full set is feasible, so the loop returns unless the bound was wrong
    raise ValueError(f"lower bound {lower_bound} exceeds the optimum")


def exact_orientation_search(
    g: UGraph, f: Demand, cap: int = 20, block: int = 4096
) -> typing.Optional[Orientation]:
    """First covering orientation in the order of direction bitmasks, None if none covers f.

    Bit i of the mask set means edge i is oriented as listed.
    """
    if g.m > cap:
        raise CapExceededError("orientation_search_max_edges", g.m, cap, "orientation search")
    if f.n != g.n:
        raise ValueError(f"demand on {f.n} nodes, graph on {g.n} nodes")
    member = membership(g.n).astype(np.int64)
    forward = np.zeros((1 << g.n, g.m), dtype=np.int64)
    backward = np.zeros((1 << g.n, g.m), dtype=np.int64)
    for i, (u, v) in enumerate(g.edges):
        forward[:, i] = member[:, v] * (1 - member[:, u])
        backward[:, i] = member[:, u] * (1 - member[:, v])
    base = backward.sum(axis=1)
    delta = forward - backward
    required = f.table

    masks = np.arange(1 << g.m, dtype=np.int64)
    shifts = np.arange(g.m, dtype=np.int64)
    for start in range(0, len(masks), block):
        batch = masks[start : start + block]
        bits = (batch[:, None] >> shifts[None, :]) & 1
        indegree = base[:, None] + delta @ bits.T
        ok = np.all(indegree >= required[:, None], axis=0)
        if ok.any():
            mask = int(batch[int(np.argmax(ok))])
            return Orientation(g.edges, tuple(bool((mask >> i) & 1) for i in range(g.m)))
    return None


def benchmark(
    count: int,
    seed: int = 0,
    n_max: int = 6,
    max_purchasable: int = 10,
    solver_kwargs: typing.Optional[dict] = None,
    generator_kwargs: typing.Optional[dict] = None,
    node_cap: int = 8,
    purchasable_cap: int = 20,
    reporter: typing.Optional[typing.Union[Backend, Pipeline]] = None,
) -> pd.DataFrame:
    """Iterative rounding against the exact optimum on random instances.

    Parameters
    ----------

    count : int
        Number of instances.

    seed : int, default 0
        Seed of the generator.

    n_max : int, default 6
        Largest node count.

    max_purchasable : int, default 10
        Largest number of purchasable edges.

    solver_kwargs : dict, default None
        Passed on to `forient.solver.solve`.

    generator_kwargs : dict, default None
        Passed on to `forient.instance.random_instance`.

    Returns
    -------

    pd.DataFrame
        One row per instance with exact costs, the ratio of solver cost to
        optimum and the smallest largest fraction over the fractional rounds.
    """
    from forient.solver import solve

    rng = np.random.default_rng(seed)
    solver_kwargs = dict(solver_kwargs or {})
    generator_kwargs = dict(generator_kwargs or {})
    generator_kwargs.setdefault("n_max", n_max)
    generator_kwargs.setdefault("max_purchasable", max_purchasable)

    records = []
    for i in range(count):
        inst = random_instance(rng, name=f"bench_{seed}_{i}", **generator_kwargs)
        result = solve(inst, **solver_kwargs)
        opt = exact_opt(
            inst,
            node_cap=node_cap,
            purchasable_cap=purchasable_cap,
            lower_bound=result.lp_lower_bound,
        )
        fractions = [r.max_fraction for r in result.rounds if r.max_fraction is not None]
        record = {
            "name": inst.name,
            "n": inst.n,
            "purchasable": inst.n_purchasable,
            "demand": str(inst.demand),
            "cost": result.total_cost,
            "opt": opt.cost,
            "lp_bound": result.lp_lower_bound,
            "ratio": result.total_cost / opt.cost if opt.cost else None,
            "rounds": len(result.rounds),
            "min_max_fraction": min(fractions) if fractions else None,
        }
        records.append(record)
        if reporter is not None:
            reporter.log_event("bench_row", record)
        logger.info(
            f"{inst.name}: cost {result.total_cost}, optimum {opt.cost}, bound {result.lp_lower_bound}"
        )
    columns = [
        "name",
        "n",
        "purchasable",
        "demand",
        "cost",
        "opt",
        "lp_bound",
        "ratio",
        "rounds",
        "min_max_fraction",
    ]
    return pd.DataFrame(records, columns=columns)
