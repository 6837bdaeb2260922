"""Separation of the partition / co-partition rows.

For a partition or co-partition P the row reads

    x(chi(P)) >= sum_{S in P} f(S) - e_G'(P)

where G' holds the free and the already fixed edges and x lives on the
remaining purchasable edges. All partitions are enumerated as restricted
growth strings; a co-partition shares its crossing edges with the partition
of complements, so both rows are evaluated from the same label table.
"""

# native imports
import logging
import typing
from dataclasses import dataclass
from fractions import Fraction

logger = logging.getLogger()

# forient imports
from forient import kernels
from forient.demand import Demand, KLDemand, label_demands, partition_demand
from forient.errors import CapExceededError
from forient.exactlp import GE, LpRow
from forient.graph import Edge, max_flow
from forient.setfam import COPARTITION, PARTITION, PoCP, from_labels, partition_labels
from forient.utils import scale_to_int64

# third party imports
import numpy as np


@dataclass(frozen=True)
class PartitionRow:
    """One partition / co-partition row evaluated at a point."""

    pocp: PoCP
    demand: int
    e_count: int
    chi: typing.Tuple[int, ...]
    lhs: Fraction

    @property
    def rhs(self) -> int:
        return self.demand - self.e_count

    @property
    def slack(self) -> Fraction:
        return self.lhs - self.rhs

    def to_lp_row(self) -> LpRow:
        return LpRow(
            {j: Fraction(1) for j in self.chi},
            self.rhs,
            GE,
            name=f"{self.pocp.kind[0]}{'_'.join(str(p) for p in self.pocp.parts)}",
            tag=self.pocp,
        )


class Lp2System:
    """All partition / co-partition rows for a fixed graph and variable edges.

    Parameters
    ----------

    n : int
        Number of nodes.

    fixed_edges : typing.Sequence[Edge]
        Edges counted in e_G'(P), free and already bought ones.

    variable_edges : typing.Sequence[Edge]
        Edges carrying an x variable, in variable order.

    demand : Demand
        The demand function.

    root : int
        Root of the partitions and co-partitions.

    skip_copartitions : bool, default None
        Whether co-partition rows are left out; defaults to True for
        (k, l) demands where they are dominated by partition rows.

    cap : int, default 10
        Largest node count accepted.
    """

    def __init__(
        self,
        n: int,
        fixed_edges: typing.Sequence[Edge],
        variable_edges: typing.Sequence[Edge],
        demand: Demand,
        root: int = 0,
        skip_copartitions: typing.Optional[bool] = None,
        cap: int = 10,
    ):
        if n > cap:
            raise CapExceededError("separation_max_nodes", n, cap, "exhaustive separation")
        if demand.n != n:
            raise ValueError(f"demand on {demand.n} nodes, expected {n}")
        self.n = n
        self.root = root
        self.demand = demand
        self.fixed_edges = list(fixed_edges)
        self.variable_edges = list(variable_edges)
        if skip_copartitions is None:
            skip_copartitions = isinstance(demand, KLDemand)
        self.skip_copartitions = skip_copartitions

        self.labels = partition_labels(n, max(cap, n))
        masks = kernels.part_masks(self.labels)
        self.n_parts = (masks != 0).sum(axis=1)

        fixed = np.array(self.fixed_edges, dtype=np.int64).reshape(-1, 2)
        self.e_fixed = kernels.crossing_counts(self.labels, fixed[:, 0], fixed[:, 1])

        variable = np.array(self.variable_edges, dtype=np.int64).reshape(-1, 2)
        self.crossing = (
            self.labels[:, variable[:, 0]] != self.labels[:, variable[:, 1]]
        )

        demand_p, demand_c = label_demands(demand, masks)
        self.demand_p = demand_p
        self.demand_c = demand_c
        self.rhs_p = demand_p - self.e_fixed
        # two-part co-partitions coincide with partitions
        self.has_copartition = self.n_parts >= 3
        self.rhs_c = demand_c - self.e_fixed
        self.rhs_magnitude = (
            int(max(np.abs(self.rhs_p).max(), np.abs(self.rhs_c).max())) if self.n_rows else 0
        )

    @property
    def n_rows(self) -> int:
        return len(self.labels)

    def max_rhs(self) -> int:
        """Largest right hand side among the rows in use."""
        best = int(self.rhs_p.max()) if self.n_rows else 0
        if not self.skip_copartitions and self.has_copartition.any():
            best = max(best, int(self.rhs_c[self.has_copartition].max()))
        return best

    def lhs(self, x: typing.Sequence[Fraction]) -> typing.Tuple[np.ndarray, int]:
        """Scaled left hand side of every partition row, and the scale."""
        if len(x) != len(self.variable_edges):
            raise ValueError(f"expected {len(self.variable_edges)} values, got {len(x)}")
        if not len(x):
            return np.zeros(self.n_rows, dtype=np.int64), 1
        scaled, den = scale_to_int64(x)
        if scaled is None:
            values = np.array([int(Fraction(v) * den) for v in x], dtype=object)
            return self.crossing.astype(object) @ values, den
        return self.crossing.astype(np.int64) @ scaled, den

    def scaled_sides(
        self, x: typing.Sequence[Fraction]
    ) -> typing.Tuple[np.ndarray, np.ndarray, np.ndarray, int]:
        """Left hand side and both right hand sides at the common scale of `x`.

        The arrays hold python integers once a scaled right hand side leaves
        the int64 range.
        """
        lhs, den = self.lhs(x)
        if lhs.dtype == object or (self.rhs_magnitude + 1) * den >= 2**62:
            return (
                lhs.astype(object),
                self.rhs_p.astype(object) * den,
                self.rhs_c.astype(object) * den,
                den,
            )
        return lhs, self.rhs_p * den, self.rhs_c * den, den

    def slacks(
        self, x: typing.Sequence[Fraction]
    ) -> typing.Tuple[np.ndarray, np.ndarray, int]:
        """Scaled slacks of partition and co-partition rows.

        Disabled co-partition rows get the largest representable slack.
        """
        lhs, scaled_p, scaled_c, den = self.scaled_sides(x)
        slack_p = lhs - scaled_p
        disabled = np.full(self.n_rows, np.iinfo(np.int64).max, dtype=np.int64)
        if slack_p.dtype == object:
            disabled = disabled.astype(object)
        if self.skip_copartitions:
            slack_c = disabled
        else:
            slack_c = np.where(self.has_copartition, lhs - scaled_c, disabled)
        return slack_p, slack_c, den

    def pocp(self, index: int, kind: str) -> PoCP:
        return from_labels(self.labels[index], kind, self.root)

    def row(self, index: int, kind: str, x: typing.Sequence[Fraction]) -> PartitionRow:
        chi = tuple(int(j) for j in np.flatnonzero(self.crossing[index]))
        demand = self.demand_p[index] if kind == PARTITION else self.demand_c[index]
        lhs = sum((Fraction(x[j]) for j in chi), Fraction(0))
        return PartitionRow(
            self.pocp(index, kind), int(demand), int(self.e_fixed[index]), chi, lhs
        )

    def evaluate(self, p: PoCP, x: typing.Sequence[Fraction]) -> PartitionRow:
        """Row of an arbitrary partition or co-partition at `x`."""
        if p.n != self.n:
            raise ValueError(f"family on {p.n} nodes, system on {self.n} nodes")
        labels = p.labels()
        chi = tuple(
            j for j, (u, v) in enumerate(self.variable_edges) if labels[u] != labels[v]
        )
        e_fixed = sum(1 for u, v in self.fixed_edges if labels[u] != labels[v])
        lhs = sum((Fraction(x[j]) for j in chi), Fraction(0))
        return PartitionRow(p, partition_demand(self.demand, p), e_fixed, chi, lhs)

    @staticmethod
    def _select(mask_p, mask_c) -> typing.List[typing.Tuple[int, str]]:
        chosen = [(int(i), PARTITION) for i in np.flatnonzero(mask_p)]
        chosen += [(int(i), COPARTITION) for i in np.flatnonzero(mask_c)]
        return chosen

    def violated(
        self, x: typing.Sequence[Fraction], max_rows: typing.Optional[int] = 5
    ) -> typing.List[PartitionRow]:
        """Most violated rows first, ties broken by the canonical encoding."""
        slack_p, slack_c, _ = self.slacks(x)
        mask_p = slack_p < 0
        mask_c = slack_c < 0
        if not mask_p.any() and not mask_c.any():
            return []
        if max_rows is not None:
            candidates = np.concatenate([slack_p[mask_p], slack_c[mask_c]])
            if len(candidates) > max_rows:
                if candidates.dtype == object:
                    threshold = sorted(candidates)[max_rows - 1]
                else:
                    threshold = np.partition(candidates, max_rows - 1)[max_rows - 1]
                mask_p &= slack_p <= threshold
                mask_c &= slack_c <= threshold
        rows = [self.row(i, kind, x) for i, kind in self._select(mask_p, mask_c)]
        rows.sort(key=lambda r: (r.slack, r.pocp.key()))
        if max_rows is not None:
            rows = rows[:max_rows]
        for r in rows:
            logger.debug(f"violated {r.pocp} slack {r.slack}")
        return rows

    def tight(
        self, x: typing.Sequence[Fraction], include_copartitions: bool = True
    ) -> typing.List[PartitionRow]:
        """Rows holding with equality at `x`, in canonical order.

        Co-partition rows are reported even when they are skipped during
        separation, they belong to the system all the same.
        """
        lhs, scaled_p, scaled_c, _ = self.scaled_sides(x)
        mask_p = np.asarray(lhs == scaled_p, dtype=bool)
        if include_copartitions:
            mask_c = self.has_copartition & np.asarray(lhs == scaled_c, dtype=bool)
        else:
            mask_c = np.zeros(self.n_rows, dtype=bool)
        rows = [self.row(i, kind, x) for i, kind in self._select(mask_p, mask_c)]
        rows.sort(key=lambda r: r.pocp.key())
        return rows

    def all_rows(self) -> typing.List[LpRow]:
        """Every row in use, materialised."""
        zero = [Fraction(0)] * len(self.variable_edges)
        kinds = [PARTITION] if self.skip_copartitions else [PARTITION, COPARTITION]
        rows = []
        for i in range(self.n_rows):
            for kind in kinds:
                if kind == COPARTITION and not self.has_copartition[i]:
                    continue
                rows.append(self.row(i, kind, zero).to_lp_row())
        return rows

    def audit_copartitions(self) -> bool:
        """Check that no co-partition row is stronger than its partition row.

        Both rows share their left hand side, so domination means
        ``rhs_c <= rhs_p`` on every labelling.
        """
        dominated = bool(
            np.all(~self.has_copartition | (self.demand_c <= self.demand_p))
        )
        if not dominated:
            bad = int(np.flatnonzero(self.has_copartition & (self.demand_c > self.demand_p))[0])
            logger.warning(
                f"co-partition {self.pocp(bad, COPARTITION)} is not dominated by its partition row"
            )
        return dominated

    def separator(
        self, max_rows: int = 5
    ) -> typing.Callable[[typing.Sequence[Fraction]], typing.List[LpRow]]:
        def separate(x):
            return [r.to_lp_row() for r in self.violated(x, max_rows)]

        return separate


def instance_system(inst, cap: int = 10, skip_copartitions: typing.Optional[bool] = None) -> Lp2System:
    """Row system of an instance with every purchasable edge as a variable."""
    return Lp2System(
        inst.n,
        inst.free_edges,
        inst.purchasable_edges,
        inst.demand,
        root=inst.root,
        skip_copartitions=skip_copartitions,
        cap=cap,
    )


def separate_lp2(
    x: typing.Sequence[Fraction],
    inst,
    max_rows: typing.Optional[int] = 5,
    audit_copartitions: bool = False,
    cap: int = 10,
) -> typing.List[PartitionRow]:
    """Most violated partition / co-partition rows of an instance at `x`.

    Parameters
    ----------

    x : typing.Sequence[Fraction]
        One value per purchasable edge.

    inst : Instance
        The instance.

    max_rows : int, default 5
        Number of rows returned at most, None for all.

    audit_copartitions : bool, default False
        Evaluate co-partition rows even for (k, l) demands and warn if the
        skip would have lost a row.

    cap : int, default 10
        Largest node count accepted.

    Returns
    -------

    typing.List[PartitionRow]
        Empty iff `x` is feasible.
    """
    system = instance_system(inst, cap, skip_copartitions=False if audit_copartitions else None)
    if audit_copartitions and isinstance(inst.demand, KLDemand):
        system.audit_copartitions()
    return system.violated(x, max_rows)


def cut_capacity_feasible(
    n: int,
    fixed_edges: typing.Sequence[Edge],
    variable_edges: typing.Sequence[Edge],
    x: typing.Sequence[Fraction],
    k: int,
) -> bool:
    """Whether every cut has capacity at least 2k.

    Fixed edges have capacity 1, variable edges their x value. Decided with
    n - 1 maximum flows from node 0.
    """
    if k == 0:
        return True
    arcs = []
    capacities = []
    weights = [Fraction(1)] * len(fixed_edges) + [Fraction(v) for v in x]
    for (u, v), w in zip(list(fixed_edges) + list(variable_edges), weights):
        arcs += [(u, v), (v, u)]
        capacities += [w, w]
    for v in range(1, n):
        value, _ = max_flow(arcs, capacities, 0, v, n)
        if value < 2 * k:
            return False
    return True


def feasibility_precheck_kl(x: typing.Sequence[Fraction], inst, cap: int = 10) -> bool:
    """Feasibility of `x` for a (k, l) demand.

    For ``k == l`` the rows hold iff the graph with free edges at weight 1 and
    purchasable edges at weight x is 2k-edge-connected. For ``k > l``
    enumeration decides.
    """
    demand = inst.demand
    if not isinstance(demand, KLDemand):
        raise ValueError("feasibility_precheck_kl needs a (k, l) demand")
    if demand.k != demand.l:
        return not separate_lp2(x, inst, max_rows=1, cap=cap)
    return cut_capacity_feasible(
        inst.n, inst.free_edges, inst.purchasable_edges, x, demand.k
    )
