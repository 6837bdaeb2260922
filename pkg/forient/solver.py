"""Iterative rounding for the minimum cost f-orientable subgraph problem.

Every round solves the partition / co-partition relaxation over the
undecided purchasable edges to a basic optimum, drops edges at 0 and buys
every edge at or above the threshold. Any basic optimum with a fractional
edge has an edge at 1/6 or more, which bounds the cost by six times the
first relaxation optimum.
"""

# native imports
import logging
import typing
from dataclasses import dataclass, field
from fractions import Fraction

logger = logging.getLogger()

# forient imports
from forient.demand import KLDemand
from forient.errors import CapExceededError, ContractError, InfeasibleError, RoundingAnomaly
from forient.exactlp import BasicSolution, LpProblem, LpVariable, solve_with_separation
from forient.graph import Edge
from forient.instance import Instance
from forient.orient import Orientation, extract_orientation, is_f_orientable, verify_covers
from forient.reporting import Backend, Pipeline
from forient.separation import Lp2System, feasibility_precheck_kl
from forient.utils import parse_rational, rational_to_json

# third party imports
import pandas as pd

RESULT_FORMAT = "forient-result"
DEFAULT_THRESHOLD = Fraction(1, 6)


@dataclass(frozen=True)
class RoundRecord:
    """One rounding step.

    `variables` index the purchasable edges undecided at the start of the
    round, `values` holds their basic optimum in the same order.
    """

    index: int
    variables: typing.Tuple[int, ...]
    values: typing.Tuple[Fraction, ...]
    objective: Fraction
    dropped: typing.Tuple[int, ...]
    fixed: typing.Tuple[int, ...]
    max_fraction: typing.Optional[Fraction]
    separation_rounds: int
    generated_rows: int
    basis_size: typing.Optional[int] = None
    lp_text: typing.Optional[str] = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "variables": list(self.variables),
            "values": [rational_to_json(v) for v in self.values],
            "objective": rational_to_json(self.objective),
            "dropped": list(self.dropped),
            "fixed": list(self.fixed),
            "max_fraction": None
            if self.max_fraction is None
            else rational_to_json(self.max_fraction),
            "separation_rounds": self.separation_rounds,
            "generated_rows": self.generated_rows,
            "basis_size": self.basis_size,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RoundRecord":
        return cls(
            index=int(data["index"]),
            variables=tuple(int(j) for j in data["variables"]),
            values=tuple(parse_rational(v, "values") for v in data["values"]),
            objective=parse_rational(data["objective"], "objective"),
            dropped=tuple(int(j) for j in data["dropped"]),
            fixed=tuple(int(j) for j in data["fixed"]),
            max_fraction=None
            if data.get("max_fraction") is None
            else parse_rational(data["max_fraction"], "max_fraction"),
            separation_rounds=int(data["separation_rounds"]),
            generated_rows=int(data["generated_rows"]),
            basis_size=data.get("basis_size"),
        )


@dataclass(frozen=True)
class AugResult:
    """Bought edges, their cost, the relaxation bound and a covering orientation.

    `chosen` indexes the purchasable edges of the instance. The orientation
    is over the free edges followed by the chosen ones.
    """

    chosen: typing.Tuple[int, ...]
    chosen_edges: typing.Tuple[Edge, ...]
    total_cost: Fraction
    lp_lower_bound: Fraction
    rounds: typing.Tuple[RoundRecord, ...]
    orientation: Orientation
    threshold: Fraction = DEFAULT_THRESHOLD
    instance_name: str = ""

    @property
    def ratio(self) -> typing.Optional[Fraction]:
        if self.lp_lower_bound == 0:
            return None
        return self.total_cost / self.lp_lower_bound

    def to_dict(self) -> dict:
        return {
            "format": RESULT_FORMAT,
            "version": 1,
            "instance": self.instance_name,
            "chosen": list(self.chosen),
            "chosen_edges": [list(e) for e in self.chosen_edges],
            "total_cost": rational_to_json(self.total_cost),
            "lp_lower_bound": rational_to_json(self.lp_lower_bound),
            "threshold": rational_to_json(self.threshold),
            "orientation": {
                "edges": [list(e) for e in self.orientation.edges],
                "arcs": [list(a) for a in self.orientation.arcs()],
            },
            "rounds": [r.to_dict() for r in self.rounds],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AugResult":
        if data.get("format") != RESULT_FORMAT:
            raise ValueError(f"expected format {RESULT_FORMAT!r}, got {data.get('format')!r}")
        edges = tuple(tuple(int(v) for v in e) for e in data["orientation"]["edges"])
        arcs = [tuple(int(v) for v in a) for a in data["orientation"]["arcs"]]
        if len(arcs) != len(edges):
            raise ValueError("orientation needs one arc per edge")
        forward = []
        for (u, v), arc in zip(edges, arcs):
            if arc not in ((u, v), (v, u)):
                raise ValueError(f"arc {arc} does not orient edge ({u}, {v})")
            forward.append(arc == (u, v))
        return cls(
            chosen=tuple(int(j) for j in data["chosen"]),
            chosen_edges=tuple(tuple(int(v) for v in e) for e in data["chosen_edges"]),
            total_cost=parse_rational(data["total_cost"], "total_cost"),
            lp_lower_bound=parse_rational(data["lp_lower_bound"], "lp_lower_bound"),
            rounds=tuple(RoundRecord.from_dict(r) for r in data["rounds"]),
            orientation=Orientation(edges, tuple(forward)),
            threshold=parse_rational(data.get("threshold", [1, 6]), "threshold"),
            instance_name=data.get("instance", ""),
        )

    def rounds_frame(self) -> pd.DataFrame:
        """Per round trace as a table with exact values rendered as p/q."""
        records = []
        for r in self.rounds:
            records.append(
                {
                    "round": r.index,
                    "variables": len(r.variables),
                    "objective": str(r.objective),
                    "max_fraction": "" if r.max_fraction is None else str(r.max_fraction),
                    "dropped": len(r.dropped),
                    "fixed": len(r.fixed),
                    "fixed_edges": ",".join(str(j) for j in r.fixed),
                    "separation_rounds": r.separation_rounds,
                    "generated_rows": r.generated_rows,
                    "basis_size": r.basis_size,
                }
            )
        columns = [
            "round",
            "variables",
            "objective",
            "max_fraction",
            "dropped",
            "fixed",
            "fixed_edges",
            "separation_rounds",
            "generated_rows",
            "basis_size",
        ]
        return pd.DataFrame(records, columns=columns)


def _as_pipeline(reporter: typing.Optional[typing.Union[Backend, Pipeline]]) -> typing.Union[Backend, Pipeline]:
    if reporter is None:
        return Pipeline([])
    return reporter


def check_feasible(
    inst: Instance, cap: int = 10, use_flow_precheck: bool = True
) -> None:
    """Raise `InfeasibleError` unless buying every purchasable edge suffices.

    The witness is the most violated partition / co-partition row.
    """
    ones = [Fraction(1)] * inst.n_purchasable
    demand = inst.demand
    if use_flow_precheck and isinstance(demand, KLDemand) and demand.k == demand.l:
        if feasibility_precheck_kl(ones, inst, cap):
            return
    system = Lp2System(
        inst.n, inst.free_edges, inst.purchasable_edges, demand, root=inst.root,
        skip_copartitions=False, cap=cap,
    )
    violated = system.violated(ones, max_rows=1)
    if violated:
        row = violated[0]
        raise InfeasibleError(
            f"instance {inst.name or '<unnamed>'} is infeasible even with every "
            f"purchasable edge: {row.pocp} misses {-row.slack}",
            row,
        )


def residual_relaxation(
    inst: Instance,
    bought: typing.Sequence[int],
    remaining: typing.Sequence[int],
    skip_copartitions: typing.Optional[bool] = None,
    cap: int = 10,
    name: str = "relaxation",
) -> typing.Tuple[Lp2System, LpProblem]:
    """Row system and empty problem over the `remaining` purchasable edges, `bought` ones fixed."""
    fixed_edges = list(inst.free_edges) + [inst.purchasable_edges[j] for j in bought]
    variable_edges = [inst.purchasable_edges[j] for j in remaining]
    system = Lp2System(
        inst.n, fixed_edges, variable_edges, inst.demand, root=inst.root,
        skip_copartitions=skip_copartitions, cap=cap,
    )
    problem = LpProblem(
        [LpVariable(f"x_{j}") for j in remaining],
        [inst.costs[j] for j in remaining],
        [],
        name=name,
    )
    return system, problem


def first_relaxation(
    inst: Instance, max_violations_per_round: int = 5, cap: int = 10, max_separation_rounds: int = 1000
) -> typing.Tuple[Lp2System, BasicSolution]:
    """Basic optimum of the relaxation over every purchasable edge, with its row system."""
    if inst.n > cap:
        raise CapExceededError("separation_max_nodes", inst.n, cap, "exhaustive separation")
    system, problem = residual_relaxation(inst, [], range(inst.n_purchasable), cap=cap)
    solution = solve_with_separation(
        problem, system.separator(max_violations_per_round), max_separation_rounds
    )
    return system, solution


def solve(
    inst: Instance,
    max_violations_per_round: int = 5,
    threshold: Fraction = DEFAULT_THRESHOLD,
    audit_copartitions: bool = False,
    verify_basis_structure: bool = False,
    use_flow_precheck: bool = True,
    max_separation_rounds: int = 1000,
    emit_lp: bool = False,
    cap: int = 10,
    enumeration_cap: int = 12,
    reporter: typing.Optional[typing.Union[Backend, Pipeline]] = None,
) -> AugResult:
    """Buy purchasable edges by iterative rounding.

    Parameters
    ----------

    inst : Instance
        The instance, its demand crossing supermodular for the free graph.

    max_violations_per_round : int, default 5
        Rows added per separation call at most.

    threshold : Fraction, default 1/6
        Edges with a value at or above it are bought.

    audit_copartitions : bool, default False
        Keep co-partition rows for (k, l) demands and warn if one would have
        been lost by skipping them.

    verify_basis_structure : bool, default False
        Extract a strongly cross-free basis of tight rows for every basic
        optimum and check its properties.

    use_flow_precheck : bool, default True
        Decide feasibility of (k, k) demands with maximum flows.

    max_separation_rounds : int, default 1000
        Limit for the cutting plane loop of every round.

    emit_lp : bool, default False
        Keep the final relaxation of every round in LP text form.

    cap : int, default 10
        Largest node count for exhaustive separation.

    enumeration_cap : int, default 12
        Largest node count for the orientation step.

    reporter : Backend or Pipeline, default None
        Receives round events and metrics.

    Returns
    -------

    AugResult
        Bought edges, cost, relaxation bound, trace and orientation.

    Raises
    ------

    InfeasibleError
        If even buying every purchasable edge does not suffice.

    RoundingAnomaly
        If a basic optimum has fractional edges all below the threshold.
    """
    threshold = Fraction(threshold)
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    if inst.n > cap:
        raise CapExceededError("separation_max_nodes", inst.n, cap, "exhaustive separation")
    reporter = _as_pipeline(reporter)

    check_feasible(inst, cap, use_flow_precheck)

    skip = False if audit_copartitions else None
    remaining = list(range(inst.n_purchasable))
    bought: typing.List[int] = []
    rounds: typing.List[RoundRecord] = []
    lp_lower_bound = Fraction(0)
    previous_bound = None

    while remaining:
        index = len(rounds) + 1
        system, problem = residual_relaxation(inst, bought, remaining, skip, cap, f"round_{index}")
        if audit_copartitions and isinstance(inst.demand, KLDemand):
            system.audit_copartitions()
        if system.max_rhs() <= 0:
            logger.info(f"round {index}: every row is satisfied by the bought edges")
            break

        reporter.log_event("round_start", {"round": index, "variables": len(remaining)})
        solution = solve_with_separation(
            problem, system.separator(max_violations_per_round), max_separation_rounds
        )
        x = solution.values
        if index == 1:
            lp_lower_bound = solution.objective

        basis_size = None
        if verify_basis_structure:
            from forient.uncross import extract_strongly_crossfree_basis

            family = extract_strongly_crossfree_basis(x, system)
            failed = [name for name, ok in family.check().items() if not ok]
            if failed:
                raise ContractError(f"round {index}: basis of tight rows fails {failed}")
            basis_size = len(family)

        dropped = tuple(j for j, v in zip(remaining, x) if v == 0)
        fixed = tuple(j for j, v in zip(remaining, x) if v >= threshold)
        fractional = [v for v in x if 0 < v < 1]
        max_fraction = max(fractional) if fractional else None
        if fractional and max_fraction < threshold:
            raise RoundingAnomaly(
                f"round {index}: largest fractional value {max_fraction} is below {threshold}"
            )
        if not dropped and not fixed:
            raise ContractError(f"round {index}: no edge was dropped or bought")

        # the previous optimum restricted to the undecided edges stays feasible
        if previous_bound is not None and solution.objective > previous_bound:
            raise ContractError(
                f"round {index}: optimum {solution.objective} exceeds the conditioned "
                f"previous optimum {previous_bound}"
            )
        previous_bound = solution.objective - sum(
            (inst.costs[j] * v for j, v in zip(remaining, x) if v >= threshold), Fraction(0)
        )

        lp_text = None
        if emit_lp:
            lp_text = LpProblem(
                problem.variables, problem.objective, list(solution.rows), problem.name
            ).to_lp_text()

        record = RoundRecord(
            index=index,
            variables=tuple(remaining),
            values=tuple(x),
            objective=solution.objective,
            dropped=dropped,
            fixed=fixed,
            max_fraction=max_fraction,
            separation_rounds=solution.rounds,
            generated_rows=len(solution.rows),
            basis_size=basis_size,
            lp_text=lp_text,
        )
        rounds.append(record)
        reporter.log_metric("lp_objective", solution.objective)
        reporter.log_metric("max_fraction", max_fraction)
        reporter.log_metric("edges_fixed", len(fixed))
        reporter.log_metric("edges_dropped", len(dropped))
        reporter.log_event("round_end", record.to_dict())
        logger.progress(
            f"round {index}: optimum {solution.objective}, bought {len(fixed)}, "
            f"dropped {len(dropped)}, {len(remaining) - len(fixed) - len(dropped)} left"
        )

        bought += list(fixed)
        decided = set(dropped) | set(fixed)
        remaining = [j for j in remaining if j not in decided]

    chosen = tuple(sorted(bought))
    total_cost = inst.cost_of(chosen)
    if total_cost > lp_lower_bound / threshold:
        raise ContractError(
            f"cost {total_cost} exceeds {1 / threshold} times the bound {lp_lower_bound}"
        )
    graph = inst.augmented_graph(chosen)
    orientation = extract_orientation(graph, inst.demand, cap=enumeration_cap)
    logger.progress(
        f"bought {len(chosen)} edges at cost {total_cost}, relaxation bound {lp_lower_bound}"
    )
    return AugResult(
        chosen=chosen,
        chosen_edges=tuple(inst.purchasable_edges[j] for j in chosen),
        total_cost=total_cost,
        lp_lower_bound=lp_lower_bound,
        rounds=tuple(rounds),
        orientation=orientation,
        threshold=threshold,
        instance_name=inst.name,
    )


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass(frozen=True)
class Certificate:
    checks: typing.Tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def certify(
    res: AugResult, inst: Instance, cap: int = 10, enumeration_cap: int = 12
) -> Certificate:
    """Re-verify a result independently of the rounding trace.

    Failed checks are reported, never raised.
    """
    checks = []
    p = inst.n_purchasable

    valid_indices = all(0 <= j < p for j in res.chosen) and len(set(res.chosen)) == len(res.chosen)
    matching = valid_indices and tuple(inst.purchasable_edges[j] for j in res.chosen) == tuple(
        tuple(e) for e in res.chosen_edges
    )
    checks.append(
        Check(
            "chosen_subset",
            bool(matching),
            "" if matching else "chosen edges are not distinct purchasable edges",
        )
    )

    graph = inst.augmented_graph(res.chosen) if valid_indices else inst.free_graph
    try:
        verdict = is_f_orientable(graph, inst.demand, cap=enumeration_cap, root=inst.root)
        checks.append(
            Check("orientable", verdict.ok, "" if verdict.ok else f"violated by {verdict.witness}")
        )
    except CapExceededError as e:
        checks.append(Check("orientable", False, str(e)))

    same_edges = tuple(res.orientation.edges) == tuple(graph.edges)
    checks.append(
        Check(
            "orientation_edges",
            same_edges,
            "" if same_edges else "orientation is not over the free and chosen edges",
        )
    )
    covers = same_edges and verify_covers(res.orientation, graph, inst.demand)
    checks.append(
        Check("orientation_covers", covers, "" if covers else "some set misses in-degree")
    )

    cost = inst.cost_of(res.chosen) if valid_indices else None
    cost_ok = cost == res.total_cost
    checks.append(
        Check("cost_arithmetic", cost_ok, "" if cost_ok else f"recomputed cost {cost}")
    )

    bound = res.lp_lower_bound / res.threshold
    ratio_ok = res.total_cost <= bound
    checks.append(
        Check(
            "ratio_bound",
            ratio_ok,
            "" if ratio_ok else f"cost {res.total_cost} above {bound}",
        )
    )

    try:
        system = Lp2System(
            inst.n, inst.free_edges, inst.purchasable_edges, inst.demand, root=inst.root, cap=cap
        )
        if system.max_rhs() <= 0:
            optimum = Fraction(0)
        else:
            problem = LpProblem(
                [LpVariable(f"x_{j}") for j in range(p)], list(inst.costs), [], name="certify"
            )
            optimum = solve_with_separation(problem, system.separator()).objective
        bound_ok = optimum == res.lp_lower_bound
        checks.append(
            Check(
                "lp_lower_bound",
                bound_ok,
                "" if bound_ok else f"recomputed relaxation optimum {optimum}",
            )
        )
    except CapExceededError as e:
        checks.append(Check("lp_lower_bound", False, str(e)))
    return Certificate(tuple(checks))
