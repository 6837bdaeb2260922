"""Problem instances: type, file format, loading pipeline and random generators.

Instance files are JSON or YAML documents::

    {
      "format": "forient-instance",
      "version": 1,
      "nodes": 4,
      "free_edges": [[0, 1], [1, 2], [2, 3]],
      "purchasable_edges": [[3, 0, 5, 1]],
      "demand": {"kl": {"k": 1, "l": 1, "r0": 0}},
      "root": 0
    }

Purchasable edges carry their cost as numerator and denominator. Decimal
costs are rejected.
"""

# native imports
import json
import logging
import os
import typing
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

logger = logging.getLogger()

# forient imports
from forient.demand import (
    Demand,
    KLDemand,
    TableDemand,
    check_crossing_gsupermodular,
    demand_from_dict,
    max_table_value,
)
from forient.errors import CapExceededError, InstanceFormatError
from forient.graph import Edge, UGraph, full_mask
from forient.utils import parse_rational

# third party imports
import numpy as np
import yaml

FORMAT_NAME = "forient-instance"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Instance:
    """Free edges E, purchasable edges E* - E with costs, demand and root.

    The edges of G* are the free edges followed by the purchasable ones.
    """

    n: int
    free_edges: typing.Tuple[Edge, ...]
    purchasable_edges: typing.Tuple[Edge, ...]
    costs: typing.Tuple[Fraction, ...]
    demand: Demand
    root: int = 0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "free_edges", tuple(tuple(e) for e in self.free_edges))
        object.__setattr__(
            self, "purchasable_edges", tuple(tuple(e) for e in self.purchasable_edges)
        )
        object.__setattr__(self, "costs", tuple(Fraction(c) for c in self.costs))
        if self.n < 2:
            raise ValueError(f"instances need at least two nodes, got {self.n}")
        if len(self.costs) != len(self.purchasable_edges):
            raise ValueError(
                f"{len(self.costs)} costs for {len(self.purchasable_edges)} purchasable edges"
            )
        if any(c < 0 for c in self.costs):
            raise ValueError("costs must be nonnegative")
        if not 0 <= self.root < self.n:
            raise ValueError(f"root {self.root} outside [0, {self.n})")
        if self.demand.n != self.n:
            raise ValueError(f"demand on {self.demand.n} nodes, instance has {self.n}")
        # validates the edges
        self.gstar

    @property
    def gstar(self) -> UGraph:
        return UGraph(self.n, self.free_edges + self.purchasable_edges)

    @property
    def free_graph(self) -> UGraph:
        return UGraph(self.n, self.free_edges)

    @property
    def n_purchasable(self) -> int:
        return len(self.purchasable_edges)

    def augmented_graph(self, chosen: typing.Iterable[int]) -> UGraph:
        """Free edges plus the chosen purchasable edges, in that order."""
        return UGraph(
            self.n, self.free_edges + tuple(self.purchasable_edges[j] for j in chosen)
        )

    def cost_of(self, chosen: typing.Iterable[int]) -> Fraction:
        return sum((self.costs[j] for j in chosen), Fraction(0))

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "name": self.name,
            "nodes": self.n,
            "free_edges": [list(e) for e in self.free_edges],
            "purchasable_edges": [
                [u, v, c.numerator, c.denominator]
                for (u, v), c in zip(self.purchasable_edges, self.costs)
            ],
            "demand": self.demand.to_dict(),
            "root": self.root,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path: str):
        path = str(path)
        with open(path, "w") as f:
            if Path(path).suffix in (".yaml", ".yml"):
                yaml.safe_dump(self.to_dict(), f, sort_keys=False)
            else:
                f.write(self.to_json() + "\n")


def _int_field(value, field: str, lower: int = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceFormatError(field, f"expected an integer, got {value!r}")
    if lower is not None and value < lower:
        raise InstanceFormatError(field, f"expected a value >= {lower}, got {value}")
    return value


def _edge_field(value, field: str, n: int) -> Edge:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise InstanceFormatError(field, f"expected [u, v], got {value!r}")
    u = _int_field(value[0], f"{field}[0]", 0)
    v = _int_field(value[1], f"{field}[1]", 0)
    if u >= n or v >= n:
        raise InstanceFormatError(field, f"node outside [0, {n})")
    if u == v:
        raise InstanceFormatError(field, "self-loops are not allowed")
    return u, v


def _demand_field(data, n: int) -> Demand:
    field = "demand"
    if not isinstance(data, dict) or len(data) != 1:
        raise InstanceFormatError(field, "expected {'kl': {...}} or {'table': [...]}")
    kind = next(iter(data))
    if kind == "kl":
        kl = data["kl"]
        if not isinstance(kl, dict):
            raise InstanceFormatError("demand.kl", "expected an object with k, l and r0")
        for key in ("k", "l"):
            if key not in kl:
                raise InstanceFormatError(f"demand.kl.{key}", "missing")
            _int_field(kl[key], f"demand.kl.{key}", 0)
        r0 = _int_field(kl.get("r0", 0), "demand.kl.r0", 0)
        if r0 >= n:
            raise InstanceFormatError("demand.kl.r0", f"node outside [0, {n})")
        if kl["k"] < kl["l"]:
            raise InstanceFormatError("demand.kl", "expected k >= l")
    elif kind == "table":
        rows = data["table"]
        if not isinstance(rows, list):
            raise InstanceFormatError("demand.table", "expected a list of [nodes, value]")
        limit = max_table_value(n)
        for i, row in enumerate(rows):
            where = f"demand.table[{i}]"
            if not isinstance(row, (list, tuple)) or len(row) != 2:
                raise InstanceFormatError(where, "expected [node-list, value]")
            nodes, value = row
            if not isinstance(nodes, list):
                raise InstanceFormatError(f"{where}[0]", "expected a list of nodes")
            for j, v in enumerate(nodes):
                _int_field(v, f"{where}[0][{j}]", 0)
                if v >= n:
                    raise InstanceFormatError(f"{where}[0][{j}]", f"node outside [0, {n})")
            _int_field(value, f"{where}[1]", 0)
            if value > limit:
                raise InstanceFormatError(
                    f"{where}[1]", f"value {value} exceeds the cap n(n-1) = {limit}"
                )
    else:
        raise InstanceFormatError(field, f"unknown demand kind {kind!r}")
    try:
        return demand_from_dict(data, n)
    except ValueError as e:
        raise InstanceFormatError(field, str(e)) from e


def instance_from_dict(data: dict) -> Instance:
    """Parse the instance file structure, reporting the offending field path."""
    if not isinstance(data, dict):
        raise InstanceFormatError("<root>", "expected an object")
    if data.get("format", FORMAT_NAME) != FORMAT_NAME:
        raise InstanceFormatError("format", f"expected {FORMAT_NAME!r}")
    if data.get("version", FORMAT_VERSION) != FORMAT_VERSION:
        raise InstanceFormatError("version", f"unsupported version {data.get('version')!r}")
    for key in ("nodes", "demand"):
        if key not in data:
            raise InstanceFormatError(key, "missing")
    n = _int_field(data["nodes"], "nodes", 2)

    free = data.get("free_edges", [])
    if not isinstance(free, list):
        raise InstanceFormatError("free_edges", "expected a list")
    free_edges = [_edge_field(e, f"free_edges[{i}]", n) for i, e in enumerate(free)]

    purchasable = data.get("purchasable_edges", [])
    if not isinstance(purchasable, list):
        raise InstanceFormatError("purchasable_edges", "expected a list")
    purchasable_edges, costs = [], []
    for i, row in enumerate(purchasable):
        field = f"purchasable_edges[{i}]"
        if not isinstance(row, list) or len(row) not in (3, 4):
            raise InstanceFormatError(field, "expected [u, v, numerator, denominator]")
        purchasable_edges.append(_edge_field(row[:2], field, n))
        cost = parse_rational(row[2:] if len(row) == 4 else row[2], f"{field}[2]")
        if cost < 0:
            raise InstanceFormatError(f"{field}[2]", "costs must be nonnegative")
        costs.append(cost)

    demand = _demand_field(data["demand"], n)
    default_root = demand.r0 if isinstance(demand, KLDemand) else 0
    root = _int_field(data.get("root", default_root), "root", 0)
    if root >= n:
        raise InstanceFormatError("root", f"node outside [0, {n})")
    name = data.get("name", "") or ""

    return Instance(
        n, tuple(free_edges), tuple(purchasable_edges), tuple(costs), demand, root, str(name)
    )


def _yaml_lines(node, path="", lines=None) -> typing.Dict[str, int]:
    """Map field paths to 1-based source lines of a composed YAML node."""
    if lines is None:
        lines = {}
    if node is None:
        return lines
    lines[path or "<root>"] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            child = f"{path}.{key.value}" if path else str(key.value)
            _yaml_lines(value, child, lines)
    elif isinstance(node, yaml.SequenceNode):
        for i, value in enumerate(node.value):
            _yaml_lines(value, f"{path}[{i}]", lines)
    return lines


class LoadStage:
    """One stage of turning an instance file into a checked `Instance`.

    Subclasses say which values they take in `accepts` and transform them in
    `apply`. A value a stage does not accept is a format error of the whole
    document.
    """

    def __call__(self, value: typing.Any) -> typing.Any:
        logger.debug(f"load stage {self.__class__.__name__}")
        if not self.accepts(value):
            raise InstanceFormatError(
                "<document>",
                f"{self.__class__.__name__} cannot take a {type(value).__name__}",
            )
        return self.apply(value)

    def accepts(self, value: typing.Any) -> bool:
        raise NotImplementedError("Subclasses must implement this method")

    def apply(self, value: typing.Any) -> typing.Any:
        raise NotImplementedError("Subclasses must implement this method")


class LoadChain:
    """Stages run in order, each one fed the result of the previous one.

    ``LoadChain([DynamicLoader(), InstanceParser(), SupermodularityGate()])``
    maps a path to a validated instance.
    """

    def __init__(self, stages: typing.Sequence[LoadStage]) -> None:
        self.stages = list(stages)

    @property
    def names(self) -> typing.List[str]:
        return [stage.__class__.__name__ for stage in self.stages]

    def __call__(self, value: typing.Any) -> typing.Any:
        for stage in self.stages:
            value = stage(value)
        return value


@dataclass
class RawInstance:
    data: typing.Any
    lines: typing.Dict[str, int]
    source: str


class DynamicLoader(LoadStage):
    """Path to `RawInstance`. JSON for `.json`, YAML for `.yaml` and `.yml`."""

    def accepts(self, value) -> bool:
        return isinstance(value, (str, Path))

    def apply(self, input_path: str) -> RawInstance:
        if not os.path.exists(input_path):
            raise InstanceFormatError("<document>", f"no instance file at {input_path}")
        file_type = Path(input_path).suffix.lower()
        with open(input_path) as f:
            text = f.read()

        if file_type == ".json":
            logger.info(f"Loading json instance from {input_path}")
            try:
                data = json.loads(text)
            except json.JSONDecodeError as e:
                raise InstanceFormatError("<document>", e.msg, e.lineno) from e
            lines = {}
        elif file_type in (".yaml", ".yml"):
            logger.info(f"Loading yaml instance from {input_path}")
            try:
                data = yaml.safe_load(text)
                lines = _yaml_lines(yaml.compose(text))
            except yaml.MarkedYAMLError as e:
                line = e.problem_mark.line + 1 if e.problem_mark is not None else None
                raise InstanceFormatError("<document>", str(e.problem), line) from e
        else:
            raise InstanceFormatError(
                "<document>", f"file type {file_type} not supported, use .json or .yaml"
            )
        return RawInstance(data, lines, str(input_path))


class InstanceParser(LoadStage):
    """`RawInstance` to `Instance`. Field errors get the source line of the
    nearest enclosing field that has one."""

    def accepts(self, value) -> bool:
        return isinstance(value, RawInstance)

    def apply(self, input: RawInstance) -> Instance:
        try:
            inst = instance_from_dict(input.data)
        except InstanceFormatError as e:
            line = e.line
            field = e.field
            while line is None and field:
                line = input.lines.get(field)
                field = field.rpartition("[")[0] if field.endswith("]") else field.rpartition(".")[0]
            if line is None:
                raise
            raise InstanceFormatError(e.field, e.message, line) from e
        if not inst.name:
            inst = Instance(
                inst.n,
                inst.free_edges,
                inst.purchasable_edges,
                inst.costs,
                inst.demand,
                inst.root,
                Path(input.source).stem,
            )
        logger.info(
            f"Instance {inst.name}: {inst.n} nodes, {len(inst.free_edges)} free edges, "
            f"{inst.n_purchasable} purchasable edges, demand {inst.demand}"
        )
        return inst


class SupermodularityGate(LoadStage):
    """Pass an `Instance` on unless its table demand fails crossing
    G-supermodularity for the free graph."""

    def __init__(self, cap: int = 10) -> None:
        self.cap = cap

    def accepts(self, value) -> bool:
        return isinstance(value, Instance)

    def apply(self, input: Instance) -> Instance:
        # (k, l) demands are crossing supermodular for every graph
        if isinstance(input.demand, KLDemand):
            return input
        if input.n > self.cap:
            raise CapExceededError(
                "supermodularity_max_nodes", input.n, self.cap, "demand check at load"
            )
        verdict = check_crossing_gsupermodular(input.demand, input.free_graph, cap=self.cap)
        if not verdict:
            s, t = verdict.witness
            raise InstanceFormatError(
                "demand",
                f"not crossing G-supermodular for the free graph: S={s:#x}, T={t:#x}",
            )
        return input


def load_instance(
    path: str, check_supermodularity: bool = True, cap: int = 10
) -> Instance:
    stages = [DynamicLoader(), InstanceParser()]
    if check_supermodularity:
        stages.append(SupermodularityGate(cap))
    chain = LoadChain(stages)
    logger.debug(f"loading {path} through " + " -> ".join(chain.names))
    return chain(path)


def _random_edge(rng: np.random.Generator, n: int) -> Edge:
    u, v = rng.choice(n, size=2, replace=False)
    return int(u), int(v)


def _hamiltonian_cycle(rng: np.random.Generator, n: int) -> typing.List[Edge]:
    order = [int(v) for v in rng.permutation(n)]
    return [(order[i], order[(i + 1) % n]) for i in range(n)]


def _random_cost(rng: np.random.Generator, max_cost: int) -> Fraction:
    return Fraction(int(rng.integers(1, max_cost + 1)), int(rng.choice([1, 1, 2, 3])))


def random_table_demand(
    rng: np.random.Generator,
    g: UGraph,
    components: int = 2,
    max_k: int = 2,
    bumps: int = 2,
    climb_steps: int = 6,
    cap: int = 10,
) -> TableDemand:
    """Random table demand that is crossing supermodular with respect to `g`.

    A sum of (k, l) demands with singleton and co-singleton bumps is crossing
    supermodular; further +1 steps on random sets are kept only when the
    exhaustive check still passes.
    """
    n = g.n
    full = full_mask(n)
    table = np.zeros(1 << n, dtype=np.int64)
    for _ in range(components):
        k = int(rng.integers(0, max_k + 1))
        l = int(rng.integers(0, k + 1))
        table += KLDemand(n, k, l, int(rng.integers(n))).table
    for _ in range(bumps):
        v = int(rng.integers(n))
        s = (1 << v) if rng.random() < 0.5 else full ^ (1 << v)
        table[s] += 1
    limit = max_table_value(n)
    np.minimum(table, limit, out=table)
    table[0] = table[full] = 0
    for _ in range(climb_steps):
        s = int(rng.integers(1, full))
        if table[s] >= limit:
            continue
        candidate = table.copy()
        candidate[s] += 1
        if check_crossing_gsupermodular(TableDemand.from_table(n, candidate), g, cap):
            table = candidate
    return TableDemand.from_table(n, table)


def prism_instance(
    m: int,
    rung_costs: typing.Sequence[Fraction],
    cycle_cost: Fraction,
    root: int = 0,
    labels: typing.Optional[typing.Sequence[int]] = None,
    name: str = "",
) -> Instance:
    """Two odd m-cycles joined by m rungs, every edge purchasable, demand (1, 1).

    With every rung cheaper than the common cycle cost the relaxation has a
    single optimum: rungs at 1 and cycle edges at 1/2. Node ``i`` of the first
    cycle and node ``m + i`` of the second are joined by rung ``i``; `labels`
    renames node ``v`` to ``labels[v]``.
    """
    if m < 3 or m % 2 == 0:
        raise ValueError(f"expected an odd cycle length of at least 3, got {m}")
    if len(rung_costs) != m:
        raise ValueError(f"expected {m} rung costs, got {len(rung_costs)}")
    cycle_cost = Fraction(cycle_cost)
    if any(not 0 < Fraction(c) < cycle_cost for c in rung_costs):
        raise ValueError(f"rung costs must lie in (0, {cycle_cost})")
    n = 2 * m
    labels = list(range(n)) if labels is None else [int(v) for v in labels]
    if sorted(labels) != list(range(n)):
        raise ValueError(f"labels must be a permutation of range({n})")

    edges = [(i, (i + 1) % m) for i in range(m)]
    edges += [(m + i, m + (i + 1) % m) for i in range(m)]
    edges += [(i, m + i) for i in range(m)]
    edges = [(labels[u], labels[v]) for u, v in edges]
    costs = [cycle_cost] * (2 * m) + [Fraction(c) for c in rung_costs]
    return Instance(n, (), tuple(edges), tuple(costs), KLDemand(n, 1, 1, root), root, name)


def _prism_lengths(n_min: int, n_max: int, max_purchasable: int) -> typing.List[int]:
    return [
        m
        for m in range(3, n_max // 2 + 1, 2)
        if 2 * m >= n_min and 3 * m <= max_purchasable
    ]


def random_prism_instance(
    rng: np.random.Generator,
    n_min: int = 3,
    n_max: int = 7,
    max_purchasable: int = 12,
    max_cost: int = 10,
    name: str = "",
) -> Instance:
    """`prism_instance` with random odd cycle length, labels, root and costs.

    The cycle cost is an integer in ``[2, max_cost]``, rung costs are drawn
    below it. Purchasable edges come in a random order.
    """
    lengths = _prism_lengths(n_min, n_max, max_purchasable)
    if not lengths:
        raise ValueError(
            f"no prism fits n in [{n_min}, {n_max}] with {max_purchasable} purchasable edges"
        )
    m = int(rng.choice(lengths))
    cycle_cost = int(rng.integers(2, max(max_cost, 2) + 1))
    rung_costs = [
        Fraction(int(rng.integers(1, cycle_cost)), int(rng.choice([1, 1, 2, 3])))
        for _ in range(m)
    ]
    inst = prism_instance(
        m,
        rung_costs,
        cycle_cost,
        root=int(rng.integers(2 * m)),
        labels=rng.permutation(2 * m),
        name=name,
    )
    order = rng.permutation(inst.n_purchasable)
    return Instance(
        inst.n,
        (),
        tuple(inst.purchasable_edges[i] for i in order),
        tuple(inst.costs[i] for i in order),
        inst.demand,
        inst.root,
        name,
    )


KL_CHOICES = ((1, 0), (1, 1), (2, 1), (2, 2))
STRUCTURES = ("cycles", "prism", "mixed")


def random_instance(
    rng: np.random.Generator,
    n_min: int = 3,
    n_max: int = 7,
    max_purchasable: int = 12,
    extra_edges: int = 3,
    demand_kind: typing.Optional[str] = None,
    kl_choices: typing.Sequence[typing.Tuple[int, int]] = KL_CHOICES,
    max_cost: int = 10,
    attempts: int = 50,
    name: str = "",
    structure: str = "cycles",
) -> Instance:
    """Random feasible instance.

    G* is a union of random Hamiltonian cycles, one per unit of connectivity
    needed, plus a few random edges; a random part of it, at most
    `max_purchasable` edges, is purchasable. Table demands are drawn with
    `random_table_demand`. Candidates are kept only if G* is f-orientable.

    Parameters
    ----------

    rng : np.random.Generator
        Source of randomness.

    n_min, n_max : int
        Range of the node count.

    max_purchasable : int, default 12
        Largest number of purchasable edges.

    extra_edges : int, default 3
        Largest number of random edges added to the cycles.

    demand_kind : str, default None
        "kl" or "table"; drawn at random if None.

    kl_choices : typing.Sequence[typing.Tuple[int, int]]
        Candidate (k, l) pairs.

    max_cost : int, default 10
        Largest cost numerator.

    attempts : int, default 50
        Candidates tried before giving up.

    name : str, default ""
        Instance name.

    structure : str, default "cycles"
        "cycles" for the construction above, "prism" for `random_prism_instance`,
        whose relaxation optimum is always fractional, or "mixed" for a prism
        half of the time when one fits and the demand kind allows it.
    """
    from forient.orient import is_f_orientable

    if structure not in STRUCTURES:
        raise ValueError(f"unknown structure '{structure}', expected one of {STRUCTURES}")
    prism_fits = demand_kind in (None, "kl") and bool(
        _prism_lengths(n_min, n_max, max_purchasable)
    )
    if structure == "prism" and demand_kind == "table":
        raise ValueError("prism instances carry a (1, 1) demand, not a table demand")
    if structure == "prism" or (structure == "mixed" and prism_fits and rng.random() < 0.5):
        return random_prism_instance(rng, n_min, n_max, max_purchasable, max_cost, name)

    for _ in range(attempts):
        n = int(rng.integers(n_min, n_max + 1))
        kind = demand_kind or ("kl" if rng.random() < 0.6 else "table")
        root = int(rng.integers(n))
        if kind == "kl":
            k, l = kl_choices[int(rng.integers(len(kl_choices)))]
            cycles = k
        else:
            cycles = int(rng.integers(1, 3))

        edges = []
        for _ in range(cycles):
            edges += _hamiltonian_cycle(rng, n)
        edges += [_random_edge(rng, n) for _ in range(int(rng.integers(0, extra_edges + 1)))]
        order = rng.permutation(len(edges))
        n_purchasable = int(rng.integers(1, min(max_purchasable, len(edges)) + 1))
        purchasable = [edges[i] for i in order[:n_purchasable]]
        free = [edges[i] for i in sorted(order[n_purchasable:])]

        if kind == "kl":
            demand = KLDemand(n, k, l, root)
        else:
            demand = random_table_demand(rng, UGraph(n, free), max_k=cycles)

        if not is_f_orientable(UGraph(n, free + purchasable), demand):
            continue
        costs = [_random_cost(rng, max_cost) for _ in purchasable]
        return Instance(n, tuple(free), tuple(purchasable), tuple(costs), demand, root, name)

    raise ValueError(f"no feasible random instance found in {attempts} attempts")
