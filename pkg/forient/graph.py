"""Node-indexed multigraphs and the degree / cut functions.

Node sets are Python integers used as bitmasks over ``range(n)``. Edges are
identified by their position, parallel edges are distinct.
"""

# native imports
import functools
import logging
import typing
from dataclasses import dataclass
from fractions import Fraction

logger = logging.getLogger()

# forient imports
from forient.utils import scale_to_int64

# third party imports
import networkx as nx
import numpy as np
from networkx.algorithms.flow import edmonds_karp

NodeSet = int
Edge = typing.Tuple[int, int]


def full_mask(n: int) -> NodeSet:
    return (1 << n) - 1


def mask_from_nodes(nodes: typing.Iterable[int]) -> NodeSet:
    mask = 0
    for v in nodes:
        mask |= 1 << int(v)
    return mask


def nodes_from_mask(mask: NodeSet) -> typing.List[int]:
    nodes = []
    v = 0
    while mask:
        if mask & 1:
            nodes.append(v)
        mask >>= 1
        v += 1
    return nodes


def popcount(mask: NodeSet) -> int:
    return bin(mask).count("1")


def complement(mask: NodeSet, n: int) -> NodeSet:
    return full_mask(n) ^ mask


def _check_edges(n: int, edges: typing.Sequence[Edge], kind: str):
    for i, (u, v) in enumerate(edges):
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"{kind}[{i}] = ({u}, {v}) has a node outside [0, {n})")
        if u == v:
            raise ValueError(f"{kind}[{i}] = ({u}, {v}) is a self-loop")


@dataclass(frozen=True)
class UGraph:
    """Undirected multigraph on nodes ``0..n-1``."""

    n: int
    edges: typing.Tuple[Edge, ...] = ()

    def __post_init__(self):
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.n < 1:
            raise ValueError(f"graph needs at least one node, got n={self.n}")
        _check_edges(self.n, edges, "edges")

    @property
    def m(self) -> int:
        return len(self.edges)

    def add_edges(self, edges: typing.Iterable[Edge]) -> "UGraph":
        return UGraph(self.n, self.edges + tuple(edges))

    def both_directions(self) -> typing.List[Edge]:
        """Every edge as two opposite arcs, used for undirected flows."""
        arcs = []
        for u, v in self.edges:
            arcs.append((u, v))
            arcs.append((v, u))
        return arcs


@dataclass(frozen=True)
class MixedGraph:
    """Mixed multigraph with arcs and undirected edges in separate identity spaces."""

    n: int
    arcs: typing.Tuple[Edge, ...] = ()
    uedges: typing.Tuple[Edge, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple((int(u), int(v)) for u, v in self.arcs))
        object.__setattr__(
            self, "uedges", tuple((int(u), int(v)) for u, v in self.uedges)
        )
        _check_edges(self.n, self.arcs, "arcs")
        _check_edges(self.n, self.uedges, "uedges")

    @property
    def undirected(self) -> UGraph:
        return UGraph(self.n, self.uedges)


def _unit(weights, count):
    if weights is None:
        return [1] * count
    if len(weights) != count:
        raise ValueError(f"expected {count} weights, got {len(weights)}")
    return weights


def deg_cut(g: UGraph, weights: typing.Optional[typing.Sequence] = None, s: NodeSet = 0):
    """Total weight of the edges with exactly one endpoint in `s`.

    Parameters
    ----------

    g : UGraph
        The graph.

    weights : typing.Sequence, default None
        One weight per edge; unit weights if None.

    s : NodeSet
        Node set as bitmask.

    Returns
    -------

    Fraction or int
        Weighted degree of `s`.
    """
    weights = _unit(weights, g.m)
    total = 0
    for (u, v), w in zip(g.edges, weights):
        if ((s >> u) & 1) != ((s >> v) & 1):
            total += w
    return total


def cross_pair(g: UGraph, s: NodeSet, t: NodeSet) -> int:
    """Number of edges between ``s - t`` and ``t - s``."""
    a = s & ~t
    b = t & ~s
    count = 0
    for u, v in g.edges:
        if ((a >> u) & 1 and (b >> v) & 1) or ((a >> v) & 1 and (b >> u) & 1):
            count += 1
    return count


def in_cut(
    arcs: typing.Sequence[Edge],
    weights: typing.Optional[typing.Sequence] = None,
    s: NodeSet = 0,
):
    """Total weight of the arcs with head in `s` and tail outside."""
    weights = _unit(weights, len(arcs))
    total = 0
    for (u, v), w in zip(arcs, weights):
        if (s >> v) & 1 and not (s >> u) & 1:
            total += w
    return total


def max_flow(
    arcs: typing.Sequence[Edge],
    cap: typing.Sequence,
    s: int,
    t: int,
    n: int,
) -> typing.Tuple[Fraction, NodeSet]:
    """Exact maximum flow and a minimum cut between two nodes.

    Parallel arcs are merged by summing their capacities. Augmenting paths are
    shortest paths (Edmonds-Karp), all arithmetic stays rational.

    Parameters
    ----------

    arcs : typing.Sequence[Edge]
        Directed arcs ``(tail, head)``.

    cap : typing.Sequence
        Nonnegative capacity per arc, int or Fraction.

    s, t : int
        Source and sink, must differ.

    n : int
        Number of nodes.

    Returns
    -------

    Fraction
        Value of a maximum flow.

    NodeSet
        Source side of a minimum cut, contains `s` and not `t`.
    """
    if s == t:
        raise ValueError(f"source and sink must differ, got {s}")
    if len(cap) != len(arcs):
        raise ValueError(f"expected {len(arcs)} capacities, got {len(cap)}")

    flow_graph = nx.DiGraph()
    flow_graph.add_nodes_from(range(n))
    for (u, v), c in zip(arcs, cap):
        c = Fraction(c)
        if c < 0:
            raise ValueError(f"negative capacity {c} on arc ({u}, {v})")
        if c == 0:
            continue
        if flow_graph.has_edge(u, v):
            flow_graph[u][v]["capacity"] += c
        else:
            flow_graph.add_edge(u, v, capacity=c)

    value, (source_side, _) = nx.minimum_cut(
        flow_graph, s, t, capacity="capacity", flow_func=edmonds_karp
    )
    return Fraction(value), mask_from_nodes(source_side)


def edge_connectivity(g: UGraph) -> int:
    """Global edge connectivity, minimum over node 0 and every other node."""
    if g.n < 2:
        raise ValueError("edge connectivity needs at least two nodes")
    arcs = g.both_directions()
    cap = [1] * len(arcs)
    return int(min(max_flow(arcs, cap, 0, v, g.n)[0] for v in range(1, g.n)))


@functools.lru_cache(maxsize=32)
def membership(n: int) -> np.ndarray:
    """Boolean table of shape (2**n, n), row `S` marks the nodes of `S`."""
    masks = np.arange(1 << n, dtype=np.int64)
    table = ((masks[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1).astype(bool)
    table.setflags(write=False)
    return table


def in_degree_table(arcs: typing.Sequence[Edge], n: int) -> np.ndarray:
    """In-degree ``d_in(S)`` of every node set `S`, indexed by bitmask."""
    member = membership(n)
    table = np.zeros(1 << n, dtype=np.int64)
    for u, v in arcs:
        table += member[:, v] & ~member[:, u]
    return table


def weighted_in_cut_table(
    arcs: typing.Sequence[Edge], weights: typing.Sequence, n: int
) -> typing.Tuple[np.ndarray, int]:
    """Weighted in-cut of every node set, scaled to integers.

    Returns
    -------

    np.ndarray
        Array indexed by bitmask; the exact in-cut is ``table[S] / den``.
        Object dtype when the scaled values do not fit into int64.

    int
        Common denominator `den`.
    """
    scaled, den = scale_to_int64(weights)
    member = membership(n)
    if scaled is None:
        scaled = np.array([int(Fraction(w) * den) for w in weights], dtype=object)
        table = np.zeros(1 << n, dtype=object)
    else:
        table = np.zeros(1 << n, dtype=np.int64)
    for (u, v), w in zip(arcs, scaled):
        if w == 0:
            continue
        enters = member[:, v] & ~member[:, u]
        if table.dtype == object:
            enters = enters.astype(object)
        table = table + enters * w
    return table, den


def cut_table(g: UGraph) -> np.ndarray:
    """Undirected degree ``d(S)`` of every node set, indexed by bitmask."""
    member = membership(g.n)
    table = np.zeros(1 << g.n, dtype=np.int64)
    for u, v in g.edges:
        table += member[:, u] ^ member[:, v]
    return table
