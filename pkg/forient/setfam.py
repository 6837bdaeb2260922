"""Partitions, co-partitions and subpartitions of the node set.

A `PoCP` (partition or co-partition) always carries its root node. Parts
are stored in canonical order: the root part of a partition, or the single
part of a co-partition avoiding the root, comes first; the remaining parts
follow in ascending bitmask order.
"""

# native imports
import enum
import functools
import logging
import typing
from dataclasses import dataclass

logger = logging.getLogger()

# forient imports
from forient import kernels
from forient.errors import CapExceededError
from forient.graph import NodeSet, UGraph, full_mask, nodes_from_mask

# third party imports
import numpy as np

PARTITION = "partition"
COPARTITION = "copartition"


class Domination(enum.IntEnum):
    NONE = 0
    DOMINATES = 1
    STRONGLY = 2


@dataclass(frozen=True)
class SubPartition:
    parts: typing.Tuple[NodeSet, ...]

    def __post_init__(self):
        parts = tuple(sorted(int(p) for p in self.parts))
        object.__setattr__(self, "parts", parts)
        seen = 0
        for p in parts:
            if p == 0:
                raise ValueError("subpartition parts must be nonempty")
            if seen & p:
                raise ValueError(f"subpartition parts overlap: {parts}")
            seen |= p

    @property
    def support(self) -> NodeSet:
        supp = 0
        for p in self.parts:
            supp |= p
        return supp

    def __len__(self):
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)


@dataclass(frozen=True)
class PoCP:
    """A partition or co-partition of ``range(n)`` with root `root`.

    Use the constructors `partition`, `copartition` and `from_labels`, which
    validate and canonicalise the parts.
    """

    kind: str
    parts: typing.Tuple[NodeSet, ...]
    root: int
    n: int

    @property
    def is_partition(self) -> bool:
        return self.kind == PARTITION

    def __len__(self):
        return len(self.parts)

    def key(self) -> typing.Tuple:
        """Canonical encoding used for deterministic tie breaking."""
        return (0 if self.is_partition else 1, len(self.parts), self.parts)

    def complement(self) -> "PoCP":
        """The family of complements: a partition becomes a co-partition and vice versa."""
        full = full_mask(self.n)
        parts = [full ^ p for p in self.parts]
        if self.is_partition:
            return copartition(parts, self.root, self.n)
        return partition(parts, self.root, self.n)

    def labels(self) -> np.ndarray:
        """Per node, the index of the part it belongs to (partition) or misses (co-partition)."""
        labels = np.zeros(self.n, dtype=np.int64)
        full = full_mask(self.n)
        for i, p in enumerate(self.parts):
            region = p if self.is_partition else full ^ p
            for v in nodes_from_mask(region):
                labels[v] = i
        return labels

    def __str__(self):
        parts = ", ".join(
            "{" + ",".join(str(v) for v in nodes_from_mask(p)) + "}" for p in self.parts
        )
        return f"{self.kind}[{parts}]"


def _check_ground(parts, n, root):
    if not 0 <= root < n:
        raise ValueError(f"root {root} outside [0, {n})")
    full = full_mask(n)
    for p in parts:
        if p <= 0 or p & ~full:
            raise ValueError(f"part {p:#x} is empty or not a subset of [0, {n})")


def partition(parts: typing.Iterable[NodeSet], root: int, n: int) -> PoCP:
    """Build a canonical partition, validating disjointness and cover."""
    parts = [int(p) for p in parts]
    _check_ground(parts, n, root)
    seen = 0
    for p in parts:
        if seen & p:
            raise ValueError("partition parts must be pairwise disjoint")
        seen |= p
    if seen != full_mask(n):
        raise ValueError("partition parts must cover every node")
    root_part = [p for p in parts if (p >> root) & 1][0]
    rest = sorted(p for p in parts if not (p >> root) & 1)
    return PoCP(PARTITION, (root_part, *rest), root, n)


def copartition(parts: typing.Iterable[NodeSet], root: int, n: int) -> PoCP:
    """Build a canonical co-partition; two parts yield the equivalent partition."""
    parts = [int(p) for p in parts]
    _check_ground(parts, n, root)
    full = full_mask(n)
    complements = [full ^ p for p in parts]
    seen = 0
    for c in complements:
        if c == 0 or seen & c:
            raise ValueError("co-partition parts must miss pairwise disjoint node sets")
        seen |= c
    if seen != full:
        raise ValueError("every node must be missed by exactly one co-partition part")
    if len(parts) == 2:
        return partition(parts, root, n)
    first = [p for p in parts if not (p >> root) & 1][0]
    rest = sorted(p for p in parts if (p >> root) & 1)
    return PoCP(COPARTITION, (first, *rest), root, n)


def from_labels(labels: typing.Sequence[int], kind: str, root: int) -> PoCP:
    """Partition into label classes, or the co-partition of their complements."""
    n = len(labels)
    blocks = {}
    for v, label in enumerate(labels):
        blocks[int(label)] = blocks.get(int(label), 0) | (1 << v)
    parts = list(blocks.values())
    if kind == PARTITION:
        return partition(parts, root, n)
    full = full_mask(n)
    return copartition([full ^ p for p in parts], root, n)


def chi(p: PoCP, g: UGraph) -> typing.List[int]:
    """Indices of the edges joining the exclusive regions of two distinct parts."""
    labels = p.labels()
    return [i for i, (u, v) in enumerate(g.edges) if labels[u] != labels[v]]


def e_count(p: PoCP, g: UGraph) -> int:
    return len(chi(p, g))


def tilde(p: PoCP) -> SubPartition:
    if p.is_partition:
        return SubPartition(p.parts[1:])
    full = full_mask(p.n)
    return SubPartition(tuple(full ^ q for q in p.parts[1:]))


def dominates(q: SubPartition, p: SubPartition) -> Domination:
    """Whether every part of `p` lies in some part of `q`, or all in the same one."""
    hosts = set()
    for part in p.parts:
        host = [h for h in q.parts if part & ~h == 0]
        if not host:
            return Domination.NONE
        hosts.add(host[0])
    if len(hosts) <= 1:
        return Domination.STRONGLY
    return Domination.DOMINATES


def precedes(p: PoCP, q: PoCP) -> bool:
    """``p ⪯ q``: the subpartition of `q` dominates the one of `p`."""
    return dominates(tilde(q), tilde(p)) != Domination.NONE


def crossing(a: NodeSet, b: NodeSet, n: int) -> bool:
    return bool(a & b and a & ~b and b & ~a and (a | b) != full_mask(n))


def cross_free(sets: typing.Iterable[NodeSet], n: int) -> bool:
    sets = list(sets)
    for i, a in enumerate(sets):
        for b in sets[i + 1 :]:
            if crossing(a, b, n):
                return False
    return True


def crossing_pairs(
    first: typing.Sequence[NodeSet], second: typing.Sequence[NodeSet], n: int
) -> int:
    """Number of crossing pairs (A, B) with A from `first` and B from `second`."""
    return sum(1 for a in first for b in second if crossing(a, b, n))


def strongly_cross_free(p: PoCP, q: PoCP) -> bool:
    """Cross-free pairs whose subpartitions are disjoint or suitably dominated.

    Same kinds need domination in either direction, mixed kinds need strong
    domination.
    """
    if p.n != q.n or p.root != q.root:
        raise ValueError("families must share the ground set and the root")
    if not cross_free(p.parts + q.parts, p.n):
        return False
    tp, tq = tilde(p), tilde(q)
    if tp.support & tq.support == 0:
        return True
    if p.kind == q.kind:
        return dominates(tp, tq) != Domination.NONE or dominates(tq, tp) != Domination.NONE
    return dominates(tp, tq) == Domination.STRONGLY or dominates(tq, tp) == Domination.STRONGLY


def mixed_part_containment(p: PoCP, q: PoCP) -> bool:
    """For a cross-free partition/co-partition pair: some co-partition part lies in a partition part."""
    if p.kind == q.kind:
        raise ValueError("expected one partition and one co-partition")
    part, cop = (p, q) if p.is_partition else (q, p)
    return any(c & ~s == 0 for s in part.parts for c in cop.parts)


def weakly_cross_free(p: PoCP, q: PoCP) -> bool:
    return cross_free(p.parts + q.parts, p.n) and not strongly_cross_free(p, q)


def properly_contains(p: PoCP, s: NodeSet) -> bool:
    """Whether some part of the subpartition of `p` is a proper superset of `s`."""
    return any(s & ~t == 0 and s != t for t in tilde(p).parts)


@functools.lru_cache(maxsize=16)
def _labels(n: int) -> np.ndarray:
    labels = kernels.restricted_growth_strings(n)[1:]
    labels.setflags(write=False)
    return labels


def partition_labels(n: int, cap: int = 12) -> np.ndarray:
    """Restricted growth strings of all partitions of ``range(n)`` with at least two parts."""
    if n > cap:
        raise CapExceededError("enumeration_max_nodes", n, cap, "partition enumeration")
    return _labels(n)


def partition_part_masks(n: int, cap: int = 12) -> np.ndarray:
    return kernels.part_masks(partition_labels(n, cap))


def enum_partitions(n: int, root: int = 0, cap: int = 12) -> typing.Iterator[PoCP]:
    """Every partition with at least two parts, in restricted-growth-string order."""
    masks = partition_part_masks(n, cap)
    for row in masks:
        yield partition([int(m) for m in row if m], root, n)


def enum_copartitions(n: int, root: int = 0, cap: int = 12) -> typing.Iterator[PoCP]:
    """Every co-partition with at least three parts, as complements of partitions."""
    full = full_mask(n)
    masks = partition_part_masks(n, cap)
    for row in masks:
        parts = [int(m) for m in row if m]
        if len(parts) >= 3:
            yield copartition([full ^ m for m in parts], root, n)

