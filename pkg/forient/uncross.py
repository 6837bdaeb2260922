"""Uncrossing of tight partition and co-partition rows.

Set families are lists of bitmasks and may hold the same set several
times. The main entry point is `extract_strongly_crossfree_basis`, which
turns the tight rows at a basic solution into a strongly cross-free family
with linearly independent characteristic vectors, and `domination_forest`,
which arranges such a family by the domination order of its subpartitions.
"""

# native imports
import collections
import logging
import typing
from dataclasses import dataclass, field
from fractions import Fraction

logger = logging.getLogger()

# forient imports
from forient.demand import Demand
from forient.errors import ContractError
from forient.exactlp import SpanBasis
from forient.graph import Edge, NodeSet, UGraph, deg_cut, full_mask, popcount
from forient.separation import Lp2System
from forient.setfam import (
    PoCP,
    copartition,
    cross_free,
    crossing,
    crossing_pairs,
    partition,
    precedes,
    strongly_cross_free,
    tilde,
    weakly_cross_free,
)

# third party imports
import networkx as nx

SetFamily = typing.List[NodeSet]


def psi(
    x: typing.Sequence[Fraction],
    variable_edges: typing.Sequence[Edge],
    fixed_graph: UGraph,
    fam: typing.Iterable[NodeSet],
    f: Demand,
) -> Fraction:
    """Sum over the family of ``x(delta(S)) / 2 - f(S) + d_fixed(S) / 2``.

    Nonnegative on cross-free regular families for feasible `x`, and zero on
    the sets of a tight partition or co-partition.
    """
    variable_graph = UGraph(fixed_graph.n, tuple(variable_edges))
    weights = [Fraction(v) for v in x]
    total = Fraction(0)
    for s in fam:
        total += Fraction(deg_cut(variable_graph, weights, s) + deg_cut(fixed_graph, None, s), 2)
        total -= f.evaluate(s)
    return total


def is_regular(fam: typing.Iterable[NodeSet], n: int) -> typing.Optional[int]:
    """Number of members containing each node if it is the same for all nodes."""
    counts = [0] * n
    for s in fam:
        for v in range(n):
            counts[v] += (s >> v) & 1
    if len(set(counts)) != 1:
        return None
    return counts[0]


def uncross_pair_sets(fam: typing.Iterable[NodeSet], n: int) -> SetFamily:
    """Replace crossing pairs A, B by A & B and A | B until the family is cross-free.

    Terminates since the sum of squared set sizes grows with every step.
    """
    fam = list(fam)
    steps = 0
    while True:
        pair = next(
            (
                (i, j)
                for i in range(len(fam))
                for j in range(i + 1, len(fam))
                if crossing(fam[i], fam[j], n)
            ),
            None,
        )
        if pair is None:
            break
        i, j = pair
        a, b = fam[i], fam[j]
        fam[i], fam[j] = a & b, a | b
        steps += 1
    logger.debug(f"uncrossing finished after {steps} steps")
    return fam


def _maximal_disjoint_cover(target: NodeSet, candidates: typing.List[int], sets: SetFamily) -> typing.Optional[typing.List[int]]:
    """Indices of the maximal sets below `target` if they tile it exactly."""
    inside = [i for i in candidates if sets[i] & ~target == 0]
    inside.sort(key=lambda i: (-popcount(sets[i]), sets[i], i))
    chosen = []
    covered = 0
    for i in inside:
        if sets[i] & covered:
            continue
        chosen.append(i)
        covered |= sets[i]
    if covered != target:
        return None
    return chosen


def decompose_regular_crossfree(
    fam: typing.Iterable[NodeSet], root: int, n: int
) -> typing.List[PoCP]:
    """Split a cross-free regular family into partitions and co-partitions.

    Members containing `root` are replaced by their complements, which makes
    the family laminar. A partition is then a complemented set tiled by
    uncomplemented members, a co-partition an uncomplemented set tiled by
    complemented ones. Any such group can be peeled off: the rest stays
    cross-free and regular.

    Raises
    ------

    ContractError
        If the family is not cross-free and regular, or no group is found.
    """
    original = [int(s) for s in fam]
    full = full_mask(n)
    if any(s == 0 or s == full for s in original):
        raise ContractError("family members must be nonempty proper subsets")
    if not cross_free(original, n):
        raise ContractError("family is not cross-free")
    if is_regular(original, n) is None:
        raise ContractError("family is not regular")

    flipped = [bool((s >> root) & 1) for s in original]
    sets = [full ^ s if flip else s for s, flip in zip(original, flipped)]
    remaining = list(range(len(sets)))
    result = []
    while remaining:
        found = None
        for u in sorted(remaining, key=lambda i: (popcount(sets[i]), sets[i], i)):
            others = [i for i in remaining if i != u and flipped[i] != flipped[u]]
            cover = _maximal_disjoint_cover(sets[u], others, sets)
            if cover is not None:
                found = (u, cover)
                break
        if found is None:
            raise ContractError(
                f"no partition or co-partition among {[original[i] for i in remaining]}"
            )
        u, cover = found
        if len(cover) == 1:
            member = partition([sets[u], full ^ sets[u]], root, n)
        elif flipped[u]:
            member = partition([full ^ sets[u]] + [sets[i] for i in cover], root, n)
        else:
            member = copartition([sets[u]] + [full ^ sets[i] for i in cover], root, n)
        result.append(member)
        used = {u, *cover}
        remaining = [i for i in remaining if i not in used]

    produced = collections.Counter(s for member in result for s in member.parts)
    if produced != collections.Counter(original):
        raise ContractError("decomposition does not reproduce the family")
    return result


def _split_laminar(sets: SetFamily) -> typing.Tuple[SetFamily, SetFamily]:
    """Maximal members of a laminar multiset, and the others."""
    top, rest = [], []
    for s in sorted(sets, key=lambda s: (-popcount(s), s)):
        if any(s & ~t == 0 for t in top):
            rest.append(s)
        else:
            top.append(s)
    return top, rest


def upsilon(p: PoCP, q: PoCP) -> typing.List[PoCP]:
    """Uncrossing of a weakly cross-free pair.

    Two partitions (or two co-partitions) yield their meet and join. A
    partition and a co-partition yield one member per maximal set of the
    partition together with the complemented co-partition; the member built
    from the maximal set holding the root comes first.

    Raises
    ------

    ContractError
        If `p` and `q` are not weakly cross-free.
    """
    if p.n != q.n or p.root != q.root:
        raise ValueError("families must share the ground set and the root")
    if not weakly_cross_free(p, q):
        raise ContractError(f"{p} and {q} are not weakly cross-free")
    n, root = p.n, p.root
    full = full_mask(n)

    if p.kind == q.kind:
        sp, sq = tilde(p).support, tilde(q).support
        if sp & ~sq == 0:
            small, big = p, q
        elif sq & ~sp == 0:
            small, big = q, p
        else:
            raise ContractError("subpartition supports are not nested")
        top, rest = _split_laminar(list(tilde(small).parts) + list(tilde(big).parts))
        covered = 0
        for s in rest:
            if covered & s:
                raise ContractError("lower layer of the uncrossing overlaps")
            covered |= s
        if covered != tilde(small).support:
            raise ContractError("lower layer does not cover the smaller support")
        if p.is_partition:
            meet = partition([small.parts[0]] + rest, root, n)
            join = partition([big.parts[0]] + top, root, n)
        else:
            meet = copartition([small.parts[0]] + [full ^ s for s in rest], root, n)
            join = copartition([big.parts[0]] + [full ^ s for s in top], root, n)
        return [meet, join]

    part, cop = (p, q) if p.is_partition else (q, p)
    cop_bar = [full ^ s for s in cop.parts]
    laminar = sorted(set(part.parts) | set(cop_bar))
    for i, a in enumerate(laminar):
        for b in laminar[i + 1 :]:
            if a & b and a & ~b and b & ~a:
                raise ContractError("partition and complemented co-partition are not laminar")
    top, _ = _split_laminar(laminar)

    members = []
    for s in top:
        in_part = s in part.parts
        in_cop = s in cop_bar
        if in_part and in_cop:
            member = partition([s, full ^ s], root, n)
        elif in_cop:
            member = partition([full ^ s] + [t for t in part.parts if t & ~s == 0], root, n)
        else:
            member = copartition([s] + [full ^ t for t in cop_bar if t & ~s == 0], root, n)
        members.append(((s >> root) & 1 == 0, member.key(), member))
    members.sort(key=lambda item: item[:2])
    return [member for _, _, member in members]


@dataclass
class PoCPFamily:
    """Partitions and co-partitions with characteristic vectors over `coordinates`.

    `coordinates` are indices into the variable edges of the row system.
    """

    coordinates: typing.Tuple[int, ...]
    members: typing.List[PoCP] = field(default_factory=list)
    vectors: typing.List[typing.Tuple[int, ...]] = field(default_factory=list)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @property
    def rank(self) -> int:
        basis = SpanBasis(len(self.coordinates))
        for vector in self.vectors:
            basis.add(vector)
        return basis.rank

    def is_strongly_cross_free(self) -> bool:
        return all(
            strongly_cross_free(a, b)
            for i, a in enumerate(self.members)
            for b in self.members[i + 1 :]
        )

    def check(self) -> typing.Dict[str, bool]:
        """Strong cross-freeness, independence and full dimension of the family."""
        rank = self.rank
        return {
            "strongly_cross_free": self.is_strongly_cross_free(),
            "independent": rank == len(self.members),
            "full_dimension": rank == len(self.coordinates),
        }


def characteristic_vector(
    p: PoCP, variable_edges: typing.Sequence[Edge], coordinates: typing.Sequence[int]
) -> typing.Tuple[int, ...]:
    labels = p.labels()
    return tuple(
        int(labels[variable_edges[j][0]] != labels[variable_edges[j][1]]) for j in coordinates
    )


class _BasisBuilder:
    """Grows a strongly cross-free independent family of tight rows."""

    def __init__(self, system: Lp2System, x: typing.Sequence[Fraction], coordinates):
        self.system = system
        self.x = x
        self.family = PoCPFamily(tuple(coordinates))
        self.basis = SpanBasis(len(coordinates))
        self.steps = 0

    def vector(self, p: PoCP) -> typing.Tuple[int, ...]:
        return characteristic_vector(p, self.system.variable_edges, self.family.coordinates)

    def in_span(self, p: PoCP) -> bool:
        return self.basis.in_span(self.vector(p))

    def nu(self, q: PoCP) -> int:
        return sum(crossing_pairs(q.parts, p.parts, q.n) for p in self.family.members)

    def mu(self, q: PoCP) -> int:
        return sum(1 for p in self.family.members if weakly_cross_free(p, q))

    def check_tight(self, p: PoCP):
        row = self.system.evaluate(p, self.x)
        if row.slack != 0:
            raise ContractError(f"uncrossing produced {p} with slack {row.slack}")

    def add(self, p: PoCP):
        if not self.basis.add(self.vector(p)):
            raise ContractError(f"{p} is already in the span of the family")
        self.family.members.append(p)
        self.family.vectors.append(self.vector(p))

    def descend(self, q: PoCP) -> PoCP:
        """A tight row outside the span that is strongly cross-free with the family."""
        while True:
            nu = self.nu(q)
            if nu > 0:
                other = next(
                    p for p in self.family.members if crossing_pairs(q.parts, p.parts, q.n)
                )
                sets = uncross_pair_sets(list(other.parts) + list(q.parts), q.n)
                replacements = decompose_regular_crossfree(sets, q.root, q.n)
            else:
                weak = [p for p in self.family.members if weakly_cross_free(p, q)]
                if not weak:
                    return q
                other = weak[0]
                replacements = upsilon(other, q)

            total = [a + b for a, b in zip(self.vector(other), self.vector(q))]
            produced = [0] * len(total)
            for r in replacements:
                self.check_tight(r)
                produced = [a + b for a, b in zip(produced, self.vector(r))]
            if produced != total:
                raise ContractError(f"uncrossing {other} and {q} changed the vector sum")

            outside = [r for r in replacements if not self.in_span(r)]
            if not outside:
                raise ContractError(f"uncrossing {other} and {q} fell into the span")
            mu = self.mu(q)
            best = min(outside, key=lambda r: (self.nu(r), self.mu(r), r.key()))
            if (self.nu(best), self.mu(best)) >= (nu, mu):
                raise ContractError(f"uncrossing {other} and {q} made no progress")
            logger.debug(f"replaced {q} by {best}")
            self.steps += 1
            q = best


def extract_strongly_crossfree_basis(
    x: typing.Sequence[Fraction], system: Lp2System
) -> PoCPFamily:
    """Strongly cross-free family of tight rows spanning the fractional coordinates.

    Parameters
    ----------

    x : typing.Sequence[Fraction]
        Basic feasible solution, one value per variable edge of `system`.

    system : Lp2System
        Row system the solution belongs to.

    Returns
    -------

    PoCPFamily
        Tight partitions and co-partitions, pairwise strongly cross-free, whose
        characteristic vectors over the fractional edges form a basis.

    Raises
    ------

    ContractError
        If the tight rows do not have full rank on the fractional edges, that is
        `x` is not basic, or an uncrossing step breaks its guarantees.
    """
    x = [Fraction(v) for v in x]
    coordinates = [j for j, v in enumerate(x) if 0 < v < 1]
    builder = _BasisBuilder(system, x, coordinates)
    if not coordinates:
        return builder.family

    tight = [row.pocp for row in system.tight(x)]
    span = SpanBasis(len(coordinates))
    for p in tight:
        span.add(builder.vector(p))
    if span.rank < len(coordinates):
        raise ContractError(
            f"tight rows have rank {span.rank} on {len(coordinates)} fractional edges, "
            "the point is not basic"
        )

    for q in tight:
        while builder.basis.rank < len(coordinates) and not builder.in_span(q):
            builder.add(builder.descend(q))
        if builder.basis.rank == len(coordinates):
            break
    if builder.basis.rank < len(coordinates):
        raise ContractError("tight rows outside the span were left over")
    logger.debug(
        f"basis of {len(builder.family)} rows from {len(tight)} tight rows "
        f"after {builder.steps} uncrossing steps"
    )
    return builder.family


def _strictly_below(p: PoCP, q: PoCP) -> bool:
    """``p`` strictly below ``q`` in the domination order, ties by the canonical key."""
    if not precedes(p, q):
        return False
    return not precedes(q, p) or p.key() < q.key()


def domination_forest(fam: typing.Union[PoCPFamily, typing.Sequence[PoCP]]) -> nx.DiGraph:
    """Forest on member indices with an arc from every parent to its children.

    The parent of a member is its least strict dominator. Node attribute
    ``pocp`` holds the member.

    Raises
    ------

    ContractError
        If the family is not strongly cross-free or the dominators of a member
        are not totally ordered.
    """
    members = list(fam.members if isinstance(fam, PoCPFamily) else fam)
    for i, a in enumerate(members):
        for b in members[i + 1 :]:
            if not strongly_cross_free(a, b):
                raise ContractError(f"{a} and {b} are not strongly cross-free")

    forest = nx.DiGraph()
    for i, p in enumerate(members):
        forest.add_node(i, pocp=p)
    for i, p in enumerate(members):
        above = [j for j, q in enumerate(members) if j != i and _strictly_below(p, q)]
        if not above:
            continue
        least = [j for j in above if all(k == j or _strictly_below(members[j], members[k]) for k in above)]
        if len(least) != 1:
            raise ContractError(f"dominators of {p} are not a chain")
        forest.add_edge(least[0], i)
    return forest
