"""Exact rational linear programming.

A dense two-phase simplex over `fractions.Fraction` with Bland's rule. It
returns vertex optimal solutions and, for empty systems, a Farkas
certificate. `solve_with_separation` adds violated rows from a separation
callback until the point is feasible for the implicit full system.
"""

# native imports
import dataclasses
import logging
import typing
from dataclasses import dataclass, field
from fractions import Fraction

logger = logging.getLogger()

# forient imports
from forient.errors import ContractError, InfeasibleError
from forient.utils import format_rational

# third party imports
import numpy as np

GE = ">="
EQ = "=="

ZERO = Fraction(0)


@dataclass
class LpVariable:
    name: str
    lower: Fraction = Fraction(0)
    upper: Fraction = Fraction(1)

    def __post_init__(self):
        self.lower = Fraction(self.lower)
        self.upper = Fraction(self.upper)
        if self.lower > self.upper:
            raise ValueError(
                f"variable {self.name}: lower bound {self.lower} above upper bound {self.upper}"
            )


@dataclass
class LpRow:
    """A row ``sum_j a_j x_j (>= | ==) rhs`` with sparse coefficients."""

    coefficients: typing.Dict[int, Fraction]
    rhs: Fraction
    sense: str = GE
    name: str = ""
    tag: typing.Any = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.sense not in (GE, EQ):
            raise ValueError(f"unknown row sense {self.sense!r}, use '>=' or '=='")
        self.coefficients = {
            int(j): Fraction(c) for j, c in self.coefficients.items() if c != 0
        }
        self.rhs = Fraction(self.rhs)

    def key(self) -> typing.Tuple:
        return (self.sense, tuple(sorted(self.coefficients.items())), self.rhs)

    def activity(self, values: typing.Sequence[Fraction]) -> Fraction:
        return sum((c * values[j] for j, c in self.coefficients.items()), ZERO)

    def slack(self, values: typing.Sequence[Fraction]) -> Fraction:
        return self.activity(values) - self.rhs

    def is_satisfied(self, values: typing.Sequence[Fraction]) -> bool:
        slack = self.slack(values)
        return slack == 0 if self.sense == EQ else slack >= 0


@dataclass
class LpProblem:
    """Minimise ``objective . x`` subject to `rows` and finite variable bounds."""

    variables: typing.List[LpVariable]
    objective: typing.List[Fraction]
    rows: typing.List[LpRow] = field(default_factory=list)
    name: str = "lp"

    def __post_init__(self):
        self.objective = [Fraction(c) for c in self.objective]
        if len(self.objective) != len(self.variables):
            raise ValueError(
                f"objective has {len(self.objective)} entries for {len(self.variables)} variables"
            )
        for row in self.rows:
            self._check_row(row)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    def _check_row(self, row: LpRow):
        for j in row.coefficients:
            if not 0 <= j < len(self.variables):
                raise ValueError(f"row {row.name} refers to unknown variable {j}")

    def add_rows(self, rows: typing.Iterable[LpRow]) -> int:
        """Append rows not yet present; returns how many were added."""
        present = {row.key() for row in self.rows}
        added = 0
        for row in rows:
            self._check_row(row)
            if row.key() in present:
                continue
            present.add(row.key())
            self.rows.append(row)
            added += 1
        return added

    def copy(self) -> "LpProblem":
        return LpProblem(
            list(self.variables), list(self.objective), list(self.rows), self.name
        )

    def objective_value(self, values: typing.Sequence[Fraction]) -> Fraction:
        return sum((c * v for c, v in zip(self.objective, values)), ZERO)

    def is_feasible(self, values: typing.Sequence[Fraction]) -> bool:
        for var, v in zip(self.variables, values):
            if not var.lower <= v <= var.upper:
                return False
        return all(row.is_satisfied(values) for row in self.rows)

    def to_lp_text(self) -> str:
        """Human readable dump in LP file layout, rationals written as p/q."""

        def linear(coefficients):
            terms = []
            for j, c in sorted(coefficients.items()):
                sign = "-" if c < 0 else "+"
                terms.append(f"{sign} {format_rational(abs(c))} {self.variables[j].name}")
            if not terms:
                return "0"
            text = " ".join(terms)
            return text[2:] if text.startswith("+ ") else text

        lines = [f"\\ {self.name}", "Minimize"]
        lines.append(" obj: " + linear(dict(enumerate(self.objective))))
        lines.append("Subject To")
        for i, row in enumerate(self.rows):
            name = row.name or f"r{i}"
            op = "=" if row.sense == EQ else ">="
            lines.append(f" {name}: {linear(row.coefficients)} {op} {format_rational(row.rhs)}")
        lines.append("Bounds")
        for var in self.variables:
            lines.append(
                f" {format_rational(var.lower)} <= {var.name} <= {format_rational(var.upper)}"
            )
        lines.append("End")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FarkasCertificate:
    """Multipliers proving that a system has no solution.

    The combination ``sum_i y_i row_i - sum_j z_j x_j + sum_j w_j x_j`` is the
    zero vector while the same combination of right hand sides
    ``sum_i y_i b_i - sum_j z_j u_j + sum_j w_j l_j`` is positive; `y` is
    nonnegative on ``>=`` rows, `z` and `w` are nonnegative.
    """

    row_multipliers: typing.Tuple[Fraction, ...]
    upper_multipliers: typing.Tuple[Fraction, ...]
    lower_multipliers: typing.Tuple[Fraction, ...]

    def combined_rhs(self, problem: LpProblem) -> Fraction:
        total = sum(
            (y * row.rhs for y, row in zip(self.row_multipliers, problem.rows)), ZERO
        )
        for var, z, w in zip(
            problem.variables, self.upper_multipliers, self.lower_multipliers
        ):
            total += w * var.lower - z * var.upper
        return total

    def verify(self, problem: LpProblem) -> bool:
        if len(self.row_multipliers) != len(problem.rows):
            return False
        for y, row in zip(self.row_multipliers, problem.rows):
            if row.sense == GE and y < 0:
                return False
        if any(z < 0 for z in self.upper_multipliers) or any(
            w < 0 for w in self.lower_multipliers
        ):
            return False
        combination = [w - z for z, w in zip(self.upper_multipliers, self.lower_multipliers)]
        for y, row in zip(self.row_multipliers, problem.rows):
            for j, c in row.coefficients.items():
                combination[j] += y * c
        if any(c != 0 for c in combination):
            return False
        return self.combined_rhs(problem) > 0


@dataclass(frozen=True)
class BasicSolution:
    """Vertex optimum of an `LpProblem`.

    `active_rows` index the rows of `rows` holding with equality, the bound
    tuples list variables at their lower or upper bound.
    """

    values: typing.Tuple[Fraction, ...]
    objective: Fraction
    basis: typing.Tuple[str, ...]
    active_rows: typing.Tuple[int, ...]
    active_lower: typing.Tuple[int, ...]
    active_upper: typing.Tuple[int, ...]
    rank: int
    rows: typing.Tuple[LpRow, ...] = ()
    rounds: int = 1
    pivots: int = 0

    def value(self, j: int) -> Fraction:
        return self.values[j]

    @property
    def fractional(self) -> typing.List[int]:
        return [j for j, v in enumerate(self.values) if v.denominator != 1]


def exact_rank(vectors: typing.Iterable[typing.Sequence[Fraction]], dim: int) -> int:
    basis = SpanBasis(dim)
    for v in vectors:
        basis.add(v)
    return basis.rank


class SpanBasis:
    """Incrementally maintained reduced row echelon basis over the rationals."""

    def __init__(self, dim: int):
        self.dim = dim
        self.rows: typing.Dict[int, typing.List[Fraction]] = {}

    @property
    def rank(self) -> int:
        return len(self.rows)

    def reduce(self, vector: typing.Sequence) -> typing.List[Fraction]:
        if len(vector) != self.dim:
            raise ValueError(f"expected a vector of length {self.dim}, got {len(vector)}")
        residual = [Fraction(v) for v in vector]
        for pivot, row in self.rows.items():
            factor = residual[pivot]
            if factor != 0:
                residual = [a - factor * b for a, b in zip(residual, row)]
        return residual

    def in_span(self, vector: typing.Sequence) -> bool:
        return not any(self.reduce(vector))

    def add(self, vector: typing.Sequence) -> bool:
        """Add `vector`; returns False when it is already in the span."""
        residual = self.reduce(vector)
        pivot = next((j for j, v in enumerate(residual) if v != 0), None)
        if pivot is None:
            return False
        scale = residual[pivot]
        residual = [v / scale for v in residual]
        for other, row in self.rows.items():
            factor = row[pivot]
            if factor != 0:
                self.rows[other] = [a - factor * b for a, b in zip(row, residual)]
        self.rows[pivot] = residual
        return True


def solve_linear_system(
    matrix: typing.Sequence[typing.Sequence[Fraction]], rhs: typing.Sequence[Fraction]
) -> typing.Optional[typing.List[Fraction]]:
    """Unique solution of a square system, None if it is singular."""
    size = len(matrix)
    aug = [[Fraction(v) for v in row] + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if aug[r][col] != 0), None)
        if pivot is None:
            return None
        aug[col], aug[pivot] = aug[pivot], aug[col]
        scale = aug[col][col]
        aug[col] = [v / scale for v in aug[col]]
        for r in range(size):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [aug[r][size] for r in range(size)]


def active_constraints(
    problem: LpProblem, values: typing.Sequence[Fraction]
) -> typing.Tuple[typing.List[int], typing.List[int], typing.List[int]]:
    rows = [i for i, row in enumerate(problem.rows) if row.slack(values) == 0]
    lower = [j for j, var in enumerate(problem.variables) if values[j] == var.lower]
    upper = [j for j, var in enumerate(problem.variables) if values[j] == var.upper]
    return rows, lower, upper


def active_rank(problem: LpProblem, values: typing.Sequence[Fraction]) -> int:
    n = problem.n_variables
    rows, lower, upper = active_constraints(problem, values)
    basis = SpanBasis(n)
    for j in sorted(set(lower) | set(upper)):
        unit = [ZERO] * n
        unit[j] = Fraction(1)
        basis.add(unit)
    for i in rows:
        if basis.rank == n:
            break
        dense = [ZERO] * n
        for j, c in problem.rows[i].coefficients.items():
            dense[j] = c
        basis.add(dense)
    return basis.rank


def is_vertex(problem: LpProblem, values: typing.Sequence[Fraction]) -> bool:
    """Whether `values` is feasible and its active constraints have full rank."""
    values = [Fraction(v) for v in values]
    if not problem.is_feasible(values):
        return False
    return active_rank(problem, values) == problem.n_variables


class _Simplex:
    """Two-phase tableau simplex with Bland's rule.

    Variables are shifted by their lower bounds, upper bounds become rows
    ``-x >= -(u - l)``. Every ``>=`` row gets a surplus column; artificial
    columns are added only where the surplus cannot start in the basis.
    """

    def __init__(self, problem: LpProblem):
        self.problem = problem
        n = problem.n_variables
        self.n = n
        lower = [var.lower for var in problem.variables]

        constraints = []
        for row in problem.rows:
            dense = [ZERO] * n
            for j, c in row.coefficients.items():
                dense[j] = c
            shifted = row.rhs - sum((dense[j] * lower[j] for j in range(n)), ZERO)
            constraints.append((dense, shifted, row.sense))
        for j, var in enumerate(problem.variables):
            dense = [ZERO] * n
            dense[j] = Fraction(-1)
            constraints.append((dense, -(var.upper - var.lower), GE))
        self.constraints = constraints

        m = len(constraints)
        self.sign = []
        self.surplus_col = {}
        self.art_col = {}
        col = n
        for i, (_, b, sense) in enumerate(constraints):
            if sense == GE:
                self.surplus_col[i] = col
                col += 1
        for i, (_, b, sense) in enumerate(constraints):
            if sense == GE:
                sigma = 1 if b > 0 else -1
            else:
                sigma = 1 if b >= 0 else -1
            self.sign.append(sigma)
            if sense == EQ or b > 0:
                self.art_col[i] = col
                col += 1
        self.n_cols = col

        T = np.full((m + 1, col + 1), ZERO, dtype=object)
        self.basis = []
        for i, (dense, b, sense) in enumerate(constraints):
            sigma = self.sign[i]
            for j, c in enumerate(dense):
                if c != 0:
                    T[i, j] = sigma * c
            if i in self.surplus_col:
                T[i, self.surplus_col[i]] = Fraction(-sigma)
            if i in self.art_col:
                T[i, self.art_col[i]] = Fraction(1)
                self.basis.append(self.art_col[i])
            else:
                self.basis.append(self.surplus_col[i])
            T[i, -1] = sigma * b
        self.T = T
        self.pivots = 0
        self.row_origin = list(range(m))

    def _set_objective(self, costs: typing.Dict[int, Fraction]):
        T = self.T
        obj = np.full(T.shape[1], ZERO, dtype=object)
        for j, c in costs.items():
            obj[j] = c
        for i, b in enumerate(self.basis):
            c = costs.get(b, ZERO)
            if c != 0:
                obj = obj - c * T[i]
        T[-1] = obj

    def _pivot(self, r: int, c: int):
        T = self.T
        T[r] = T[r] / T[r, c]
        column = T[:, c].copy()
        column[r] = ZERO
        rows = np.nonzero(column != 0)[0]
        if len(rows):
            T[rows] = T[rows] - np.outer(column[rows], T[r])
        self.basis[r] = c
        self.pivots += 1

    def _iterate(self):
        T = self.T
        while True:
            obj = T[-1, :-1]
            entering = next((j for j in range(len(obj)) if obj[j] < 0), None)
            if entering is None:
                return
            best = None
            for i in range(T.shape[0] - 1):
                a = T[i, entering]
                if a > 0:
                    ratio = T[i, -1] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                raise ContractError(
                    f"{self.problem.name}: unbounded direction despite finite bounds"
                )
            self._pivot(best[1], entering)

    def _certificate(self) -> FarkasCertificate:
        reduced = self.T[-1]
        multipliers = []
        for i, (_, _, sense) in enumerate(self.constraints):
            if sense == GE:
                multipliers.append(Fraction(reduced[self.surplus_col[i]]))
            else:
                multipliers.append(self.sign[i] * (1 - reduced[self.art_col[i]]))
        n_rows = len(self.problem.rows)
        y = multipliers[:n_rows]
        z = multipliers[n_rows:]
        w = [Fraction(v) for v in z]
        for yi, (dense, _, _) in zip(y, self.constraints[:n_rows]):
            if yi != 0:
                for j, c in enumerate(dense):
                    w[j] -= yi * c
        return FarkasCertificate(tuple(y), tuple(z), tuple(w))

    def _drop_artificials(self):
        T = self.T
        art = set(self.art_col.values())
        redundant = []
        for r in range(T.shape[0] - 1):
            if self.basis[r] not in art:
                continue
            col = next(
                (j for j in range(self.n_cols) if j not in art and T[r, j] != 0), None
            )
            if col is None:
                redundant.append(r)
            else:
                self._pivot(r, col)
        if redundant:
            logger.debug(f"{self.problem.name}: dropping {len(redundant)} redundant rows")
        keep_rows = [r for r in range(self.T.shape[0]) if r not in redundant]
        keep_cols = [j for j in range(self.n_cols) if j not in art] + [self.n_cols]
        self.T = self.T[np.ix_(keep_rows, keep_cols)]
        remap = {old: new for new, old in enumerate(keep_cols)}
        self.basis = [remap[b] for r, b in enumerate(self.basis) if r not in redundant]
        self.n_cols = len(keep_cols) - 1

    def solve(self) -> BasicSolution:
        problem = self.problem
        if self.art_col:
            self._set_objective({c: Fraction(1) for c in self.art_col.values()})
            self._iterate()
            infeasibility = -self.T[-1, -1]
            if infeasibility > 0:
                certificate = self._certificate()
                if not certificate.verify(problem):
                    raise ContractError(f"{problem.name}: Farkas certificate failed to verify")
                raise InfeasibleError(
                    f"{problem.name}: the linear program is infeasible", certificate
                )
            self._drop_artificials()

        self._set_objective({j: c for j, c in enumerate(problem.objective) if c != 0})
        self._iterate()

        shifted = [ZERO] * self.n
        for i, b in enumerate(self.basis):
            if b < self.n:
                shifted[b] = self.T[i, -1]
        values = tuple(
            Fraction(v) + var.lower for v, var in zip(shifted, problem.variables)
        )
        if not problem.is_feasible(values):
            raise ContractError(f"{problem.name}: simplex returned an infeasible point")

        rows, lower, upper = active_constraints(problem, values)
        rank = active_rank(problem, values)
        if rank != self.n:
            raise ContractError(
                f"{problem.name}: active constraints have rank {rank} < {self.n}"
            )
        names = []
        for b in self.basis:
            if b < self.n:
                names.append(problem.variables[b].name)
            else:
                names.append(f"slack{b - self.n}")
        return BasicSolution(
            values=values,
            objective=problem.objective_value(values),
            basis=tuple(names),
            active_rows=tuple(rows),
            active_lower=tuple(lower),
            active_upper=tuple(upper),
            rank=rank,
            rows=tuple(problem.rows),
            pivots=self.pivots,
        )


def solve_basic(problem: LpProblem) -> BasicSolution:
    """Vertex optimal solution of `problem`.

    Raises
    ------

    InfeasibleError
        With a verified `FarkasCertificate` as witness.
    """
    solution = _Simplex(problem).solve()
    logger.debug(
        f"{problem.name}: optimum {solution.objective} after {solution.pivots} pivots "
        f"({problem.n_variables} variables, {len(problem.rows)} rows)"
    )
    return solution


def solve_with_separation(
    problem: LpProblem,
    separate: typing.Callable[[typing.Tuple[Fraction, ...]], typing.Iterable[LpRow]],
    max_rounds: int = 1000,
) -> BasicSolution:
    """Cutting plane loop: solve, ask `separate` for violated rows, repeat.

    Parameters
    ----------

    problem : LpProblem
        Variables, bounds, objective and the initial rows. It is not modified.

    separate : typing.Callable
        Maps a point to violated rows of the implicit full system, returns an
        empty iterable iff the point is feasible for it.

    max_rounds : int, default 1000
        Upper limit on the number of solves.

    Returns
    -------

    BasicSolution
        Vertex of the full system; `rows` holds the generated system.
    """
    current = problem.copy()
    present = {row.key() for row in current.rows}
    pivots = 0
    for round_index in range(1, max_rounds + 1):
        solution = solve_basic(current)
        pivots += solution.pivots
        fresh = []
        batch = set()
        for row in separate(solution.values):
            if row.is_satisfied(solution.values):
                raise ContractError(
                    f"{problem.name}: separator returned row {row.name!r} which holds"
                )
            # different sets may induce the same row
            if row.key() in batch:
                continue
            if row.key() in present:
                raise ContractError(
                    f"{problem.name}: separator returned row {row.name!r} twice"
                )
            batch.add(row.key())
            fresh.append(row)
        present |= batch
        if not fresh:
            return dataclasses.replace(solution, rounds=round_index, pivots=pivots)
        logger.debug(f"{problem.name}: round {round_index} adds {len(fresh)} rows")
        current.rows.extend(fresh)
    raise ContractError(f"{problem.name}: row generation exceeded {max_rounds} rounds")
