"""Exact rational simplex with duals and warm-started row addition.

Variables may carry any lower/upper bounds (``None`` for infinite). The
problem is moved to standard form internally: shifted/split columns,
explicit rows for finite upper bounds, and one slack, surplus or
artificial column per row. A two-phase primal simplex solves it; rows
added later are handled by the dual simplex from the previous basis.

Entering columns follow the most-negative reduced cost while the
objective strictly improves; as soon as a pivot is degenerate the rule
switches to Bland's smallest-index choice until the next strict
improvement, which rules out cycling.

Tableau arithmetic uses gmpy2's exact rationals when that package is
installed and ``fractions.Fraction`` otherwise; results are always
returned as ``Fraction``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

try:
    from gmpy2 import mpq as _rational
except ImportError:  # pragma: no cover - exercised only without gmpy2
    _rational = Fraction

ZERO = Fraction(0)
QZERO = _rational(0)
QONE = _rational(1)
SENSES = ("<=", "=", ">=")


@dataclass(frozen=True)
class Row:
    coeffs: Mapping[int, Fraction]
    sense: str
    rhs: Fraction

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"unknown row sense {self.sense!r}")


@dataclass
class LinearProgram:
    sense: str = "min"
    cost: list[Fraction] = field(default_factory=list)
    lower: list[Fraction | None] = field(default_factory=list)
    upper: list[Fraction | None] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)

    def add_variable(self, cost=0, lower=0, upper=None) -> int:
        self.cost.append(Fraction(cost))
        self.lower.append(None if lower is None else Fraction(lower))
        self.upper.append(None if upper is None else Fraction(upper))
        return len(self.cost) - 1

    def add_row(self, coeffs: Mapping[int, object], sense: str, rhs) -> int:
        clean = {j: Fraction(a) for j, a in coeffs.items() if a}
        for j in clean:
            if not 0 <= j < len(self.cost):
                raise ValueError(f"row refers to unknown variable {j}")
        self.rows.append(Row(clean, sense, Fraction(rhs)))
        return len(self.rows) - 1

    @property
    def num_vars(self) -> int:
        return len(self.cost)


@dataclass
class LPOutcome:
    status: str  # optimal | infeasible | unbounded
    primal: dict[int, Fraction] = field(default_factory=dict)
    dual: dict[int, Fraction] = field(default_factory=dict)
    objective: Fraction | None = None
    farkas: dict[int, Fraction] | None = None
    pivots: int = 0


def _q(value):
    return _rational(value)


def _out(value) -> Fraction:
    return Fraction(int(value.numerator), int(value.denominator))


class _Standard:
    """Standard-form tableau for one LinearProgram."""

    def __init__(self, lp: LinearProgram):
        self.lp = copy.deepcopy(lp)
        self.sign = -1 if lp.sense == "max" else 1
        self.var_cols: list[list[tuple[int, int]]] = []
        self.offset: list = []
        self.col_cost: list = []
        self.artificial: set[int] = set()
        self.rows: list[dict] = []
        self.rhs: list = []
        self.basis: list[int] = []
        self.id_col: list[int] = []
        self.row_sign: list[int] = []
        self.origin: list[tuple[str, int]] = []
        self.d: dict = {}
        self.obj = QZERO
        self.pivots = 0

        for j in range(lp.num_vars):
            c = _q(self.sign * lp.cost[j])
            lo, up = lp.lower[j], lp.upper[j]
            lo = None if lo is None else _q(lo)
            up = None if up is None else _q(up)
            if lo is not None:
                col = self._new_col(c)
                self.var_cols.append([(col, 1)])
                self.offset.append(lo)
            elif up is not None:
                col = self._new_col(-c)
                self.var_cols.append([(col, -1)])
                self.offset.append(up)
            else:
                plus, minus = self._new_col(c), self._new_col(-c)
                self.var_cols.append([(plus, 1), (minus, -1)])
                self.offset.append(QZERO)
        self.structural = len(self.col_cost)

        pending = []
        for k, row in enumerate(lp.rows):
            coeffs, rhs = self._translate(row.coeffs, row.rhs)
            pending.append((coeffs, row.sense, rhs, ("row", k)))
        for j in range(lp.num_vars):
            lo, up = lp.lower[j], lp.upper[j]
            if lo is not None and up is not None:
                (col, _), = self.var_cols[j]
                pending.append(({col: QONE}, "<=", _q(up - lo), ("ub", j)))
        for coeffs, sense, rhs, origin in pending:
            self._append_initial_row(coeffs, sense, rhs, origin)

    def _new_col(self, cost, artificial: bool = False) -> int:
        self.col_cost.append(_q(cost))
        col = len(self.col_cost) - 1
        if artificial:
            self.artificial.add(col)
        return col

    def _translate(self, coeffs, rhs):
        out: dict = {}
        rhs = _q(rhs)
        for j, a in coeffs.items():
            a = _q(a)
            rhs -= a * self.offset[j]
            for col, s in self.var_cols[j]:
                out[col] = out.get(col, QZERO) + s * a
        return {c: a for c, a in out.items() if a}, rhs

    def _append_initial_row(self, coeffs, sense, rhs, origin):
        sigma = 1
        if rhs < 0:
            coeffs = {c: -a for c, a in coeffs.items()}
            rhs = -rhs
            sigma = -1
            sense = {"<=": ">=", ">=": "<=", "=": "="}[sense]
        row = dict(coeffs)
        if sense == "<=":
            idc = self._new_col(QZERO)
            row[idc] = QONE
        else:
            if sense == ">=":
                row[self._new_col(QZERO)] = -QONE
            idc = self._new_col(QZERO, artificial=True)
            row[idc] = QONE
        self.rows.append(row)
        self.rhs.append(rhs)
        self.basis.append(idc)
        self.id_col.append(idc)
        self.row_sign.append(sigma)
        self.origin.append(origin)

    # -- core pivoting -------------------------------------------------

    def _set_objective(self, costs: Mapping) -> None:
        self.d = {c: v for c, v in costs.items() if v}
        self.obj = QZERO
        for r, b in enumerate(self.basis):
            f = self.d.get(b)
            if f:
                self._eliminate(self.d, r, f)
                self.obj += f * self.rhs[r]

    def _eliminate(self, target: dict, r: int, f) -> None:
        for c, a in self.rows[r].items():
            v = target.get(c, QZERO) - f * a
            if v:
                target[c] = v
            else:
                target.pop(c, None)

    def _pivot(self, r: int, j: int) -> None:
        self.pivots += 1
        row = self.rows[r]
        piv = row[j]
        if piv != 1:
            inv = 1 / piv
            for c in row:
                row[c] *= inv
            self.rhs[r] *= inv
        for k, other in enumerate(self.rows):
            if k != r:
                f = other.get(j)
                if f:
                    self._eliminate(other, r, f)
                    self.rhs[k] -= f * self.rhs[r]
        f = self.d.get(j)
        if f:
            self._eliminate(self.d, r, f)
            self.obj += f * self.rhs[r]
        self.basis[r] = j

    def _entering(self, bland: bool) -> int | None:
        best, best_val = None, QZERO
        for c, v in self.d.items():
            if v >= 0 or c in self.artificial:
                continue
            if bland:
                if best is None or c < best:
                    best = c
            elif v < best_val or (v == best_val and c < best):
                best, best_val = c, v
        return best

    def _leaving(self, j: int) -> int | None:
        best, best_ratio = None, None
        for r, row in enumerate(self.rows):
            a = row.get(j)
            if a is None or a <= 0:
                continue
            ratio = self.rhs[r] / a
            if best is None or ratio < best_ratio or (
                ratio == best_ratio and self.basis[r] < self.basis[best]
            ):
                best, best_ratio = r, ratio
        return best

    def _primal_simplex(self) -> str:
        bland = False
        while True:
            j = self._entering(bland)
            if j is None:
                return "optimal"
            r = self._leaving(j)
            if r is None:
                return "unbounded"
            before = self.obj
            self._pivot(r, j)
            bland = self.obj == before

    def _dual_simplex(self) -> int | None:
        """Restore primal feasibility; return an infeasible row index on failure."""
        while True:
            r = None
            for k, b in enumerate(self.rhs):
                if b < 0 and (r is None or self.basis[k] < self.basis[r]):
                    r = k
            if r is None:
                return None
            j, best = None, None
            for c, a in self.rows[r].items():
                if a >= 0 or c in self.artificial or c == self.basis[r]:
                    continue
                ratio = self.d.get(c, QZERO) / -a
                if j is None or ratio < best or (ratio == best and c < j):
                    j, best = c, ratio
            if j is None:
                return r
            self._pivot(r, j)

    # -- phases --------------------------------------------------------

    def run(self) -> LPOutcome:
        if self.artificial:
            self._set_objective({c: QONE for c in self.artificial})
            self._primal_simplex()
            if self.obj > 0:
                y = {k: (1 if self.id_col[k] in self.artificial else 0) - self.d.get(self.id_col[k], QZERO)
                     for k in range(len(self.rows))}
                return self._infeasible(y)
            for r, b in enumerate(self.basis):
                if b in self.artificial:
                    cands = [c for c, a in self.rows[r].items() if a and c not in self.artificial]
                    if cands:
                        self._pivot(r, min(cands))
        self._set_objective(dict(enumerate(self.col_cost)))
        status = self._primal_simplex()
        if status == "unbounded":
            return LPOutcome("unbounded", pivots=self.pivots)
        return self._optimal()

    def add_row(self, coeffs, sense, rhs, origin) -> LPOutcome:
        coeffs, rhs = self._translate(coeffs, rhs)
        sigma = 1
        if sense == ">=":
            coeffs = {c: -a for c, a in coeffs.items()}
            rhs = -rhs
            sigma = -1
        row = dict(coeffs)
        for r, b in enumerate(self.basis):
            f = row.get(b)
            if f:
                self._eliminate(row, r, f)
                rhs -= f * self.rhs[r]
        slack = self._new_col(QZERO)
        row[slack] = QONE
        self.rows.append(row)
        self.rhs.append(rhs)
        self.basis.append(slack)
        self.id_col.append(slack)
        self.row_sign.append(sigma)
        self.origin.append(origin)
        bad = self._dual_simplex()
        if bad is not None:
            y = {k: -self.rows[bad].get(self.id_col[k], QZERO) for k in range(len(self.rows))}
            return self._infeasible(y)
        return self._optimal()

    # -- reporting -----------------------------------------------------

    def _column_values(self) -> dict:
        return {b: self.rhs[r] for r, b in enumerate(self.basis)}

    def _optimal(self) -> LPOutcome:
        vals = self._column_values()
        primal = {}
        for j, cols in enumerate(self.var_cols):
            primal[j] = _out(self.offset[j] + sum((s * vals.get(c, QZERO) for c, s in cols), QZERO))
        dual = {}
        for k, (kind, idx) in enumerate(self.origin):
            if kind == "row":
                y = -self.d.get(self.id_col[k], QZERO)
                dual[idx] = _out(self.sign * self.row_sign[k] * y)
        objective = sum((self.lp.cost[j] * v for j, v in primal.items()), ZERO)
        return LPOutcome("optimal", primal, dual, objective, pivots=self.pivots)

    def _infeasible(self, y_norm: dict[int, Fraction]) -> LPOutcome:
        farkas = {}
        for k, (kind, idx) in enumerate(self.origin):
            if kind == "row":
                farkas[idx] = _out(self.row_sign[k] * y_norm.get(k, QZERO))
        self.failed = True
        return LPOutcome("infeasible", farkas=farkas, pivots=self.pivots)


class SimplexState:
    """A solved LP that can take further rows."""

    def __init__(self, lp: LinearProgram):
        self._std = _Standard(lp)
        self._std.failed = False
        self.outcome = self._std.run()

    @property
    def lp(self) -> LinearProgram:
        return self._std.lp

    def add_row(self, coeffs: Mapping[int, object], sense: str, rhs) -> LPOutcome:
        lp = self._std.lp
        k = lp.add_row(coeffs, sense, rhs)
        row = lp.rows[k]
        if self.outcome.status != "optimal" or row.sense == "=":
            pivots = self._std.pivots
            self._std = _Standard(lp)
            self._std.failed = False
            self.outcome = self._std.run()
            self.outcome.pivots += pivots
        else:
            self.outcome = self._std.add_row(row.coeffs, row.sense, row.rhs, ("row", k))
        return self.outcome


def solve(lp: LinearProgram) -> LPOutcome:
    return SimplexState(lp).outcome


def add_row_and_resolve(state: SimplexState, row: Row) -> LPOutcome:
    return state.add_row(row.coeffs, row.sense, row.rhs)
