"""Bounded-variable linear programs with primal/dual extraction.

Programs are built as sparse (variable, coefficient) lists and solved with
the HiGHS backend behind :func:`solve`. Dual values follow one convention
throughout: the dual of a constraint is the sensitivity of the optimal
objective to that constraint's right-hand side, d(objective)/d(rhs). Under
minimization this means duals of ``>=`` constraints are nonnegative, duals
of ``<=`` constraints are nonpositive, and equality duals are unrestricted
in sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

# Single feasibility/optimality tolerance, scaled by problem magnitude where used.
TOLERANCE = 1e-6

SENSE_LE = "<="
SENSE_EQ = "="
SENSE_GE = ">="
_SENSES = (SENSE_LE, SENSE_EQ, SENSE_GE)

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"


class LpError(Exception):
    """Malformed program (unknown variable, bad bounds, bad sense)."""


class LpSolveError(Exception):
    """Solver failed to certify any status (numerical trouble, iteration limit)."""


@dataclass(frozen=True)
class Variable:
    name: str
    lb: float = -math.inf
    ub: float = math.inf


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: tuple  # ((var_name, coefficient), ...)
    sense: str
    rhs: float


class LinearProgram:
    """A minimization LP over bounded variables.

    Build with :meth:`add_variable` / :meth:`add_constraint` /
    :meth:`set_objective`, then treat as immutable; :func:`solve` compiles
    the program to array form once and caches it.
    """

    def __init__(self):
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[str, float] = {}
        self._var_index: dict[str, int] = {}
        self._con_names: set[str] = set()
        self._compiled = None

    def add_variable(self, name: str, lb: float = -math.inf, ub: float = math.inf) -> str:
        if name in self._var_index:
            raise LpError(f"duplicate variable {name!r}")
        if lb > ub:
            raise LpError(f"variable {name!r} has lb {lb} > ub {ub}")
        self._var_index[name] = len(self.variables)
        self.variables.append(Variable(name, lb, ub))
        self._compiled = None
        return name

    def add_constraint(self, name: str, coeffs, sense: str, rhs: float) -> str:
        if name in self._con_names:
            raise LpError(f"duplicate constraint {name!r}")
        if sense not in _SENSES:
            raise LpError(f"constraint {name!r}: unknown sense {sense!r}")
        for var, _ in coeffs:
            if var not in self._var_index:
                raise LpError(f"constraint {name!r} references unknown variable {var!r}")
        self._con_names.add(name)
        self.constraints.append(Constraint(name, tuple(coeffs), sense, float(rhs)))
        self._compiled = None
        return name

    def set_objective(self, coeffs) -> None:
        obj = {}
        for var, coef in coeffs:
            if var not in self._var_index:
                raise LpError(f"objective references unknown variable {var!r}")
            obj[var] = obj.get(var, 0.0) + float(coef)
        self.objective = obj
        self._compiled = None

    def variable_index(self, name: str) -> int:
        return self._var_index[name]

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    def compiled(self) -> "CompiledLp":
        if self._compiled is None:
            self._compiled = _compile(self)
        return self._compiled


@dataclass
class CompiledLp:
    """Array form of a LinearProgram, ready for the HiGHS backend."""

    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    a_eq: sparse.csr_matrix | None
    b_eq: np.ndarray
    eq_names: list[str]
    a_ub: sparse.csr_matrix | None
    b_ub: np.ndarray
    ub_names: list[str]
    # +1 where the row came from a <= constraint, -1 where it came from >=
    # (>= rows are stored negated); restores the d(obj)/d(rhs) convention.
    ub_sign: np.ndarray
    var_names: list[str]


def _compile(program: LinearProgram) -> CompiledLp:
    n = program.n_variables
    c = np.zeros(n)
    for var, coef in program.objective.items():
        c[program.variable_index(var)] = coef
    lb = np.array([v.lb for v in program.variables], dtype=float)
    ub = np.array([v.ub for v in program.variables], dtype=float)

    eq_rows, eq_cols, eq_vals, b_eq, eq_names = [], [], [], [], []
    ub_rows, ub_cols, ub_vals, b_ub, ub_names, ub_sign = [], [], [], [], [], []
    for con in program.constraints:
        if con.sense == SENSE_EQ:
            row = len(b_eq)
            for var, coef in con.coeffs:
                eq_rows.append(row)
                eq_cols.append(program.variable_index(var))
                eq_vals.append(coef)
            b_eq.append(con.rhs)
            eq_names.append(con.name)
        else:
            sign = 1.0 if con.sense == SENSE_LE else -1.0
            row = len(b_ub)
            for var, coef in con.coeffs:
                ub_rows.append(row)
                ub_cols.append(program.variable_index(var))
                ub_vals.append(sign * coef)
            b_ub.append(sign * con.rhs)
            ub_names.append(con.name)
            ub_sign.append(sign)

    a_eq = None
    if b_eq:
        a_eq = sparse.csr_matrix(
            (eq_vals, (eq_rows, eq_cols)), shape=(len(b_eq), n)
        )
    a_ub = None
    if b_ub:
        a_ub = sparse.csr_matrix(
            (ub_vals, (ub_rows, ub_cols)), shape=(len(b_ub), n)
        )
    return CompiledLp(
        c=c,
        lb=lb,
        ub=ub,
        a_eq=a_eq,
        b_eq=np.asarray(b_eq, dtype=float),
        eq_names=eq_names,
        a_ub=a_ub,
        b_ub=np.asarray(b_ub, dtype=float),
        ub_names=ub_names,
        ub_sign=np.asarray(ub_sign, dtype=float),
        var_names=[v.name for v in program.variables],
    )


@dataclass
class LpSolution:
    status: str
    objective: float
    primal: dict[str, float] = field(default_factory=dict)
    duals: dict[str, float] = field(default_factory=dict)

    @property
    def is_optimal(self) -> bool:
        return self.status == STATUS_OPTIMAL


def solve_compiled(comp: CompiledLp, lb=None, ub=None, b_eq=None, b_ub=None):
    """Solve a compiled LP, optionally overriding bounds/rhs arrays.

    Returns (status, objective, x array, eq duals array, ub-row duals array
    in the d(obj)/d(rhs) convention). Raises LpSolveError when the backend
    cannot certify optimal/infeasible/unbounded.
    """
    lb = comp.lb if lb is None else lb
    ub = comp.ub if ub is None else ub
    res = linprog(
        comp.c,
        A_ub=comp.a_ub,
        b_ub=comp.b_ub if b_ub is None else b_ub,
        A_eq=comp.a_eq,
        b_eq=comp.b_eq if b_eq is None else b_eq,
        bounds=np.column_stack([lb, ub]),
        method="highs",
    )
    if res.status == 0:
        eq_duals = res.eqlin.marginals if comp.a_eq is not None else np.zeros(0)
        ub_duals = (
            res.ineqlin.marginals * comp.ub_sign
            if comp.a_ub is not None
            else np.zeros(0)
        )
        return STATUS_OPTIMAL, float(res.fun), res.x, eq_duals, ub_duals
    if res.status == 2:
        return STATUS_INFEASIBLE, math.nan, None, None, None
    if res.status == 3:
        return STATUS_UNBOUNDED, math.nan, None, None, None
    raise LpSolveError(f"solver did not converge (status {res.status}): {res.message}")


def solve(program: LinearProgram) -> LpSolution:
    """Solve the program; optimal solutions carry primal values and constraint duals."""
    comp = program.compiled()
    status, obj, x, eq_duals, ub_duals = solve_compiled(comp)
    if status != STATUS_OPTIMAL:
        return LpSolution(status=status, objective=math.nan)
    duals = dict(zip(comp.eq_names, eq_duals.tolist()))
    duals.update(zip(comp.ub_names, ub_duals.tolist()))
    return LpSolution(
        status=STATUS_OPTIMAL,
        objective=obj,
        primal=dict(zip(comp.var_names, x.tolist())),
        duals=duals,
    )


@dataclass
class CertificateReport:
    """Optimality diagnostics for a solved program."""

    max_primal_residual: float
    duality_gap: float
    max_complementarity: float
    passed: bool
    failures: list[str] = field(default_factory=list)


def check_certificate(program: LinearProgram, solution: LpSolution) -> CertificateReport:
    """Verify primal feasibility, duality gap, and complementary slackness.

    All three checks use TOLERANCE scaled by (1 + |objective|). The dual
    objective is evaluated from the constraint duals alone: reduced costs
    are recovered as c - A'y and priced at the variable bound they pin.
    """
    if not solution.is_optimal:
        raise LpError("certificate check requires an optimal solution")
    comp = program.compiled()
    x = np.array([solution.primal[v] for v in comp.var_names])
    scale = TOLERANCE * (1.0 + abs(solution.objective))
    failures = []

    max_resid = 0.0
    max_comp = 0.0
    y_full = np.zeros(len(comp.c))  # A'y accumulator
    dual_obj = 0.0
    if comp.a_eq is not None:
        resid = comp.a_eq @ x - comp.b_eq
        for name, r in zip(comp.eq_names, np.abs(resid)):
            if r > scale:
                failures.append(f"residual {name}: {r:.3e}")
        max_resid = max(max_resid, float(np.max(np.abs(resid))))
        y_eq = np.array([solution.duals[n] for n in comp.eq_names])
        y_full += comp.a_eq.T @ y_eq
        dual_obj += float(y_eq @ comp.b_eq)
    if comp.a_ub is not None:
        ax = comp.a_ub @ x
        resid = ax - comp.b_ub  # feasible when <= 0
        for name, r in zip(comp.ub_names, resid):
            if r > scale:
                failures.append(f"residual {name}: {r:.3e}")
        max_resid = max(max_resid, float(max(np.max(resid), 0.0)))
        # stored-row dual (for a_ub x <= b_ub) is sign * published dual
        y_pub = np.array([solution.duals[n] for n in comp.ub_names])
        y_row = y_pub * comp.ub_sign
        slack = comp.b_ub - ax
        comp_viol = np.abs(y_row * slack)
        for name, v in zip(comp.ub_names, comp_viol):
            if v > scale:
                failures.append(f"complementarity {name}: {v:.3e}")
        max_comp = float(np.max(comp_viol)) if len(comp_viol) else 0.0
        y_full += comp.a_ub.T @ y_row
        dual_obj += float(y_row @ comp.b_ub)

    # price reduced costs at the bound they would pin; a free variable with a
    # nonzero reduced cost makes the dual value -inf and fails the gap check
    reduced = comp.c - y_full
    eps = TOLERANCE * (1.0 + float(np.max(np.abs(comp.c))) if len(comp.c) else 1.0)
    for i, r in enumerate(reduced):
        if r > eps:
            bound = comp.lb[i]
        elif r < -eps:
            bound = comp.ub[i]
        else:
            continue
        if not math.isfinite(bound):
            failures.append(f"dual infeasible at variable {comp.var_names[i]}")
            dual_obj = -math.inf
        else:
            dual_obj += r * bound

    gap = abs(solution.objective - dual_obj)
    if gap > scale:
        failures.append(f"duality gap {gap:.3e}")
    passed = not failures
    return CertificateReport(
        max_primal_residual=max_resid,
        duality_gap=gap,
        max_complementarity=max_comp,
        passed=passed,
        failures=failures,
    )


def write_lp_format(program: LinearProgram, path) -> None:
    """Export in CPLEX LP text format for cross-checking with external solvers."""

    def term(var, coef, first):
        s = "" if (coef >= 0 and first) else ("+ " if coef >= 0 else "- ")
        return f"{s}{abs(coef)!r} {var} "

    lines = ["Minimize", " obj: "]
    first = True
    for var, coef in program.objective.items():
        lines[-1] += term(var, coef, first)
        first = False
    lines.append("Subject To")
    for con in program.constraints:
        expr = ""
        first = True
        for var, coef in con.coeffs:
            expr += term(var, coef, first)
            first = False
        lines.append(f" {con.name}: {expr}{con.sense} {con.rhs!r}")
    lines.append("Bounds")
    for v in program.variables:
        lo = "-inf" if v.lb == -math.inf else repr(v.lb)
        hi = "+inf" if v.ub == math.inf else repr(v.ub)
        lines.append(f" {lo} <= {v.name} <= {hi}")
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
