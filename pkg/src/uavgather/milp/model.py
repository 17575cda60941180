"""Solver-agnostic linear model with an independent feasibility checker."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

BINARY = "binary"
CONTINUOUS = "continuous"

LE, EQ, GE = "<=", "=", ">="
SENSES = (LE, EQ, GE)

# names must be legal identifiers in the LP text format
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]{0,254}$")

CHECK_TOL = 1e-6
INTEGRALITY_TOL = 1e-6


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lb: float
    ub: float
    index: int


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[str, float], ...]
    sense: str
    rhs: float


def _check_name(name: str) -> None:
    if not _NAME_RE.match(name):
        raise ModelError(f"illegal name for the LP format: {name!r}")


class LinearModel:
    """A MILP: variables with bounds, linear rows and a linear objective.

    Terms are given as ``{var_name: coefficient}`` mappings or iterables of
    ``(var_name, coefficient)`` pairs; repeated names are summed.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: tuple[tuple[str, float], ...] = ()
        self.sense = "maximize"
        self._vars: dict[str, Variable] = {}
        self._rows: set[str] = set()

    def __contains__(self, name: str) -> bool:
        return name in self._vars

    def var(self, name: str) -> Variable:
        return self._vars[name]

    def add_var(self, name: str, kind: str = CONTINUOUS, lb: float = 0.0, ub: float = math.inf) -> str:
        _check_name(name)
        if name in self._vars:
            raise ModelError(f"duplicate variable {name}")
        if kind not in (BINARY, CONTINUOUS):
            raise ModelError(f"unknown variable kind {kind}")
        if kind == BINARY:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if lb > ub:
            raise ModelError(f"{name}: lower bound {lb} exceeds upper bound {ub}")
        v = Variable(name, kind, float(lb), float(ub), len(self.variables))
        self.variables.append(v)
        self._vars[name] = v
        return name

    def _collect(self, terms) -> tuple[tuple[str, float], ...]:
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[str, float] = {}
        for name, coef in items:
            if name not in self._vars:
                raise ModelError(f"unknown variable {name}")
            acc[name] = acc.get(name, 0.0) + float(coef)
        return tuple((k, c) for k, c in acc.items() if c != 0.0)

    def add_constraint(self, terms, sense: str, rhs: float, name: str | None = None) -> str:
        if sense not in SENSES:
            raise ModelError(f"unknown sense {sense}")
        name = name or f"c{len(self.constraints) + 1}"
        _check_name(name)
        if name in self._rows:
            raise ModelError(f"duplicate constraint {name}")
        row = self._collect(terms)
        self.constraints.append(Constraint(name, row, sense, float(rhs)))
        self._rows.add(name)
        return name

    def set_objective(self, terms, sense: str = "maximize") -> None:
        if sense not in ("maximize", "minimize"):
            raise ModelError(f"unknown objective sense {sense}")
        self.objective = self._collect(terms)
        self.sense = sense

    def copy(self) -> "LinearModel":
        other = LinearModel(self.name)
        other.variables = list(self.variables)
        other.constraints = list(self.constraints)
        other.objective = self.objective
        other.sense = self.sense
        other._vars = dict(self._vars)
        other._rows = set(self._rows)
        return other

    def fix(self, values: Mapping[str, float]) -> "LinearModel":
        """Copy of the model with the named variables fixed to ``values``."""
        other = self.copy()
        for name, val in values.items():
            v = other._vars[name]
            fixed = Variable(v.name, v.kind, float(val), float(val), v.index)
            other.variables[v.index] = fixed
            other._vars[name] = fixed
        return other

    def evaluate(self, terms: Iterable[tuple[str, float]], assignment: Mapping[str, float]) -> float:
        return math.fsum(c * assignment[n] for n, c in terms)

    def objective_value(self, assignment: Mapping[str, float]) -> float:
        return self.evaluate(self.objective, assignment)


@dataclass(frozen=True)
class ModelStats:
    variables: int
    binaries: int
    constraints: int


def model_stats(model: LinearModel) -> ModelStats:
    binaries = sum(1 for v in model.variables if v.kind == BINARY)
    return ModelStats(len(model.variables), binaries, len(model.constraints))


def check_assignment(model: LinearModel, assignment: Mapping[str, float], tol: float = CHECK_TOL) -> list[str]:
    """Every bound, integrality and row violation of ``assignment``, as messages."""
    problems = []
    for v in model.variables:
        if v.name not in assignment:
            problems.append(f"{v.name}: missing from assignment")
            continue
        x = assignment[v.name]
        if x < v.lb - tol or x > v.ub + tol:
            problems.append(f"{v.name}={x} outside [{v.lb}, {v.ub}]")
        if v.kind == BINARY and abs(x - round(x)) > INTEGRALITY_TOL:
            problems.append(f"{v.name}={x} not integral")
    if problems:
        return problems
    for c in model.constraints:
        lhs = model.evaluate(c.terms, assignment)
        if c.sense == LE and lhs > c.rhs + tol:
            problems.append(f"{c.name}: {lhs} <= {c.rhs} violated")
        elif c.sense == GE and lhs < c.rhs - tol:
            problems.append(f"{c.name}: {lhs} >= {c.rhs} violated")
        elif c.sense == EQ and abs(lhs - c.rhs) > tol:
            problems.append(f"{c.name}: {lhs} = {c.rhs} violated")
    return problems
