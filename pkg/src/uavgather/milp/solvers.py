"""Solve contract and backend adapters.

Every backend turns a :class:`LinearModel` into a :class:`SolveReport`.
Three transports are provided:

``highs``
    in-process HiGHS through :func:`scipy.optimize.milp` (default).
``highspy``
    in-process HiGHS reading the exported LP document, so it also exercises
    the writer.
``highs-cli``
    an external ``highs`` executable exchanging the LP document and a
    solution file. The executable is looked up in ``$UAVGATHER_HIGHS_PATH``
    and then on ``$PATH``.
"""

from __future__ import annotations

import math
import os
import re
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from .lpformat import export_model
from .model import BINARY, EQ, GE, INTEGRALITY_TOL, LE, LinearModel, check_assignment

OPTIMAL = "optimal"
FEASIBLE_GAP = "feasible_gap"
INFEASIBLE = "infeasible"
TIMEOUT_NO_SOLUTION = "timeout_no_solution"
ERROR = "error"

SOLVER_PATH_ENV = "UAVGATHER_HIGHS_PATH"
# grace period on top of the time limit before an external solver is killed
EXTERNAL_SLACK_S = 30.0


@dataclass(frozen=True)
class SolveConfig:
    gap_tolerance: float = 0.001
    time_limit: float = 1800.0
    backend: str = "highs"

    def __post_init__(self):
        if not self.gap_tolerance >= 0:
            raise ValueError("gap_tolerance must be >= 0")
        if not self.time_limit > 0:
            raise ValueError("time_limit must be > 0")


@dataclass(frozen=True)
class SolveReport:
    status: str
    objective_value: float = math.nan
    mip_gap: float = math.nan
    wall_time: float = 0.0
    assignment: dict[str, float] | None = field(default=None, repr=False)
    message: str = ""

    @property
    def has_solution(self) -> bool:
        return self.status in (OPTIMAL, FEASIBLE_GAP)


def _normalize(model: LinearModel, raw: dict[str, float], status: str, gap: float, wall: float, msg: str = ""):
    """Round binaries, re-check every row and build the report."""
    assignment = {}
    for v in model.variables:
        x = float(raw.get(v.name, 0.0))
        if v.kind == BINARY:
            r = round(x)
            if abs(x - r) > INTEGRALITY_TOL:
                return SolveReport(ERROR, wall_time=wall, message=f"{v.name}={x} is not within tolerance of 0/1")
            x = float(r)
        assignment[v.name] = x
    problems = check_assignment(model, assignment)
    if problems:
        shown = "; ".join(problems[:5])
        return SolveReport(ERROR, wall_time=wall, message=f"solver assignment fails re-check: {shown}")
    return SolveReport(status, model.objective_value(assignment), gap, wall, assignment, msg)


def _solve_scipy(model: LinearModel, config: SolveConfig) -> SolveReport:
    nv = len(model.variables)
    index = {v.name: v.index for v in model.variables}
    sign = -1.0 if model.sense == "maximize" else 1.0
    c = np.zeros(nv)
    for name, coef in model.objective:
        c[index[name]] = sign * coef
    rows, cols, vals, lo, hi = [], [], [], [], []
    for k, con in enumerate(model.constraints):
        for name, coef in con.terms:
            rows.append(k)
            cols.append(index[name])
            vals.append(coef)
        lo.append(-np.inf if con.sense == LE else con.rhs)
        hi.append(np.inf if con.sense == GE else con.rhs)
    integrality = np.array([1 if v.kind == BINARY else 0 for v in model.variables])
    bounds = Bounds([v.lb for v in model.variables], [v.ub for v in model.variables])
    constraints = []
    if model.constraints:
        A = sparse.csr_array((vals, (rows, cols)), shape=(len(model.constraints), nv))
        constraints.append(LinearConstraint(A, lo, hi))
    t0 = time.perf_counter()
    if nv == 0:
        wall = time.perf_counter() - t0
        infeasible = any(
            (con.sense == LE and 0 > con.rhs) or (con.sense == GE and 0 < con.rhs) or (con.sense == EQ and con.rhs != 0)
            for con in model.constraints
        )
        if infeasible:
            return SolveReport(INFEASIBLE, wall_time=wall)
        return SolveReport(OPTIMAL, 0.0, 0.0, wall, {})
    res = milp(
        c,
        integrality=integrality,
        bounds=bounds,
        constraints=constraints,
        options={"time_limit": config.time_limit, "mip_rel_gap": config.gap_tolerance, "disp": False},
    )
    wall = time.perf_counter() - t0
    if res.status == 2:
        return SolveReport(INFEASIBLE, wall_time=wall, message=res.message)
    if res.x is None:
        if res.status == 1:
            return SolveReport(TIMEOUT_NO_SOLUTION, wall_time=wall, message=res.message)
        return SolveReport(ERROR, wall_time=wall, message=res.message)
    gap = float(getattr(res, "mip_gap", 0.0) or 0.0)
    status = OPTIMAL if res.status == 0 else FEASIBLE_GAP
    raw = {v.name: res.x[v.index] for v in model.variables}
    return _normalize(model, raw, status, gap, wall, res.message)


_HIGHS_STATUS = {
    "Optimal": OPTIMAL,
    "Infeasible": INFEASIBLE,
    "Time limit reached": FEASIBLE_GAP,
}


def _solve_highspy(model: LinearModel, config: SolveConfig) -> SolveReport:
    try:
        import highspy
    except ImportError as exc:
        return SolveReport(ERROR, message=f"backend highspy unavailable: {exc}")
    with tempfile.TemporaryDirectory() as tmp:
        lp = Path(tmp) / "model.lp"
        lp.write_text(export_model(model))
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("mip_rel_gap", config.gap_tolerance)
        h.setOptionValue("time_limit", float(config.time_limit))
        if h.readModel(str(lp)) != highspy.HighsStatus.kOk:
            return SolveReport(ERROR, message="HiGHS could not read the exported LP document")
        t0 = time.perf_counter()
        h.run()
        wall = time.perf_counter() - t0
    status = h.modelStatusToString(h.getModelStatus())
    info = h.getInfo()
    has_primal = info.primal_solution_status == 2
    if status == "Infeasible":
        return SolveReport(INFEASIBLE, wall_time=wall)
    if not has_primal:
        kind = TIMEOUT_NO_SOLUTION if status == "Time limit reached" else ERROR
        return SolveReport(kind, wall_time=wall, message=status)
    names = h.getLp().col_names_
    values = h.getSolution().col_value
    raw = dict(zip(names, values))
    gap = float(info.mip_gap) if model_has_integers(model) else 0.0
    return _normalize(model, raw, _HIGHS_STATUS.get(status, FEASIBLE_GAP), gap, wall, status)


def model_has_integers(model: LinearModel) -> bool:
    return any(v.kind == BINARY for v in model.variables)


def find_highs_executable() -> str | None:
    path = os.environ.get(SOLVER_PATH_ENV)
    if path:
        return path
    return shutil.which("highs")


_GAP_RE = re.compile(r"^\s*Gap\s+([-+0-9.eE]+)%", re.MULTILINE)


def parse_highs_solution(text: str) -> tuple[str, dict[str, float] | None]:
    """Model status and primal column values from a HiGHS solution file."""
    lines = text.splitlines()
    status = ""
    values = None
    for k, line in enumerate(lines):
        if line.strip() == "Model status" and k + 1 < len(lines):
            status = lines[k + 1].strip()
        if line.startswith("# Primal solution values"):
            if k + 1 < len(lines) and lines[k + 1].strip() != "Feasible":
                break
        if line.startswith("# Columns"):
            count = int(line.split()[2])
            values = {}
            for entry in lines[k + 1 : k + 1 + count]:
                name, val = entry.rsplit(maxsplit=1)
                values[name] = float(val)
            break
    if not status:
        raise ValueError("solution file has no model status")
    return status, values


def _solve_cli(model: LinearModel, config: SolveConfig) -> SolveReport:
    exe = find_highs_executable()
    if exe is None:
        return SolveReport(ERROR, message=f"highs executable not found; set ${SOLVER_PATH_ENV}")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        (tmp / "model.lp").write_text(export_model(model))
        (tmp / "options.txt").write_text(
            f"mip_rel_gap = {config.gap_tolerance!r}\ntime_limit = {float(config.time_limit)!r}\n"
        )
        cmd = [
            exe,
            "--model_file", str(tmp / "model.lp"),
            "--solution_file", str(tmp / "model.sol"),
            "--options_file", str(tmp / "options.txt"),
        ]
        t0 = time.perf_counter()
        try:
            proc = subprocess.run(
                cmd, capture_output=True, text=True, timeout=config.time_limit + EXTERNAL_SLACK_S
            )
        except subprocess.TimeoutExpired:
            return SolveReport(TIMEOUT_NO_SOLUTION, wall_time=time.perf_counter() - t0, message="external solver killed")
        except OSError as exc:
            return SolveReport(ERROR, message=f"cannot run {exe}: {exc}")
        wall = time.perf_counter() - t0
        sol = tmp / "model.sol"
        if proc.returncode != 0 or not sol.exists():
            return SolveReport(ERROR, wall_time=wall, message=f"{exe} exited {proc.returncode}: {proc.stderr.strip()}")
        try:
            status, values = parse_highs_solution(sol.read_text())
        except (ValueError, IndexError) as exc:
            return SolveReport(ERROR, wall_time=wall, message=f"malformed solution file: {exc}")
    if status == "Infeasible":
        return SolveReport(INFEASIBLE, wall_time=wall)
    if values is None:
        kind = TIMEOUT_NO_SOLUTION if status == "Time limit reached" else ERROR
        return SolveReport(kind, wall_time=wall, message=status)
    m = _GAP_RE.search(proc.stdout)
    if m:
        gap = float(m.group(1)) / 100.0
    else:
        gap = 0.0 if status == "Optimal" else math.nan
    return _normalize(model, values, _HIGHS_STATUS.get(status, FEASIBLE_GAP), gap, wall, status)


BACKENDS: dict[str, Callable[[LinearModel, SolveConfig], SolveReport]] = {
    "highs": _solve_scipy,
    "highspy": _solve_highspy,
    "highs-cli": _solve_cli,
}


def solve(model: LinearModel, config: SolveConfig | None = None) -> SolveReport:
    config = config or SolveConfig()
    backend = BACKENDS.get(config.backend)
    if backend is None:
        return SolveReport(ERROR, message=f"unknown backend {config.backend!r}; choose from {sorted(BACKENDS)}")
    return backend(model, config)
