"""Round-by-round lifetime simulation and the planners it drives."""

from __future__ import annotations

import csv
import io
import logging
import math
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from .formulations import THREE_INDEX, TWO_INDEX, BuildConfig, restrict_candidates, solve_round
from .instance import NetworkInstance
from .milp import TIMEOUT_NO_SOLUTION, SolveConfig
from .plan import PlanValidationError, RoundPlan, plan_consumption, rescore, validate_plan

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("round", "e_min_before", "e_min_after", "avg_after", "planner", "solve_seconds")
# lifetime runs compare plans whose per-round cost is ~1e-3 J against
# objectives of tens of joules, so the default 0.1% gap is too coarse here
LIFETIME_GAP = 1e-5


class EnergyExhausted(ValueError):
    pass


@dataclass(frozen=True)
class PlannerOutcome:
    plan: RoundPlan | None
    seconds: float
    status: str = "ok"


class Planner(Protocol):
    name: str

    def __call__(self, instance: NetworkInstance) -> PlannerOutcome: ...


@dataclass
class MilpPlanner:
    formulation: str = TWO_INDEX
    alpha: float = 0.6
    percent: float | None = None
    solver: SolveConfig = field(default_factory=lambda: SolveConfig(gap_tolerance=LIFETIME_GAP))
    # formulation to try when the main one hits the time limit with no incumbent
    fallback: str | None = None

    @property
    def name(self) -> str:
        if self.percent is not None:
            return f"milp-heuristic({self.percent:g})"
        return f"milp-{self.formulation}"

    def __call__(self, instance: NetworkInstance) -> PlannerOutcome:
        cands = None if self.percent is None else restrict_candidates(instance, self.percent)
        build = BuildConfig(alpha=self.alpha, ch_candidates=cands)
        sol = solve_round(instance, self.formulation, build, self.solver)
        seconds = sol.build_seconds + sol.report.wall_time
        if sol.report.status == TIMEOUT_NO_SOLUTION and self.fallback and self.fallback != self.formulation:
            log.info("%s: no incumbent within the time limit, retrying with %s", self.name, self.fallback)
            sol = solve_round(instance, self.fallback, build, self.solver)
            seconds += sol.build_seconds + sol.report.wall_time
        return PlannerOutcome(sol.plan, seconds, sol.report.status)


@dataclass
class OraclePlanner:
    alpha: float = 0.6
    name: str = "oracle"

    def __call__(self, instance: NetworkInstance) -> PlannerOutcome:
        from .oracle import enumerate_optimal

        t0 = time.perf_counter()
        res = enumerate_optimal(instance, self.alpha)
        return PlannerOutcome(res.best_plan, time.perf_counter() - t0, "ok" if res.feasible else "infeasible")


@dataclass
class ChpPlanner:
    alpha: float = 0.6
    config: object | None = None
    name: str = "chp"

    def __call__(self, instance: NetworkInstance) -> PlannerOutcome:
        from .chp import ChpConfig, ChpInfeasible, plan_chp

        t0 = time.perf_counter()
        try:
            plan = plan_chp(instance, instance.fleet, self.config or ChpConfig(), alpha=self.alpha)
        except ChpInfeasible:
            return PlannerOutcome(None, time.perf_counter() - t0, "infeasible")
        return PlannerOutcome(plan, time.perf_counter() - t0)


_HEURISTIC_RE = re.compile(r"^milp-heuristic(?:\((?P<p>[0-9.]+)\))?$")


def make_planner(
    planner_id: str,
    alpha: float = 0.6,
    percent: float | None = None,
    solver: SolveConfig | None = None,
    formulation: str | None = None,
    chp_config=None,
) -> Planner:
    """Planner from an id: milp-2index, milp-3index, milp-heuristic(P), chp, oracle."""
    solver = solver or SolveConfig(gap_tolerance=LIFETIME_GAP)
    if planner_id in ("milp-2index", "milp-3index"):
        return MilpPlanner(planner_id.split("-")[1], alpha, percent, solver)
    m = _HEURISTIC_RE.match(planner_id)
    if m:
        p = float(m.group("p")) if m.group("p") else percent
        if p is None:
            raise ValueError("milp-heuristic needs a percentage, e.g. milp-heuristic(20)")
        form = formulation or THREE_INDEX
        other = TWO_INDEX if form == THREE_INDEX else THREE_INDEX
        return MilpPlanner(form, alpha, p, solver, fallback=other)
    if planner_id == "chp":
        return ChpPlanner(alpha, chp_config)
    if planner_id == "oracle":
        return OraclePlanner(alpha)
    raise ValueError(f"unknown planner {planner_id!r}")


def apply_round(instance: NetworkInstance, plan: RoundPlan) -> NetworkInstance:
    """Instance after executing ``plan``: every sensor pays its round consumption."""
    cons = plan_consumption(instance, plan.tree_edges, plan.cluster_heads)
    energies = {}
    for i, c in cons.items():
        left = instance.sensor(i).residual_energy - c.total_joules
        if left < -1e-9:
            raise EnergyExhausted(f"sensor {i} would end the round at {left!r} J")
        energies[i] = max(left, 0.0)
    return instance.with_energies(energies)


@dataclass(frozen=True)
class RoundRecord:
    round: int
    e_min_before: float
    e_min_after: float
    avg_after: float
    planner: str
    solve_seconds: float


@dataclass
class LifetimeTrace:
    planner: str
    records: list[RoundRecord] = field(default_factory=list)
    stop_reason: str = ""

    @property
    def lifetime_rounds(self) -> int:
        return len(self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.records:
            w.writerow([r.round, repr(r.e_min_before), repr(r.e_min_after), repr(r.avg_after), r.planner, f"{r.solve_seconds:.6f}"])
        return buf.getvalue()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def read_trace(path: str | Path) -> LifetimeTrace:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    trace = LifetimeTrace(rows[0]["planner"] if rows else "")
    for row in rows:
        trace.records.append(
            RoundRecord(
                int(row["round"]),
                float(row["e_min_before"]),
                float(row["e_min_after"]),
                float(row["avg_after"]),
                row["planner"],
                float(row["solve_seconds"]),
            )
        )
    return trace


def run_lifetime(
    instance: NetworkInstance,
    planner: Planner | Callable[[NetworkInstance], PlannerOutcome],
    max_rounds: int = 100_000,
    on_round: Callable[[RoundRecord], None] | None = None,
) -> LifetimeTrace:
    """Plan, validate and apply rounds until the first sensor would run dry.

    The loop ends when the planner finds no feasible plan, when its plan would
    drive a sensor below zero, or after ``max_rounds``. A planner error or an
    invalid plan ends the run too; the partial trace is returned with the
    reason in ``stop_reason``.
    """
    name = getattr(planner, "name", "planner")
    trace = LifetimeTrace(name)
    state = instance
    for k in range(1, max_rounds + 1):
        before = min(state.energies().values(), default=0.0)
        try:
            outcome = planner(state)
        except Exception as exc:  # noqa: BLE001 - any planner failure ends the run
            log.warning("planner %s failed in round %d: %s", name, k, exc)
            trace.stop_reason = f"error: {exc}"
            return trace
        if outcome.plan is None:
            trace.stop_reason = outcome.status
            return trace
        after = rescore(state, outcome.plan.tree_edges, outcome.plan.cluster_heads)
        if min(after.values(), default=0.0) < 0:
            trace.stop_reason = "exhausted"
            return trace
        problems = validate_plan(state, outcome.plan)
        if problems:
            log.warning("planner %s produced an invalid plan in round %d: %s", name, k, problems)
            trace.stop_reason = "error: " + str(PlanValidationError(problems))
            return trace
        state = apply_round(state, outcome.plan)
        energies = state.energies().values()
        rec = RoundRecord(k, before, min(energies, default=0.0), math.fsum(energies) / max(len(energies), 1), name, outcome.seconds)
        trace.records.append(rec)
        if on_round:
            on_round(rec)
    trace.stop_reason = "max_rounds"
    return trace


__all__ = [
    "ChpPlanner",
    "EnergyExhausted",
    "LifetimeTrace",
    "MilpPlanner",
    "OraclePlanner",
    "PlannerOutcome",
    "RoundRecord",
    "THREE_INDEX",
    "TWO_INDEX",
    "apply_round",
    "make_planner",
    "read_trace",
    "run_lifetime",
    "validate_plan",
]
