"""MILP models of the joint clustering / multi-UAV tour problem.

Variable naming (all indices are node ids, sink = 0):

* ``x_i_j``   tree edge, sensor i forwards to parent j
* ``r_i_j``   tour edge, a UAV flies from i to j
* ``e_i``, ``e_min``  residual energies after the round
* ``Bn_i``, ``Be_i_j``, ``L_i``  relayed and edge data in kilobits, arrival length (2-index)
* ``f_k_i_j``, ``g_k_i_j``  flow of commodity k and its intra-cluster part (3-index)

With ``prune=True`` (default) variables that the model forces to zero are
never created: out-of-range tree edges, tour edges touching non-candidates,
and flows on arcs that carry neither a tree nor a tour edge. With
``prune=False`` every index pair is declared, out-of-range ``x`` being fixed
to zero through its bounds, which reproduces the textbook variable counts.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .energy import tx_per_bit, uav_tx_per_bit
from .instance import SINK, NetworkInstance
from .milp import BINARY, EQ, GE, LE, LinearModel, SolveConfig, SolveReport, solve
from .plan import PlanValidationError, RoundPlan, structural_violations

TWO_INDEX = "2index"
THREE_INDEX = "3index"

# Bn/Be columns count kilobits; keeps bit rows near unit scale for the 1e-6 re-check
DATA_UNIT = 1000.0


@dataclass(frozen=True)
class BigM:
    """Per-constraint big-M constants; ``None`` means derive from the instance."""

    data: float | None = None
    energy: float | None = None
    length: float | None = None


@dataclass(frozen=True)
class BuildConfig:
    alpha: float = 0.6
    ch_candidates: frozenset[int] | None = None
    big_m: BigM = field(default_factory=BigM)
    prune: bool = True

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.ch_candidates is not None:
            object.__setattr__(self, "ch_candidates", frozenset(self.ch_candidates))


@dataclass
class VariableMap:
    formulation: str
    alpha: float
    candidates: frozenset[int]
    x: dict[tuple[int, int], str] = field(default_factory=dict)
    r: dict[tuple[int, int], str] = field(default_factory=dict)
    e: dict[int, str] = field(default_factory=dict)
    e_min: str = "e_min"
    bn: dict[int, str] = field(default_factory=dict)
    be: dict[tuple[int, int], str] = field(default_factory=dict)
    L: dict[int, str] = field(default_factory=dict)
    f: dict[tuple[int, int, int], str] = field(default_factory=dict)
    g: dict[tuple[int, int, int], str] = field(default_factory=dict)

    def binaries(self) -> list[str]:
        return list(self.x.values()) + list(self.r.values())


def default_big_m(instance: NetworkInstance) -> BigM:
    bits = sum(instance.data_loads().values())
    e_max = max((s.residual_energy for s in instance.sensors), default=0.0)
    per_bit = instance.radio.e_elec + uav_tx_per_bit(instance.radio, instance.fleet)
    d = instance.distance_matrix()
    return BigM(
        data=float(bits),
        energy=e_max + per_bit * bits,
        length=instance.fleet.max_tour_length + float(d.max(initial=0.0)),
    )


def _resolve_big_m(instance: NetworkInstance, override: BigM) -> BigM:
    base = default_big_m(instance)
    return BigM(
        data=base.data if override.data is None else override.data,
        energy=base.energy if override.energy is None else override.energy,
        length=base.length if override.length is None else override.length,
    )


def restrict_candidates(instance: NetworkInstance, percent: float) -> frozenset[int]:
    """Ids of the ceil(P% of n) sensors with the most residual energy (ties: lower id)."""
    if not 0 < percent <= 100:
        raise ValueError(f"percent must lie in (0, 100], got {percent}")
    count = math.ceil(Fraction(str(percent)) * instance.n / 100)
    ranked = sorted(instance.sensors, key=lambda s: (-s.residual_energy, s.id))
    return frozenset(s.id for s in ranked[:count])


def build_base(instance: NetworkInstance, config: BuildConfig | None = None) -> tuple[LinearModel, VariableMap]:
    """Objective and the constraints shared by both formulations."""
    config = config or BuildConfig()
    n = instance.n
    sensors = list(instance.sensor_ids)
    cands = frozenset(sensors) if config.ch_candidates is None else config.ch_candidates
    if not cands:
        raise ValueError("the cluster-head candidate set is empty")
    if not cands <= set(sensors):
        raise ValueError(f"candidates {sorted(cands - set(sensors))} are not sensor ids")
    model = LinearModel("uav_gathering")
    vm = VariableMap("base", config.alpha, cands)
    R = instance.radio.comm_range
    dist = instance.distance_matrix()

    for i in sensors:
        for j in sensors:
            if i == j:
                continue
            in_range = dist[i, j] <= R
            if in_range or not config.prune:
                vm.x[i, j] = model.add_var(f"x_{i}_{j}", BINARY, 0.0, 1.0 if in_range else 0.0)
    tour_nodes = [SINK] + sorted(cands)
    for i in tour_nodes:
        for j in tour_nodes:
            if i != j:
                vm.r[i, j] = model.add_var(f"r_{i}_{j}", BINARY)
    for i in sensors:
        vm.e[i] = model.add_var(f"e_{i}", lb=0.0, ub=instance.sensor(i).residual_energy)
    model.add_var(vm.e_min, lb=0.0)

    obj = {vm.e_min: config.alpha}
    for i in sensors:
        obj[vm.e[i]] = (1.0 - config.alpha) / n
    model.set_objective(obj, "maximize")

    out_x = _by_tail(vm.x)
    out_r, in_r = _by_tail(vm.r), _by_head(vm.r)
    for i in sensors:
        terms = [(v, 1.0) for v in out_x.get(i, [])] + [(v, 1.0) for v in out_r.get(i, [])]
        model.add_constraint(terms, EQ, 1.0, f"B1_{i}")
    for i in sorted(cands):
        terms = [(v, 1.0) for v in out_r.get(i, [])] + [(v, -1.0) for v in in_r.get(i, [])]
        model.add_constraint(terms, EQ, 0.0, f"B2_{i}")
    model.add_constraint([(v, 1.0) for v in out_r.get(SINK, [])], LE, instance.fleet.uav_count, "B3")
    for i in sensors:
        model.add_constraint({vm.e[i]: 1.0, vm.e_min: -1.0}, GE, 0.0, f"B6_{i}")
    return model, vm


def _by_tail(arcs: dict) -> dict[int, list[str]]:
    out: dict[int, list[str]] = {}
    for (i, _j), name in arcs.items():
        out.setdefault(i, []).append(name)
    return out


def _by_head(arcs: dict) -> dict[int, list[str]]:
    out: dict[int, list[str]] = {}
    for (_i, j), name in arcs.items():
        out.setdefault(j, []).append(name)
    return out


def build_2index(instance: NetworkInstance, config: BuildConfig | None = None) -> tuple[LinearModel, VariableMap]:
    """Base model plus bit-count and arrival-length variables linked by big-M rows."""
    config = config or BuildConfig()
    model, vm = build_base(instance, config)
    vm.formulation = TWO_INDEX
    M = _resolve_big_m(instance, config.big_m)
    radio, fleet = instance.radio, instance.fleet
    e_rx = radio.e_elec
    e_uav = uav_tx_per_bit(radio, fleet)
    bits = {i: b / DATA_UNIT for i, b in instance.data_loads().items()}
    m_data = M.data / DATA_UNIT
    sensors = list(instance.sensor_ids)
    dist = instance.distance_matrix()
    # tree-side columns exist for every sensor; tour-side ones only where a tour can reach
    tour_side = sensors if not config.prune else sorted(vm.candidates)

    for i in sensors:
        vm.bn[i] = model.add_var(f"Bn_{i}")
    for (i, j) in vm.x:
        vm.be[i, j] = model.add_var(f"Be_{i}_{j}")
    for i in tour_side:
        # bits handed to the UAV when i is a cluster head
        vm.be[i, SINK] = model.add_var(f"Be_{i}_{SINK}")
    for i in tour_side:
        vm.L[i] = model.add_var(f"L_{i}", lb=0.0, ub=fleet.max_tour_length)

    into: dict[int, list[str]] = {}
    for (i, j), name in vm.be.items():
        if j != SINK:
            into.setdefault(j, []).append(name)
    for i in sensors:
        terms = [(v, 1.0) for v in into.get(i, [])] + [(vm.bn[i], -1.0)]
        model.add_constraint(terms, EQ, 0.0, f"F1_1_{i}")
    for (i, j), xname in vm.x.items():
        terms = {vm.bn[i]: 1.0, vm.be[i, j]: -1.0, xname: m_data}
        model.add_constraint(terms, LE, m_data - bits[i], f"F1_2_{i}_{j}")
    out_r = _by_tail(vm.r)
    for i in tour_side:
        terms = [(vm.bn[i], 1.0), (vm.be[i, SINK], -1.0)] + [(v, m_data) for v in out_r.get(i, [])]
        model.add_constraint(terms, LE, m_data - bits[i], f"F1_up_{i}")
    for i in sensors:
        terms = [(vm.e[i], 1.0), (vm.bn[i], e_rx * DATA_UNIT)]
        terms += [(vm.be[i, j], tx_per_bit(dist[i, j], radio) * DATA_UNIT) for (a, j) in vm.x if a == i]
        model.add_constraint(terms, LE, instance.sensor(i).residual_energy, f"F1_3_{i}")
    for i in sorted(vm.candidates):
        terms = [(vm.e[i], 1.0), (vm.bn[i], (e_rx + e_uav) * DATA_UNIT)] + [(v, M.energy) for v in out_r.get(i, [])]
        rhs = instance.sensor(i).residual_energy - e_uav * bits[i] * DATA_UNIT + M.energy
        model.add_constraint(terms, LE, rhs, f"F1_4_{i}")
    for (i, j), rname in vm.r.items():
        if j == SINK:
            continue
        terms = [(vm.L[j], -1.0), (rname, M.length)]
        if i != SINK:
            terms.append((vm.L[i], 1.0))
        model.add_constraint(terms, LE, M.length - dist[i, j], f"F1_5_{i}_{j}")
    for i in sorted(vm.candidates):
        terms = [(vm.L[i], 1.0), (vm.r[i, SINK], dist[i, SINK])]
        model.add_constraint(terms, LE, fleet.max_tour_length, f"F1_6_{i}")
    return model, vm


def build_3index(instance: NetworkInstance, config: BuildConfig | None = None) -> tuple[LinearModel, VariableMap]:
    """Base model plus one unit flow per sensor towards the sink (no big-M)."""
    config = config or BuildConfig()
    model, vm = build_base(instance, config)
    vm.formulation = THREE_INDEX
    radio, fleet = instance.radio, instance.fleet
    e_rx = radio.e_elec
    e_uav = uav_tx_per_bit(radio, fleet)
    bits = instance.data_loads()
    sensors = list(instance.sensor_ids)
    dist = instance.distance_matrix()

    if config.prune:
        arcs = sorted({a for a in vm.x} | {a for a in vm.r if a[0] != SINK})
        intra = sorted(vm.x)
    else:
        arcs = [(i, j) for i in sensors for j in instance.node_ids if i != j]
        intra = arcs
    intra_set = set(intra)

    for k in sensors:
        for (i, j) in arcs:
            vm.f[k, i, j] = model.add_var(f"f_{k}_{i}_{j}", lb=0.0, ub=1.0)
        for (i, j) in intra:
            vm.g[k, i, j] = model.add_var(f"g_{k}_{i}_{j}", lb=0.0, ub=1.0)

    for k in sensors:
        for (i, j) in arcs:
            terms = [(vm.f[k, i, j], 1.0)]
            if (i, j) in vm.x:
                terms.append((vm.x[i, j], -1.0))
            if (i, j) in vm.r:
                terms.append((vm.r[i, j], -1.0))
            model.add_constraint(terms, LE, 0.0, f"F2_1_{k}_{i}_{j}")

    out_arcs: dict[int, list[tuple[int, int]]] = {}
    in_arcs: dict[int, list[tuple[int, int]]] = {}
    for a in arcs:
        out_arcs.setdefault(a[0], []).append(a)
        in_arcs.setdefault(a[1], []).append(a)
    for k in sensors:
        # no flow leaves the sink, so its balance is just the inflow
        terms = [(vm.f[k, i, j], -1.0) for (i, j) in in_arcs.get(SINK, [])]
        model.add_constraint(terms, EQ, -1.0, f"F2_2_{k}")
        for i in sensors:
            terms = [(vm.f[k, a, b], 1.0) for (a, b) in out_arcs.get(i, [])]
            terms += [(vm.f[k, a, b], -1.0) for (a, b) in in_arcs.get(i, [])]
            if i == k:
                model.add_constraint(terms, EQ, 1.0, f"F2_3_{k}")
            else:
                model.add_constraint(terms, EQ, 0.0, f"F2_4_{k}_{i}")

    for k in sensors:
        for (i, j) in intra:
            g, f = vm.g[k, i, j], vm.f[k, i, j]
            r = vm.r.get((i, j))
            model.add_constraint({g: 1.0, f: -1.0}, LE, 0.0, f"F2_6_{k}_{i}_{j}")
            if r is None:
                model.add_constraint({g: 1.0, f: -1.0}, GE, 0.0, f"F2_7_{k}_{i}_{j}")
            else:
                model.add_constraint({g: 1.0, f: -1.0, r: 1.0}, GE, 0.0, f"F2_7_{k}_{i}_{j}")
                model.add_constraint({g: 1.0, r: 1.0}, LE, 1.0, f"F2_8_{k}_{i}_{j}")

    intra_out: dict[int, list[tuple[int, int]]] = {}
    intra_in: dict[int, list[tuple[int, int]]] = {}
    for a in intra:
        intra_out.setdefault(a[0], []).append(a)
        intra_in.setdefault(a[1], []).append(a)
    for i in sensors:
        terms = [(vm.e[i], 1.0)]
        for (a, b) in intra_in.get(i, []):
            terms += [(vm.g[k, a, b], e_rx * bits[k]) for k in sensors]
        for (a, b) in intra_out.get(i, []):
            per_bit = tx_per_bit(dist[a, b], radio)
            terms += [(vm.g[k, a, b], per_bit * bits[k]) for k in sensors]
        model.add_constraint(terms, LE, instance.sensor(i).residual_energy, f"F2_10_{i}")
    out_r = _by_tail(vm.r)
    for i in sorted(vm.candidates):
        terms = [(vm.e[i], 1.0)]
        for (a, b) in intra_in.get(i, []):
            terms += [(vm.g[k, a, b], (e_rx + e_uav) * bits[k]) for k in sensors if k != i]
        for (a, b) in intra_out.get(i, []):
            terms += [(vm.g[k, a, b], -(e_rx + e_uav) * bits[k]) for k in sensors if k != i]
        terms += [(v, e_uav * bits[i]) for v in out_r.get(i, [])]
        model.add_constraint(terms, LE, instance.sensor(i).residual_energy, f"F2_11_{i}")

    for k in sensors:
        # sink->k leg when k heads a cluster, plus the UAV-carried suffix of commodity k
        terms = [(v, dist[SINK, k]) for v in out_r.get(k, [])]
        for (i, j) in arcs:
            terms.append((vm.f[k, i, j], dist[i, j]))
            if (i, j) in intra_set:
                terms.append((vm.g[k, i, j], -dist[i, j]))
        model.add_constraint(terms, LE, fleet.max_tour_length, f"F2_12_{k}")
    return model, vm


BUILDERS = {TWO_INDEX: build_2index, THREE_INDEX: build_3index}


def _decode_tours(vm: VariableMap, assignment) -> tuple[list[tuple[int, ...]], list[str]]:
    succ: dict[int, list[int]] = {}
    for (i, j), name in vm.r.items():
        if assignment[name] > 0.5:
            succ.setdefault(i, []).append(j)
    problems = []
    tours = []
    visited: set[int] = set()
    for start in sorted(succ.get(SINK, [])):
        tour = [SINK, start]
        v = start
        while v != SINK:
            nxt = succ.get(v, [])
            if len(nxt) != 1:
                problems.append(f"tour through {v} has {len(nxt)} successors")
                break
            v = nxt[0]
            if v != SINK and v in tour:
                problems.append(f"tour revisits sensor {v}")
                break
            tour.append(v)
        else:
            tours.append(tuple(tour))
            visited.update(tour[1:-1])
    stray = sorted(set(succ) - visited - {SINK})
    if stray:
        problems.append(f"subtour not through the sink: sensors {stray}")
    return tours, problems


def extract_plan(instance: NetworkInstance, vm: VariableMap, report: SolveReport) -> RoundPlan:
    """Decode a solved assignment into a :class:`RoundPlan`.

    Raises :class:`PlanValidationError` when the assignment does not describe
    a forest plus sink-anchored tours, or when the objective recomputed from
    the energies disagrees with the reported one.
    """
    if report.assignment is None:
        raise ValueError(f"solve report has no assignment (status {report.status})")
    a = report.assignment
    tree = frozenset(edge for edge, name in vm.x.items() if a[name] > 0.5)
    tours, problems = _decode_tours(vm, a)
    problems += structural_violations(instance, tree, tours)
    energies = {i: a[name] for i, name in vm.e.items()}
    e_min = a[vm.e_min]
    f = vm.alpha * e_min + (1.0 - vm.alpha) * math.fsum(energies.values()) / max(len(energies), 1)
    if abs(f - report.objective_value) > 1e-6:
        problems.append(f"objective mismatch: recomputed {f!r} vs solver {report.objective_value!r}")
    if problems:
        raise PlanValidationError(problems)
    if vm.bn:
        relayed = {i: a[name] * DATA_UNIT for i, name in vm.bn.items()}
    else:
        bits = instance.data_loads()
        relayed = {i: 0.0 for i in instance.sensor_ids}
        for (k, i, j), name in vm.g.items():
            if j in relayed and k != j:
                relayed[j] += bits[k] * a[name]
    return RoundPlan(tree, tuple(tours), energies, e_min, f, relayed)


@dataclass
class RoundSolution:
    model: LinearModel
    variables: VariableMap
    report: SolveReport
    plan: RoundPlan | None
    build_seconds: float


def polish(model: LinearModel, vm: VariableMap, report: SolveReport, config: SolveConfig) -> SolveReport:
    """Fix the tree/tour binaries and re-solve the LP so every e_i is tight.

    With the structure fixed the LP optimum of any objective with positive
    weight on each e_i is the exact residual-energy vector, so the returned
    energies equal the energy-model values (up to LP tolerances) even when the
    MIP incumbent carried slack.
    """
    fixed = model.fix({name: report.assignment[name] for name in vm.binaries()})
    n = len(vm.e)
    fixed.set_objective({vm.e_min: 0.5, **{name: 0.5 / n for name in vm.e.values()}}, "maximize")
    lp = solve(fixed, config)
    if not lp.has_solution:
        return report
    value = model.objective_value(lp.assignment)
    return SolveReport(
        report.status, value, report.mip_gap, report.wall_time + lp.wall_time, lp.assignment, report.message
    )


def solve_round(
    instance: NetworkInstance,
    formulation: str = TWO_INDEX,
    build: BuildConfig | None = None,
    solver: SolveConfig | None = None,
    polish_lp: bool = True,
) -> RoundSolution:
    """Build, solve and decode one round."""
    build = build or BuildConfig()
    solver = solver or SolveConfig()
    t0 = time.perf_counter()
    model, vm = BUILDERS[formulation](instance, build)
    built = time.perf_counter() - t0
    report = solve(model, solver)
    plan = None
    if report.has_solution:
        if polish_lp:
            report = polish(model, vm, report, solver)
        plan = extract_plan(instance, vm, report)
    return RoundSolution(model, vm, report, plan, built)
