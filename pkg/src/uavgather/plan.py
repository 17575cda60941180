"""Round plans: cluster forest plus UAV tours, with independent re-scoring."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .energy import EnergyBreakdown, node_round_consumption, tx_per_bit
from .instance import SINK, NetworkInstance

ENERGY_TOL = 1e-6
# solver round-off on relayed loads, in bits (worth ~1e-10 J at most)
BITS_TOL = 1e-3
LENGTH_TOL = 1e-6


class PlanValidationError(ValueError):
    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class RoundPlan:
    tree_edges: frozenset[tuple[int, int]]
    tour_sequences: tuple[tuple[int, ...], ...]
    residual_energy: Mapping[int, float]
    e_min: float
    objective_value: float
    relayed_bits: Mapping[int, float] | None = field(default=None, compare=False)

    @property
    def cluster_heads(self) -> set[int]:
        return {v for tour in self.tour_sequences for v in tour[1:-1]}

    @property
    def parent(self) -> dict[int, int]:
        return dict(self.tree_edges)


def objective(energies: Mapping[int, float], alpha: float) -> float:
    """Weighted sum of the minimum and the mean residual energy."""
    vals = list(energies.values())
    if not vals:
        return 0.0
    return alpha * min(vals) + (1.0 - alpha) * math.fsum(vals) / len(vals)


def tour_length(instance: NetworkInstance, tour: Sequence[int]) -> float:
    return math.fsum(instance.distance(a, b) for a, b in zip(tour, tour[1:]))


def subtree_loads(instance: NetworkInstance, parent: Mapping[int, int]) -> dict[int, float]:
    """Bits each sensor receives from its descendants; requires an acyclic parent map."""
    loads = {i: 0.0 for i in instance.sensor_ids}
    bits = instance.data_loads()
    depth: dict[int, int] = {}

    for i in parent:
        chain = []
        v = i
        while v in parent and v not in depth:
            chain.append(v)
            v = parent[v]
            if len(chain) > instance.n:
                raise PlanValidationError(["forest violated: parent cycle"])
        d = depth.get(v, 0)
        for u in reversed(chain):
            d += 1
            depth[u] = d
    # deepest first so every child is settled before its parent
    for i in sorted(parent, key=lambda v: -depth[v]):
        loads[parent[i]] += loads[i] + bits[i]
    return loads


def plan_consumption(
    instance: NetworkInstance, tree_edges: Iterable[tuple[int, int]], cluster_heads: Iterable[int]
) -> dict[int, EnergyBreakdown]:
    parent = dict(tree_edges)
    heads = set(cluster_heads)
    loads = subtree_loads(instance, parent)
    bits = instance.data_loads()
    out = {}
    for i in instance.sensor_ids:
        dist = None if i in heads else instance.distance(i, parent[i])
        out[i] = node_round_consumption(loads[i], bits[i], dist, instance.radio, instance.fleet)
    return out


def rescore(instance: NetworkInstance, tree_edges, cluster_heads) -> dict[int, float]:
    """Residual energy of every sensor after executing the round."""
    cons = plan_consumption(instance, tree_edges, cluster_heads)
    return {i: instance.sensor(i).residual_energy - cons[i].total_joules for i in instance.sensor_ids}


def make_plan(
    instance: NetworkInstance,
    tree_edges: Iterable[tuple[int, int]],
    tours: Iterable[Sequence[int]],
    alpha: float,
) -> RoundPlan:
    """Build a plan whose energies come from the energy model."""
    tree_edges = frozenset(tree_edges)
    tours = tuple(tuple(t) for t in tours)
    heads = {v for t in tours for v in t[1:-1]}
    energies = rescore(instance, tree_edges, heads)
    e_min = min(energies.values()) if energies else 0.0
    return RoundPlan(
        tree_edges, tours, energies, e_min, objective(energies, alpha), subtree_loads(instance, dict(tree_edges))
    )


def structural_violations(instance: NetworkInstance, tree_edges, tours) -> list[str]:
    """Membership, tour and forest invariants (everything except energy)."""
    problems = []
    sensors = set(instance.sensor_ids)
    parent: dict[int, int] = {}
    for i, j in tree_edges:
        if i not in sensors or j not in sensors:
            problems.append(f"tree edge ({i},{j}) must join two sensors")
            continue
        if i in parent:
            problems.append(f"(B.1) sensor {i} has more than one parent")
        parent[i] = j
        d = instance.distance(i, j)
        if d > instance.radio.comm_range + 1e-9:
            problems.append(f"range exceeded: edge ({i},{j}) spans {d:.3f} m > R")
    members: dict[int, int] = {}
    if len(tours) > instance.fleet.uav_count:
        problems.append(f"too many tours: {len(tours)} > m={instance.fleet.uav_count}")
    for t, tour in enumerate(tours):
        if len(tour) < 3 or tour[0] != SINK or tour[-1] != SINK:
            problems.append(f"tour {t} must start and end at the sink and visit a sensor")
            continue
        for v in tour[1:-1]:
            if v not in sensors:
                problems.append(f"tour {t} visits non-sensor {v}")
            elif v in members:
                problems.append(f"tours not node-disjoint: sensor {v} visited twice")
            members[v] = t
        length = tour_length(instance, tour)
        if length > instance.fleet.max_tour_length + LENGTH_TOL:
            problems.append(f"tour length exceeded: tour {t} is {length:.3f} m > L_max")
    for i in sorted(sensors):
        has_parent, is_head = i in parent, i in members
        if has_parent and is_head:
            problems.append(f"(B.1) sensor {i} has both a parent and a tour slot")
        elif not has_parent and not is_head:
            problems.append(f"(B.1) sensor {i} has neither a parent nor a tour slot")
    for i in parent:
        seen = {i}
        v = i
        while v in parent:
            v = parent[v]
            if v in seen:
                problems.append(f"forest violated: cycle through sensor {i}")
                break
            seen.add(v)
        else:
            if v not in members:
                problems.append(f"forest violated: root {v} of sensor {i} is not a cluster head")
    return problems


def validate_plan(instance: NetworkInstance, plan: RoundPlan, tol: float = ENERGY_TOL) -> list[str]:
    """Every violated invariant of ``plan``; an empty list means the plan is valid."""
    problems = structural_violations(instance, plan.tree_edges, plan.tour_sequences)
    if problems:
        return problems
    energies = rescore(instance, plan.tree_edges, plan.cluster_heads)
    for i, e in energies.items():
        got = plan.residual_energy.get(i)
        if got is None:
            problems.append(f"residual energy of sensor {i} missing")
        elif abs(got - e) > tol:
            problems.append(f"energy mismatch at sensor {i}: plan {got!r} vs recomputed {e!r}")
    if energies:
        true_min = min(energies.values())
        if abs(plan.e_min - true_min) > tol:
            problems.append(f"e_min mismatch: plan {plan.e_min!r} vs recomputed {true_min!r}")
    if plan.relayed_bits is not None:
        loads = subtree_loads(instance, plan.parent)
        for i, b in loads.items():
            got = plan.relayed_bits.get(i, 0.0)
            if abs(got - b) > BITS_TOL:
                problems.append(f"relayed bits mismatch at sensor {i}: plan {got!r} vs subtree sum {b!r}")
    return problems


def per_bit_relay_cost(instance: NetworkInstance, i: int, j: int) -> float:
    """Energy per bit for one hop i -> j (transmit at i plus receive at j)."""
    return tx_per_bit(instance.distance(i, j), instance.radio) + instance.radio.e_elec
