"""Exhaustive planner for desk-size instances, used as ground truth."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

from .energy import tx_per_bit, uav_tx_per_bit
from .instance import SINK, NetworkInstance
from .plan import LENGTH_TOL, RoundPlan, make_plan

DEFAULT_CAP = 6
MAX_UAVS = 3


class OracleRefused(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    best_plan: RoundPlan | None
    best_objective: float
    plans_enumerated: int

    @property
    def feasible(self) -> bool:
        return self.best_plan is not None


def _set_partitions(items: tuple[int, ...], max_blocks: int):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest, max_blocks):
        for k in range(len(part)):
            yield part[:k] + [(first,) + part[k]] + part[k + 1 :]
        if len(part) < max_blocks:
            yield [(first,)] + part


def enumerate_optimal(
    instance: NetworkInstance,
    alpha: float = 0.6,
    cap: int = DEFAULT_CAP,
    candidates: frozenset[int] | None = None,
) -> OracleResult:
    """Best plan over every cluster-head set, parent forest and tour arrangement.

    Tour arrangements only decide feasibility (energy does not depend on the
    visiting order), so each head set contributes
    ``#valid forests x #feasible arrangements`` plans to the count while the
    returned plan uses the arrangement of least total length.
    """
    n = instance.n
    m = instance.fleet.uav_count
    if n > cap:
        raise OracleRefused(f"instance has {n} sensors; the oracle is capped at {cap}")
    if m > MAX_UAVS:
        raise OracleRefused(f"instance has {m} UAVs; the oracle supports at most {MAX_UAVS}")
    sensors = tuple(instance.sensor_ids)
    allowed = set(sensors) if candidates is None else set(candidates)
    d = instance.distance_matrix()
    radio, fleet = instance.radio, instance.fleet
    R, L_max = radio.comm_range, fleet.max_tour_length
    e_rx, e_uav = radio.e_elec, uav_tx_per_bit(radio, fleet)
    energy = instance.energies()
    bits = instance.data_loads()
    nbrs = {i: [j for j in sensors if j != i and d[i, j] <= R] for i in sensors}
    tx = {(i, j): tx_per_bit(d[i, j], radio) for i in sensors for j in nbrs[i]}

    @lru_cache(maxsize=None)
    def block_tours(block: tuple[int, ...]) -> tuple[int, float, tuple[int, ...] | None]:
        """Feasible distinct rings over ``block`` and the shortest one."""
        count, best_len, best = 0, math.inf, None
        for perm in itertools.permutations(block):
            # a ring and its reverse are the same tour
            if len(perm) > 1 and perm[0] > perm[-1]:
                continue
            seq = (SINK,) + perm + (SINK,)
            length = sum(d[a, b] for a, b in zip(seq, seq[1:]))
            if length <= L_max + LENGTH_TOL:
                count += 1
                if length < best_len:
                    best_len, best = length, seq
        return count, best_len, best

    def arrangements(heads: tuple[int, ...]):
        count, best_len, best = 0, math.inf, None
        for part in _set_partitions(heads, m):
            sub = 1
            total = 0.0
            tours = []
            for block in part:
                c, length, seq = block_tours(tuple(sorted(block)))
                sub *= c
                if not c:
                    break
                total += length
                tours.append(seq)
            if sub:
                count += sub
                if total < best_len:
                    best_len, best = total, tours
        return count, best

    best_obj, best_tree, best_tours = -math.inf, None, None
    enumerated = 0
    for size in range(1, n + 1):
        for heads in itertools.combinations(sensors, size):
            if not set(heads) <= allowed:
                continue
            n_arr, tours = arrangements(heads)
            if not n_arr:
                continue
            head_set = set(heads)
            others = [i for i in sensors if i not in head_set]
            choices = [nbrs[i] for i in others]
            if any(not c for c in choices):
                continue
            for parents in itertools.product(*choices):
                parent = dict(zip(others, parents))
                order = _topological(parent, head_set)
                if order is None:
                    continue
                load = {i: 0.0 for i in sensors}
                for i in order:
                    load[parent[i]] += load[i] + bits[i]
                e_vals = {}
                for i in sensors:
                    if i in head_set:
                        used = e_rx * load[i] + e_uav * (load[i] + bits[i])
                    else:
                        used = e_rx * load[i] + tx[i, parent[i]] * (load[i] + bits[i])
                    e_vals[i] = energy[i] - used
                e_min = min(e_vals.values())
                if e_min < 0:
                    continue
                enumerated += n_arr
                obj = alpha * e_min + (1 - alpha) * math.fsum(e_vals.values()) / n
                if obj > best_obj:
                    best_obj, best_tree, best_tours = obj, dict(parent), tours
    if best_tree is None:
        return OracleResult(None, -math.inf, 0)
    plan = make_plan(instance, best_tree.items(), best_tours, alpha)
    return OracleResult(plan, plan.objective_value, enumerated)


def _topological(parent: dict[int, int], heads: set[int]) -> list[int] | None:
    """Children-before-parents order of the non-head sensors, or None on a cycle."""
    depth: dict[int, int] = {}
    for i in parent:
        chain = []
        v = i
        while v not in heads and v not in depth:
            if v in chain:
                return None
            chain.append(v)
            v = parent[v]
        base = depth.get(v, 0)
        for u in reversed(chain):
            base += 1
            depth[u] = base
    return sorted(parent, key=lambda v: -depth[v])
