"""Convex-hull based baseline planner.

The protocol is reconstructed from a short description, so each step is a
concrete choice:

1. sensors are swept by polar angle around the sink (starting after the
   widest angular gap) and cut into ``m`` contiguous sectors holding about the
   same residual energy;
2. the convex-hull vertices of each sector are its rendezvous nodes, flown in
   hull order with the sink spliced in at the cheapest position; rendezvous
   are dropped greedily while the tour exceeds ``L_max``;
3. every other sensor joins the rendezvous reachable at least per-bit energy
   (multi-source Dijkstra on the in-range graph, weight = tx + rx per bit);
4. simulated annealing toggles rendezvous status, relocates visits and
   applies 2-opt inside tours, minimising the total energy spent in the round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

from .energy import tx_per_bit
from .instance import SINK, FleetParams, NetworkInstance
from .plan import LENGTH_TOL, RoundPlan, make_plan, plan_consumption


class ChpInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class ChpConfig:
    # None: 1% of the initial plan's total consumption
    sa_initial_temperature: float | None = None
    sa_cooling_rate: float = 0.95
    # number of states visited, the geometric plan included
    sa_iterations: int = 2000
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.sa_cooling_rate < 1:
            raise ValueError("sa_cooling_rate must lie in (0, 1)")
        if self.sa_iterations < 1:
            raise ValueError("sa_iterations must be >= 1")


def convex_hull(points: dict[int, tuple[float, float]]) -> list[int]:
    """Ids of the hull vertices in counter-clockwise order (collinear points dropped)."""
    ids = sorted(points, key=lambda i: (points[i][0], points[i][1], i))
    if len(ids) <= 2:
        return ids

    def cross(o, a, b):
        (ox, oy), (ax, ay), (bx, by) = points[o], points[a], points[b]
        return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)

    lower: list[int] = []
    for p in ids:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[int] = []
    for p in reversed(ids):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 2:
        # all points coincide
        return hull or ids[:1]
    return hull


def angular_sectors(instance: NetworkInstance, m: int) -> list[list[int]]:
    """Split sensors into ``m`` contiguous angular sectors of near-equal residual energy."""
    if instance.n == 0:
        return [[] for _ in range(m)]
    sx, sy = instance.sink_position
    ang = {}
    for s in instance.sensors:
        x, y = s.position
        ang[s.id] = math.atan2(y - sy, x - sx) % (2 * math.pi)
    order = sorted(ang, key=lambda i: (ang[i], i))
    gaps = [(ang[order[(k + 1) % len(order)]] - ang[order[k]]) % (2 * math.pi) for k in range(len(order))]
    if len(order) > 1:
        start = (int(np.argmax(gaps)) + 1) % len(order)
        order = order[start:] + order[:start]
    energy = instance.energies()
    total = math.fsum(energy.values())
    sectors: list[list[int]] = [[] for _ in range(m)]
    cum = 0.0
    for i in order:
        share = (cum + energy[i] / 2) / total if total > 0 else (len(sum(sectors, [])) + 0.5) / len(order)
        sectors[min(m - 1, int(share * m))].append(i)
        cum += energy[i]
    return sectors


def _tour_len(d: np.ndarray, tour: list[int]) -> float:
    seq = [SINK] + tour + [SINK]
    return float(sum(d[a, b] for a, b in zip(seq, seq[1:])))


def _splice_sink(d: np.ndarray, cycle: list[int]) -> list[int]:
    """Open a cyclic visiting order at the cheapest place to insert the sink."""
    if len(cycle) <= 2:
        return list(cycle)
    k = len(cycle)
    costs = [d[cycle[p], SINK] + d[SINK, cycle[(p + 1) % k]] - d[cycle[p], cycle[(p + 1) % k]] for p in range(k)]
    p = int(np.argmin(costs))
    return cycle[p + 1 :] + cycle[: p + 1]


def _cheapest_insert(d: np.ndarray, tour: list[int], v: int) -> tuple[list[int], float]:
    best, best_cost = None, math.inf
    seq = [SINK] + tour + [SINK]
    for p in range(len(seq) - 1):
        c = d[seq[p], v] + d[v, seq[p + 1]] - d[seq[p], seq[p + 1]]
        if c < best_cost:
            best, best_cost = p, c
    new = tour[:best] + [v] + tour[best:]
    return new, _tour_len(d, new)


class _Evaluator:
    """Attachment forest and round consumption for a rendezvous set, memoised."""

    def __init__(self, instance: NetworkInstance):
        self.instance = instance
        n = instance.n
        d = instance.distance_matrix()[1:, 1:]
        R = instance.radio.comm_range
        rows, cols = np.nonzero((d <= R) & ~np.eye(n, dtype=bool))
        weights = [tx_per_bit(d[i, j], instance.radio) + instance.radio.e_elec for i, j in zip(rows, cols)]
        self.graph = sparse.csr_array((weights, (rows, cols)), shape=(n, n))
        self.cache: dict[frozenset[int], tuple[dict[int, int] | None, float]] = {}

    def attach(self, heads: frozenset[int]) -> dict[int, int] | None:
        return self.evaluate(heads)[0]

    def evaluate(self, heads: frozenset[int]) -> tuple[dict[int, int] | None, float]:
        hit = self.cache.get(heads)
        if hit is not None:
            return hit
        inst = self.instance
        src = np.array(sorted(h - 1 for h in heads))
        dist, pred, _ = dijkstra(self.graph, directed=False, indices=src, min_only=True, return_predecessors=True)
        parent = {}
        ok = True
        for i in inst.sensor_ids:
            if i in heads:
                continue
            if not np.isfinite(dist[i - 1]):
                ok = False
                break
            parent[i] = int(pred[i - 1]) + 1
        if not ok:
            res = (None, math.inf)
        else:
            cons = plan_consumption(inst, parent.items(), heads)
            res = (parent, math.fsum(c.total_joules for c in cons.values()))
        self.cache[heads] = res
        return res


def _unreachable(instance: NetworkInstance, ev: _Evaluator, heads: frozenset[int]) -> list[int]:
    src = np.array(sorted(h - 1 for h in heads))
    dist = dijkstra(ev.graph, directed=False, indices=src, min_only=True)
    return [i for i in instance.sensor_ids if i not in heads and not np.isfinite(dist[i - 1])]


def geometric_plan(instance: NetworkInstance, fleet: FleetParams) -> list[list[int]]:
    """Sector tours from convex hulls, trimmed to the length budget."""
    d = instance.distance_matrix()
    L = fleet.max_tour_length
    pos = {s.id: s.position for s in instance.sensors}
    tours = []
    for sector in angular_sectors(instance, fleet.uav_count):
        if not sector:
            continue
        hull = convex_hull({i: pos[i] for i in sector})
        tour = _splice_sink(d, hull)
        while len(tour) > 1 and _tour_len(d, tour) > L + LENGTH_TOL:
            savings = [_tour_len(d, tour) - _tour_len(d, tour[:k] + tour[k + 1 :]) for k in range(len(tour))]
            tour.pop(int(np.argmax(savings)))
        if _tour_len(d, tour) > L + LENGTH_TOL:
            nearest = min(sector, key=lambda i: (d[SINK, i], i))
            tour = [nearest]
            if _tour_len(d, tour) > L + LENGTH_TOL:
                continue
        tours.append(tour)
    if not tours:
        raise ChpInfeasible("no sector admits a tour within L_max")
    return tours


def _repair_reachability(instance: NetworkInstance, ev: _Evaluator, tours: list[list[int]]) -> list[list[int]]:
    d = instance.distance_matrix()
    L = instance.fleet.max_tour_length
    while True:
        heads = frozenset(v for t in tours for v in t)
        missing = _unreachable(instance, ev, heads)
        if not missing:
            return tours
        v = missing[0]
        options = []
        for k, t in enumerate(tours):
            new, length = _cheapest_insert(d, t, v)
            if length <= L + LENGTH_TOL:
                options.append((length - _tour_len(d, t), k, new))
        if not options and len(tours) < instance.fleet.uav_count and 2 * d[SINK, v] <= L + LENGTH_TOL:
            tours = tours + [[v]]
            continue
        if not options:
            raise ChpInfeasible(f"sensor {v} cannot reach any rendezvous and no tour can absorb it")
        _, k, new = min(options)
        tours = tours[:k] + [new] + tours[k + 1 :]


def plan_chp(
    instance: NetworkInstance,
    fleet: FleetParams | None = None,
    config: ChpConfig | None = None,
    alpha: float = 0.6,
) -> RoundPlan:
    """One round of the convex-hull baseline, improved by simulated annealing."""
    config = config or ChpConfig()
    if fleet is not None and fleet != instance.fleet:
        instance = instance.with_fleet(
            uav_count=fleet.uav_count, max_tour_length=fleet.max_tour_length, altitude=fleet.altitude
        )
    fleet = instance.fleet
    if instance.n == 0:
        return make_plan(instance, [], [], alpha)
    ev = _Evaluator(instance)
    tours = _repair_reachability(instance, ev, geometric_plan(instance, fleet))
    tours = anneal(instance, ev, tours, config)
    heads = frozenset(v for t in tours for v in t)
    parent = ev.attach(heads)
    return make_plan(instance, parent.items(), [[SINK] + t + [SINK] for t in tours], alpha)


def total_consumption(instance: NetworkInstance, plan: RoundPlan) -> float:
    cons = plan_consumption(instance, plan.tree_edges, plan.cluster_heads)
    return math.fsum(c.total_joules for c in cons.values())


def anneal(instance: NetworkInstance, ev: _Evaluator, tours: list[list[int]], config: ChpConfig) -> list[list[int]]:
    """Metropolis search over rendezvous sets and visiting orders."""
    rng = np.random.default_rng(config.seed)
    d = instance.distance_matrix()
    L = instance.fleet.max_tour_length
    m = instance.fleet.uav_count
    sensors = list(instance.sensor_ids)

    def energy_of(ts):
        return ev.evaluate(frozenset(v for t in ts for v in t))[1]

    cur = [list(t) for t in tours]
    cur_e = energy_of(cur)
    best, best_e = [list(t) for t in cur], cur_e
    T = config.sa_initial_temperature
    if T is None:
        T = 0.01 * cur_e if math.isfinite(cur_e) else 1.0
    for _ in range(config.sa_iterations - 1):
        cand = _propose(rng, cur, sensors, d, m)
        if cand is None or any(_tour_len(d, t) > L + LENGTH_TOL for t in cand):
            T *= config.sa_cooling_rate
            continue
        cand_e = energy_of(cand)
        if not math.isfinite(cand_e):
            T *= config.sa_cooling_rate
            continue
        delta = cand_e - cur_e
        if delta <= 0 or (T > 0 and rng.random() < math.exp(-delta / T)):
            cur, cur_e = cand, cand_e
            if cur_e < best_e:
                best, best_e = [list(t) for t in cur], cur_e
        T *= config.sa_cooling_rate
    return best


def _propose(rng, tours, sensors, d, m):
    tours = [list(t) for t in tours]
    heads = {v for t in tours for v in t}
    move = rng.integers(3)
    if move == 0:
        v = sensors[rng.integers(len(sensors))]
        if v in heads:
            if len(heads) == 1:
                return None
            for t in tours:
                if v in t:
                    t.remove(v)
            return [t for t in tours if t]
        if len(tours) < m and rng.random() < 0.5:
            return tours + [[v]]
        k = rng.integers(len(tours))
        tours[k], _ = _cheapest_insert(d, tours[k], v)
        return tours
    if move == 1:
        src = rng.integers(len(tours))
        if not tours[src]:
            return None
        v = tours[src].pop(rng.integers(len(tours[src])))
        tours = [t for t in tours if t]
        if len(tours) < m and rng.random() < 0.25:
            return tours + [[v]]
        dst = rng.integers(len(tours)) if tours else None
        if dst is None:
            return [[v]]
        tours[dst].insert(rng.integers(len(tours[dst]) + 1), v)
        return tours
    k = rng.integers(len(tours))
    t = tours[k]
    if len(t) < 3:
        return None
    i, j = sorted(rng.choice(len(t), size=2, replace=False))
    tours[k] = t[:i] + t[i : j + 1][::-1] + t[j + 1 :]
    return tours
