"""Network instances: sensors, sink, radio and fleet parameters.

Node ids follow the model convention: the sink is node 0 and sensors are
numbered 1..n. Instances are frozen so they can be shared between worker
processes; :func:`with_energies` produces the next-round copy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

SINK = 0

# Table I of the experiments
DEFAULT_E_ELEC = 50e-9
DEFAULT_EPS_FS = 10e-12
DEFAULT_EPS_MP = 0.0013e-12
DEFAULT_RANGE = 40.0
DEFAULT_BITS = 100_000


class InstanceError(ValueError):
    """Raised when an instance violates one of its invariants."""


class InstanceFormatError(InstanceError):
    """Raised when an instance document cannot be parsed."""


@dataclass(frozen=True)
class SensorNode:
    id: int
    position: tuple[float, float]
    residual_energy: float
    data_load: int

    def __post_init__(self):
        if self.id < 1:
            raise InstanceError(f"sensor id must be >= 1, got {self.id}")
        if not self.residual_energy >= 0:
            raise InstanceError(f"sensor {self.id}: residual_energy must be >= 0, got {self.residual_energy}")
        if self.data_load < 0:
            raise InstanceError(f"sensor {self.id}: data_load must be >= 0, got {self.data_load}")


@dataclass(frozen=True)
class RadioParams:
    e_elec: float = DEFAULT_E_ELEC
    eps_fs: float = DEFAULT_EPS_FS
    eps_mp: float = DEFAULT_EPS_MP
    comm_range: float = DEFAULT_RANGE

    def __post_init__(self):
        for name in ("e_elec", "eps_fs", "eps_mp", "comm_range"):
            if not getattr(self, name) > 0:
                raise InstanceError(f"radio.{name} must be > 0")

    @property
    def d0(self) -> float:
        """Crossover distance between the free-space and multipath branches."""
        return math.sqrt(self.eps_fs / self.eps_mp)


@dataclass(frozen=True)
class FleetParams:
    uav_count: int = 2
    max_tour_length: float = 100.0
    altitude: float = 20.0
    # carried as metadata only, never a constraint
    round_length_s: float | None = None

    def __post_init__(self):
        if self.uav_count < 1:
            raise InstanceError("fleet.uav_count must be >= 1")
        if not self.max_tour_length > 0:
            raise InstanceError("fleet.max_tour_length must be > 0")
        if not self.altitude >= 0:
            raise InstanceError("fleet.altitude must be >= 0")


@dataclass(frozen=True)
class NetworkInstance:
    sink_position: tuple[float, float]
    sensors: tuple[SensorNode, ...]
    radio: RadioParams = field(default_factory=RadioParams)
    fleet: FleetParams = field(default_factory=FleetParams)

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(self.sensors))
        seen = set()
        for s in self.sensors:
            if s.id in seen:
                raise InstanceError(f"duplicate sensor id {s.id}")
            seen.add(s.id)
        if seen != set(range(1, len(self.sensors) + 1)):
            raise InstanceError(f"sensor ids must be exactly 1..{len(self.sensors)}")
        # keep sensors ordered by id so index i-1 is sensor i
        object.__setattr__(self, "sensors", tuple(sorted(self.sensors, key=lambda s: s.id)))

    @property
    def n(self) -> int:
        return len(self.sensors)

    @property
    def node_ids(self) -> range:
        """All node ids including the sink."""
        return range(self.n + 1)

    @property
    def sensor_ids(self) -> range:
        return range(1, self.n + 1)

    def sensor(self, node_id: int) -> SensorNode:
        if not 1 <= node_id <= self.n:
            raise KeyError(f"unknown sensor id {node_id}")
        return self.sensors[node_id - 1]

    def position(self, node_id: int) -> tuple[float, float]:
        if node_id == SINK:
            return self.sink_position
        return self.sensor(node_id).position

    def positions(self) -> np.ndarray:
        """(n+1, 2) array of coordinates, row 0 is the sink."""
        pts = [self.sink_position] + [s.position for s in self.sensors]
        return np.asarray(pts, dtype=float)

    def distance_matrix(self) -> np.ndarray:
        pts = self.positions()
        diff = pts[:, None, :] - pts[None, :, :]
        return np.sqrt((diff**2).sum(axis=-1))

    def distance(self, i: int, j: int) -> float:
        (xi, yi), (xj, yj) = self.position(i), self.position(j)
        return math.hypot(xi - xj, yi - yj)

    def energies(self) -> dict[int, float]:
        return {s.id: s.residual_energy for s in self.sensors}

    def data_loads(self) -> dict[int, int]:
        return {s.id: s.data_load for s in self.sensors}

    def with_energies(self, energies: dict[int, float]) -> "NetworkInstance":
        sensors = tuple(replace(s, residual_energy=energies.get(s.id, s.residual_energy)) for s in self.sensors)
        return replace(self, sensors=sensors)

    def with_fleet(self, **changes) -> "NetworkInstance":
        return replace(self, fleet=replace(self.fleet, **changes))

    def is_connected(self) -> bool:
        """Every sensor reaches the sink through the unit-disk graph of radius R."""
        d = self.distance_matrix()
        adj = d <= self.radio.comm_range
        seen = {SINK}
        stack = [SINK]
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(adj[i]):
                j = int(j)
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == self.n + 1


def neighbor_set(instance: NetworkInstance, node_id: int) -> set[int]:
    """Ids of all nodes (sink included) within radio range of ``node_id``."""
    if node_id not in instance.node_ids:
        raise KeyError(f"unknown node id {node_id}")
    R = instance.radio.comm_range
    return {j for j in instance.node_ids if j != node_id and instance.distance(node_id, j) <= R}


def generate_random_instance(
    n: int,
    area_side: float = 50.0,
    energy_range: tuple[float, float] = (20.0, 40.0),
    seed: int = 0,
    radio: RadioParams | None = None,
    fleet: FleetParams | None = None,
    data_load: int = DEFAULT_BITS,
    max_retries: int = 100,
) -> NetworkInstance:
    """Uniform random deployment with the sink at the centre of the square.

    Placements whose unit-disk graph does not connect every sensor to the sink
    are re-drawn; after ``max_retries`` failures an :class:`InstanceError` is
    raised.
    """
    if n < 1:
        raise InstanceError("n must be >= 1")
    if not area_side > 0:
        raise InstanceError("area_side must be > 0")
    lo, hi = energy_range
    if not lo <= hi:
        raise InstanceError("energy_range must be nonempty")
    radio = radio or RadioParams()
    fleet = fleet or FleetParams()
    rng = np.random.default_rng(seed)
    sink = (area_side / 2.0, area_side / 2.0)
    for _ in range(max_retries):
        xy = rng.uniform(0.0, area_side, size=(n, 2))
        energy = rng.uniform(lo, hi, size=n)
        sensors = tuple(
            SensorNode(i + 1, (float(xy[i, 0]), float(xy[i, 1])), float(energy[i]), int(data_load)) for i in range(n)
        )
        inst = NetworkInstance(sink, sensors, radio, fleet)
        if inst.is_connected():
            return inst
    raise InstanceError(f"no connected placement found after {max_retries} attempts (n={n}, side={area_side})")


# ---------------------------------------------------------------------------
# file I/O (JSON document; schema in README)


def instance_to_dict(instance: NetworkInstance) -> dict:
    return {
        "sink": {"x": instance.sink_position[0], "y": instance.sink_position[1]},
        "sensors": [
            {"id": s.id, "x": s.position[0], "y": s.position[1], "energy": s.residual_energy, "bits": s.data_load}
            for s in instance.sensors
        ],
        "radio": {
            "e_elec": instance.radio.e_elec,
            "eps_fs": instance.radio.eps_fs,
            "eps_mp": instance.radio.eps_mp,
            "range": instance.radio.comm_range,
        },
        "fleet": {
            "m": instance.fleet.uav_count,
            "l_max": instance.fleet.max_tour_length,
            "h": instance.fleet.altitude,
            "t_max": instance.fleet.round_length_s,
        },
    }


def _field(doc: dict, key: str, where: str):
    if not isinstance(doc, dict):
        raise InstanceFormatError(f"{where}: expected an object")
    if key not in doc:
        raise InstanceFormatError(f"{where}: missing field '{key}'")
    return doc[key]


def _number(doc: dict, key: str, where: str) -> float:
    v = _field(doc, key, where)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InstanceFormatError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _integer(doc: dict, key: str, where: str) -> int:
    v = _field(doc, key, where)
    if isinstance(v, bool) or not isinstance(v, int):
        raise InstanceFormatError(f"{where}.{key}: expected an integer, got {v!r}")
    return v


def instance_from_dict(doc: dict) -> NetworkInstance:
    sink = _field(doc, "sink", "document")
    raw_sensors = _field(doc, "sensors", "document")
    if not isinstance(raw_sensors, list):
        raise InstanceFormatError("document.sensors: expected a list")
    sensors = []
    for k, s in enumerate(raw_sensors):
        where = f"sensors[{k}]"
        sensors.append(
            SensorNode(
                _integer(s, "id", where),
                (_number(s, "x", where), _number(s, "y", where)),
                _number(s, "energy", where),
                _integer(s, "bits", where),
            )
        )
    radio = _field(doc, "radio", "document")
    fleet = _field(doc, "fleet", "document")
    t_max = fleet.get("t_max") if isinstance(fleet, dict) else None
    return NetworkInstance(
        (_number(sink, "x", "sink"), _number(sink, "y", "sink")),
        tuple(sensors),
        RadioParams(
            _number(radio, "e_elec", "radio"),
            _number(radio, "eps_fs", "radio"),
            _number(radio, "eps_mp", "radio"),
            _number(radio, "range", "radio"),
        ),
        FleetParams(
            _integer(fleet, "m", "fleet"),
            _number(fleet, "l_max", "fleet"),
            _number(fleet, "h", "fleet"),
            None if t_max is None else float(t_max),
        ),
    )


def dumps_instance(instance: NetworkInstance) -> str:
    return json.dumps(instance_to_dict(instance), indent=2) + "\n"


def loads_instance(text: str) -> NetworkInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(doc)


def save_instance(instance: NetworkInstance, path: str | Path) -> None:
    Path(path).write_text(dumps_instance(instance))


def load_instance(path: str | Path) -> NetworkInstance:
    path = Path(path)
    try:
        return loads_instance(path.read_text())
    except InstanceError as exc:
        raise type(exc)(f"{path}: {exc}") from exc


def make_instance(
    positions: Sequence[tuple[float, float]],
    energies: Sequence[float] | float,
    sink: tuple[float, float] = (0.0, 0.0),
    bits: Sequence[int] | int = DEFAULT_BITS,
    radio: RadioParams | None = None,
    fleet: FleetParams | None = None,
) -> NetworkInstance:
    """Convenience constructor for hand-built instances."""
    n = len(positions)
    if isinstance(energies, (int, float)):
        energies = [float(energies)] * n
    if isinstance(bits, int):
        bits = [bits] * n
    sensors = tuple(
        SensorNode(i + 1, (float(p[0]), float(p[1])), float(e), int(b))
        for i, (p, e, b) in enumerate(zip(positions, energies, bits))
    )
    return NetworkInstance(tuple(map(float, sink)), sensors, radio or RadioParams(), fleet or FleetParams())
