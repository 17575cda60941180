"""Lifetime as a function of the objective weight alpha on one instance.

    python scripts/alpha_sweep.py --n 10 --bits 10000 --out runs/alpha.csv
"""

from __future__ import annotations

import argparse
from dataclasses import asdict, dataclass, field
from pathlib import Path

from uavgather.cli import sweep_table
from uavgather.instance import FleetParams, generate_random_instance
from uavgather.milp import SolveConfig
from uavgather.simulator import make_planner, run_lifetime


@dataclass
class SweepExperiment:
    n: int = 10
    seed: int = 1
    bits: int = 10_000
    energy_min: float = 0.03
    energy_max: float = 0.06
    uavs: int = 2
    lmax: float = 100.0
    planner: str = "milp-2index"
    gap: float = 1e-2
    time_limit: float = 5.0
    alphas: list[float] = field(default_factory=lambda: [0.2, 0.4, 0.6, 0.8, 1.0])


def run(cfg: SweepExperiment, log=print) -> list[tuple[float, int, str, float]]:
    import time

    inst = generate_random_instance(
        cfg.n,
        energy_range=(cfg.energy_min, cfg.energy_max),
        seed=cfg.seed,
        data_load=cfg.bits,
        fleet=FleetParams(uav_count=cfg.uavs, max_tour_length=cfg.lmax),
    )
    solver = SolveConfig(gap_tolerance=cfg.gap, time_limit=cfg.time_limit)
    rows = []
    for alpha in cfg.alphas:
        t0 = time.perf_counter()
        trace = run_lifetime(inst, make_planner(cfg.planner, alpha=alpha, solver=solver))
        rows.append((alpha, trace.lifetime_rounds, trace.stop_reason, time.perf_counter() - t0))
        log(f"alpha={alpha:g} lifetime={trace.lifetime_rounds} ({trace.stop_reason})")
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    defaults = asdict(SweepExperiment())
    alphas = defaults.pop("alphas")
    for name, value in defaults.items():
        ap.add_argument(f"--{name.replace('_', '-')}", type=type(value), default=value)
    ap.add_argument("--alphas", type=float, nargs="+", default=alphas)
    ap.add_argument("--out", type=Path)
    args = vars(ap.parse_args())
    out = args.pop("out")
    text = sweep_table(run(SweepExperiment(**args)))
    if out:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
    print(text, end="")


if __name__ == "__main__":
    main()
