"""Lifetime of the restricted MILP planner against the convex-hull baseline.

    python scripts/lifetime_comparison.py --instances 5 --n 25 --out runs/lifetime
"""

from __future__ import annotations

import argparse
import csv
import statistics
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from uavgather.chp import ChpConfig
from uavgather.instance import FleetParams, generate_random_instance, save_instance
from uavgather.milp import SolveConfig
from uavgather.simulator import make_planner, run_lifetime


@dataclass
class LifetimeExperiment:
    n: int = 25
    instances: int = 5
    first_seed: int = 1
    uavs: int = 2
    lmax: float = 100.0
    percent: float = 20.0
    energy_min: float = 0.3
    energy_max: float = 0.6
    gap: float = 1e-3
    time_limit: float = 60.0
    chp_seed: int = 0


def run(cfg: LifetimeExperiment, out: Path | None = None, log=print) -> list[dict]:
    solver = SolveConfig(gap_tolerance=cfg.gap, time_limit=cfg.time_limit)
    planners = {
        "chp": make_planner("chp", chp_config=ChpConfig(seed=cfg.chp_seed)),
        "milp": make_planner(f"milp-heuristic({cfg.percent:g})", solver=solver),
    }
    rows = []
    for seed in range(cfg.first_seed, cfg.first_seed + cfg.instances):
        inst = generate_random_instance(
            cfg.n,
            energy_range=(cfg.energy_min, cfg.energy_max),
            seed=seed,
            fleet=FleetParams(uav_count=cfg.uavs, max_tour_length=cfg.lmax),
        )
        row = {"seed": seed}
        for key, planner in planners.items():
            t0 = time.perf_counter()
            trace = run_lifetime(inst, planner)
            row[key] = trace.lifetime_rounds
            row[f"{key}_stop"] = trace.stop_reason
            row[f"{key}_seconds"] = round(time.perf_counter() - t0, 2)
            if out:
                trace.save(out / f"trace_s{seed}_{key}.csv")
        if out:
            save_instance(inst, out / f"instance_s{seed}.json")
        row["ratio"] = row["milp"] / row["chp"] if row["chp"] else float("inf")
        log(row)
        rows.append(row)
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    for name, value in asdict(LifetimeExperiment()).items():
        ap.add_argument(f"--{name.replace('_', '-')}", type=type(value), default=value)
    ap.add_argument("--out", type=Path, default=Path("runs/lifetime"))
    args = vars(ap.parse_args())
    out = args.pop("out")
    out.mkdir(parents=True, exist_ok=True)
    rows = run(LifetimeExperiment(**args), out)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    ratios = [r["ratio"] for r in rows]
    print(f"mean lifetime ratio milp/chp = {statistics.fmean(ratios):.3f}")


if __name__ == "__main__":
    main()
