"""Optimality rate, solve time and gap of both formulations over random corpora.

    python scripts/compare_models.py --sizes 8 10 12 --per-size 5 --heuristic 20 50
"""

from __future__ import annotations

import argparse
from pathlib import Path

from uavgather.cli import main as cli_main
from uavgather.instance import FleetParams, generate_random_instance, save_instance


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 10, 12])
    ap.add_argument("--per-size", type=int, default=5)
    ap.add_argument("--uavs", type=int, default=2)
    ap.add_argument("--lmax", type=float, default=100.0)
    ap.add_argument("--gap", type=float, default=1e-3)
    ap.add_argument("--time-limit", type=float, default=300.0)
    ap.add_argument("--heuristic", type=float, nargs="*", default=[])
    ap.add_argument("--model", default="3index", help="formulation used for the heuristic rows")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("runs/compare"))
    args = ap.parse_args()
    corpus = args.out / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)
    for n in args.sizes:
        for seed in range(args.per_size):
            inst = generate_random_instance(n, seed=seed, fleet=FleetParams(uav_count=args.uavs, max_tour_length=args.lmax))
            save_instance(inst, corpus / f"n{n}_s{seed}.json")
    argv = ["compare", str(corpus), "--gap", str(args.gap), "--time-limit", str(args.time_limit)]
    argv += ["--jobs", str(args.jobs), "--model", args.model, "--out", str(args.out / "table.csv")]
    if args.heuristic:
        argv += ["--heuristic", *map(str, args.heuristic)]
    raise SystemExit(cli_main(argv))


if __name__ == "__main__":
    main()
