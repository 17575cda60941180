"""Command-line entry point.

Exit codes:
    0  success (optimal or feasible within the gap)
    2  bad invocation or unreadable input file
    3  the round problem is infeasible
    4  time limit reached without any feasible solution
    5  solver or internal error
    6  empty instance corpus
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from .formulations import BUILDERS, THREE_INDEX, TWO_INDEX, BuildConfig, restrict_candidates, solve_round
from .instance import FleetParams, InstanceError, generate_random_instance, load_instance, save_instance
from .milp import BACKENDS, ERROR, INFEASIBLE, OPTIMAL, TIMEOUT_NO_SOLUTION, SolveConfig, export_model, model_stats
from .simulator import LIFETIME_GAP, make_planner, read_trace, run_lifetime

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_TIMEOUT = 4
EXIT_ERROR = 5
EXIT_EMPTY = 6

STATUS_EXIT = {INFEASIBLE: EXIT_INFEASIBLE, TIMEOUT_NO_SOLUTION: EXIT_TIMEOUT, ERROR: EXIT_ERROR}

COMPARE_COLUMNS = ("n", "model", "instances", "p_opt", "avg_time", "max_time", "avg_gap", "max_gap", "failed")
SWEEP_COLUMNS = ("alpha", "lifetime_rounds", "stop_reason", "seconds")

log = logging.getLogger("uavgather")


def _fail(code: int, msg: str) -> int:
    print(f"uavgather: {msg}", file=sys.stderr)
    return code


def _load(path: str):
    try:
        return load_instance(path)
    except (OSError, InstanceError) as exc:
        raise _InputError(str(exc)) from exc


class _InputError(Exception):
    pass


def _apply_overrides(inst, args):
    changes = {}
    if getattr(args, "uavs", None) is not None:
        changes["uav_count"] = args.uavs
    if getattr(args, "lmax", None) is not None:
        changes["max_tour_length"] = args.lmax
    return inst.with_fleet(**changes) if changes else inst


def _solver(args, default_gap: float = 1e-3) -> SolveConfig:
    gap = default_gap if args.gap is None else args.gap
    return SolveConfig(gap_tolerance=gap, time_limit=args.time_limit, backend=args.solver)


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


# -- generate ---------------------------------------------------------------


def cmd_generate(args) -> int:
    fleet = FleetParams(uav_count=args.uavs or 2, max_tour_length=args.lmax or 100.0, altitude=args.altitude)
    out = Path(args.out)
    paths = []
    for k in range(args.count):
        seed = args.seed + k
        inst = generate_random_instance(
            args.n,
            area_side=args.area,
            energy_range=(args.energy_min, args.energy_max),
            seed=seed,
            fleet=fleet,
            data_load=args.bits,
        )
        if args.count == 1 and out.suffix == ".json":
            path = out
        else:
            path = out / f"n{args.n}_s{seed}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        save_instance(inst, path)
        paths.append(path)
    for p in paths:
        print(p)
    return EXIT_OK


# -- solve ------------------------------------------------------------------


def _plan_doc(plan) -> dict:
    return {
        "tree_edges": sorted([i, j] for i, j in plan.tree_edges),
        "tours": [list(t) for t in plan.tour_sequences],
        "residual_energy": {str(i): e for i, e in sorted(plan.residual_energy.items())},
        "e_min": plan.e_min,
        "objective_value": plan.objective_value,
        "relayed_bits": None if plan.relayed_bits is None else {str(i): b for i, b in sorted(plan.relayed_bits.items())},
    }


def cmd_solve(args) -> int:
    inst = _apply_overrides(_load(args.instance), args)
    cands = None if args.P is None else restrict_candidates(inst, args.P)
    build = BuildConfig(alpha=args.alpha, ch_candidates=cands)
    sol = solve_round(inst, args.model, build, _solver(args))
    rep = sol.report
    doc = {
        "report": {
            "status": rep.status,
            "objective_value": None if rep.objective_value is None else rep.objective_value,
            "mip_gap": rep.mip_gap,
            "wall_time": rep.wall_time,
            "message": rep.message,
        },
        "model": asdict(model_stats(sol.model)),
        "plan": None if sol.plan is None else _plan_doc(sol.plan),
    }
    _write(args.out, json.dumps(doc, indent=2, allow_nan=True) + "\n")
    if args.lp_out:
        _write(args.lp_out, export_model(sol.model))
    print(f"status={rep.status} objective={rep.objective_value} gap={rep.mip_gap} time={rep.wall_time:.3f}s")
    if sol.plan is not None:
        print(f"e_min={sol.plan.e_min!r} tours={[list(t) for t in sol.plan.tour_sequences]}")
    if rep.status in STATUS_EXIT:
        return _fail(STATUS_EXIT[rep.status], f"solve ended with status {rep.status}: {rep.message}")
    return EXIT_OK


# -- stats ------------------------------------------------------------------


def cmd_stats(args) -> int:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("instance", "model", "variables", "binaries", "constraints"))
    for path in args.instances:
        inst = _apply_overrides(_load(path), args)
        cands = None if args.P is None else restrict_candidates(inst, args.P)
        model, _ = BUILDERS[args.model](inst, BuildConfig(alpha=args.alpha, ch_candidates=cands, prune=not args.no_prune))
        s = model_stats(model)
        w.writerow((path, args.model, s.variables, s.binaries, s.constraints))
        if args.lp_out:
            _write(args.lp_out, export_model(model))
    return EXIT_OK


# -- lifetime ---------------------------------------------------------------


def _planner_id(args) -> str:
    if args.planner == "milp-heuristic" and args.P is not None:
        return f"milp-heuristic({args.P:g})"
    return args.planner


def _build_planner(args, alpha: float):
    from .chp import ChpConfig

    formulation = args.model if args.model_given else None
    return make_planner(
        _planner_id(args),
        alpha=alpha,
        percent=args.P,
        solver=_solver(args, LIFETIME_GAP),
        formulation=formulation,
        chp_config=ChpConfig(seed=args.seed),
    )


def cmd_lifetime(args) -> int:
    inst = _apply_overrides(_load(args.instance), args)
    planner = _build_planner(args, args.alpha)
    trace = run_lifetime(inst, planner, max_rounds=args.max_rounds)
    _write(args.out, trace.to_csv())
    print(f"planner={trace.planner} lifetime={trace.lifetime_rounds} stop={trace.stop_reason}")
    if trace.stop_reason.startswith("error"):
        return _fail(EXIT_ERROR, trace.stop_reason)
    return EXIT_OK


# -- alpha sweep ------------------------------------------------------------


@dataclass(frozen=True)
class _SweepJob:
    instance_path: str
    alpha: float
    args: dict


def _run_sweep_job(job: _SweepJob) -> tuple[float, int, str, float]:
    import time

    args = argparse.Namespace(**job.args)
    inst = _apply_overrides(load_instance(job.instance_path), args)
    t0 = time.perf_counter()
    try:
        trace = run_lifetime(inst, _build_planner(args, job.alpha), max_rounds=args.max_rounds)
    except Exception as exc:  # noqa: BLE001 - recorded per alpha
        return job.alpha, 0, f"error: {exc}", time.perf_counter() - t0
    return job.alpha, trace.lifetime_rounds, trace.stop_reason, time.perf_counter() - t0


def sweep_table(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for alpha, rounds, reason, secs in rows:
        w.writerow((f"{alpha:g}", rounds, reason, f"{secs:.3f}"))
    return buf.getvalue()


def cmd_alpha_sweep(args) -> int:
    _load(args.instance)
    jobs = [_SweepJob(args.instance, a, vars(args) | {"func": None}) for a in args.alphas]
    rows = _map(_run_sweep_job, jobs, args.jobs)
    text = sweep_table(rows)
    _write(args.out, text)
    sys.stdout.write(text)
    return EXIT_OK


# -- compare ----------------------------------------------------------------


@dataclass(frozen=True)
class _CompareJob:
    instance_path: str
    model: str
    percent: float | None
    solver: SolveConfig
    alpha: float


def _run_compare_job(job: _CompareJob) -> tuple[str, int, str, str, float, float]:
    inst = load_instance(job.instance_path)
    cands = None if job.percent is None else restrict_candidates(inst, job.percent)
    label = job.model if job.percent is None else f"heuristic{job.percent:g}-{job.model}"
    try:
        sol = solve_round(inst, job.model, BuildConfig(alpha=job.alpha, ch_candidates=cands), job.solver)
    except Exception as exc:  # noqa: BLE001 - recorded per row
        return job.instance_path, inst.n, label, f"{ERROR}: {exc}", math.nan, math.nan
    rep = sol.report
    return job.instance_path, inst.n, label, rep.status, sol.build_seconds + rep.wall_time, rep.mip_gap


def summarize_compare(results) -> list[dict]:
    """Aggregate per-instance results into one row per (n, model)."""
    groups: dict[tuple[int, str], list] = {}
    for _, n, label, status, secs, gap in results:
        groups.setdefault((n, label), []).append((status, secs, gap))
    rows = []
    for (n, label), items in sorted(groups.items()):
        solved = [it for it in items if it[0] in (OPTIMAL, "feasible_gap")]
        times = [it[1] for it in solved]
        gaps = [it[2] for it in solved if it[2] is not None and math.isfinite(it[2])]
        rows.append(
            {
                "n": n,
                "model": label,
                "instances": len(items),
                "p_opt": 100.0 * sum(it[0] == OPTIMAL for it in items) / len(items),
                "avg_time": statistics.fmean(times) if times else math.nan,
                "max_time": max(times) if times else math.nan,
                "avg_gap": 100.0 * statistics.fmean(gaps) if gaps else math.nan,
                "max_gap": 100.0 * max(gaps) if gaps else math.nan,
                "failed": len(items) - len(solved),
            }
        )
    return rows


def compare_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, COMPARE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def compare_text(rows: list[dict]) -> str:
    head = f"{'n':>4} {'model':<20} {'inst':>4} {'P_opt%':>7} {'avg_t':>9} {'max_t':>9} {'avg_gap%':>9} {'max_gap%':>9} {'fail':>4}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{r['n']:>4} {r['model']:<20} {r['instances']:>4} {r['p_opt']:>7.1f} {r['avg_time']:>9.3f} "
            f"{r['max_time']:>9.3f} {r['avg_gap']:>9.4f} {r['max_gap']:>9.4f} {r['failed']:>4}"
        )
    return "\n".join(lines) + "\n"


def _corpus(paths: list[str]) -> list[str]:
    files = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            files.extend(str(f) for f in sorted(path.glob("*.json")))
        elif path.exists():
            files.append(str(path))
        else:
            raise _InputError(f"{p}: no such file or directory")
    return files


def cmd_compare(args) -> int:
    files = _corpus(args.instances)
    models = args.models or [TWO_INDEX, THREE_INDEX]
    solver = _solver(args)
    jobs = [_CompareJob(f, mdl, None, solver, args.alpha) for f in files for mdl in models]
    for p in args.heuristic or []:
        jobs += [_CompareJob(f, args.model, p, solver, args.alpha) for f in files]
    rows = summarize_compare(_map(_run_compare_job, jobs, args.jobs))
    _write(args.out, compare_csv(rows))
    sys.stdout.write(compare_text(rows))
    if not files:
        return _fail(EXIT_EMPTY, "empty instance corpus")
    return EXIT_OK


# -- plot data --------------------------------------------------------------


def cmd_plot_data(args) -> int:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("source", "planner", "round", "e_min_after", "avg_after"))
    for path in args.traces:
        try:
            trace = read_trace(path)
        except (OSError, KeyError, ValueError) as exc:
            raise _InputError(f"{path}: {exc}") from exc
        for r in trace.records:
            w.writerow((path, r.planner, r.round, repr(r.e_min_after), repr(r.avg_after)))
    _write(args.out, buf.getvalue())
    if not args.out:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def _map(fn, jobs, n_jobs: int):
    if n_jobs <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, jobs))


# -- parser -----------------------------------------------------------------


class _ModelAction(argparse.Action):
    def __call__(self, parser, ns, values, option_string=None):
        setattr(ns, self.dest, values)
        ns.model_given = True


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavgather", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def solver_flags(sp, gap_default=None):
        sp.add_argument("--solver", choices=sorted(BACKENDS), default="highs")
        sp.add_argument("--gap", type=float, default=gap_default, help="relative MIP gap tolerance")
        sp.add_argument("--time-limit", type=float, default=1800.0, help="seconds per solve")

    def model_flags(sp):
        sp.add_argument("--model", choices=[TWO_INDEX, THREE_INDEX], default=TWO_INDEX, action=_ModelAction)
        sp.add_argument("--alpha", type=float, default=0.6)
        sp.add_argument("--P", type=float, default=None, help="keep only the top P%% sensors as cluster-head candidates")
        sp.add_argument("--uavs", type=int, default=None)
        sp.add_argument("--lmax", type=float, default=None)
        sp.set_defaults(model_given=False)

    g = sub.add_parser("generate", help="write random connected instances")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--area", type=float, default=50.0)
    g.add_argument("--energy-min", type=float, default=20.0)
    g.add_argument("--energy-max", type=float, default=40.0)
    g.add_argument("--bits", type=int, default=100_000)
    g.add_argument("--uavs", type=int, default=None)
    g.add_argument("--lmax", type=float, default=None)
    g.add_argument("--altitude", type=float, default=20.0)
    g.add_argument("--out", required=True, help="directory, or a .json file when --count is 1")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve one round")
    s.add_argument("instance")
    model_flags(s)
    solver_flags(s)
    s.add_argument("--out", help="report + plan JSON")
    s.add_argument("--lp-out", help="also write the model in LP format")
    s.set_defaults(func=cmd_solve)

    st = sub.add_parser("stats", help="model size for instances")
    st.add_argument("instances", nargs="+")
    model_flags(st)
    st.add_argument("--no-prune", action="store_true")
    st.add_argument("--lp-out")
    st.set_defaults(func=cmd_stats)

    def lifetime_flags(sp):
        sp.add_argument("--planner", default="milp-2index", help="milp-2index, milp-3index, milp-heuristic, chp, oracle")
        sp.add_argument("--seed", type=int, default=0, help="seed for the baseline's annealing")
        sp.add_argument("--max-rounds", type=int, default=100_000)

    lt = sub.add_parser("lifetime", help="simulate rounds until the first sensor dies")
    lt.add_argument("instance")
    model_flags(lt)
    solver_flags(lt)
    lifetime_flags(lt)
    lt.add_argument("--out", help="trace CSV")
    lt.set_defaults(func=cmd_lifetime)

    a = sub.add_parser("alpha-sweep", help="lifetime for several alpha values")
    a.add_argument("instance")
    model_flags(a)
    solver_flags(a)
    lifetime_flags(a)
    a.add_argument("--alphas", type=float, nargs="+", default=[0.2, 0.4, 0.6, 0.8, 1.0])
    a.add_argument("--jobs", type=int, default=1)
    a.add_argument("--out", help="sweep CSV")
    a.set_defaults(func=cmd_alpha_sweep)

    c = sub.add_parser("compare", help="optimality / time / gap table over a corpus")
    c.add_argument("instances", nargs="*", help="instance files or directories")
    model_flags(c)
    solver_flags(c)
    c.add_argument("--models", nargs="+", choices=[TWO_INDEX, THREE_INDEX])
    c.add_argument("--heuristic", type=float, nargs="*", help="extra rows restricted to the top P%% (uses --model)")
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--out", help="table CSV")
    c.set_defaults(func=cmd_compare)

    pd = sub.add_parser("plot-data", help="merge lifetime traces into one CSV")
    pd.add_argument("traces", nargs="+")
    pd.add_argument("--out")
    pd.set_defaults(func=cmd_plot_data)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _InputError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except Exception as exc:  # noqa: BLE001 - mapped to the error exit code
        log.debug("unhandled", exc_info=True)
        return _fail(EXIT_ERROR, f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
