"""Command line entry point: ``stackmec {generate,solve,compare,sweep}``.

Exit codes: 0 success, 2 usage or validation error, 3 infeasible scenario,
4 internal error.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import logging
import os
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from stackmec import scenario as scn
from stackmec.errors import InfeasibleError, StackmecError
from stackmec.pso import PsoConfig
from stackmec.solver import (
    Algorithm,
    SolveReport,
    SolverConfig,
    cross_sections,
    solve,
    with_overloaded_cluster,
)

log = logging.getLogger("stackmec")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 2, 3, 4
SWEEP_AXES = ("ues", "uavs", "data_max")


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """Shortest repr that round-trips the float exactly."""
    return repr(float(x))


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


# --------------------------------------------------------------------------
# argument helpers


def positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def parse_seeds(text: str):
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError("no seeds given")
    return seeds


def parse_algorithms(text: str):
    try:
        return [Algorithm.parse(t) for t in text.split(",") if t.strip()]
    except StackmecError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_values(text: str):
    values = [float(t) for t in text.split(",") if t.strip()]
    if not values or any(b <= a for a, b in zip(values, values[1:])):
        raise argparse.ArgumentTypeError("sweep values must be strictly increasing")
    return values


def read_config(path):
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object")
    return doc


def generation_config(args, doc) -> scn.GenerationConfig:
    """Built-in defaults < config file ``generation`` section < flags."""
    cfg = scn.GenerationConfig.from_dict(doc.get("generation", {}))
    flags = {
        "n_ues": getattr(args, "ues", None),
        "n_uavs": getattr(args, "uavs", None),
        "area": tuple(args.area) if getattr(args, "area", None) else None,
        "height": getattr(args, "height", None),
        "total_data": tuple(args.data_range) if getattr(args, "data_range", None) else None,
        "data_capacity": ((args.data_capacity,) * 2
                          if getattr(args, "data_capacity", None) is not None else None),
    }
    cfg = replace(cfg, **{k: v for k, v in flags.items() if v is not None})
    cfg.validate()
    return cfg


def solver_config(args, doc) -> SolverConfig:
    section = dict(doc.get("solver", {}))
    pso = PsoConfig(**section.pop("pso", {}))
    known = {f.name for f in fields(SolverConfig)}
    unknown = set(section) - known
    if unknown:
        raise UsageError(f"unknown solver fields: {sorted(unknown)}")
    cfg = SolverConfig(pso=pso, **section)
    flags = {"max_outer": getattr(args, "max_outer", None),
             "tolerance": getattr(args, "tolerance", None)}
    return replace(cfg, **{k: v for k, v in flags.items() if v is not None})


def add_generation_flags(p):
    p.add_argument("--ues", type=positive_int, help="number of UEs")
    p.add_argument("--uavs", type=positive_int, help="number of UAVs")
    p.add_argument("--area", type=float, nargs=2, metavar=("W", "D"), help="area in metres")
    p.add_argument("--height", type=float, help="UAV corridor height in metres")
    p.add_argument("--data-range", type=float, nargs=2, metavar=("MIN", "MAX"),
                   help="task size range in MB")
    p.add_argument("--data-capacity", type=float, help="per-UAV data capacity in MB")


def add_solver_flags(p):
    p.add_argument("--max-outer", type=positive_int)
    p.add_argument("--tolerance", type=float)


# --------------------------------------------------------------------------
# report export


def summary(report: SolveReport) -> dict:
    cert = report.certificate
    return {
        "algorithm": report.algorithm.value,
        "seed": report.seed,
        "converged": report.converged,
        "stable": report.stable,
        "outer_iterations": report.outer_iterations,
        "wall_time": report.wall_time,
        "controller_utility": report.controller_utility,
        "mean_ue_utility": report.mean_ue_utility,
        "nominal_controller_utility": report.breakdown.controller_utility,
        "nominal_mean_ue_utility": report.breakdown.mean_ue_utility,
        "overloaded_uavs": np.flatnonzero(report.overloaded).tolist(),
        "certificate": {
            "certified": cert.certified,
            "max_ue_gain": cert.max_ue_gain,
            "max_controller_gain": cert.max_controller_gain,
            "tolerance": cert.tolerance,
        },
        "availability_flips": report.availability_flips,
        "prices": report.profile.prices.tolist(),
        "offloads": report.profile.offloads.tolist(),
        "labels": report.assignment.labels.tolist(),
        "uav_positions": report.assignment.uav_positions.tolist(),
        "clamped_prices": report.trace[-1].clamped.tolist() if report.trace else [],
    }


def trace_rows(report: SolveReport):
    return [(r.iteration, r.controller_utility, r.mean_ue_utility, r.max_change)
            for r in report.trace]


TRACE_HEADER = ("iter", "U_con", "mean_U_i", "max_strategy_change")


# --------------------------------------------------------------------------
# worker pool


def worker_count() -> int:
    raw = os.environ.get("STACKMEC_THREADS")
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"STACKMEC_THREADS must be an integer, got {raw!r}") from None


def _run_job(job):
    key, s, kind, cfg, seed, overload = job
    if overload is not None:
        s = with_overloaded_cluster(s, seed, cfg, overload)
    r = solve(s, kind, cfg, seed)
    return key, (r.mean_ue_utility, r.controller_utility, r.outer_iterations, r.converged)


def run_jobs(jobs):
    """Run ``_run_job`` over ``jobs``; results keyed, so order is irrelevant."""
    workers = worker_count()
    if workers == 1 or len(jobs) <= 1:
        return dict(map(_run_job, jobs))
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return dict(pool.map(_run_job, jobs))


def scenario_for(args, doc, gen_cfg, seed):
    if getattr(args, "scenario", None):
        return load_scenario(args.scenario)
    return scn.generate(gen_cfg, seed)


def load_scenario(path):
    if not Path(path).is_file():
        raise UsageError(f"scenario file not found: {path}")
    return scn.load(path)


def aggregate(results, algorithms, seeds, extra_key=()):
    rows = []
    for alg in algorithms:
        vals = np.array([results[(*extra_key, alg.value, seed)][:2] for seed in seeds])
        rows.append((*extra_key, alg.value, len(seeds), vals[:, 0].mean(), vals[:, 0].std(),
                     vals[:, 1].mean(), vals[:, 1].std()))
    return rows


AGG_HEADER = ("algorithm", "runs", "mean_ue_utility_mean", "mean_ue_utility_std",
              "controller_utility_mean", "controller_utility_std")


# --------------------------------------------------------------------------
# subcommands


def cmd_generate(args):
    doc = read_config(args.config)
    cfg = generation_config(args, doc)
    s = scn.generate(cfg, args.seed)
    scn.save(s, args.output)
    print(args.output)


def cmd_solve(args):
    doc = read_config(args.config)
    s = load_scenario(args.scenario)
    cfg = solver_config(args, doc)
    report = solve(s, args.algorithm, cfg, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "trace.csv", TRACE_HEADER, trace_rows(report))
    (out / "summary.json").write_text(json.dumps(summary(report), indent=2) + "\n",
                                      encoding="utf-8")
    if args.cross_section:
        ue_rows, leader_rows = cross_sections(report, s, args.points)
        write_csv(out / "cross_section_ue.csv", ("ue", "g", "U_i"), ue_rows)
        write_csv(out / "cross_section_controller.csv", ("ue", "lambda", "U_con"), leader_rows)
    state = "converged" if report.converged else "not converged"
    print(f"{report.algorithm.value}: {state} after {report.outer_iterations} iterations; "
          f"U_con={report.controller_utility:.6g} mean U_i={report.mean_ue_utility:.6g}")
    print(out)


def cmd_compare(args):
    if len(args.algorithms) < 2:
        raise UsageError("compare needs at least two algorithms")
    doc = read_config(args.config)
    gen_cfg = generation_config(args, doc)
    cfg = solver_config(args, doc)
    jobs = []
    for seed in args.seeds:
        s = scenario_for(args, doc, gen_cfg, seed)
        for alg in args.algorithms:
            jobs.append(((alg.value, seed), s, alg, cfg, seed, args.overload))
    results = run_jobs(jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "comparison.csv", AGG_HEADER, aggregate(results, args.algorithms, args.seeds))
    runs = [(alg.value, seed, *results[(alg.value, seed)])
            for alg in args.algorithms for seed in args.seeds]
    write_csv(out / "runs.csv", ("algorithm", "seed", "mean_ue_utility", "controller_utility",
                                 "outer_iterations", "converged"), runs)
    print(out / "comparison.csv")


def cmd_sweep(args):
    doc = read_config(args.config)
    base = generation_config(args, doc)
    cfg = solver_config(args, doc)
    jobs = []
    for value in args.values:
        if args.axis == "ues":
            gen = replace(base, n_ues=int(value))
        elif args.axis == "uavs":
            gen = replace(base, n_uavs=int(value))
        else:
            gen = replace(base, total_data=(base.total_data[0], value))
        gen.validate()
        for seed in args.seeds:
            s = scn.generate(gen, seed)
            for alg in args.algorithms:
                jobs.append(((value, alg.value, seed), s, alg, cfg, seed, args.overload))
    results = run_jobs(jobs)
    rows = []
    for value in args.values:
        rows.extend(aggregate(results, args.algorithms, args.seeds, extra_key=(value,)))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "sweep.csv", (args.axis, *AGG_HEADER), rows)
    print(out / "sweep.csv")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stackmec", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a scenario file")
    add_generation_flags(g)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--config", help="JSON config file")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run one algorithm on a scenario file")
    s.add_argument("scenario")
    s.add_argument("--algorithm", type=Algorithm.parse, default=Algorithm.CPPO)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--config", help="JSON config file")
    s.add_argument("--out", default="results")
    s.add_argument("--cross-section", action="store_true",
                   help="also write U_i(g) and U_con(lambda) slices")
    s.add_argument("--points", type=positive_int, default=1001)
    add_solver_flags(s)
    s.set_defaults(func=cmd_solve)

    for name, func, help_ in (("compare", cmd_compare, "compare algorithms over seeds"),
                              ("sweep", cmd_sweep, "compare along a scenario axis")):
        c = sub.add_parser(name, help=help_)
        c.add_argument("--algorithms", type=parse_algorithms,
                       default=parse_algorithms("cppo,nu-cppo,osrs,psrs"))
        c.add_argument("--seeds", type=parse_seeds, default=list(range(20)))
        c.add_argument("--config", help="JSON config file")
        c.add_argument("--out", default="results")
        c.add_argument("--overload", type=float, metavar="FRACTION",
                       help="shrink the busiest UAV's data capacity to FRACTION of its load")
        add_generation_flags(c)
        add_solver_flags(c)
        if name == "compare":
            c.add_argument("--scenario", help="fixed scenario file instead of generating")
        else:
            c.add_argument("--axis", choices=SWEEP_AXES, required=True)
            c.add_argument("--values", type=parse_values, required=True)
        c.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on usage errors
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except InfeasibleError as exc:
        print(f"stackmec: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, StackmecError, OSError) as exc:
        print(f"stackmec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"stackmec: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
