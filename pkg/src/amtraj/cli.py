"""Command-line interface: ``amtraj optimize | check | bench | gen``."""

from __future__ import annotations

import argparse
import json
import sys

from .exceptions import (
    ConstructionError,
    InfeasibleInitialError,
    InvalidProblemError,
    NumericalError,
    ProblemFileError,
)

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_VALIDATION = 2
EXIT_INFEASIBLE_INITIAL = 3
EXIT_NUMERICAL = 4


def _report_dict(report, elapsed, constrained):
    traj = report.trajectory
    return {
        "constrained": constrained,
        "cost": report.cost,
        "iterations": report.iterations,
        "termination": report.termination,
        "solve_time_s": elapsed,
        "pieces": traj.num_pieces,
        "total_duration": traj.total_duration,
        "durations": traj.durations.tolist(),
        "tight": list(report.tight),
        "history": report.history,
        "recursion": report.recursion,
    }


def _cmd_optimize(args):
    from .bench import solve_problem
    from .io import dump_samples, load_problem, save_trajectory, write_samples_csv

    problem = load_problem(args.problem)
    report, elapsed = solve_problem(problem, args.constrained)
    summary = _report_dict(report, elapsed, args.constrained)
    if args.out_samples:
        write_samples_csv(dump_samples(report.trajectory, args.dt), args.out_samples)
    if args.out_trajectory:
        save_trajectory(report.trajectory, args.out_trajectory, problem.to_dict()["constraints"])
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(summary, fh, indent=2)
    print(f"cost {summary['cost']:.6f}  duration {summary['total_duration']:.4f} s  "
          f"iterations {summary['iterations']}  ({summary['termination']})  "
          f"time {1e3 * elapsed:.2f} ms")
    return EXIT_OK


def _cmd_check(args):
    from .feasibility import check_trajectory
    from .io import load_problem, load_trajectory, problem_from_dict

    traj, stored = load_trajectory(args.trajectory)
    if args.problem:
        cons = load_problem(args.problem).constraints()
    else:
        doc = {"waypoints": traj.derivatives[:, 0, :].tolist()}
        if stored is not None:
            doc["constraints"] = stored
        cons = problem_from_dict(doc).constraints()
    verdicts = check_trajectory(traj, cons)
    bad = [m for m, v in enumerate(verdicts) if not v.feasible]
    tight = [m for m, v in enumerate(verdicts) if v.tight]
    print(json.dumps({"feasible": not bad, "infeasible_pieces": bad, "tight_pieces": tight}))
    return EXIT_OK if not bad else EXIT_INFEASIBLE


def _cmd_bench(args):
    from .bench import run_benchmark

    def progress(M, trial):
        if args.verbose:
            print(f"  M={M} trial {trial + 1}/{args.trials}", file=sys.stderr)

    report = run_benchmark(args.pieces, args.trials, args.seed, args.repeat, progress)
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report, fh, indent=2)
    print(f"{'M':>4} {'unc ms':>10} {'con ms':>10} {'con/unc cost':>14} {'fail':>5}")
    for s in report["sizes"]:
        tu, tc = s["unconstrained"]["time"]["mean"], s["constrained"]["time"]["mean"]
        r = s["constrained"]["normalized_cost"]["mean"]
        fmt = lambda x, k=1e3: "   n/a" if x is None else f"{k * x:10.3f}"
        print(f"{s['pieces']:>4} {fmt(tu)} {fmt(tc)} {fmt(r, 1.0):>14} {len(s['failures']):>5}")
    for flag in report["flags"]:
        print(f"flag: {flag}")
    return EXIT_OK


def _cmd_gen(args):
    from .io import random_walk_problem, save_problem

    problem = random_walk_problem(args.pieces, args.seed)
    if args.out:
        save_problem(problem, args.out)
    else:
        print(json.dumps(problem.to_dict(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="amtraj", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    o = sub.add_parser("optimize", help="optimize a problem file")
    o.add_argument("problem")
    o.add_argument("--constrained", action="store_true", help="enforce speed/acceleration/obstacle constraints")
    o.add_argument("--out-samples", help="CSV file for sampled states")
    o.add_argument("--dt", type=float, default=0.01, help="sampling step for --out-samples")
    o.add_argument("--out-trajectory", help="JSON file for the optimized trajectory")
    o.add_argument("--report", help="JSON file for the solve report")
    o.set_defaults(func=_cmd_optimize)

    c = sub.add_parser("check", help="check feasibility of a trajectory file")
    c.add_argument("trajectory")
    c.add_argument("--problem", help="take constraints from this problem file")
    c.set_defaults(func=_cmd_check)

    b = sub.add_parser("bench", help="random-walk benchmark")
    b.add_argument("--pieces", type=int, nargs="+", default=[5, 10, 20, 30, 40, 50, 60])
    b.add_argument("--trials", type=int, default=10)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--repeat", type=int, default=1, help="median of this many timed runs")
    b.add_argument("--report", help="JSON file for the benchmark report")
    b.add_argument("-v", "--verbose", action="store_true")
    b.set_defaults(func=_cmd_bench)

    g = sub.add_parser("gen", help="generate a random-walk problem file")
    g.add_argument("--pieces", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--out")
    g.set_defaults(func=_cmd_gen)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "dt", None) is not None and args.dt <= 0:
        print("error: --dt must be positive", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return args.func(args)
    except ProblemFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InfeasibleInitialError, ConstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE_INITIAL
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InvalidProblemError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
