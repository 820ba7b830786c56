"""Command-line front end: graphs-check, simulate, sweep.

Exit codes: 0 success, 2 usage/config error, 3 numerical failure.  All
outputs are deterministic; rerunning a command with the same config and
--out directory overwrites byte-identical files.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import (SIMULATE_KEYS, SWEEP_KEYS, build_problem_spec,
                     parse_config, parse_eps_list)
from .errors import ConfigError, DataError, ParameterError, RunError, StepError
from .graphs import GRAPH_KINDS, make_graph, perturbation_for, property_battery
from .harness import (lipschitz_xi_check, monitor_bounds, run_sweep,
                      vanishing_terms_check)
from .solver import solve_ch_eps, solve_limit

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _say(quiet, *args):
    if not quiet:
        print(*args)


def cmd_graphs_check(names, out_dir, quiet):
    """Run the invariant battery on the named graphs (or all)."""
    if not names or names == ["all"]:
        names = list(GRAPH_KINDS)
    unknown = [n for n in names if n not in GRAPH_KINDS]
    if unknown:
        print(f"unknown graph name(s) {unknown}; known: {', '.join(GRAPH_KINDS)}",
              file=sys.stderr)
        return EXIT_USAGE
    all_ok = True
    rows = []
    for name in names:
        results = property_battery(make_graph(name))
        for check, (ok, detail) in results.items():
            rows.append((name, check, detail, ok))
            all_ok &= ok
    width = max(len(r[1]) for r in rows)
    _say(quiet, f"{'graph':<10} {'check':<{width}} {'value':>13}  status")
    for name, check, detail, ok in rows:
        _say(quiet, f"{name:<10} {check:<{width}} {detail:>13.4e}  "
             + ("PASS" if ok else "FAIL"))
    _say(quiet, f"graphs-check: {'all checks passed' if all_ok else 'FAILURES'}")
    return EXIT_OK if all_ok else EXIT_NUMERICAL


def _heat_oracle_error(cfg, spec, traj):
    """Max-norm gap to the separated-variables solution of the heat equation."""
    if spec.graph.kind != "linear":
        raise ConfigError("oracle=heat requires graph.kind = linear")
    u0spec = cfg.get("u0", "")
    if not u0spec.startswith("cosine:"):
        raise ConfigError("oracle=heat requires u0 = cosine:<m0>,<amp>")
    if np.any(spec.src.g != 0.0) or np.any(spec.src.h_left != 0.0) \
            or np.any(spec.src.h_right != 0.0):
        raise ConfigError("oracle=heat requires zero sources")
    if spec.eps != 0.0:
        raise ConfigError("oracle=heat requires the limit problem (eps = 0)")
    m0, amp = (float(p) for p in u0spec.split(":", 1)[1].split(","))
    grid = spec.grid
    T = traj.t[-1]
    rate = (np.pi / grid.length) ** 2
    exact = m0 + amp * np.exp(-rate * T) * np.cos(np.pi * grid.x / grid.length)
    return float(np.max(np.abs(traj.u[-1] - exact)))


def cmd_simulate(config_path, out_dir, quiet):
    """Run one ProblemSpec and write trajectory CSV plus snapshots."""
    cfg = parse_config(config_path, SIMULATE_KEYS)
    spec = build_problem_spec(cfg)
    oracle = cfg.get("oracle", "none")
    if oracle not in ("none", "heat"):
        raise ConfigError(f"{config_path}: unknown oracle {oracle!r}")
    traj = solve_ch_eps(spec) if spec.eps > 0.0 else solve_limit(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out / "trajectory.csv")
    stride = cfg.get_int("output.snapshot_stride", 0)
    traj.save_snapshots(out, stride)
    _say(quiet, f"simulate: {traj.t.size - 1} steps, "
         f"mass drift {np.max(np.abs(traj.mass - traj.mass[0])):.3e}, "
         f"wrote {out / 'trajectory.csv'}")
    if oracle == "heat":
        err = _heat_oracle_error(cfg, spec, traj)
        print(f"max_err={err:.6g}")
    return EXIT_OK


def cmd_sweep(config_path, out_dir, threads, quiet):
    """Run a relaxation sweep with bound monitors and reports."""
    cfg = parse_config(config_path, SWEEP_KEYS)
    spec = build_problem_spec(cfg)
    if spec.eps != 0.0:
        raise ConfigError(f"{config_path}: a sweep config must not fix solver.eps")
    eps_list = parse_eps_list(cfg)
    try:
        report = run_sweep(spec, eps_list, threads=threads)
    except (ParameterError, DataError) as err:
        raise ConfigError(f"{config_path}: {err}") from err
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.to_csv(out / "sweep.csv")
    report.to_svg(out / "sweep.svg")
    for note in report.notes:
        _say(quiet, f"note: {note}")

    ok = True
    if report.passed is None:
        print("RATE insufficient points, no fit")
    else:
        verdict = "PASS" if report.passed else "FAIL"
        print(f"RATE p={report.slope:.4f} (threshold {report.threshold:.4f}) "
              f"{verdict}")
        ok &= report.passed
    if report.bounds is not None and report.bounds.slopes:
        worst = min(report.bounds.slopes.values())
        verdict = "PASS" if report.bounds.passed else "FAIL"
        print(f"BOUNDS worst slope {worst:.4f} (threshold -0.0500) {verdict}")
        ok &= report.bounds.passed
    van = vanishing_terms_check(report.trajectories,
                                spec.perturbation or perturbation_for(spec.graph))
    if van.eps.size >= 2:
        verdict = "PASS" if van.monotone else "FAIL"
        print(f"VANISHING eps|u|_V order {van.eps_u_V_order:.3f}, "
              f"pi order {van.pi_order:.3f}, monotone {verdict}")
        ok &= van.monotone
    lip = lipschitz_xi_check(report, spec.graph)
    if lip is None:
        _say(quiet, "LIPSCHITZ skipped (graph has unbounded slope)")
    else:
        verdict = "PASS" if lip.passed else "FAIL"
        print(f"LIPSCHITZ xi-gap bound (C_beta={lip.c_beta:g}) {verdict}")
        ok &= lip.passed
    _say(quiet, f"wrote {out / 'sweep.csv'} and {out / 'sweep.svg'}")
    return EXIT_OK if ok else EXIT_NUMERICAL


def build_parser():
    parser = argparse.ArgumentParser(
        prog="chrelax",
        description="Cahn-Hilliard relaxation laboratory for nonlinear diffusion")
    sub = parser.add_subparsers(dest="command", required=True)

    p_g = sub.add_parser("graphs-check", help="run the graph invariant battery")
    p_g.add_argument("names", nargs="*", default=["all"],
                     help="graph names or 'all'")

    p_s = sub.add_parser("simulate", help="run one simulation from a config")
    p_s.add_argument("config", help="path to a key = value config file")

    p_w = sub.add_parser("sweep", help="run a relaxation sweep from a config")
    p_w.add_argument("config", help="path to a key = value config file")

    for p in (p_g, p_s, p_w):
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="concurrency of sweep members")
        p.add_argument("--quiet", action="store_true",
                       help="suppress informational output")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize the success path
        return int(exc.code) if exc.code else EXIT_OK
    try:
        if args.command == "graphs-check":
            return cmd_graphs_check(args.names, args.out, args.quiet)
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out, args.quiet)
        if args.command == "sweep":
            return cmd_sweep(args.config, args.out, args.threads, args.quiet)
        parser.error(f"unknown command {args.command!r}")
    except (ConfigError, ParameterError, DataError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (StepError, RunError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
