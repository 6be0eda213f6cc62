"""Command-line surface: certify, attack, gap-bench, inspect.

Exit codes: 0 success, 2 usage/config/IO error, 3 resource budget exceeded,
4 internal numerical failure. All outputs are reproducible byte-for-byte
under a fixed seed and fixed settings.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from .attack import PgdSettings, pgd_attack
from .bounds import PerturbationRegion
from .conic_solver import SolverSettings
from .harness import CertifyOptions, certify_dataset, read_dataset, write_report
from .network import load_network
from .sdp_relax import moment_index_map
from .theory import GapInvariantError, gap_experiment

MAX_BENCH_SIZE = 24  # keeps the moment dimension n = 1 + 2m at most 49


class CliError(Exception):
    """Configuration or IO problem; maps to exit code 2."""


def _load_net(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return load_network(fh.read())
    except OSError as exc:
        raise CliError(f"cannot read network {path}: {exc}") from exc
    except ValueError as exc:
        raise CliError(f"bad network file {path}: {exc}") from exc


def _read_data(path, net):
    try:
        data = read_dataset(path)
    except OSError as exc:
        raise CliError(f"cannot read dataset {path}: {exc}") from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    d = data[0][1].shape[0]
    if d != net.input_dim:
        raise CliError(f"dataset has {d} features but the network expects {net.input_dim}")
    return data


def _default_jobs(value):
    if value is not None:
        return value
    env = os.environ.get("CERTIKIT_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise CliError(f"CERTIKIT_JOBS must be an integer, got {env!r}")
    return 1


def _solver_settings(args):
    tol = args.solver_tol if args.solver_tol is not None else 1e-6
    return SolverSettings(
        abs_tol=tol,
        rel_tol=tol,
        max_iter=args.solver_max_iter,
    )


def cmd_certify(args) -> int:
    if args.eps < 0:
        raise CliError("--eps must be nonnegative")
    if args.method == "lp" and (args.no_intermediate_quad or args.no_last_layer_quad):
        raise CliError("the quadratic-row ablations only apply to --method sdp")
    net = _load_net(args.net)
    data = _read_data(args.data, net)
    options = CertifyOptions(
        solver=_solver_settings(args),
        include_intermediate_quadratic=not args.no_intermediate_quad,
        include_last_layer_quadratic=not args.no_last_layer_quad,
        pgd=None if args.no_pgd else PgdSettings(
            step_size=args.pgd_step, iterations=args.pgd_iters,
            restarts=args.pgd_restarts, seed=args.seed,
        ),
    )
    verdicts, summary = certify_dataset(
        net, data, args.eps, method=args.method, options=options,
        jobs=_default_jobs(args.jobs),
    )
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            write_report(fh, verdicts, summary)
    except OSError as exc:
        raise CliError(f"cannot write report {args.out}: {exc}") from exc
    print(
        f"{summary.num_points} points, {summary.num_certified} certified "
        f"({summary.fraction_not_certified:.3f} not certified); report: {args.out}"
    )
    return 0


def cmd_attack(args) -> int:
    if args.eps < 0:
        raise CliError("--eps must be nonnegative")
    net = _load_net(args.net)
    data = _read_data(args.data, net)
    settings = PgdSettings(
        step_size=args.step, iterations=args.iters, restarts=args.restarts, seed=args.seed
    )
    results = []
    for i, (label, x) in enumerate(data):
        region = PerturbationRegion(x, args.eps)
        results.append((i, label, pgd_attack(net, region, label, settings)))
    try:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["id", "margin", "success"])
            for i, _, res in results:
                writer.writerow([i, repr(res.closest_margin), int(res.success)])
        if args.dump_adv:
            with open(args.dump_adv, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                for i, label, res in results:
                    writer.writerow([i, label] + [repr(float(v)) for v in res.x_adv])
    except OSError as exc:
        raise CliError(f"cannot write output: {exc}") from exc
    successes = sum(1 for _, _, r in results if r.success)
    print(f"{len(results)} points attacked, {successes} misclassified; margins: {args.out}")
    return 0


def cmd_gapbench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip() != ""]
    except ValueError:
        raise CliError(f"--sizes must be comma-separated integers, got {args.sizes!r}")
    if not sizes or any(s <= 0 for s in sizes):
        raise CliError("--sizes entries must be positive integers")
    if any(s > MAX_BENCH_SIZE for s in sizes):
        print(
            f"error: sizes above {MAX_BENCH_SIZE} exceed the desk-scale budget",
            file=sys.stderr,
        )
        return 3
    if args.trials < 1:
        raise CliError("--trials must be at least 1")
    # The benchmark defaults are tighter than the certify defaults; explicit
    # flags override them.
    settings = _solver_settings(args) if args.solver_tol is not None else None
    table = gap_experiment(
        sizes, args.trials, args.seed, solver_settings=settings, enforce=False
    )
    try:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(table.to_csv())
    except OSError as exc:
        raise CliError(f"cannot write table {args.out}: {exc}") from exc
    violations = table.check_invariants()
    if violations:
        for v in violations:
            print(f"invariant violation: {v}", file=sys.stderr)
        return 4
    print(f"{len(table.rows)} rows, gamma_hat={table.gamma_hat:.6f}; table: {args.out}")
    return 0


def cmd_inspect(args) -> int:
    net = _load_net(args.net)
    sizes = net.layer_sizes
    print(f"input dim:     {net.input_dim}")
    print(f"hidden layers: {net.depth} {list(sizes[1:])}")
    print(f"classes:       {net.num_classes}")
    if net.depth > 0:
        print(f"moment dim:    {moment_index_map(net).n}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="certikit",
        description="Certified robustness bounds for ReLU classifiers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_solver_flags(p):
        p.add_argument("--solver-tol", type=float, default=None,
                       help="solver absolute/relative tolerance (default 1e-6; "
                            "gap-bench uses its own tighter default)")
        p.add_argument("--solver-max-iter", type=int, default=20000,
                       help="solver iteration cap (default 20000)")

    p = sub.add_parser("certify", help="certify a dataset and write a JSONL report")
    p.add_argument("--net", required=True, help="network JSON file")
    p.add_argument("--data", required=True, help="dataset CSV (label, then features)")
    p.add_argument("--eps", type=float, required=True, help="l-infinity radius")
    p.add_argument("--method", choices=("sdp", "lp"), default="sdp")
    p.add_argument("--out", required=True, help="JSONL report path")
    p.add_argument("--no-intermediate-quad", action="store_true",
                   help="drop quadratic interval rows on intermediate blocks (sdp only)")
    p.add_argument("--no-last-layer-quad", action="store_true",
                   help="drop quadratic interval rows on the last block (sdp only)")
    p.add_argument("--no-pgd", action="store_true", help="skip the companion attack statistic")
    p.add_argument("--pgd-step", type=float, default=0.1)
    p.add_argument("--pgd-iters", type=int, default=40)
    p.add_argument("--pgd-restarts", type=int, default=5)
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: CERTIKIT_JOBS or 1)")
    p.add_argument("--seed", type=int, default=0)
    add_solver_flags(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("attack", help="run the attack and write per-point margins CSV")
    p.add_argument("--net", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--out", required=True, help="margins CSV path")
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--iters", type=int, default=40)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-adv", default=None, help="also store adversarial inputs CSV")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("gap-bench", help="random-instance LP/SDP gap benchmark")
    p.add_argument("--sizes", required=True, help="comma-separated sizes, m = d per size")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV path")
    add_solver_flags(p)
    p.set_defaults(func=cmd_gapbench)

    p = sub.add_parser("inspect", help="print a network summary")
    p.add_argument("--net", required=True)
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GapInvariantError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
