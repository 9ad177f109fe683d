"""``deltavar`` command line.

Exit codes: 0 success, 2 input or validation error, 3 numerical failure or
disagreement.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import __version__
from .calculus import GridFunction, check_exgc_identity
from .config import ConfigError, ProblemConfig, load_config, resolve_seed
from .errors import DeltaVarError, DomainError, NonFiniteValue
from .euler_lagrange import fit_constants
from .report import TrajectoryFileError, dumps, read_trajectory_csv, trajectory_table, write_trajectory_csv
from .solver import SolveOptions, minimize_direct, verify_stationarity_equivalence
from .timescale import h_grid
from .variational import embed_free, functional_value, is_admissible

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("deltavar")


class CommandFailed(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _solve(cfg: ProblemConfig):
    p = cfg.build_problem()
    opts = SolveOptions(
        max_iterations=cfg.tolerances.max_iterations,
        gradient_tolerance=cfg.tolerances.gradient,
        direction=cfg.direction,
    )
    try:
        result = minimize_direct(p, opts)
    except (DomainError, NonFiniteValue) as exc:
        raise CommandFailed(EXIT_NUMERIC, f"numerical failure: {exc}") from None
    return p, result


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    seed = resolve_seed(args.seed, cfg)
    p, result = _solve(cfg)
    el = fit_constants(p, result.trajectory, tol=cfg.tolerances.stationary)
    report = {
        "command": "solve",
        "seed": seed,
        "config": cfg.echo(),
        "functional_value": result.value,
        "constants": list(el.constants),
        "residual_sup": el.residual_sup,
        "residual_l2": el.residual_l2,
        "gradient_sup": result.gradient_sup,
        "iterations": result.iterations,
        "verdicts": {
            "converged": result.converged,
            "admissible": is_admissible(p, result.trajectory, cfg.tolerances.admissible),
            "stationary": el.stationary,
        },
        "euler_lagrange": el.as_dict(),
        "trajectory": trajectory_table(result.trajectory, p.order),
    }
    print(dumps(report))
    if args.csv:
        write_trajectory_csv(result.trajectory, args.csv)
    if not result.converged:
        print(f"deltavar: solver did not converge in {result.iterations} iterations "
              f"(gradient sup {result.gradient_sup:.3g})", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    seed = resolve_seed(args.seed, cfg)
    p = cfg.build_problem()
    y = read_trajectory_csv(args.trajectory, p.ts)
    tol = cfg.tolerances
    try:
        value = functional_value(p, y)
        el = fit_constants(p, y, tol=tol.stationary)
        eq = verify_stationarity_equivalence(p, y, tol=tol.stationary)
    except DomainError as exc:
        raise CommandFailed(EXIT_NUMERIC, f"numerical failure: {exc}") from None
    report = {
        "command": "check",
        "seed": seed,
        "config": cfg.echo(),
        "functional_value": value,
        "constants": list(el.constants),
        "residual_sup": el.residual_sup,
        "residual_l2": el.residual_l2,
        "gradient_sup": eq.gradient_sup,
        "verdicts": {
            "admissible": is_admissible(p, y, tol.admissible),
            "stationary": el.stationary,
            "agree": eq.agree,
        },
        "euler_lagrange": el.as_dict(),
        "equivalence": eq.as_dict(),
        "trajectory": trajectory_table(y, p.order),
    }
    print(dumps(report))
    return EXIT_OK


def random_polynomial(degree: int, rng: np.random.Generator) -> np.ndarray:
    """Coefficients, highest power first, for ``np.polyval``."""
    return rng.uniform(-1.0, 1.0, size=degree + 1)


def cmd_identity(args) -> int:
    if args.deg < 0:
        raise CommandFailed(EXIT_INPUT, "--deg must be nonnegative")
    if not 0 <= args.i < args.j:
        raise CommandFailed(EXIT_INPUT, "need 0 <= i < j")
    seed = resolve_seed(args.seed)
    try:
        ts = h_grid(args.a, args.b, args.h)
    except DeltaVarError as exc:
        raise CommandFailed(EXIT_INPUT, f"bad grid: {exc}") from None
    if len(ts) < args.j + 2:
        raise CommandFailed(EXIT_INPUT, f"grid of {len(ts)} points too short for j={args.j}")
    coeffs = random_polynomial(args.deg, np.random.default_rng(seed))
    f = GridFunction(ts, np.polyval(coeffs, ts.points))
    discrepancy = check_exgc_identity(f, args.i, args.j, h=args.h)
    bound = 1e-10 * (1.0 + float(np.max(np.abs(f.values))))
    report = {
        "command": "identity",
        "seed": seed,
        "h": args.h, "a": args.a, "b": args.b,
        "degree": args.deg, "i": args.i, "j": args.j,
        "coefficients": coeffs,
        "discrepancy": discrepancy,
        "bound": bound,
        "holds": discrepancy <= bound,
    }
    print(dumps(report))
    return EXIT_OK if discrepancy <= bound else EXIT_NUMERIC


def cmd_oracle(args) -> int:
    if args.trials < 0:
        raise CommandFailed(EXIT_INPUT, "--trials must be nonnegative")
    cfg = load_config(args.config)
    seed = resolve_seed(args.seed, cfg)
    p, result = _solve(cfg)
    rng = np.random.default_rng(seed)
    tol = cfg.tolerances.stationary
    base = p.interior(result.trajectory)
    amplitude = 0.1 * (1.0 + float(np.max(np.abs(result.trajectory.values))))
    candidates = [("minimizer", result.trajectory)]
    for k in range(args.trials):
        free = base + amplitude * rng.normal(size=base.size)
        candidates.append((f"perturbed-{k + 1}", embed_free(p, free)))
    table = []
    for label, y in candidates:
        try:
            eq = verify_stationarity_equivalence(p, y, tol=tol)
        except DomainError as exc:
            raise CommandFailed(EXIT_NUMERIC, f"numerical failure on {label}: {exc}") from None
        table.append({"trajectory": label, **eq.as_dict()})
    agreed = sum(row["agree"] for row in table)
    report = {
        "command": "oracle",
        "seed": seed,
        "config": cfg.echo(),
        "trials": args.trials,
        "solver_converged": result.converged,
        "agreement": f"{agreed}/{len(table)}",
        "table": table,
    }
    print(dumps(report))
    if agreed != len(table):
        print(f"deltavar: {len(table) - agreed} disagreement(s)", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deltavar",
        description="Calculus of variations on finite time scales.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="minimize the functional and check the Euler-Lagrange condition")
    s.add_argument("config")
    s.add_argument("--csv", help="write the trajectory as t,y CSV")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("check", help="evaluate the Euler-Lagrange condition on a given trajectory")
    c.add_argument("config")
    c.add_argument("trajectory")
    c.add_argument("--seed", type=int)
    c.set_defaults(func=cmd_check)

    i = sub.add_parser("identity", help="check the nested-integral derivative identity on an h-grid")
    i.add_argument("--h", type=float, required=True)
    i.add_argument("--a", type=float, required=True)
    i.add_argument("--b", type=float, required=True)
    i.add_argument("--deg", type=int, required=True)
    i.add_argument("--i", type=int, required=True)
    i.add_argument("--j", type=int, required=True)
    i.add_argument("--seed", type=int)
    i.set_defaults(func=cmd_identity)

    o = sub.add_parser("oracle", help="compare gradient and Euler-Lagrange stationarity tests")
    o.add_argument("config")
    o.add_argument("--trials", type=int, default=20)
    o.add_argument("--seed", type=int)
    o.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except CommandFailed as exc:
        print(f"deltavar: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, TrajectoryFileError) as exc:
        print(f"deltavar: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DeltaVarError as exc:
        print(f"deltavar: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
