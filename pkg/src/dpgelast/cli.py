"""Command-line entry point: ``dpgelast {convergence,locking,lshape} ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .material import get_problem, lame_from_E_nu
from .study import locking_ratio_table, run_convergence, run_locking, run_lshape, to_csv

GLOBAL_DEFAULTS = {"solver": "cholesky", "tol": 1e-10, "threads": "1", "verbose": False}


def _threads(value):
    if value == "auto":
        return value
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1 or 'auto'")
    return n


def _nu_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad list of Poisson ratios: {text!r}") from None


def _global_flags(parser):
    parser.add_argument("--solver", choices=["cholesky", "cg"], default=argparse.SUPPRESS)
    parser.add_argument("--tol", type=float, default=argparse.SUPPRESS)
    parser.add_argument("--threads", type=_threads, default=argparse.SUPPRESS,
                        help="element-loop worker threads, or 'auto'")
    parser.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dpgelast",
        description="DPG for linear elasticity: convergence, locking and L-shape studies (CSV output).")
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convergence", help="uniform refinement study with known solution")
    p.add_argument("--problem", default="smooth-square", choices=["smooth-square", "locking-square"])
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--j", type=int, choices=[0, 1], default=0)
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--post", action="store_true")
    p.add_argument("--E", type=float, default=None, help="Young's modulus (locking-square)")
    p.add_argument("--nu", type=float, default=None, help="Poisson ratio (locking-square)")
    p.add_argument("--lam", type=float, default=None, help="Lame lambda (smooth-square)")
    p.add_argument("--mu", type=float, default=None, help="Lame mu (smooth-square)")
    p.add_argument("--out", type=Path)
    _global_flags(p)

    p = sub.add_parser("locking", help="locking benchmark over several Poisson ratios")
    p.add_argument("--nu", type=_nu_list, default=[0.3, 0.4, 0.49, 0.499, 0.4999])
    p.add_argument("--E", type=float, default=1e5)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--j", type=int, choices=[0, 1], default=0)
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--post", action="store_true")
    p.add_argument("--out", type=Path,
                   help="writes <stem>_nu<value>.csv per ratio and <stem>_ratio.csv")
    _global_flags(p)

    p = sub.add_parser("lshape", help="L-shape with uniform or adaptive refinement")
    p.add_argument("--mode", choices=["uniform", "adaptive"], default="adaptive")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--j", type=int, choices=[0, 1], default=0)
    p.add_argument("--post", action="store_true")
    p.add_argument("--E", type=float, default=1.0)
    p.add_argument("--nu", type=float, default=0.4)
    p.add_argument("--out", type=Path)
    _global_flags(p)
    return parser


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n", encoding="ascii") as fh:
            fh.write(text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    for key, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    solve_kw = {"solver": args.solver, "tol": args.tol, "threads": args.threads}

    if args.command == "convergence":
        if args.problem == "locking-square":
            kw = {k: v for k, v in (("E", args.E), ("nu", args.nu)) if v is not None}
            problem = get_problem(args.problem, **kw)
        else:
            kw = {}
            if args.lam is not None or args.mu is not None:
                from .material import LameParams
                kw["p"] = LameParams(1.0 if args.lam is None else args.lam,
                                     1.0 if args.mu is None else args.mu)
            problem = get_problem(args.problem, **kw)
        records = run_convergence(problem, args.k, args.j, args.levels, args.post, **solve_kw)
        _emit(to_csv(records), args.out)

    elif args.command == "locking":
        for nu in args.nu:
            try:
                lame_from_E_nu(args.E, nu)  # validate before any work
            except ValueError as exc:
                parser.error(str(exc))
        results = run_locking(args.nu, args.E, args.k, args.j, args.levels, args.post, **solve_kw)
        ratio = "level,ratio_err_u\n" + "".join(
            f"{lev},{val:.11e}\n" for lev, val in locking_ratio_table(results))
        if args.out is None:
            for nu, records in results.items():
                sys.stdout.write(f"# nu={nu!r}\n" + to_csv(records))
            sys.stdout.write("# max/min over nu\n" + ratio)
        else:
            stem = args.out.with_suffix("")
            for nu, records in results.items():
                _emit(to_csv(records), Path(f"{stem}_nu{nu!r}.csv"))
            _emit(ratio, Path(f"{stem}_ratio.csv"))

    elif args.command == "lshape":
        records, slope = run_lshape(args.mode, args.theta, args.steps, args.k, args.j, args.post,
                                    E=args.E, nu=args.nu, **solve_kw)
        _emit(to_csv(records), args.out)
        print(f"slope of log(eta) vs log(ndof), last 3 points: {slope:.4f}", file=sys.stderr)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
