"""Command-line entry point: ``tensorspan <subcommand> ...``.

Exit codes: 0 success, 2 input error, 3 resource-guard refusal,
4 internal inconsistency (disagreeing oracles or ranks, unstable tracking).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, TextIO

import numpy as np

from . import exactla
from .bbw import h_E, h_omega
from .critical import (
    DegenerateTensor,
    DenseTensor,
    ResourceGuard,
    alpha_matrix,
    critical_dim,
    koszul_oracle,
)
from .exactla import DEFAULT_PRIME, SECOND_PRIME, RankDisagreement
from .formats import TensorFormat, critical_dim_formula, dimension_inequality, exception_scan
from .polyarith import ed_degree
from .sweep import DEFAULT_MAX_COST, load_report, report, sweep
from .zsolver import MAX_PATHS, PathGuard, TrackingUnstable, solve_singular_tuples

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_GUARD = 3
EXIT_INCONSISTENT = 4


class Inconsistency(RuntimeError):
    pass


def _format(text: str) -> TensorFormat:
    try:
        return TensorFormat.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


@contextmanager
def _sink(path: str | None) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _field_tensor(args) -> DenseTensor:
    """Tensor over F_p from ``--tensor-file`` or ``--format`` with ``--random``."""
    if args.tensor_file:
        T = DenseTensor.load(args.tensor_file)
        if T.prime is None:
            if not np.issubdtype(T.entries.dtype, np.integer):
                raise ValueError("exact commands need integer tensor entries")
            T = DenseTensor(T.format, T.entries, args.prime)
        return T
    if args.format is None:
        raise ValueError("give --tensor-file or --format with --random")
    return DenseTensor.random(args.format, args.seed, args.prime)


def _add_tensor_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", type=_format, help='tensor format such as "3x3x6"')
    p.add_argument("--tensor-file", help='JSON file {"dims": [...], "entries": [...]}')
    p.add_argument(
        "--random",
        action="store_true",
        help="draw a random tensor from --seed/--prime (the default without --tensor-file)",
    )


# -- subcommands ----------------------------------------------------------------


def cmd_ed_degree(args, out: TextIO) -> int:
    print(ed_degree(args.fmt.ns), file=out)
    return EXIT_OK


def cmd_cohomology(args, out: TextIO) -> int:
    if args.cohom_format is not None:
        if args.r is None or args.q is None:
            raise ValueError("--format needs --r and --q")
        print(h_E(args.cohom_format, args.r, args.q), file=out)
        return EXIT_OK
    if None in (args.n, args.forms_r, args.twist, args.q):
        raise ValueError("give --format/--r/--q or --n/--forms-r/--twist/--q")
    print(h_omega(args.n, args.forms_r, args.twist, args.q), file=out)
    return EXIT_OK


def cmd_critical_dim(args, out: TextIO) -> int:
    if args.tensor_file:
        T = DenseTensor.load(args.tensor_file)
        if T.prime is None and np.issubdtype(T.entries.dtype, np.integer):
            T = DenseTensor(T.format, T.entries, args.prime)
    else:
        T = _field_tensor(args)
    value = critical_dim(T)
    if args.compare:
        expected = critical_dim_formula(T.format)
        print(json.dumps({"format": str(T.format), "critical_dim": value, "formula": expected}), file=out)
        if value != expected:
            # a special tensor may legitimately exceed the generic value
            logging.getLogger(__name__).warning("critical dim differs from the generic formula")
    else:
        print(value, file=out)
    return EXIT_OK


def cmd_alpha_rank(args, out: TextIO) -> int:
    if args.protocol:
        if args.tensor_file:
            raise ValueError("--protocol draws its own random tensors; drop --tensor-file")
        if args.format is None:
            raise ValueError("--protocol needs --format")
        fmt = args.format

        def build(p: int, s: int):
            return alpha_matrix(DenseTensor.random(fmt, s, p), args.max_cost)

        result = exactla.generic_rank(build, args.primes, args.seeds, strict=False)
        A = build(args.prime, args.seed)
        payload = {
            "format": str(fmt),
            "rows": A.rows,
            "cols": A.cols,
            "rank": result.value,
            "kernel_dim": A.cols - result.value,
            "observations": {f"{p}/{s}": r for (p, s), r in result.observations.items()},
        }
        print(json.dumps(payload), file=out)
        if not result.agreed:
            raise RankDisagreement(f"ranks disagree: {result.observations}")
        return EXIT_OK
    T = _field_tensor(args)
    A = alpha_matrix(T, args.max_cost)
    r = exactla.rank(A)
    payload = {"format": str(T.format), "rows": A.rows, "cols": A.cols, "rank": r, "kernel_dim": A.cols - r}
    print(json.dumps(payload), file=out)
    return EXIT_OK


def cmd_koszul(args, out: TextIO) -> int:
    if args.tensor_file:
        T = _field_tensor(args)
    else:
        T = DenseTensor.random((args.a + 1, args.b + 1, args.a + args.b + 2), args.seed, args.prime)
    res = koszul_oracle(args.a, args.b, T, seed=args.seed)
    payload = {"a": args.a, "b": args.b, "complex": res.complex_mode, "artinian": res.artinian_mode}
    print(json.dumps(payload), file=out)
    if not res.agree:
        raise Inconsistency("the two Koszul oracle modes disagree")
    return EXIT_OK


def cmd_solve_tuples(args, out: TextIO) -> int:
    if args.tensor_file:
        T = DenseTensor.load(args.tensor_file)
    elif args.format is not None:
        rng = np.random.default_rng(args.seed)
        T = DenseTensor(args.format, rng.standard_normal(args.format.size))
    else:
        raise ValueError("give --format or --tensor-file")
    rep = solve_singular_tuples(T, seed=args.seed, tol=args.tol, max_paths=args.max_paths)
    print(json.dumps(rep.to_dict()), file=out)
    return EXIT_OK


def cmd_sweep(args, out: TextIO) -> int:
    done = load_report(args.resume) if args.resume and Path(args.resume).exists() else []
    rows = sweep(
        args.k,
        args.max_n,
        primes=args.primes,
        seeds=args.seeds,
        max_cost=args.max_cost,
        done=done,
        workers=args.workers,
    )
    out.write(report(rows, args.report))
    return EXIT_OK


def cmd_check_inequalities(args, out: TextIO) -> int:
    found = exception_scan(args.k, args.bound)
    for t in found:
        rec = dimension_inequality(t)
        print(f"{','.join(map(str, t))}\tlhs={rec.lhs}\trhs={rec.rhs}", file=out)
    print(f"# {len(found)} exceptions for k={args.k}, bound={args.bound}", file=out)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tensorspan",
        description="Singular vector tuples and critical spaces of tensors beyond boundary format",
    )
    parser.add_argument("--prime", type=int, default=DEFAULT_PRIME, help="field prime for exact runs")
    parser.add_argument("--seed", type=int, default=1, help="random seed")
    parser.add_argument("--output", default=None, help="write results here instead of stdout")
    parser.add_argument("-v", "--verbose", action="store_true")
    # the same flags are accepted after the subcommand; SUPPRESS keeps the top-level value otherwise
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--prime", type=int, default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--output", default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    _sub = parser.add_subparsers(dest="command", required=True)

    class _Sub:
        @staticmethod
        def add_parser(name: str, **kwargs) -> argparse.ArgumentParser:
            return _sub.add_parser(name, parents=[common], **kwargs)

    sub = _Sub()

    p = sub.add_parser("ed-degree", help="number of singular vector tuples of a general tensor")
    p.add_argument("fmt", type=_format, metavar="FORMAT")
    p.set_defaults(func=cmd_ed_degree)

    p = sub.add_parser("cohomology", help="h^q of E^(r) or of twisted forms on P^n")
    p.add_argument("--format", dest="cohom_format", type=_format)
    p.add_argument("--r", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--forms-r", type=int)
    p.add_argument("--twist", type=int)
    p.set_defaults(func=cmd_cohomology)

    p = sub.add_parser("critical-dim", help="dimension of the critical space")
    _add_tensor_source(p)
    p.add_argument("--compare", action="store_true", help="also print the generic formula (JSON)")
    p.set_defaults(func=cmd_critical_dim)

    p = sub.add_parser("alpha-rank", help="rank and kernel of the alpha map")
    _add_tensor_source(p)
    p.add_argument("--protocol", action="store_true", help="two primes x two seeds")
    p.add_argument("--primes", type=_int_list, default=[DEFAULT_PRIME, SECOND_PRIME])
    p.add_argument("--seeds", type=_int_list, default=[1, 2])
    p.add_argument("--max-cost", type=float, default=DEFAULT_MAX_COST)
    p.set_defaults(func=cmd_alpha_rank)

    p = sub.add_parser("koszul-oracle", help="Tor/Koszul cross-check for (a+1, b+1, a+b+2)")
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--tensor-file")
    p.add_argument("--format", type=_format, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_koszul)

    p = sub.add_parser("solve-tuples", help="all singular vector tuples by homotopy continuation")
    p.add_argument("--format", type=_format, help="random real Gaussian tensor of this format")
    p.add_argument("--tensor-file")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-paths", type=int, default=MAX_PATHS)
    p.set_defaults(func=cmd_solve_tuples)

    p = sub.add_parser("sweep", help="max-rank sweep over beyond-by-one formats")
    p.add_argument("--k", type=int, required=True, help="number of factors before the last")
    p.add_argument("--max-n", type=int, required=True)
    p.add_argument("--primes", type=_int_list, default=[DEFAULT_PRIME, SECOND_PRIME])
    p.add_argument("--seeds", type=_int_list, default=[1, 2])
    p.add_argument("--max-cost", type=float, default=DEFAULT_MAX_COST)
    p.add_argument("--report", choices=["json", "csv"], default="json")
    p.add_argument("--resume", help="reuse rows from an earlier report file")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check-inequalities", help="formats where the dimension inequality fails")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--bound", type=int, required=True)
    p.set_defaults(func=cmd_check_inequalities)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        with _sink(args.output) as out:
            return args.func(args, out)
    except (ResourceGuard, PathGuard) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (Inconsistency, RankDisagreement, TrackingUnstable, AssertionError) as exc:
        print(f"inconsistency: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except (ValueError, TypeError, DegenerateTensor, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
