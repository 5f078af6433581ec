"""Max-rank sweeps of the alpha map over beyond-by-one formats, with JSON-lines/CSV reports."""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from . import exactla
from .critical import DenseTensor, ResourceGuard, alpha_cost, alpha_matrix
from .exactla import DEFAULT_PRIMES, DEFAULT_SEEDS
from .formats import alpha_dimensions, beyond_by_one, canonical_tuples, critical_dim_formula
from .polyarith import ed_degree

log = logging.getLogger(__name__)

# about 10 s of FLINT elimination per matrix on one core
DEFAULT_MAX_COST = 3e10

MAX_RANK = "MaxRank"
DEFECTIVE = "Defective"
CONSISTENT = "Consistent"
VIOLATION = "Violation"
DEFECTIVE_FAMILY = "DefectiveFamily"
SKIPPED = "Skipped"


@dataclass(frozen=True)
class SweepRow:
    format: str
    first_k: str
    domain_dim: int
    codomain_dim: int
    alpha_rank: int | None
    kernel_dim: int | None
    expected_kernel: int
    classification: str | None
    conjecture_status: str
    observations: str = ""
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


FIELDS = [f.name for f in fields(SweepRow)]
_INT_FIELDS = {"domain_dim", "codomain_dim", "alpha_rank", "kernel_dim", "expected_kernel"}


def expected_kernel(first_k: Sequence[int]) -> int:
    """Kernel predicted for a general tensor.

    Outside the ``(2, n, n + 2)`` family this is the max-rank value
    ``max(0, domain - codomain)``.  For the family the map has zero codomain,
    so the meaningful prediction is the parameter count instead:
    ``ED`` points span ``P(H_T)`` unless there are fewer than ``dim H_T``.
    """
    fmt = beyond_by_one(first_k)
    if fmt.is_defective_family():
        ns = tuple(first_k) + (sum(first_k) + 1,)
        return max(0, critical_dim_formula(fmt) - ed_degree(ns))
    domain, codomain = alpha_dimensions(first_k)
    return max(0, domain - codomain)


def sweep_row(
    first_k: Sequence[int],
    primes: Sequence[int] = DEFAULT_PRIMES,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    max_cost: float | None = DEFAULT_MAX_COST,
) -> SweepRow:
    """One row; failures are recorded in ``error`` instead of raised."""
    first_k = tuple(sorted(int(v) for v in first_k))
    fmt = beyond_by_one(first_k)
    domain, codomain = alpha_dimensions(first_k)
    expected = expected_kernel(first_k)
    family = fmt.is_defective_family()
    base = dict(
        format=str(fmt),
        first_k=",".join(map(str, first_k)),
        domain_dim=domain,
        codomain_dim=codomain,
        expected_kernel=expected,
    )
    if max_cost is not None and alpha_cost(first_k) > max_cost:
        return SweepRow(
            **base,
            alpha_rank=None,
            kernel_dim=None,
            classification=None,
            conjecture_status=SKIPPED,
            error=f"resource guard: cost {alpha_cost(first_k):.3g} > {max_cost:.3g}",
        )

    def build(p: int, s: int):
        return alpha_matrix(DenseTensor.random(fmt, s, p))

    try:
        result = exactla.generic_rank(build, primes, seeds, strict=False)
    except Exception as exc:  # recorded per row; a sweep never aborts
        log.exception("sweep row %s failed", fmt)
        return SweepRow(
            **base,
            alpha_rank=None,
            kernel_dim=None,
            classification=None,
            conjecture_status=SKIPPED,
            error=f"{type(exc).__name__}: {exc}",
        )
    obs = ";".join(f"{p}/{s}:{r}" for (p, s), r in sorted(result.observations.items()))
    rank = result.value
    kernel = domain - rank
    classification = DEFECTIVE if kernel > expected else MAX_RANK
    if family:
        status = DEFECTIVE_FAMILY
    elif classification == DEFECTIVE:
        status = VIOLATION
    else:
        status = CONSISTENT
    return SweepRow(
        **base,
        alpha_rank=rank,
        kernel_dim=kernel,
        classification=classification,
        conjecture_status=status,
        observations=obs,
        error="" if result.agreed else "ranks disagree across primes/seeds",
    )


def enumerate_first_k(k: int, max_n: int) -> list[tuple[int, ...]]:
    if k < 2:
        raise ValueError("a sweep needs k >= 2")
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    return list(canonical_tuples(k, max_n))


def _row_job(args) -> SweepRow:
    return sweep_row(*args)


def sweep(
    k: int,
    max_n: int,
    primes: Sequence[int] = DEFAULT_PRIMES,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    max_cost: float | None = DEFAULT_MAX_COST,
    done: Iterable[SweepRow] = (),
    workers: int = 1,
) -> list[SweepRow]:
    """Rows for every beyond-by-one format ``(n_1+1, .., n_k+1, n+2)`` with ``n_i <= max_n``.

    Rows in ``done`` (from an earlier, interrupted run) are reused as-is.
    Output order is the enumeration order whatever the completion order.
    """
    tuples = enumerate_first_k(k, max_n)
    previous = {row.first_k: row for row in done}
    todo = [t for t in tuples if ",".join(map(str, t)) not in previous]
    jobs = [(t, tuple(primes), tuple(seeds), max_cost) for t in todo]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            fresh = list(pool.map(_row_job, jobs))
    else:
        fresh = [_row_job(j) for j in jobs]
    by_key = dict(previous)
    by_key.update({row.first_k: row for row in fresh})
    return [by_key[",".join(map(str, t))] for t in tuples]


# -- reports --------------------------------------------------------------------


def write_jsonl(rows: Iterable[SweepRow], out: TextIO) -> None:
    for row in rows:
        out.write(json.dumps(asdict(row), sort_keys=False) + "\n")


def write_csv(rows: Iterable[SweepRow], out: TextIO) -> None:
    writer = csv.DictWriter(out, fieldnames=FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if v is None else v) for k, v in asdict(row).items()})


def report(rows: Iterable[SweepRow], fmt: str = "json") -> str:
    buf = io.StringIO()
    if fmt == "json":
        write_jsonl(rows, buf)
    elif fmt == "csv":
        write_csv(rows, buf)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return buf.getvalue()


def _coerce(record: dict) -> SweepRow:
    values = {}
    for name in FIELDS:
        v = record.get(name, "")
        if name in _INT_FIELDS:
            v = None if v in ("", None) else int(v)
        elif name == "classification":
            v = v or None
        else:
            v = "" if v is None else str(v)
        values[name] = v
    return SweepRow(**values)


def parse_report(text: str, fmt: str = "json") -> list[SweepRow]:
    if fmt == "json":
        return [_coerce(json.loads(line)) for line in text.splitlines() if line.strip()]
    if fmt == "csv":
        return [_coerce(r) for r in csv.DictReader(io.StringIO(text))]
    raise ValueError(f"unknown report format {fmt!r}")


def load_report(path: str | Path) -> list[SweepRow]:
    path = Path(path)
    fmt = "csv" if path.suffix == ".csv" else "json"
    return parse_report(path.read_text(), fmt)
