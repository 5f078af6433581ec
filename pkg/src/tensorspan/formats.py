"""Tensor formats: classification, dimension counts and the beyond-boundary family.

A format is the tuple of factor dimensions ``(n_1 + 1, ..., n_k + 1)``.  Formats
are stored as given; comparisons and reports use the sorted canonical form.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb, prod
from typing import Iterable, Sequence


def binom(p: int, q: int) -> int:
    """Binomial coefficient that is zero outside ``0 <= q <= p``."""
    if p < 0 or q < 0 or q > p:
        return 0
    return comb(p, q)


class FormatClass(enum.Enum):
    SUB_BOUNDARY = "SubBoundary"
    BOUNDARY = "Boundary"
    BEYOND_BOUNDARY = "BeyondBoundary"


@dataclass(frozen=True)
class TensorFormat:
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 2:
            raise ValueError(f"a tensor format needs at least two factors, got {dims}")
        if any(d < 2 for d in dims):
            raise ValueError(f"every factor dimension must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def parse(cls, text: str) -> TensorFormat:
        """Parse ``"3x3x6"``."""
        try:
            dims = tuple(int(tok) for tok in text.lower().replace(" ", "").split("x"))
        except ValueError:
            raise ValueError(f"cannot parse tensor format {text!r}") from None
        return cls(dims)

    def __str__(self) -> str:
        return "x".join(str(d) for d in self.dims)

    @property
    def k(self) -> int:
        return len(self.dims)

    @property
    def ns(self) -> tuple[int, ...]:
        return tuple(d - 1 for d in self.dims)

    @property
    def size(self) -> int:
        return prod(self.dims)

    def canonical(self) -> TensorFormat:
        return TensorFormat(tuple(sorted(self.dims)))

    def same_up_to_order(self, other: TensorFormat) -> bool:
        return sorted(self.dims) == sorted(other.dims)

    def beyond_by_one_split(self) -> tuple[tuple[int, ...], int] | None:
        """Return ``(first_ns, axis)`` if the format exceeds the boundary by exactly one.

        ``axis`` is the position of the large factor ``n + 2``.  Returns ``None``
        for any other format.
        """
        ns = self.ns
        total = sum(ns)
        for axis, ni in enumerate(ns):
            if ni == total - ni + 1:
                return tuple(n for j, n in enumerate(ns) if j != axis), axis
        return None

    def is_beyond_by_one(self) -> bool:
        return self.beyond_by_one_split() is not None

    def is_defective_family(self) -> bool:
        """True for the three-factor formats ``(2, n, n + 2)``."""
        split = self.beyond_by_one_split()
        return split is not None and len(split[0]) == 2 and min(split[0]) == 1


def as_format(value: TensorFormat | str | Sequence[int]) -> TensorFormat:
    if isinstance(value, TensorFormat):
        return value
    if isinstance(value, str):
        return TensorFormat.parse(value)
    return TensorFormat(tuple(value))


def classify(fmt: TensorFormat | str | Sequence[int]) -> FormatClass:
    ns = as_format(fmt).ns
    total = sum(ns)
    if any(2 * ni > total for ni in ns):
        return FormatClass.BEYOND_BOUNDARY
    if any(2 * ni == total for ni in ns):
        return FormatClass.BOUNDARY
    return FormatClass.SUB_BOUNDARY


def beyond_by_one(first_k: Sequence[int]) -> TensorFormat:
    """Format ``(n_1+1, ..., n_k+1, n+2)`` with ``n = sum(n_i)``."""
    if len(first_k) < 2 or any(int(ni) < 1 for ni in first_k):
        raise ValueError(f"need at least two entries, each >= 1; got {tuple(first_k)}")
    n = sum(first_k)
    return TensorFormat(tuple(int(ni) + 1 for ni in first_k) + (n + 2,))


def critical_dim_formula(fmt: TensorFormat | str | Sequence[int]) -> int:
    """Dimension of the critical space of a general tensor of this format."""
    dims = sorted(as_format(fmt).dims)
    big = dims[-1]
    small = dims[:-1]
    N = prod(small)
    first = prod(dims) - sum(binom(d, 2) for d in dims)
    second = binom(N + 1, 2) - sum(binom(d, 2) for d in small)
    if big == N:
        assert first == second, (dims, first, second)
    return first if big <= N else second


@dataclass(frozen=True)
class InequalityRecord:
    first_k: tuple[int, ...]
    lhs: int
    rhs: int

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def alpha_dimensions(first_k: Sequence[int]) -> tuple[int, int]:
    """(domain, codomain) dimensions of the map attached to a beyond-by-one format."""
    n = sum(first_k)
    domain = prod(binom(n - 1, nj) for nj in first_k)
    codomain = (n + 2) * prod(binom(n - 2, nj) for nj in first_k)
    return domain, codomain


def dimension_inequality(first_k: Sequence[int]) -> InequalityRecord:
    lhs, rhs = alpha_dimensions(first_k)
    return InequalityRecord(tuple(sorted(int(v) for v in first_k)), lhs, rhs)


def canonical_tuples(k: int, bound: int) -> Iterable[tuple[int, ...]]:
    """All ``1 <= n_1 <= ... <= n_k <= bound``."""
    return combinations_with_replacement(range(1, bound + 1), k)


def exception_scan(k: int, bound: int) -> list[tuple[int, ...]]:
    """Tuples (sorted, entries up to ``bound``) for which the inequality fails."""
    if k < 2 or bound < 1:
        raise ValueError("need k >= 2 and bound >= 1")
    return [t for t in canonical_tuples(k, bound) if not dimension_inequality(t).holds]
