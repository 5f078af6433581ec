"""Cohomology dimensions on products of projective spaces.

Three routes, used to check each other:

* ``h_omega``: closed formula for ``h^q(P^n, Omega^r(t))``;
* ``bbw_resolve``: the exchange algorithm for SL(m) weights, giving the
  concentration degree and the dominant weight of the surviving module;
* ``h_E``: Kunneth assembly of ``h^q`` of the twisted exterior powers
  ``E^(r) = (wedge^r E^*)(1,...,1)`` of the singular-tuple bundle, using its
  splitting into products of twisted forms ``Omega^{r_i}(2 r_i + 1 - r)``.

Weights for SL(m) are integer tuples modulo ``(1, ..., 1)``.  ``O(c)`` on
``P^{m-1}`` has weight ``(c, 0, ..., 0)`` and ``Omega^r(r + 1 + c)`` has weight
``c * lambda_1 + lambda_{r+1}`` where ``lambda_j = (1, ..., 1, 0, ..., 0)``
with ``j`` ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Iterator, Sequence

from .formats import TensorFormat, as_format, binom

Weight = tuple[int, ...]


def h_omega(n: int, r: int, twist: int, q: int) -> int:
    """``dim H^q(P^n, Omega^r(twist))``; zero for ``r`` or ``q`` outside ``[0, n]``."""
    if n < 1:
        raise ValueError("projective space dimension must be >= 1")
    if not (0 <= r <= n) or not (0 <= q <= n):
        return 0
    if q == 0 and twist > r:
        return binom(twist + n - r, twist) * binom(twist - 1, r)
    if q == r and twist == 0:
        return 1
    if q == n and twist < r - n:
        return binom(-twist + r, -twist) * binom(-twist - 1, n - r)
    return 0


def fundamental_weight(m: int, j: int) -> Weight:
    """``lambda_j`` for SL(m): ``j`` leading ones."""
    if not 0 <= j <= m:
        raise ValueError(f"lambda_{j} is not defined for SL({m})")
    return tuple(1 if i < j else 0 for i in range(m))


def omega_weight(n: int, r: int, twist: int) -> Weight:
    """Weight of ``Omega^r(twist)`` on ``P^n`` (``0 <= r <= n``)."""
    m = n + 1
    c = twist - r - 1
    lam = fundamental_weight(m, r + 1)
    return tuple(c * (i == 0) + lam[i] for i in range(m))


def normalize_weight(beta: Sequence[int]) -> Weight:
    """Shift by a multiple of ``(1, ..., 1)`` so the last entry is zero."""
    last = beta[-1]
    return tuple(b - last for b in beta)


def weyl_dim(dominant: Sequence[int]) -> int:
    """Dimension of the irreducible SL(m) module with highest weight ``dominant``."""
    beta = tuple(dominant)
    if any(beta[i] < beta[i + 1] for i in range(len(beta) - 1)):
        raise ValueError(f"weight {beta} is not dominant (must be non-increasing)")
    m = len(beta)
    num = prod(beta[i] - beta[j] + j - i for i in range(m) for j in range(i + 1, m))
    den = prod(j - i for i in range(m) for j in range(i + 1, m))
    value = Fraction(num, den)
    assert value.denominator == 1
    return int(value)


@dataclass(frozen=True)
class CohomologyAnswer:
    """Outcome of the exchange algorithm: all cohomology vanishes, or it sits in one degree."""

    singular: bool
    p: int | None = None
    dominant: Weight | None = None
    dim: int = 0

    @property
    def kind(self) -> str:
        return "Singular" if self.singular else "Concentrated"

    def h(self, q: int) -> int:
        if self.singular or q != self.p:
            return 0
        return self.dim


def bbw_resolve(weight: Sequence[int]) -> CohomologyAnswer:
    """Bubble-sort ``weight`` by the dotted action of adjacent transpositions."""
    alpha = list(weight)
    m = len(alpha)
    if m < 2:
        raise ValueError("weights for SL(m) need m >= 2")
    exchanges = 0
    changed = True
    while changed:
        changed = False
        for i in range(m - 1):
            if alpha[i + 1] == alpha[i] + 1:
                return CohomologyAnswer(singular=True)
            if alpha[i + 1] > alpha[i] + 1:
                alpha[i], alpha[i + 1] = alpha[i + 1] - 1, alpha[i] + 1
                exchanges += 1
                changed = True
    dominant = normalize_weight(alpha)
    return CohomologyAnswer(singular=False, p=exchanges, dominant=dominant, dim=weyl_dim(dominant))


def _compositions(total: int, caps: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Tuples ``0 <= c_i <= caps[i]`` summing to ``total``."""
    if not caps:
        if total == 0:
            yield ()
        return
    head, rest = caps[0], caps[1:]
    room = sum(rest)
    for c in range(max(0, total - room), min(head, total) + 1):
        for tail in _compositions(total - c, rest):
            yield (c,) + tail


def h_E(fmt: TensorFormat | str | Sequence[int], r: int, q: int) -> int:
    """``h^q(E^(r))`` on the Segre product of ``fmt``.

    Sum over splittings ``r = sum r_i`` and ``q = sum q_i`` of
    ``prod_i h^{q_i}(P^{n_i}, Omega^{r_i}(2 r_i + 1 - r))``.  Factors with a
    vanishing group are pruned as soon as they appear.
    """
    ns = as_format(fmt).ns
    if r < 0 or q < 0:
        return 0
    total = 0
    for rs in _compositions(r, ns):
        # each factor contributes only in degrees 0, r_i or n_i
        options = []
        for ni, ri in zip(ns, rs):
            twist = 2 * ri + 1 - r
            opts = [(qi, h) for qi in sorted({0, ri, ni}) if (h := h_omega(ni, ri, twist, qi))]
            if not opts:
                break
            options.append(opts)
        else:
            total += _count_degree(options, q)
    return total


def _count_degree(options: list[list[tuple[int, int]]], q: int) -> int:
    """Sum over choices of one ``(q_i, h_i)`` per factor with ``sum q_i == q`` of ``prod h_i``."""
    acc = {0: 1}
    for opts in options:
        nxt: dict[int, int] = {}
        for deg, val in acc.items():
            for qi, h in opts:
                d = deg + qi
                if d <= q:
                    nxt[d] = nxt.get(d, 0) + val * h
        acc = nxt
    return acc.get(q, 0)
