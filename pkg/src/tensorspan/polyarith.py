"""Sparse multivariate polynomials with exact integer coefficients.

Just enough arithmetic to expand the generating polynomial for the number of
singular vector tuples of a general tensor and read off one coefficient.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Mapping, Sequence

Exponent = tuple[int, ...]


class SparsePoly:
    """Polynomial in a fixed number of variables, stored as ``{exponent: coefficient}``."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[Exponent, int] | None = None):
        self.nvars = nvars
        self.terms: dict[Exponent, int] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(exp)
            if len(exp) != nvars:
                raise ValueError(f"exponent {exp} does not have {nvars} entries")
            if c:
                self.terms[exp] = self.terms.get(exp, 0) + int(c)
        self.terms = {e: c for e, c in self.terms.items() if c}

    @classmethod
    def zero(cls, nvars: int) -> SparsePoly:
        return cls(nvars)

    @classmethod
    def one(cls, nvars: int) -> SparsePoly:
        return cls(nvars, {(0,) * nvars: 1})

    @classmethod
    def variable(cls, nvars: int, i: int) -> SparsePoly:
        exp = [0] * nvars
        exp[i] = 1
        return cls(nvars, {tuple(exp): 1})

    def coefficient(self, exp: Sequence[int]) -> int:
        return self.terms.get(tuple(exp), 0)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparsePoly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __add__(self, other: SparsePoly) -> SparsePoly:
        return add(self, other)

    def __neg__(self) -> SparsePoly:
        return SparsePoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exp, c in sorted(self.terms.items(), reverse=True):
            mono = "*".join(
                f"h{i + 1}" if e == 1 else f"h{i + 1}^{e}" for i, e in enumerate(exp) if e
            )
            parts.append(f"{c}*{mono}" if mono else str(c))
        return " + ".join(parts)


def _check_arity(p: SparsePoly, q: SparsePoly) -> None:
    if p.nvars != q.nvars:
        raise ValueError(f"variable count mismatch: {p.nvars} vs {q.nvars}")


def add(p: SparsePoly, q: SparsePoly) -> SparsePoly:
    _check_arity(p, q)
    out = dict(p.terms)
    for exp, c in q.terms.items():
        s = out.get(exp, 0) + c
        if s:
            out[exp] = s
        else:
            out.pop(exp, None)
    return SparsePoly(p.nvars, out)


def mul_truncated(p: SparsePoly, q: SparsePoly, caps: Sequence[int]) -> SparsePoly:
    """Product of ``p`` and ``q`` keeping only exponents bounded entrywise by ``caps``."""
    _check_arity(p, q)
    if len(caps) != p.nvars:
        raise ValueError("caps must have one entry per variable")
    caps = tuple(caps)
    out: dict[Exponent, int] = defaultdict(int)
    for e1, c1 in p.terms.items():
        if any(a > b for a, b in zip(e1, caps)):
            continue
        for e2, c2 in q.terms.items():
            exp = tuple(a + b for a, b in zip(e1, e2))
            if all(a <= b for a, b in zip(exp, caps)):
                out[exp] += c1 * c2
    return SparsePoly(p.nvars, out)


def fo_factor(i: int, ns: Sequence[int]) -> SparsePoly:
    """Geometric sum ``sum_{j=0}^{n_i} h_i^j * hhat_i^(n_i - j)`` with ``hhat_i = sum_{l != i} h_l``.

    ``i`` is 1-based.
    """
    k = len(ns)
    if not 1 <= i <= k:
        raise ValueError(f"factor index {i} out of range 1..{k}")
    ni = ns[i - 1]
    # no truncation inside a single factor: every term has degree n_i
    caps = (ni,) * k
    hi = SparsePoly.variable(k, i - 1)
    hhat = SparsePoly.zero(k)
    for j in range(k):
        if j != i - 1:
            hhat = hhat + SparsePoly.variable(k, j)
    total = SparsePoly.zero(k)
    hi_pow = SparsePoly.one(k)
    hhat_pows = [SparsePoly.one(k)]
    for _ in range(ni):
        hhat_pows.append(mul_truncated(hhat_pows[-1], hhat, caps))
    for j in range(ni + 1):
        total = total + mul_truncated(hi_pow, hhat_pows[ni - j], caps)
        hi_pow = mul_truncated(hi_pow, hi, caps)
    return total


def ed_degree(ns: Sequence[int]) -> int:
    """Number of singular vector tuples of a general tensor of format ``(n_1+1, ..., n_k+1)``."""
    ns = tuple(int(v) for v in ns)
    if len(ns) < 1 or any(v < 1 for v in ns):
        raise ValueError(f"all n_j must be >= 1, got {ns}")
    k = len(ns)
    product = SparsePoly.one(k)
    for i in range(1, k + 1):
        product = mul_truncated(product, fo_factor(i, ns), ns)
    return product.coefficient(ns)
