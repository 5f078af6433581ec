"""Exact dense linear algebra over F_p and over Q.

Field mode stores entries as ``int64`` reduced mod ``p`` (``p < 2**31`` for the
numpy elimination; the FLINT backend accepts any word-size prime).  Rational
mode stores ``Fraction`` objects and is meant for small certification runs.

Rank over F_p of an integer matrix never exceeds its rank over Q, so a rank
observed mod p is a lower bound for the rational rank.  ``generic_rank``
implements the acceptance protocol for claims about a general tensor: the same
rank must be observed for every (prime, seed) pair.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Sequence

import numpy as np

from .formats import TensorFormat, as_format

try:
    import flint
except ImportError:  # pragma: no cover - exercised only without python-flint
    flint = None

log = logging.getLogger(__name__)

DEFAULT_PRIME = 2_147_483_647
SECOND_PRIME = 1_073_741_827
DEFAULT_PRIMES = (DEFAULT_PRIME, SECOND_PRIME)
DEFAULT_SEEDS = (1, 2)

_NUMPY_PRIME_LIMIT = 2**31


class ExactMatrix:
    """Immutable matrix over ``F_p`` (``prime`` set) or ``Q`` (``prime is None``).

    Storage is a dense ``numpy`` array, or COO triplets when built with
    :meth:`from_coo` (the map of the critical module is large and sparse);
    :attr:`dense` materializes on demand.
    """

    def __init__(self, data, prime: int | None = DEFAULT_PRIME):
        self.prime = prime
        if prime is None:
            arr = np.empty(np.shape(data), dtype=object)
            src = np.asarray(data, dtype=object)
            for idx in np.ndindex(src.shape):
                arr[idx] = Fraction(src[idx])
            self._dense = arr
        else:
            arr = np.asarray(data)
            if arr.dtype == object:
                arr = np.vectorize(lambda v: int(v) % prime, otypes=[np.int64])(arr)
            else:
                arr = np.mod(arr.astype(np.int64), prime)
            self._dense = arr.reshape(np.shape(data))
        if self._dense.ndim != 2:
            raise ValueError("ExactMatrix needs a 2-d array")
        self._dense.setflags(write=False)
        self.shape = self._dense.shape
        self._coo = None

    @classmethod
    def from_coo(cls, shape: tuple[int, int], rows, cols, vals, prime: int) -> ExactMatrix:
        """Field-mode matrix from nonzero triplets (duplicates are not allowed)."""
        self = cls.__new__(cls)
        self.prime = prime
        self.shape = (int(shape[0]), int(shape[1]))
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.mod(np.asarray(vals, dtype=np.int64), prime)
        keep = vals != 0
        self._coo = (rows[keep], cols[keep], vals[keep])
        self._dense = None
        return self

    @classmethod
    def zeros(cls, rows: int, cols: int, prime: int | None = DEFAULT_PRIME) -> ExactMatrix:
        return cls(np.zeros((rows, cols), dtype=np.int64 if prime else object), prime)

    @classmethod
    def identity(cls, n: int, prime: int | None = DEFAULT_PRIME) -> ExactMatrix:
        return cls(np.eye(n, dtype=np.int64), prime)

    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]

    @property
    def dense(self) -> np.ndarray:
        if self._dense is None:
            arr = np.zeros(self.shape, dtype=np.int64)
            r, c, v = self._coo
            arr[r, c] = v
            arr.setflags(write=False)
            self._dense = arr
        return self._dense

    def nonzeros(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._coo is not None:
            return self._coo
        r, c = np.nonzero(self.dense)
        return r, c, self.dense[r, c]

    def transpose(self) -> ExactMatrix:
        if self._coo is not None:
            r, c, v = self._coo
            return ExactMatrix.from_coo((self.cols, self.rows), c, r, v, self.prime)
        return ExactMatrix(self.dense.T, self.prime)

    @property
    def T(self) -> ExactMatrix:
        return self.transpose()

    def matvec(self, v: Sequence) -> list:
        if self.prime is None:
            vec = [Fraction(x) for x in v]
            return [sum((a * b for a, b in zip(row, vec)), Fraction(0)) for row in self.dense]
        vec = [int(x) % self.prime for x in v]
        p = self.prime
        out = []
        for row in self.dense.tolist():
            out.append(sum(a * b for a, b in zip(row, vec)) % p)
        return out

    def __repr__(self) -> str:
        field_name = "Q" if self.prime is None else f"F_{self.prime}"
        return f"ExactMatrix({self.rows}x{self.cols} over {field_name})"


def _rref_mod_p(a: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over F_p on a private copy."""
    if p >= _NUMPY_PRIME_LIMIT:
        raise ValueError("numpy elimination needs p < 2**31")
    R = np.array(a, dtype=np.int64, copy=True) % p
    m, n = R.shape
    pivots: list[int] = []
    row = 0
    for col in range(n):
        if row >= m:
            break
        nz = np.flatnonzero(R[row:, col])
        if nz.size == 0:
            continue
        piv = row + int(nz[0])
        if piv != row:
            R[[row, piv]] = R[[piv, row]]
        inv = pow(int(R[row, col]), -1, p)
        R[row] = (R[row] * inv) % p
        f = R[:, col].copy()
        f[row] = 0
        hit = np.flatnonzero(f)
        if hit.size:
            R[hit] = (R[hit] - (f[hit, None] * R[row]) % p) % p
        pivots.append(col)
        row += 1
    return R, pivots


def _rref_rational(a: np.ndarray) -> tuple[list[list[Fraction]], list[int]]:
    R = [[Fraction(x) for x in row] for row in a]
    m = len(R)
    n = len(R[0]) if m else 0
    pivots: list[int] = []
    row = 0
    for col in range(n):
        if row >= m:
            break
        piv = next((i for i in range(row, m) if R[i][col] != 0), None)
        if piv is None:
            continue
        R[row], R[piv] = R[piv], R[row]
        inv = 1 / R[row][col]
        R[row] = [x * inv for x in R[row]]
        for i in range(m):
            if i != row and R[i][col] != 0:
                f = R[i][col]
                R[i] = [x - f * y for x, y in zip(R[i], R[row])]
        pivots.append(col)
        row += 1
    return R, pivots


def _to_flint(M: ExactMatrix):
    F = flint.nmod_mat(M.rows, M.cols, M.prime)
    r, c, v = M.nonzeros()
    for i, j, x in zip(r.tolist(), c.tolist(), v.tolist()):
        F[i, j] = x
    return F


def rank(M: ExactMatrix, backend: str = "auto") -> int:
    """Exact rank.  ``backend`` is ``"auto"``, ``"flint"`` or ``"numpy"`` (field mode)."""
    if M.rows == 0 or M.cols == 0:
        return 0
    if M.prime is None:
        return len(_rref_rational(M.dense)[1])
    if backend == "auto":
        backend = "flint" if flint is not None else "numpy"
    if backend == "flint":
        if flint is None:
            raise RuntimeError("python-flint is not installed")
        return int(_to_flint(M).rank())
    if backend == "numpy":
        a = M.dense
        if a.shape[0] > a.shape[1]:
            a = a.T
        return len(_rref_mod_p(a, M.prime)[1])
    raise ValueError(f"unknown backend {backend!r}")


def kernel_dim(M: ExactMatrix, backend: str = "auto") -> int:
    return M.cols - rank(M, backend)


def kernel_basis(M: ExactMatrix) -> list[list]:
    """Basis of the right kernel; each vector is a list of field elements."""
    n = M.cols
    if M.rows == 0:
        zero = Fraction(0) if M.prime is None else 0
        one = Fraction(1) if M.prime is None else 1
        return [[one if i == j else zero for i in range(n)] for j in range(n)]
    if M.prime is None:
        R, pivots = _rref_rational(M.dense)
        zero, one = Fraction(0), Fraction(1)
        neg = lambda x: -x  # noqa: E731
    else:
        R_arr, pivots = _rref_mod_p(M.dense, M.prime)
        R = R_arr.tolist()
        zero, one = 0, 1
        p = M.prime
        neg = lambda x: (-x) % p  # noqa: E731
    free = [j for j in range(n) if j not in set(pivots)]
    basis = []
    for fcol in free:
        v = [zero] * n
        v[fcol] = one
        for r, pc in enumerate(pivots):
            v[pc] = neg(R[r][fcol])
        basis.append(v)
    return basis


def matmul_mod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """``a @ b mod p`` for reduced int64 operands with ``p < 2**31``.

    ``b`` is split into 11-bit limbs so every partial product sum stays below
    ``2**63`` for inner dimensions up to ``2**20``.
    """
    if p >= _NUMPY_PRIME_LIMIT:
        raise ValueError("matmul_mod needs p < 2**31")
    if a.shape[1] > 2**20:
        raise ValueError("inner dimension too large for exact int64 accumulation")
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    for shift in (22, 11, 0):
        limb = (b >> shift) & 0x7FF
        out = (out * 2048 + (a @ limb) % p) % p
    return out


def random_tensor(
    fmt: TensorFormat | str | Sequence[int],
    seed: int,
    prime: int | None = DEFAULT_PRIME,
    bound: int | None = None,
) -> np.ndarray:
    """Flat array of ``prod(dims)`` i.i.d. uniform entries, deterministic in ``seed``.

    With ``bound`` set, entries are integers in ``[-bound, bound]``; otherwise
    they are uniform in ``[0, prime)``.
    """
    fmt = as_format(fmt)
    rng = np.random.default_rng(seed)
    if bound is not None:
        return rng.integers(-bound, bound + 1, size=fmt.size, dtype=np.int64)
    if prime is None:
        raise ValueError("give either a prime or an integer bound")
    return rng.integers(0, prime, size=fmt.size, dtype=np.int64)


class RankDisagreement(RuntimeError):
    pass


@dataclass
class GenericRank:
    """Ranks observed for one generic-rank claim, keyed by (prime, seed)."""

    observations: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def agreed(self) -> bool:
        return len(set(self.observations.values())) == 1

    @property
    def value(self) -> int:
        # F_p ranks only undercount, so the largest observation is the best bound
        return max(self.observations.values())


def generic_rank(
    build: Callable[[int, int], ExactMatrix],
    primes: Iterable[int] = DEFAULT_PRIMES,
    seeds: Iterable[int] = DEFAULT_SEEDS,
    strict: bool = True,
    backend: str = "auto",
) -> GenericRank:
    """Rank of ``build(prime, seed)`` over every pair; raises on disagreement when ``strict``."""
    primes = list(primes)
    seeds = list(seeds)
    if len(set(primes)) < 2 or len(set(seeds)) < 2:
        raise ValueError("the generic-rank protocol needs two distinct primes and two seeds")
    result = GenericRank()
    for p, s in product(primes, seeds):
        result.observations[(p, s)] = rank(build(p, s), backend)
    if not result.agreed:
        log.warning("generic-rank runs disagree: %s", result.observations)
        if strict:
            raise RankDisagreement(f"ranks disagree across primes/seeds: {result.observations}")
    return result
