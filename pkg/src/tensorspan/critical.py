"""Critical space of a tensor and the map whose kernel measures the span of Z_T.

Tensor entries are linearized row-major over ``dims`` (last index fastest);
the flat index of ``t[i_1, ..., i_k]`` is ``np.ravel_multi_index``.  Every
matrix below uses that same bijection for the tensor coordinates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import prod
from pathlib import Path
from typing import Sequence

import numpy as np

from . import exactla
from .exactla import DEFAULT_PRIME, ExactMatrix
from .formats import TensorFormat, alpha_dimensions, as_format, binom, critical_dim_formula


class DegenerateTensor(ValueError):
    pass


class ResourceGuard(RuntimeError):
    """Refusal to build a matrix above the configured size/cost limit."""


@dataclass(frozen=True)
class DenseTensor:
    """Tensor with flat row-major entries.

    ``prime`` set: entries live in F_p.  ``prime is None``: entries are exact
    integers (rational mode) or floats/complex (numeric mode), depending on dtype.
    """

    format: TensorFormat
    entries: np.ndarray
    prime: int | None = None

    def __post_init__(self) -> None:
        fmt = as_format(self.format)
        object.__setattr__(self, "format", fmt)
        arr = np.asarray(self.entries).reshape(-1)
        if arr.size != fmt.size:
            raise ValueError(f"{fmt} needs {fmt.size} entries, got {arr.size}")
        if self.prime is not None:
            arr = np.mod(arr.astype(np.int64), self.prime)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def random(cls, fmt, seed: int, prime: int = DEFAULT_PRIME) -> DenseTensor:
        fmt = as_format(fmt)
        return cls(fmt, exactla.random_tensor(fmt, seed, prime), prime)

    @classmethod
    def from_array(cls, array, prime: int | None = None) -> DenseTensor:
        array = np.asarray(array)
        return cls(TensorFormat(array.shape), array.reshape(-1), prime)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.format.dims

    @property
    def exact(self) -> bool:
        return self.prime is not None or np.issubdtype(self.entries.dtype, np.integer)

    def array(self) -> np.ndarray:
        return self.entries.reshape(self.dims)

    def to_json(self) -> str:
        payload = {"dims": list(self.dims), "entries": self.entries.tolist()}
        if self.prime is not None:
            payload["prime"] = self.prime
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> DenseTensor:
        payload = json.loads(text)
        entries = np.asarray(payload["entries"])
        if entries.dtype == object:
            raise ValueError("tensor entries must be numbers")
        return cls(TensorFormat(tuple(payload["dims"])), entries, payload.get("prime"))

    @classmethod
    def load(cls, path: str | Path) -> DenseTensor:
        return cls.from_json(Path(path).read_text())


# -- critical space ---------------------------------------------------------


def _factor_rows(dims: Sequence[int], axis: int, pairs: np.ndarray):
    """Column indices and tensor-entry indices for the rows of one factor.

    Row for pair (p, q): coefficient ``t[.., p, ..]`` on ``z[.., q, ..]`` and
    ``-t[.., q, ..]`` on ``z[.., p, ..]``, summed over the other indices.
    """
    index = np.moveaxis(np.arange(prod(dims)).reshape(dims), axis, 0).reshape(dims[axis], -1)
    P, Q = pairs[:, 0], pairs[:, 1]
    # (z column, t index) for the +t term and for the -t term
    return index[Q], index[P], index[P], index[Q]


def critical_pairs(dims: Sequence[int], axis: int) -> np.ndarray:
    d = dims[axis]
    iu = np.triu_indices(d, 1)
    return np.stack(iu, axis=1)


def critical_equations_array(T: DenseTensor, pruned: bool = False) -> np.ndarray:
    """Coefficient matrix of the critical-space equations in the tensor's own dtype.

    One row per factor and pair ``p < q`` over all coordinates of that factor.
    With ``pruned`` the rows of a long factor are cut down to an equivalent
    spanning subset (see :func:`_pruned_pairs`); only valid in field mode.
    """
    dims = T.dims
    t = T.entries
    blocks = []
    for axis in range(len(dims)):
        pairs = critical_pairs(dims, axis)
        if pruned:
            pairs = _pruned_pairs(T, axis, pairs)
        zq, tp, zp, tq = _factor_rows(dims, axis, pairs)
        block = np.zeros((len(pairs), t.size), dtype=np.result_type(t.dtype, np.int64))
        rows = np.arange(len(pairs))[:, None]
        block[rows, zq] = t[tp]
        block[rows, zp] = -t[tq]
        blocks.append(block)
    return np.vstack(blocks)


def _pruned_pairs(T: DenseTensor, axis: int, pairs: np.ndarray) -> np.ndarray:
    """Keep pairs touching the first ``M`` coordinates when that block is invertible.

    For factor dimension ``d`` and flattening ``T_l`` of shape ``(d, M)`` with
    ``d > M``, the rows span ``{S T_l : S antisymmetric}``.  If the leading
    ``M x M`` block of ``T_l`` is invertible, the pairs ``p < q`` with ``p < M``
    already span it (dimension ``C(M,2) + M (d - M)``).  Otherwise all pairs
    are kept.
    """
    if T.prime is None:
        return pairs
    d = T.dims[axis]
    flat = np.moveaxis(T.array(), axis, 0).reshape(d, -1)
    M = flat.shape[1]
    if d <= M + 1:
        return pairs
    lead = ExactMatrix(flat[:M], T.prime)
    if exactla.rank(lead, "numpy") < M:
        return pairs
    return pairs[pairs[:, 0] < M]


def critical_equations(T: DenseTensor, pruned: bool = False) -> ExactMatrix:
    if not T.exact:
        raise TypeError("critical_equations needs an exact tensor; use critical_equations_array")
    return ExactMatrix(critical_equations_array(T, pruned), T.prime)


def _long_axis(dims: Sequence[int]) -> int | None:
    # at most one factor can satisfy d > N / d + 1
    N = prod(dims)
    for axis, d in enumerate(dims):
        if d > N // d + 1:
            return axis
    return None


def _critical_rank_eliminated(T: DenseTensor) -> int | None:
    """Rank of the pruned critical equations with the long factor's tail eliminated.

    With ``flat = T_l`` of shape ``(d, M)`` and an invertible leading block
    ``L = flat[:M]``, the rows for pairs ``(p, q)``, ``p < M <= q``, read
    ``L z_q = W_q z_low`` where ``W_q`` pairs ``flat[q]`` with each leading
    slice.  They are ``M (d - M)`` independent rows solving for every
    trailing slice ``z_q``; substituting into the remaining rows leaves a
    system in the ``M * M`` leading unknowns only.  Returns ``None`` when the
    shortcut does not apply.
    """
    p = T.prime
    axis = _long_axis(T.dims)
    if p is None or axis is None:
        return None
    d = T.dims[axis]
    flat = np.moveaxis(T.array(), axis, 0).reshape(d, -1)
    M = flat.shape[1]
    aug = np.concatenate([flat[:M], np.eye(M, dtype=np.int64)], axis=1)
    R, pivots = exactla._rref_mod_p(aug, p)
    if pivots != list(range(M)):
        return None
    L_inv = R[:, M:]

    dims = T.dims
    t = T.entries
    blocks = []
    for ax in range(len(dims)):
        pairs = critical_pairs(dims, ax)
        if ax == axis:
            pairs = pairs[pairs[:, 1] < M]
        zq, tp, zp, tq = _factor_rows(dims, ax, pairs)
        block = np.zeros((len(pairs), t.size), dtype=np.int64)
        rows = np.arange(len(pairs))[:, None]
        block[rows, zq] = t[tp]
        block[rows, zp] = (p - t[tq]) % p
        blocks.append(block)
    rest = np.vstack(blocks)
    r = rest.shape[0]

    index = np.moveaxis(np.arange(t.size).reshape(dims), axis, 0).reshape(d, M)
    low = rest[:, index[:M].ravel()]
    # G[r, q, :] = C_q[r, :] @ L^-1, then sum_q G[r, q, i] * flat[q, j] lands on z_i[j]
    G = exactla.matmul_mod(rest[:, index[M:].ravel()].reshape(-1, M), L_inv, p)
    G = G.reshape(r, d - M, M).transpose(0, 2, 1).reshape(r * M, d - M)
    high = exactla.matmul_mod(G, flat[M:], p).reshape(r, M * M)
    reduced = ExactMatrix((low + high) % p, p)
    return M * (d - M) + exactla.rank(reduced)


def critical_dim(T: DenseTensor, backend: str = "auto") -> int:
    """``dim H_T``: exact for F_p / integer tensors, singular-value rank for floats."""
    if T.exact:
        if backend == "auto":
            eliminated = _critical_rank_eliminated(T)
            if eliminated is not None:
                return T.format.size - eliminated
        pruned = T.prime is not None
        return T.format.size - exactla.rank(critical_equations(T, pruned), backend)
    A = critical_equations_array(T)
    return T.format.size - numeric_rank(A)


def numeric_rank(A: np.ndarray, min_gap: float = 1e3) -> int:
    """Rank at the largest gap of the singular values, which must be at least ``min_gap``.

    A virtual floor at ``eps * max(shape) * s_max`` stands in for exact zeros,
    so a well-conditioned full-rank matrix resolves to full rank.
    """
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0:
        return 0
    floor = np.finfo(float).eps * max(A.shape) * s[0]
    ext = np.append(s, floor)
    ext = np.maximum(ext, floor * 1e-3)
    ratios = ext[:-1] / ext[1:]
    cut = int(np.argmax(ratios))
    if ratios[cut] < min_gap:
        raise ValueError(f"ill-conditioned span: largest singular-value gap {ratios[cut]:.3g}")
    return cut + 1


# -- the map alpha_T ----------------------------------------------------------


def monomial_basis(nvars: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent vectors of the given degree, graded-lex (``x_0 > x_1 > ...``)."""
    if degree < 0:
        return []
    out = []
    for combo in combinations_with_replacement(range(nvars), degree):
        exp = [0] * nvars
        for v in combo:
            exp[v] += 1
        out.append(tuple(exp))
    out.sort(reverse=True)
    assert len(out) == binom(degree + nvars - 1, nvars - 1)
    return out


@dataclass(frozen=True)
class MonomialBasis:
    """Graded-lex basis of ``S^degree`` of the space of factor ``factor``."""

    factor: int
    degree: int
    nvars: int

    @property
    def monomials(self) -> list[tuple[int, ...]]:
        return monomial_basis(self.nvars, self.degree)

    def __len__(self) -> int:
        return binom(self.degree + self.nvars - 1, self.nvars - 1) if self.degree >= 0 else 0

    def index(self, exponent: Sequence[int]) -> int:
        return self.monomials.index(tuple(exponent))


def alpha_bases(first: Sequence[int]) -> tuple[list[MonomialBasis], list[MonomialBasis]]:
    """Column and row monomial bases of the alpha map, one per factor."""
    n = sum(first)
    cols = [MonomialBasis(j, n - nj - 1, nj + 1) for j, nj in enumerate(first)]
    rows = [MonomialBasis(j, n - nj - 2, nj + 1) for j, nj in enumerate(first)]
    return cols, rows


def _derivative_entries(nvars: int, degree: int):
    """Nonzeros of the partial derivatives ``S^degree -> S^(degree-1)``.

    Returns arrays (column, variable, row, coefficient): ``d/dx_var`` of the
    column monomial is ``coefficient`` times the row monomial.
    """
    src = monomial_basis(nvars, degree)
    dst = {m: i for i, m in enumerate(monomial_basis(nvars, degree - 1))}
    cols, var, rows, coef = [], [], [], []
    for c, m in enumerate(src):
        for v, e in enumerate(m):
            if e:
                lowered = m[:v] + (e - 1,) + m[v + 1 :]
                cols.append(c)
                var.append(v)
                rows.append(dst[lowered])
                coef.append(e)
    as_arr = lambda x: np.asarray(x, dtype=np.int64)  # noqa: E731
    return as_arr(cols), as_arr(var), as_arr(rows), as_arr(coef)


def as_beyond_by_one(T: DenseTensor) -> tuple[DenseTensor, tuple[int, ...]]:
    """Move the large factor of a beyond-by-one tensor to the last axis."""
    split = T.format.beyond_by_one_split()
    if split is None:
        raise ValueError(f"{T.format} is not beyond boundary by one")
    first, axis = split
    if axis != len(T.dims) - 1:
        arr = np.moveaxis(T.array(), axis, -1)
        T = DenseTensor(TensorFormat(arr.shape), arr.reshape(-1), T.prime)
    return T, first


def alpha_shape(first: Sequence[int]) -> tuple[int, int]:
    """(rows, columns) = (codomain, domain) dimensions."""
    domain, codomain = alpha_dimensions(first)
    return codomain, domain


def alpha_cost(first: Sequence[int]) -> int:
    """Rough elimination cost ``rows * cols * min(rows, cols)``."""
    r, c = alpha_shape(first)
    return r * c * min(r, c)


def alpha_matrix(T: DenseTensor, max_cost: float | None = None) -> ExactMatrix:
    """Matrix of ``f_1 x ... x f_k -> sum_i (x_j d_{i_j} f_j) x T_{i_1..i_k}``.

    Columns: tuples of degree-``(n - n_j - 1)`` monomials (factor 1 slowest).
    Rows: tuples of degree-``(n - n_j - 2)`` monomials, then the basis of the
    last factor (fastest).  A negative degree gives the zero space.
    """
    if T.prime is None:
        raise TypeError("alpha_matrix works over F_p; give the tensor a prime")
    T, first = as_beyond_by_one(T)
    n = sum(first)
    last = n + 2
    nrows, ncols = alpha_shape(first)
    if max_cost is not None and nrows * ncols * min(nrows, ncols) > max_cost:
        raise ResourceGuard(f"alpha matrix {nrows}x{ncols} exceeds the cost limit {max_cost:g}")
    if nrows == 0 or ncols == 0:
        return ExactMatrix.zeros(nrows, ncols, T.prime)

    k = len(first)
    parts = [_derivative_entries(nj + 1, n - nj - 1) for nj in first]
    col_bases, row_bases = alpha_bases(first)
    col_sizes = [len(b) for b in col_bases]
    row_sizes = [len(b) for b in row_bases]
    col_strides = [prod(col_sizes[j + 1 :]) for j in range(k)]
    row_strides = [prod(row_sizes[j + 1 :]) for j in range(k)]

    # every combination of one derivative nonzero per factor
    grids = np.meshgrid(*[np.arange(len(p[0])) for p in parts], indexing="ij")
    sel = [g.reshape(-1) for g in grids]
    col = sum(parts[j][0][sel[j]] * col_strides[j] for j in range(k))
    row = sum(parts[j][2][sel[j]] * row_strides[j] for j in range(k))
    coef = np.ones_like(col)
    for j in range(k):
        coef = coef * parts[j][3][sel[j]]
    tindex = np.ravel_multi_index(tuple(parts[j][1][sel[j]] for j in range(k)), T.dims[:-1])

    p = T.prime
    tmat = T.entries.reshape(-1, last)
    coef = coef % p
    rows_all = (row[:, None] * last + np.arange(last)[None, :]).reshape(-1)
    cols_all = np.repeat(col, last)
    vals = ((coef[:, None] * tmat[tindex]) % p).reshape(-1)
    return ExactMatrix.from_coo((nrows, ncols), rows_all, cols_all, vals, p)


def span_codim_via_alpha(T: DenseTensor, max_cost: float | None = None, backend: str = "auto") -> int:
    """``dim ker alpha_T``; the codimension of ``<Z_T>`` in ``P(H_T)`` for a general ``T``.

    For three factors with a ``P^1`` factor, ``alpha_T`` has zero codomain and the
    value ``n - 1`` coincides with the theorem on the ``(2, n, n + 2)`` family
    rather than following from this construction.
    """
    A = alpha_matrix(T, max_cost)
    return A.cols - exactla.rank(A, backend)


# -- Koszul / Tor oracle ------------------------------------------------------


def _pair_index(d: int) -> dict[tuple[int, int], int]:
    return {pq: i for i, pq in enumerate((p, q) for p in range(d) for q in range(p, d))}


def _koszul_setup(a: int, b: int, T: DenseTensor):
    if a < 2 or b < 2:
        raise ValueError("the Koszul oracle needs a, b >= 2")
    if T.prime is None:
        raise TypeError("koszul_oracle works over F_p")
    expected = (a + 1, b + 1, a + b + 2)
    if T.dims != expected:
        raise ValueError(f"expected a tensor of format {expected}, got {T.dims}")
    m = a + b + 2
    p = T.prime
    arr = T.array()
    # T(w_s) as an (a+1) x (b+1) matrix, stacked over s
    slices = np.moveaxis(arr, 2, 0)
    tw = ExactMatrix(slices.reshape(m, -1), p)
    if exactla.rank(tw, "numpy") < m:
        raise DegenerateTensor("degenerate tensor: W -> A (x) B is not injective")
    return slices, m, p


def _multiplication_matrix(forms: np.ndarray, a: int, b: int, p: int) -> np.ndarray:
    """Matrix of ``(w, e_i f_j) -> T(w) * x_i y_j`` into ``S^2 A (x) S^2 B``.

    ``forms`` has shape ``(r, a+1, b+1)``: one bilinear form per column block.
    Columns are ordered (form, i, j); rows are (pair in A, pair in B).
    """
    ia, ib = _pair_index(a + 1), _pair_index(b + 1)
    nb = len(ib)
    r = forms.shape[0]
    out = np.zeros((len(ia) * nb, r * (a + 1) * (b + 1)), dtype=np.int64)
    for s in range(r):
        for i in range(a + 1):
            for j in range(b + 1):
                c = (s * (a + 1) + i) * (b + 1) + j
                for i2 in range(a + 1):
                    pa = ia[tuple(sorted((i, i2)))]
                    for j2 in range(b + 1):
                        v = forms[s, i2, j2]
                        if v:
                            row = pa * nb + ib[tuple(sorted((j, j2)))]
                            out[row, c] = (out[row, c] + v) % p
    return out


def koszul_complex_homology(a: int, b: int, T: DenseTensor) -> int:
    """Middle homology of ``wedge^2 W -> W (x) A (x) B -> S^2 A (x) S^2 B``."""
    slices, m, p = _koszul_setup(a, b, T)
    N1 = (a + 1) * (b + 1)
    flat = slices.reshape(m, N1)
    pairs = [(s, t) for s in range(m) for t in range(s + 1, m)]
    left = np.zeros((m * N1, len(pairs)), dtype=np.int64)
    for c, (s, t) in enumerate(pairs):
        left[s * N1 : (s + 1) * N1, c] += flat[t]
        left[t * N1 : (t + 1) * N1, c] -= flat[s]
    right = _multiplication_matrix(slices, a, b, p)
    L = ExactMatrix(left, p)
    R = ExactMatrix(right, p)
    composite = (right.astype(object) @ left.astype(object)) % p
    if np.any(composite != 0):
        raise AssertionError("Koszul maps do not compose to zero")
    return (R.cols - exactla.rank(R)) - exactla.rank(L)


def koszul_artinian(a: int, b: int, T: DenseTensor, seed: int = 0) -> int:
    """``dim ker(z : Rbar_1 -> Rbar_2)`` after cutting by ``a + b + 1`` random forms of ``W``."""
    slices, m, p = _koszul_setup(a, b, T)
    rng = np.random.default_rng(seed)
    N1 = (a + 1) * (b + 1)
    flat = slices.reshape(m, N1)
    basis = rng.integers(0, p, size=(m, m), dtype=np.int64)
    while exactla.rank(ExactMatrix(basis, p), "numpy") < m:
        basis = rng.integers(0, p, size=(m, m), dtype=np.int64)
    images = (basis.astype(object) @ flat.astype(object)) % p
    images = images.astype(np.int64).reshape(m, a + 1, b + 1)
    h_forms, w_form = images[: m - 1], images[m - 1 :]
    MH = _multiplication_matrix(h_forms, a, b, p)
    Mw = _multiplication_matrix(w_form, a, b, p)
    rank_h = exactla.rank(ExactMatrix(MH, p))
    rank_both = exactla.rank(ExactMatrix(np.hstack([Mw, MH]), p))
    rank_th = exactla.rank(ExactMatrix(images[: m - 1].reshape(m - 1, N1), p), "numpy")
    # F = {f in R_1 : T(w) f in T(H) R_1} contains T(H); the kernel is F / T(H)
    dim_F = N1 - rank_both + rank_h
    return dim_F - rank_th


@dataclass(frozen=True)
class KoszulResult:
    complex_mode: int
    artinian_mode: int

    @property
    def agree(self) -> bool:
        return self.complex_mode == self.artinian_mode


def koszul_oracle(a: int, b: int, T: DenseTensor, seed: int = 0) -> KoszulResult:
    return KoszulResult(koszul_complex_homology(a, b, T), koszul_artinian(a, b, T, seed))


def expected_critical_dim(fmt) -> int:
    return critical_dim_formula(fmt)
