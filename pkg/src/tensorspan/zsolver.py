"""Singular vector tuples of small tensors by total-degree homotopy continuation.

Coordinates.  Factor ``i`` gets a random complex basis change ``L_i``; in the
new coordinates ``y = L_i x_i`` the first coordinate is the affine chart
``y_0 = 1``.  All factors share a homogenizing variable ``u0`` so that
``x_i = M_i (u0, u_i)`` with ``M_i = L_i^{-1}``; a random patch ``c . V = 1``
fixes the projective scale of ``V = (u0, u_1, ..., u_k)``.

Equations.  With ``h_i = L_i T(x_1, .., x_i-hat, .., x_k)`` the square system is
``h_{i,0} u_{i,q} - h_{i,q} u0 = 0`` for ``q = 1..n_i``: the 2x2 minors of
``[h_i; y_i]`` against the pivot row 0.  Each has degree ``k``.  Because the
pivot is the chart coordinate, every solution with ``u0 != 0`` makes
``T(..)`` proportional to ``x_i``, so no spurious finite solutions appear.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import product
from math import prod
from string import ascii_letters
from typing import NamedTuple, Sequence

import numpy as np

from .critical import DenseTensor, critical_equations_array, numeric_rank
from .formats import TensorFormat
from .polyarith import ed_degree

log = logging.getLogger(__name__)

MAX_PATHS = 100_000
CERT_TOL = 1e-8


class TrackingUnstable(RuntimeError):
    pass


class PathGuard(RuntimeError):
    pass


@dataclass(frozen=True)
class SingularTuple:
    vectors: tuple[np.ndarray, ...]
    residual: float
    multiplicity: int = 1

    @property
    def multiple(self) -> bool:
        return self.multiplicity > 1

    def rank_one(self) -> np.ndarray:
        out = self.vectors[0]
        for v in self.vectors[1:]:
            out = np.multiply.outer(out, v)
        return out

    def to_dict(self) -> dict:
        return {
            "vectors": [[[float(z.real), float(z.imag)] for z in v] for v in self.vectors],
            "residual": self.residual,
            "multiplicity": self.multiplicity,
        }


@dataclass
class TupleSolveReport:
    format: TensorFormat
    tuples: list[SingularTuple]
    expected_count: int
    paths_tracked: int
    paths_failed: int
    span_rank: int
    critical_dim: int
    seeds: list[int] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return len(self.tuples) == self.expected_count

    @property
    def span_codim(self) -> int:
        return self.critical_dim - self.span_rank

    def to_dict(self) -> dict:
        return {
            "format": str(self.format),
            "expected_count": self.expected_count,
            "found": len(self.tuples),
            "complete": self.complete,
            "paths_tracked": self.paths_tracked,
            "paths_failed": self.paths_failed,
            "span_rank": self.span_rank,
            "critical_dim": self.critical_dim,
            "span_codim": self.span_codim,
            "seeds": self.seeds,
            "tuples": [t.to_dict() for t in self.tuples],
        }


# -- contractions -------------------------------------------------------------


def _contract(T: np.ndarray, xs: Sequence[np.ndarray | None], batch_size: int = 1) -> np.ndarray:
    """Contract ``T`` with batched vectors ``xs[j]`` (shape ``(P, d_j)``); ``None`` keeps axis ``j``.

    Result shape ``(P, *kept dims)`` in axis order.
    """
    k = T.ndim
    letters = ascii_letters[:k]
    batch = "Z"
    operands = [T]
    subs = [letters]
    for j, x in enumerate(xs):
        if x is not None:
            operands.append(x)
            subs.append(batch + letters[j])
    kept = "".join(letters[j] for j, x in enumerate(xs) if x is None)
    if len(operands) == 1:
        return np.broadcast_to(T, (batch_size,) + T.shape)
    return np.einsum(",".join(subs) + "->" + batch + kept, *operands)


@dataclass
class MinorSystem:
    """The square pivot-minor system for one tensor and one choice of charts."""

    T: np.ndarray
    L: list[np.ndarray]
    M: list[np.ndarray]
    patch: np.ndarray

    @property
    def dims(self) -> tuple[int, ...]:
        return self.T.shape

    @property
    def ns(self) -> tuple[int, ...]:
        return tuple(d - 1 for d in self.dims)

    @property
    def nvars(self) -> int:
        """Affine unknowns; the homogeneous system has one more (``u0``)."""
        return sum(self.ns)

    @property
    def degree(self) -> int:
        return self.T.ndim

    def offsets(self) -> list[int]:
        out, acc = [], 1
        for n in self.ns:
            out.append(acc)
            acc += n
        return out

    def xs(self, V: np.ndarray) -> list[np.ndarray]:
        u0 = V[:, :1]
        return [
            np.concatenate([u0, V[:, o : o + n]], axis=1) @ Mi.T
            for o, n, Mi in zip(self.offsets(), self.ns, self.M)
        ]

    def evaluate(self, V: np.ndarray, jacobian: bool = True):
        """``F(V)`` of shape ``(P, N)`` and, optionally, ``dF/dV`` of shape ``(P, N, N+1)``."""
        k = self.degree
        xs = self.xs(V)
        P = V.shape[0]
        u0 = V[:, 0]
        offs = self.offsets()
        F = np.empty((P, self.nvars), dtype=complex)
        J = np.zeros((P, self.nvars, self.nvars + 1), dtype=complex) if jacobian else None
        for i in range(k):
            args = list(xs)
            args[i] = None
            h = _contract(self.T, args) @ self.L[i].T
            o, n = offs[i], self.ns[i]
            ui = V[:, o : o + n]
            F[:, o - 1 : o - 1 + n] = h[:, :1] * ui - h[:, 1:] * u0[:, None]
            if not jacobian:
                continue
            dh = np.zeros((P, self.dims[i], self.nvars + 1), dtype=complex)
            for j in range(k):
                if j == i:
                    continue
                args = list(xs)
                args[i] = None
                args[j] = None
                D = _contract(self.T, args, P)  # (P, d_i, d_j) or (P, d_j, d_i)
                if j < i:
                    D = np.swapaxes(D, 1, 2)
                block = self.L[i] @ D @ self.M[j]
                dh[:, :, 0] += block[:, :, 0]
                dh[:, :, offs[j] : offs[j] + self.ns[j]] += block[:, :, 1:]
            rows = slice(o - 1, o - 1 + n)
            J[:, rows, :] = ui[:, :, None] * dh[:, None, 0, :] - u0[:, None, None] * dh[:, 1:, :]
            J[:, rows, 0] -= h[:, 1:]
            idx = np.arange(n)
            J[:, o - 1 + idx, o + idx] += h[:, :1]
        return F, J


def build_system(T: DenseTensor, seed: int) -> MinorSystem:
    """Square system of ``sum n_i`` pivot minors, each of degree ``k``, on random charts."""
    arr = _float_array(T)
    rng = np.random.default_rng(seed)
    L, M = [], []
    for d in arr.shape:
        Li = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        L.append(Li)
        M.append(np.linalg.inv(Li))
    nv = sum(d - 1 for d in arr.shape) + 1
    patch = rng.standard_normal(nv) + 1j * rng.standard_normal(nv)
    return MinorSystem(arr.astype(complex), L, M, patch)


def _float_array(T: DenseTensor) -> np.ndarray:
    if T.prime is not None:
        raise TypeError("the numerical solver needs real or complex entries, not F_p")
    arr = T.array()
    if not np.issubdtype(arr.dtype, np.complexfloating):
        arr = arr.astype(float)
    return arr


# -- homotopy -----------------------------------------------------------------


@dataclass
class _Tracker:
    system: MinorSystem
    gamma: complex
    min_step: float = 1e-9
    max_step: float = 0.1
    newton_tol: float = 1e-8
    # late in the path, |u0| / |V| below this means the endpoint is at infinity
    infinity_ratio: float = 1e-6

    def H(self, V: np.ndarray, t: np.ndarray, jacobian: bool = True):
        sys = self.system
        k = sys.degree
        F, JF = sys.evaluate(V, jacobian)
        u0 = V[:, :1]
        G = V[:, 1:] ** k - u0**k
        tt = t[:, None]
        Hm = (1 - tt) * self.gamma * G + tt * F
        patch = (V @ sys.patch - 1)[:, None]
        Hfull = np.concatenate([Hm, patch], axis=1)
        Ht = np.concatenate([F - self.gamma * G, np.zeros_like(patch)], axis=1)
        if not jacobian:
            return Hfull, None, Ht
        N = sys.nvars
        JG = np.zeros_like(JF)
        idx = np.arange(N)
        JG[:, idx, idx + 1] = k * V[:, 1:] ** (k - 1)
        JG[:, :, 0] = -k * u0 ** (k - 1)
        Jm = (1 - tt[:, :, None]) * self.gamma * JG + tt[:, :, None] * JF
        Jp = np.broadcast_to(sys.patch, (V.shape[0], 1, N + 1))
        return Hfull, np.concatenate([Jm, Jp], axis=1), Ht

    def _newton(self, V: np.ndarray, t: np.ndarray, iters: int, tol: np.ndarray):
        """Up to ``iters`` Newton steps; a path stops once its correction is below ``tol``."""
        V = V.copy()
        first = np.zeros(V.shape[0])
        last = np.full(V.shape[0], np.inf)
        live = np.arange(V.shape[0])
        for it in range(iters):
            Hv, J, _ = self.H(V[live], t[live])
            delta = _solve(J, Hv)
            V[live] -= delta
            size = np.linalg.norm(delta, axis=1)
            if it == 0:
                first[live] = size
            last[live] = size
            live = live[~(size < tol[live])]
            if live.size == 0:
                break
        return V, first, last

    def track(self, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Track every start point from ``t = 0`` to ``t = 1``.

        Returns the endpoints and a status per path: 0 reached ``t = 1``,
        1 stopped late in the path (heading to infinity, or a step collapse at a
        singular endpoint), 2 failure.
        """
        P = V.shape[0]
        t = np.zeros(P)
        dt = np.full(P, 0.01)
        status = np.full(P, -1)
        streak = np.zeros(P, dtype=int)
        while np.any(status < 0):
            act = np.flatnonzero(status < 0)
            Va, ta, dta = V[act], t[act], dt[act]
            _, J, Ht = self.H(Va, ta)
            tangent = -_solve(J, Ht)
            step = np.minimum(dta, 1 - ta)
            tn = ta + step
            Vp = Va + step[:, None] * tangent
            scale = 1 + np.linalg.norm(Va, axis=1)
            Vc, first, last = self._newton(Vp, tn, 3, self.newton_tol * scale)
            ok = (
                np.isfinite(last)
                & (last < self.newton_tol * scale)
                & (first < 0.05 * scale)
            )
            good, bad = act[ok], act[~ok]
            V[good] = Vc[ok]
            t[good] = tn[ok]
            streak[good] += 1
            grow = good[streak[good] >= 3]
            dt[grow] = np.minimum(dt[grow] * 1.5, self.max_step)
            streak[grow] = 0
            dt[bad] /= 2
            streak[bad] = 0
            status[good[t[good] >= 1]] = 0
            collapsed = bad[dt[bad] < self.min_step]
            status[collapsed] = np.where(t[collapsed] >= 0.95, 1, 2)
            Vg = V[good]
            far = (t[good] >= 0.9) & (
                np.abs(Vg[:, 0]) < self.infinity_ratio * np.linalg.norm(Vg, axis=1)
            )
            status[good[far & (status[good] < 0)]] = 1
            lost = act[~np.all(np.isfinite(V[act]), axis=1)]
            status[lost] = 2
        return V, status


def _solve(J: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(J, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.full_like(b, np.nan)
        for p in range(J.shape[0]):
            try:
                out[p] = np.linalg.solve(J[p], b[p])
            except np.linalg.LinAlgError:
                pass
        return out


def _start_points(system: MinorSystem) -> np.ndarray:
    k, N = system.degree, system.nvars
    roots = np.exp(2j * np.pi * np.arange(k) / k)
    combos = np.array(list(product(range(k), repeat=N)), dtype=int).reshape(-1, N)
    V = np.concatenate([np.ones((len(combos), 1)), roots[combos]], axis=1).astype(complex)
    return V / (V @ system.patch)[:, None]


# -- refinement and certification -------------------------------------------


def _all_minors(g: np.ndarray, x: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(len(x), 1)
    M = np.outer(g, x)
    return (M - M.T)[iu]


def minor_residual(T: np.ndarray, xs: Sequence[np.ndarray]) -> float:
    """Max over factors of the norm of all 2x2 minors of ``[T(.., x_i-hat, ..); x_i]`` for unit ``x_i``."""
    unit = [x / np.linalg.norm(x) for x in xs]
    worst = 0.0
    for i in range(len(unit)):
        args: list = [u[None, :] for u in unit]
        args[i] = None
        g = _contract(T, args)[0]
        worst = max(worst, float(np.linalg.norm(_all_minors(g, unit[i]))))
    return worst


def refine(T: np.ndarray, xs: list[np.ndarray], iters: int = 8) -> list[np.ndarray]:
    """Gauss-Newton on the full minor system, each ``x_i`` moving in the hyperplane ``x_i^0 + ker(x_i^0)^H``."""
    xs = [x / np.linalg.norm(x) for x in xs]
    k = len(xs)
    for _ in range(iters):
        bases = [np.linalg.svd(x.conj()[None, :])[2][1:].conj().T for x in xs]
        res, blocks = [], []
        for i in range(k):
            args: list = [x[None, :] for x in xs]
            args[i] = None
            g = _contract(T, args)[0]
            res.append(_all_minors(g, xs[i]))
            iu = np.triu_indices(len(xs[i]), 1)
            row_blocks = []
            for j in range(k):
                if j == i:
                    dg = np.zeros((len(g), len(xs[j])), dtype=complex)
                    dx = np.eye(len(xs[i]))
                else:
                    a2: list = [x[None, :] for x in xs]
                    a2[i] = None
                    a2[j] = None
                    D = _contract(T, a2)[0]
                    dg = D if i < j else D.T
                    dx = np.zeros((len(xs[i]), len(xs[j])))
                # d(g_p x_q - g_q x_p)
                Dm = (
                    dg[iu[0]] * xs[i][iu[1], None]
                    + g[iu[0], None] * dx[iu[1]]
                    - dg[iu[1]] * xs[i][iu[0], None]
                    - g[iu[1], None] * dx[iu[0]]
                )
                row_blocks.append(Dm @ bases[j])
            blocks.append(np.concatenate(row_blocks, axis=1))
        r = np.concatenate(res)
        if np.linalg.norm(r) < 1e-15:
            break
        step = np.linalg.lstsq(np.concatenate(blocks), -r, rcond=None)[0]
        pos = 0
        for j in range(k):
            n = bases[j].shape[1]
            xs[j] = xs[j] + bases[j] @ step[pos : pos + n]
            xs[j] = xs[j] / np.linalg.norm(xs[j])
            pos += n
    return xs


def normalize(xs: Sequence[np.ndarray], tol: float = 1e-8) -> tuple[np.ndarray, ...]:
    """Unit vectors with the first coordinate above ``tol`` rotated to the positive real axis."""
    out = []
    for x in xs:
        x = np.asarray(x, dtype=complex)
        x = x / np.linalg.norm(x)
        lead = np.flatnonzero(np.abs(x) > tol)[0]
        x = x * (abs(x[lead]) / x[lead])
        x[lead] = abs(x[lead])
        out.append(x)
    return tuple(out)


def _dedupe(points: list[tuple[tuple[np.ndarray, ...], float]], tol: float = 1e-6) -> list[SingularTuple]:
    """Group endpoints of one run; the multiplicity counts paths ending at the same point."""
    found: list[list] = []
    for vecs, res in points:
        flat = np.concatenate(vecs)
        for entry in found:
            if np.linalg.norm(entry[0] - flat) < tol:
                entry[3] += 1
                if res < entry[2]:
                    entry[1], entry[2] = vecs, res
                break
        else:
            found.append([flat, vecs, res, 1])
    return [SingularTuple(v, r, m) for _, v, r, m in found]


def _absorb(tuples: list[SingularTuple], others: Sequence[SingularTuple], tol: float = 1e-6) -> list[SingularTuple]:
    """Add the points of ``others`` not yet in ``tuples``.

    A point already present keeps its multiplicity (a second run finding it
    again says nothing about its multiplicity); only a better residual is taken.
    """
    out = list(tuples)
    flats = [np.concatenate(t.vectors) for t in out]
    for t in others:
        flat = np.concatenate(t.vectors)
        hit = next((i for i, f in enumerate(flats) if np.linalg.norm(f - flat) < tol), None)
        if hit is None:
            out.append(t)
            flats.append(flat)
        elif t.residual < out[hit].residual:
            out[hit] = SingularTuple(t.vectors, t.residual, out[hit].multiplicity)
    return out


# -- drivers ------------------------------------------------------------------


def path_count(fmt: TensorFormat) -> int:
    return fmt.k ** sum(fmt.ns)


def _certified(system: MinorSystem, V: np.ndarray, tol: float) -> list:
    points = []
    for v in V:
        u0 = v[0]
        if abs(u0) < 1e-6 * np.linalg.norm(v):
            continue
        xs = [x[0] / u0 for x in system.xs((v / u0)[None, :])]
        xs = refine(system.T, xs)
        res = minor_residual(system.T, xs)
        if res < tol:
            points.append((normalize(xs), res))
    return points


def _rescue(tracker: _Tracker, V: np.ndarray, min_ratio: float = 1e-3) -> np.ndarray:
    """Endpoints of paths stopped just short of ``t = 1`` that Newton at ``t = 1`` pulls onto a finite solution.

    Most such paths are on their way to infinity and stay there (small
    ``|u0| / |V|``); a path that stalled near a genuine solution converges.
    """
    if V.shape[0] == 0:
        return V
    one = np.ones(V.shape[0])
    Vn, _, _ = tracker._newton(V, one, 6, 1e-10 * (1 + np.linalg.norm(V, axis=1)))
    with np.errstate(all="ignore"):
        Hv, _, _ = tracker.H(Vn, one, jacobian=False)
        norm = np.linalg.norm(Vn, axis=1)
        keep = (
            np.all(np.isfinite(Vn), axis=1)
            & (np.linalg.norm(Hv, axis=1) < 1e-8 * norm)
            & (np.abs(Vn[:, 0]) > min_ratio * norm)
        )
    return Vn[keep]


def _solve_once(T: DenseTensor, seed: int, tol: float):
    system = build_system(T, seed)
    rng = np.random.default_rng([seed, 7])
    gamma = np.exp(2j * np.pi * rng.random())
    tracker = _Tracker(system, gamma)
    V, status = tracker.track(_start_points(system))
    tuples = _dedupe(_certified(system, V[status == 0], tol))
    # Newton from a stalled endpoint may land on any solution, so rescued hits carry no multiplicity
    rescued = _dedupe(_certified(system, _rescue(tracker, V[status == 1]), tol))
    rescued = [SingularTuple(t.vectors, t.residual) for t in rescued]
    return _absorb(tuples, rescued), len(V), int(np.sum(status == 2))


def solve_singular_tuples(
    T: DenseTensor,
    seed: int = 0,
    tol: float = CERT_TOL,
    max_paths: int = MAX_PATHS,
    attempts: int = 3,
) -> TupleSolveReport:
    """All certified singular vector tuples of ``T`` with the span analysis inside ``H_T``.

    Seeds ``seed, seed + 1, ...`` are tried (at most ``attempts``) until the
    count reaches the ED degree; a short count after that is reported in the
    result (``complete`` is False), not raised.
    """
    fmt = T.format
    paths = path_count(fmt)
    if paths > max_paths:
        raise PathGuard(f"{fmt} needs {paths} paths, above the limit {max_paths}")
    expected = ed_degree(fmt.ns)
    tuples: list[SingularTuple] = []
    tracked = failed = 0
    seeds = []
    for s in range(seed, seed + attempts):
        new, n_paths, n_failed = _solve_once(T, s, tol)
        seeds.append(s)
        tracked += n_paths
        failed += n_failed
        if n_failed > 0.2 * n_paths:
            raise TrackingUnstable(
                f"tracking unstable, retry with new seed ({n_failed}/{n_paths} paths failed)"
            )
        tuples = _absorb(tuples, new)
        if len(tuples) >= expected:
            break
    if len(tuples) < expected:
        log.warning("%s: found %d of %d tuples after seeds %s", fmt, len(tuples), expected, seeds)
    span = span_rank(tuples)
    return TupleSolveReport(fmt, tuples, expected, tracked, failed, span, numeric_critical_dim(T), seeds)


class CriticalCheck(NamedTuple):
    residual: float
    certified: bool


def verify_in_critical(T: DenseTensor, t: SingularTuple, tol: float = CERT_TOL) -> CriticalCheck:
    """Largest absolute value of the critical-space equations on ``x_1 (x) ... (x) x_k``."""
    A = critical_equations_array(DenseTensor(T.format, _float_array(T).reshape(-1)))
    value = float(np.max(np.abs(A @ t.rank_one().reshape(-1)), initial=0.0))
    return CriticalCheck(value, value < tol)


def numeric_critical_dim(T: DenseTensor) -> int:
    A = critical_equations_array(DenseTensor(T.format, _float_array(T).reshape(-1)))
    return prod(T.dims) - numeric_rank(A)


def span_rank(tuples: Sequence[SingularTuple]) -> int:
    if not tuples:
        return 0
    rows = np.stack([t.rank_one().reshape(-1) for t in tuples])
    return numeric_rank(rows)


def span_codim_in_H(T: DenseTensor, tuples: Sequence[SingularTuple]) -> int:
    """Codimension of the span of the rank-one tensors inside ``H_T`` (numerical ranks)."""
    return numeric_critical_dim(T) - span_rank(tuples)
