import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tensorspan import zsolver
from tensorspan.critical import DenseTensor, span_codim_via_alpha
from tensorspan.exactla import DEFAULT_PRIME
from tensorspan.formats import TensorFormat, canonical_tuples
from tensorspan.polyarith import ed_degree
from tensorspan.zsolver import (
    PathGuard,
    SingularTuple,
    TrackingUnstable,
    build_system,
    minor_residual,
    normalize,
    solve_singular_tuples,
    span_codim_in_H,
    verify_in_critical,
)


def gaussian(dims, seed):
    rng = np.random.default_rng(seed)
    return DenseTensor.from_array(rng.standard_normal(dims))


@pytest.mark.parametrize("dims, neq, deg", [((2, 2, 2), 3, 3), ((3, 3), 4, 2), ((2, 2, 4), 5, 3)])
def test_system_shape(dims, neq, deg):
    system = build_system(gaussian(dims, 0), seed=1)
    assert system.nvars == neq and system.degree == deg
    V = np.random.default_rng(2).standard_normal((4, neq + 1)) + 0j
    F, J = system.evaluate(V)
    assert F.shape == (4, neq) and J.shape == (4, neq, neq + 1)
    # homogeneous of degree k in (u0, u)
    F2, _ = system.evaluate(1.7j * V, jacobian=False)
    assert np.allclose(F2, (1.7j) ** deg * F)


@pytest.mark.parametrize("dims", [(3, 3), (2, 2, 2), (2, 3, 4), (2, 2, 2, 2)])
def test_jacobian_matches_finite_differences(dims):
    system = build_system(gaussian(dims, 3), seed=4)
    rng = np.random.default_rng(5)
    N = system.nvars + 1
    V = rng.standard_normal((1, N)) + 1j * rng.standard_normal((1, N))
    _, J = system.evaluate(V)
    eps = 1e-7
    for col in range(N):
        dV = np.zeros_like(V)
        dV[0, col] = eps
        Fp, _ = system.evaluate(V + dV, jacobian=False)
        Fm, _ = system.evaluate(V - dV, jacobian=False)
        assert np.allclose((Fp - Fm) / (2 * eps), J[0, :, col], atol=1e-6)


def test_solver_rejects_field_tensors():
    with pytest.raises(TypeError):
        solve_singular_tuples(DenseTensor.random((2, 2), 1, DEFAULT_PRIME))


def test_path_guard():
    with pytest.raises(PathGuard):
        solve_singular_tuples(gaussian((3, 3, 3), 0), max_paths=100)


def test_unstable_tracking_is_reported(monkeypatch):
    def broken(self, V):
        return V, np.full(len(V), 2)

    monkeypatch.setattr(zsolver._Tracker, "track", broken)
    with pytest.raises(TrackingUnstable, match="retry with new seed"):
        solve_singular_tuples(gaussian((2, 2), 0))


def _align(u, v):
    return abs(np.vdot(u, v))


@pytest.mark.parametrize("shape", [(2, 2), (3, 3), (2, 4), (4, 3)])
def test_matrices_match_svd(shape):
    A = np.random.default_rng(sum(shape)).standard_normal(shape)
    rep = solve_singular_tuples(DenseTensor.from_array(A), seed=2)
    U, s, Vt = np.linalg.svd(A)
    assert len(rep.tuples) == min(shape) == rep.expected_count
    for j in range(min(shape)):
        matches = [t for t in rep.tuples if abs(_align(U[:, j], t.vectors[0]) - 1) < 1e-8]
        assert len(matches) == 1
        assert abs(_align(Vt[j], matches[0].vectors[1]) - 1) < 1e-8


def test_diagonal_matrix_gives_axis_pairs():
    T = DenseTensor.from_array(np.diag([1.0, 2.0, 3.0]))
    rep = solve_singular_tuples(T, seed=0)
    found = sorted(int(np.argmax(np.abs(t.vectors[0]))) for t in rep.tuples)
    assert found == [0, 1, 2]
    for t in rep.tuples:
        i = int(np.argmax(np.abs(t.vectors[0])))
        assert np.allclose(t.vectors[0], np.eye(3)[i], atol=1e-10)
        assert np.allclose(t.vectors[1], np.eye(3)[i], atol=1e-10)


def test_axis_pair_is_exactly_critical():
    T = DenseTensor.from_array(np.diag([1.0, 2.0, 3.0]))
    e = np.eye(3, dtype=complex)
    t = SingularTuple((e[0], e[0]), 0.0)
    assert verify_in_critical(T, t).residual == 0.0


def test_random_tuple_is_not_critical():
    T = gaussian((2, 2, 2), 1)
    rng = np.random.default_rng(0)
    t = SingularTuple(tuple(rng.standard_normal(2) + 0j for _ in range(3)), 1.0)
    check = verify_in_critical(T, t)
    assert not check.certified and check.residual > 1e-3


def test_generic_222():
    T = gaussian((2, 2, 2), 11)
    rep = solve_singular_tuples(T, seed=0)
    assert len(rep.tuples) == 6 and rep.complete
    assert all(t.residual < 1e-8 for t in rep.tuples)
    assert all(verify_in_critical(T, t).certified for t in rep.tuples)
    assert rep.span_rank == 5 and rep.critical_dim == 5 and span_codim_in_H(T, rep.tuples) == 0
    assert rep.span_rank <= rep.critical_dim


def test_generic_224_matches_alpha_kernel():
    T = gaussian((2, 2, 4), 12)
    rep = solve_singular_tuples(T, seed=0)
    assert len(rep.tuples) == ed_degree((1, 1, 3)) == 8
    assert rep.span_rank == 7 and rep.span_codim == 1
    assert rep.span_codim == span_codim_via_alpha(DenseTensor.random((2, 2, 4), 1))


def test_generic_matrix_span():
    rep = solve_singular_tuples(gaussian((3, 3), 3), seed=0)
    assert len(rep.tuples) == 3 and rep.span_rank == 3 and rep.span_codim == 0


def _small_formats(limit=3**6):
    """Every sorted format whose total-degree homotopy has at most ``limit`` paths."""
    out = []
    for k in range(2, 6):
        for ns in canonical_tuples(k, 12):
            fmt = TensorFormat(tuple(n + 1 for n in ns))
            if zsolver.path_count(fmt) <= limit:
                out.append(fmt.dims)
    return out


@pytest.mark.slow
@pytest.mark.parametrize("dims", _small_formats())
def test_tuple_count_is_ed_degree(dims):
    expected = ed_degree(TensorFormat(dims).ns)
    for seed in range(3):
        rep = solve_singular_tuples(gaussian(dims, 100 + seed), seed=seed)
        assert len(rep.tuples) == expected
        assert max(t.residual for t in rep.tuples) < 1e-8


def test_solution_tuples_are_unit_and_normalized():
    rep = solve_singular_tuples(gaussian((2, 3, 3), 5), seed=1)
    for t in rep.tuples:
        for v in t.vectors:
            assert abs(np.linalg.norm(v) - 1) < 1e-12
            lead = v[np.flatnonzero(np.abs(v) > 1e-8)[0]]
            assert lead.imag == 0 and lead.real > 0
        assert all(np.allclose(a, b) for a, b in zip(normalize(t.vectors), t.vectors))


@given(st.lists(st.integers(2, 4), min_size=2, max_size=3), st.integers(0, 2**31))
def test_normalize_idempotent(dims, seed):
    rng = np.random.default_rng(seed)
    xs = [rng.standard_normal(d) + 1j * rng.standard_normal(d) for d in dims]
    once = normalize(xs)
    twice = normalize(once)
    assert all(np.allclose(a, b, atol=1e-14) for a, b in zip(once, twice))


def test_minor_residual_scale_free():
    T = gaussian((2, 3), 0).array()
    x = [np.array([1.0, 2.0]), np.array([0.5, -1.0, 2.0])]
    assert np.isclose(minor_residual(T, x), minor_residual(T, [3 * x[0], -2 * x[1]]))


def test_report_json_shape():
    rep = solve_singular_tuples(gaussian((2, 2), 1), seed=0)
    d = rep.to_dict()
    assert d["found"] == 2 and d["expected_count"] == 2 and len(d["tuples"]) == 2
    assert len(d["tuples"][0]["vectors"]) == 2


def test_merging_runs_keeps_multiplicity_and_best_residual():
    x = (np.array([1.0, 0.0]), np.array([0.6, 0.8]))
    y = (np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    first = zsolver._dedupe([(x, 1e-12), (x, 1e-13), (y, 1e-12)])
    assert [t.multiplicity for t in first] == [2, 1]
    assert first[0].residual == 1e-13
    again = zsolver._absorb(first, [SingularTuple(x, 1e-15, 3), SingularTuple(y, 1e-9)])
    assert [t.multiplicity for t in again] == [2, 1]
    assert again[0].residual == 1e-15 and again[1].residual == 1e-12
    z = (np.array([0.6, 0.8]), np.array([0.0, 1.0]))
    assert len(zsolver._absorb(again, [SingularTuple(z, 1e-12)])) == 3


@pytest.mark.slow
def test_span_codim_matches_alpha_kernel_on_four_factors():
    T = gaussian((2, 2, 2, 5), 100)
    rep = solve_singular_tuples(T, seed=0, attempts=1)
    assert len(rep.tuples) == ed_degree((1, 1, 1, 4)) == 48
    assert not any(t.multiple for t in rep.tuples)
    assert rep.span_codim == span_codim_in_H(T, rep.tuples) == 3
    assert span_codim_via_alpha(DenseTensor.random((2, 2, 2, 5), 1)) == 3
