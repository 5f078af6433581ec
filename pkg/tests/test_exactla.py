from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tensorspan import exactla
from tensorspan.exactla import (
    DEFAULT_PRIME,
    SECOND_PRIME,
    ExactMatrix,
    RankDisagreement,
    generic_rank,
    kernel_basis,
    matmul_mod,
    random_tensor,
    rank,
)


def test_primes_are_prime_and_large():
    import sympy

    for p in (DEFAULT_PRIME, SECOND_PRIME):
        assert sympy.isprime(p) and p >= 2**30


def test_rank_examples():
    assert rank(ExactMatrix.identity(5)) == 5
    assert rank(ExactMatrix.zeros(3, 7)) == 0
    assert rank(ExactMatrix([[1, 2], [2, 4]])) == 1
    assert rank(ExactMatrix([[1, 2], [2, 4]], prime=None)) == 1
    assert rank(ExactMatrix.zeros(0, 4)) == 0


def test_entries_reduced():
    M = ExactMatrix([[-1, DEFAULT_PRIME + 3]])
    assert M.dense.tolist() == [[DEFAULT_PRIME - 1, 3]]


def test_rank_small_prime_detects_dependency():
    M = ExactMatrix([[1, 1], [1, 3]], prime=2)
    assert rank(M) == 1
    assert rank(ExactMatrix([[1, 1], [1, 3]], prime=None)) == 2


@pytest.mark.parametrize("backend", ["numpy", "flint"])
def test_backends_agree(backend):
    rng = np.random.default_rng(3)
    for _ in range(10):
        r, c, k = rng.integers(1, 30, size=3)
        A = rng.integers(0, 1000, size=(r, k)) @ rng.integers(0, 1000, size=(k, c))
        M = ExactMatrix(A)
        assert rank(M, backend) == rank(ExactMatrix(A, prime=None)) == min(r, c, k)


def test_rank_of_transpose():
    rng = np.random.default_rng(4)
    for size in (5, 50, 200):
        k = size // 2
        A = rng.integers(0, DEFAULT_PRIME, size=(size, k)) % 1000
        B = rng.integers(0, 1000, size=(k, size))
        M = ExactMatrix(A @ B)
        assert rank(M) == rank(M.T) == k


def _check_kernel(M, basis):
    p = M.prime
    for v in basis:
        out = M.matvec(v)
        assert all(x == 0 for x in out), out
    assert len(basis) == M.cols - rank(M)


def test_kernel_examples():
    assert kernel_basis(ExactMatrix.identity(4)) == []
    assert len(kernel_basis(ExactMatrix.zeros(2, 3))) == 3
    M = ExactMatrix([[1, 1, 0]])
    basis = kernel_basis(M)
    _check_kernel(M, basis)
    assert rank(ExactMatrix(np.array(basis))) == 2
    Q = ExactMatrix([[1, 1, 0]], prime=None)
    qb = kernel_basis(Q)
    assert all(isinstance(x, Fraction) for v in qb for x in v)
    _check_kernel(Q, qb)


@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32))
def test_kernel_vectors_are_annihilated(r, c, seed):
    rng = np.random.default_rng(seed)
    A = rng.integers(-3, 4, size=(r, c))
    for prime in (DEFAULT_PRIME, 7, None):
        M = ExactMatrix(A, prime)
        _check_kernel(M, kernel_basis(M))


def test_coo_round_trip():
    M = ExactMatrix.from_coo((2, 3), [0, 1], [2, 0], [5, -1], 11)
    assert M.dense.tolist() == [[0, 0, 5], [10, 0, 0]]
    assert M.T.dense.tolist() == [[0, 10], [0, 0], [5, 0]]
    assert rank(M) == 2


def test_random_tensor():
    a = random_tensor((2, 2, 2), seed=5)
    assert a.shape == (8,)
    assert np.array_equal(a, random_tensor("2x2x2", seed=5))
    assert not np.array_equal(a, random_tensor((2, 2, 2), seed=6))
    b = random_tensor((3, 4), seed=1, bound=2)
    assert b.min() >= -2 and b.max() <= 2
    assert np.all((a >= 0) & (a < DEFAULT_PRIME))


def test_generic_rank_protocol():
    def build(p, s):
        rng = np.random.default_rng(s)
        return ExactMatrix(rng.integers(0, p, size=(4, 6)), p)

    res = generic_rank(build)
    assert res.agreed and res.value == 4 and len(res.observations) == 4
    with pytest.raises(ValueError):
        generic_rank(build, primes=[DEFAULT_PRIME])


def test_generic_rank_flags_disagreement():
    def build(p, s):
        # determinant 3s: singular mod 3, invertible mod 5
        return ExactMatrix([[1, 1], [1, 1 + 3 * s]], p)

    with pytest.raises(RankDisagreement):
        generic_rank(build, primes=[3, 5], seeds=[1, 2])
    res = generic_rank(build, primes=[3, 5], seeds=[1, 2], strict=False)
    assert not res.agreed and res.value == 2


def test_numpy_backend_refuses_big_prime():
    with pytest.raises(ValueError):
        exactla._rref_mod_p(np.eye(2, dtype=np.int64), 2**61 - 1)


@given(st.integers(1, 6), st.integers(1, 40), st.integers(1, 6), st.integers(0, 2**32))
def test_matmul_mod_matches_python_integers(m, k, n, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, DEFAULT_PRIME, size=(m, k))
    b = rng.integers(0, DEFAULT_PRIME, size=(k, n))
    expected = [[sum(int(a[i, t]) * int(b[t, j]) for t in range(k)) % DEFAULT_PRIME for j in range(n)] for i in range(m)]
    assert matmul_mod(a, b, DEFAULT_PRIME).tolist() == expected
