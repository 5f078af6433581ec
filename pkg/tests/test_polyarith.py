from itertools import permutations

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from tensorspan.polyarith import SparsePoly, add, ed_degree, fo_factor, mul_truncated


def poly(nvars, **terms):
    """``poly(2, h1=1, h1h2=2)`` style helper; keys are exponent strings like "1_0"."""
    return SparsePoly(nvars, {tuple(int(e) for e in key[1:].split("_")): c for key, c in terms.items()})


def h(nvars, i):
    return SparsePoly.variable(nvars, i)


def test_add_examples():
    assert (add(h(2, 0), -h(2, 0))).is_zero()
    assert add(h(2, 0) + h(2, 1), h(2, 1)) == SparsePoly(2, {(1, 0): 1, (0, 1): 2})
    p = h(2, 0) + SparsePoly(2, {(3, 1): 7})
    assert p + SparsePoly.zero(2) == p


def test_arity_mismatch():
    with pytest.raises(ValueError):
        add(h(2, 0), h(3, 0))
    with pytest.raises(ValueError):
        mul_truncated(h(2, 0), h(3, 0), (1, 1, 1))


def test_mul_truncated_examples():
    s = h(2, 0) + h(2, 1)
    assert mul_truncated(s, s, (1, 1)) == SparsePoly(2, {(1, 1): 2})
    s3 = h(3, 0) + h(3, 1) + h(3, 2)
    expected = SparsePoly(3, {(1, 1, 0): 2, (1, 0, 1): 2, (0, 1, 1): 2})
    assert mul_truncated(s3, s3, (1, 1, 1)) == expected
    p = SparsePoly(2, {(2, 0): 1, (0, 1): 3})
    assert mul_truncated(p, SparsePoly.one(2), (1, 5)) == SparsePoly(2, {(0, 1): 3})


def test_no_zero_terms_stored():
    p = SparsePoly(2, {(1, 0): 0, (0, 1): 2})
    assert p.terms == {(0, 1): 2}


def test_fo_factor_examples():
    assert fo_factor(1, (1, 1)) == h(2, 0) + h(2, 1)
    assert fo_factor(2, (1, 1, 1)) == h(3, 0) + h(3, 1) + h(3, 2)
    assert fo_factor(1, (2, 2)) == SparsePoly(2, {(2, 0): 1, (1, 1): 1, (0, 2): 1})
    with pytest.raises(ValueError):
        fo_factor(3, (1, 1))


@given(st.lists(st.integers(1, 4), min_size=2, max_size=4), st.data())
def test_fo_factor_is_homogeneous(ns, data):
    i = data.draw(st.integers(1, len(ns)))
    f = fo_factor(i, ns)
    assert all(sum(e) == ns[i - 1] for e in f.terms)
    # one group of terms per power of h_i
    assert {e[i - 1] for e in f.terms} == set(range(ns[i - 1] + 1))


def _sympy_ed(ns):
    """Independent oracle: expand the quotient with sympy and read the coefficient."""
    hs = sympy.symbols(f"h1:{len(ns) + 1}")
    total = 1
    for i, ni in enumerate(ns):
        hhat = sum(hs) - hs[i]
        q = sympy.cancel((hhat ** (ni + 1) - hs[i] ** (ni + 1)) / (hhat - hs[i]))
        total *= q
    expanded = sympy.Poly(sympy.expand(total), *hs)
    return int(expanded.coeff_monomial(sympy.Mul(*[x**n for x, n in zip(hs, ns)])))


def test_ed_degree_examples():
    assert ed_degree((1, 1)) == 2
    assert ed_degree((2, 2)) == 3
    assert ed_degree((1, 1, 1)) == 6
    with pytest.raises(ValueError):
        ed_degree((0, 2))


@pytest.mark.parametrize("ns", [(1, 1, 3), (2, 2, 2), (1, 2, 4), (1, 1, 1, 1), (1, 1, 1, 4), (2, 3, 5)])
def test_ed_degree_matches_sympy(ns):
    assert ed_degree(ns) == _sympy_ed(ns)


def test_ed_degree_permutation_invariant():
    values = {ed_degree(p) for p in permutations((1, 2, 4))}
    assert values == {18}


def _svd_count(m, n, rng):
    A = rng.standard_normal((m, n))
    s = np.linalg.svd(A, compute_uv=False)
    # distinct nonzero singular values of a generic matrix
    return int(np.sum(s > 1e-10 * s[0]))


def test_matrix_ed_degree_matches_svd():
    rng = np.random.default_rng(0)
    for n1 in range(1, 13):
        for n2 in range(1, 13):
            assert ed_degree((n1, n2)) == min(n1, n2) + 1 == _svd_count(n1 + 1, n2 + 1, rng)
