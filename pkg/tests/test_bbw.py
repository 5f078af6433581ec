from itertools import product

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tensorspan.bbw import (
    bbw_resolve,
    fundamental_weight,
    h_E,
    h_omega,
    normalize_weight,
    omega_weight,
    weyl_dim,
)
from tensorspan.formats import beyond_by_one, binom, canonical_tuples


def test_h_omega_examples():
    assert h_omega(2, 1, 0, 1) == 1
    assert h_omega(2, 0, 2, 0) == 6
    assert h_omega(1, 0, -2, 1) == 1
    assert h_omega(3, 5, 0, 0) == 0
    assert h_omega(3, 1, 0, 4) == 0


def test_h_omega_sections_of_line_bundles():
    for n in range(1, 6):
        for d in range(0, 8):
            assert h_omega(n, 0, d, 0) == binom(d + n, n)


@pytest.mark.parametrize("n", range(1, 7))
def test_serre_duality(n):
    for r, t, q in product(range(n + 1), range(-10, 11), range(n + 1)):
        assert h_omega(n, r, t, q) == h_omega(n, n - r, -t, n - q)


def test_weyl_dim_examples():
    assert weyl_dim((0, 0, 0)) == 1
    for d in range(8):
        assert weyl_dim((d, 0)) == d + 1
    assert weyl_dim((1, 1, 0)) == 3
    with pytest.raises(ValueError):
        weyl_dim((0, 1))


@given(st.integers(2, 6), st.integers(0, 6))
def test_weyl_dim_symmetric_and_exterior_powers(m, d):
    assert weyl_dim((d,) + (0,) * (m - 1)) == binom(d + m - 1, d)
    j = d % (m + 1)
    assert weyl_dim(fundamental_weight(m, j)) == binom(m, j)


def test_bbw_examples():
    ans = bbw_resolve((2, 0))
    assert (ans.kind, ans.p, ans.dominant, ans.dim) == ("Concentrated", 0, (2, 0), 3)
    assert bbw_resolve((0, 1)).kind == "Singular"
    ans = bbw_resolve((-2, 0))
    assert (ans.kind, ans.p, ans.dominant, ans.dim) == ("Concentrated", 1, (0, 0), 1)


@given(st.lists(st.integers(-6, 6), min_size=2, max_size=5))
def test_bbw_answer_invariants(weight):
    ans = bbw_resolve(weight)
    if not ans.singular:
        dom = ans.dominant
        assert all(a >= b for a, b in zip(dom, dom[1:])) and dom[-1] == 0
        assert ans.dim == weyl_dim(dom)
    # shifting by the all-ones vector changes nothing
    assert bbw_resolve([w + 3 for w in weight]) == ans


def test_normalize_weight():
    assert normalize_weight((3, 2, 2)) == (1, 0, 0)


@pytest.mark.parametrize("n", range(1, 6))
def test_bbw_agrees_with_bott(n):
    for r in range(n + 1):
        for twist in range(-9, 10):
            ans = bbw_resolve(omega_weight(n, r, twist))
            for q in range(n + 1):
                assert ans.h(q) == h_omega(n, r, twist, q), (n, r, twist, q)


def test_h_E_examples():
    for n in range(2, 11):
        assert h_E((2, n, n + 2), n + 1, n) == n - 1
    assert h_E((3, 3, 6), 3, 3) == 1
    assert h_E((3, 3, 6), -1, 0) == 0


def _beyond_by_one(max_k, max_n):
    for k in range(2, max_k + 1):
        for t in canonical_tuples(k, max_n):
            if sum(t) <= max_n:
                yield t


def test_h_E_vanishing_patterns():
    for t in _beyond_by_one(4, 8):
        k, n = len(t), sum(t)
        fmt = beyond_by_one(t)
        total = sum(fmt.ns)
        for r in range(2, total + 1):
            for q in range(r + 1):
                v = h_E(fmt, r, q)
                if r < k:
                    assert v == 0
                if k <= r <= n - 1:
                    if k + 1 >= 4:
                        assert v == 0
                    elif v:
                        assert q == r and r % 2 == 1
                if r >= n and q < r and q != n:
                    assert v == 0


def test_h_E_nonvanishing_cases_for_three_factors():
    for t in _beyond_by_one(2, 8):
        fmt = beyond_by_one(t)
        n = sum(t)
        if 3 <= n - 1:
            assert h_E(fmt, 3, 3) > 0
        for r in range(5, n, 2):
            if min(t) == 1 and (r - 1) // 2 <= max(t):
                assert h_E(fmt, r, r) > 0


def test_h_E_top_degree_product():
    for t in _beyond_by_one(4, 8):
        fmt = beyond_by_one(t)
        n = sum(t)
        last = fmt.ns[-1]
        for r in range(max(2, n + 1), sum(fmt.ns) + 1):
            expected = h_omega(last, r, r + 1, 0)
            for nj in t:
                expected *= h_omega(nj, 0, 1 - r, nj)
            assert h_E(fmt, r, n) == expected


def test_h_E_below_n_vanishes_for_four_or_more_factors():
    for t in _beyond_by_one(4, 8):
        if len(t) < 3:
            continue
        fmt = beyond_by_one(t)
        n = sum(t)
        for q in range(n):
            assert h_E(fmt, n, q) == 0
            assert h_E(fmt, n + 1, q) == 0
