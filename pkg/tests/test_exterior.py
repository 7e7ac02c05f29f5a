import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lavgap.exterior import (ExteriorElement, basis, check_multi_index, complement, contract, count_inversions,
                             hodge, hodge_arrays, inner, one_form, permutation_sign, selftest, shuffle_sign,
                             wedge, wedge_arrays)


@st.composite
def elements(draw, N=None, k=None):
    N = draw(st.integers(1, 6)) if N is None else N
    k = draw(st.integers(0, N)) if k is None else k
    coeffs = draw(st.lists(st.floats(-10, 10, allow_nan=False), min_size=math.comb(N, k),
                           max_size=math.comb(N, k)))
    return ExteriorElement.from_array(N, k, coeffs)


@st.composite
def pairs(draw):
    N = draw(st.integers(1, 6))
    k = draw(st.integers(0, N))
    l = draw(st.integers(0, N - k))
    return draw(elements(N, k)), draw(elements(N, l))


def test_basis_sizes_and_order():
    for N in range(1, 7):
        for k in range(N + 1):
            b = basis(N, k)
            assert len(b) == math.comb(N, k)
            assert list(b) == sorted(b)


def test_multi_index_validation():
    assert check_multi_index((1, 3), 4) == (1, 3)
    with pytest.raises(ValueError):
        check_multi_index((3, 1), 4)
    with pytest.raises(ValueError):
        check_multi_index((1, 1), 3)
    with pytest.raises(ValueError):
        check_multi_index((0,), 3)


def test_inversions_and_signs():
    assert count_inversions([3, 2, 1]) == 3
    assert permutation_sign([2, 1, 3]) == -1
    assert permutation_sign([1, 1]) == 0
    assert shuffle_sign((1, 3), (2,)) == -1
    assert complement((2,), 3) == (1, 3)


def test_getitem_reorders_with_sign():
    f = ExteriorElement.monomial(3, (1, 2), 2.0)
    assert f[(2, 1)] == -2.0
    assert f[(1, 3)] == 0.0


def test_volume_form_from_hodge_of_one():
    one = ExteriorElement.monomial(3, (), 1.0)
    assert hodge(one)[(1, 2, 3)] == 1.0


@settings(max_examples=300, deadline=None)
@given(elements())
def test_double_hodge_is_signed_identity_exactly(f):
    sign = (-1) ** (f.k * (f.N - f.k))
    assert hodge(hodge(f)).coeffs == (f * sign).coeffs


@settings(max_examples=200, deadline=None)
@given(pairs())
def test_graded_commutativity(fg):
    f, g = fg
    sign = (-1) ** (f.k * g.k)
    assert wedge(f, g).allclose(wedge(g, f) * sign, atol=1e-9)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 6).flatmap(lambda N: st.tuples(elements(N), elements(N), elements(N))))
def test_wedge_associativity(fgh):
    f, g, h = fgh
    if f.k + g.k + h.k > f.N:
        return
    assert wedge(wedge(f, g), h).allclose(wedge(f, wedge(g, h)), atol=1e-8)


@settings(max_examples=200, deadline=None)
@given(pairs())
def test_contraction_is_adjoint_of_wedge(fg):
    f, g = fg
    h = ExteriorElement.from_array(f.N, f.k + g.k, np.linspace(-1, 1, math.comb(f.N, f.k + g.k)))
    assert inner(wedge(g, f), h) == pytest.approx(inner(f, contract(g, h)), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(elements(), st.lists(st.floats(-1, 1, allow_nan=False), min_size=6, max_size=6))
def test_unit_vector_decomposition(f, raw):
    vec = np.array(raw[:f.N]) + 1e-3
    v = one_form(f.N, vec / np.linalg.norm(vec))
    parts = ExteriorElement.zero(f.N, f.k)
    if f.k > 0:
        parts = parts + wedge(v, contract(v, f))
    if f.k < f.N:
        parts = parts + contract(v, wedge(v, f))
    assert parts.allclose(f, atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6).flatmap(lambda N: st.integers(0, N).flatmap(
    lambda k: st.tuples(elements(N, k), elements(N, k)))))
def test_hodge_defines_inner_product(fg):
    f, g = fg
    volume = wedge(f, hodge(g))[tuple(range(1, f.N + 1))]
    assert volume == pytest.approx(inner(f, g), abs=1e-8)


@settings(max_examples=100, deadline=None)
@given(pairs())
def test_dense_wedge_matches_element_wedge(fg):
    f, g = fg
    dense = wedge_arrays(f.N, f.k, g.k, f.to_array()[None, :], g.to_array()[None, :])[0]
    assert np.allclose(dense, wedge(f, g).to_array(), atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(elements())
def test_dense_hodge_matches_element_hodge(f):
    assert np.array_equal(hodge_arrays(f.N, f.k, f.to_array()[None, :])[0], hodge(f).to_array())


def test_degree_overflow_gives_zero():
    f = ExteriorElement.monomial(2, (1, 2))
    assert wedge(f, one_form(2, [1.0, 0.0])).coeffs == {}


def test_mismatched_ambient_raises():
    with pytest.raises(ValueError):
        wedge(one_form(2, [1, 0]), one_form(3, [1, 0, 0]))


def test_selftest_passes():
    result = selftest(cases=300, seed=3)
    assert result["passed"] and result["hodge_twice_exact"]
