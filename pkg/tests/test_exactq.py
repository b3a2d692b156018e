"""Kernel, intersection and canonicality checks for the exact linear algebra core."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from exactlie.exactq import (
    Matrix, Subspace, kernel_basis, column_space, rank, rref, solve,
)


def F(x):
    return Fraction(x)


def span(n, *vecs):
    return Subspace.from_columns(n, [list(v) for v in vecs])


def e(n, i):
    return tuple(F(1) if j == i else F(0) for j in range(n))


class TestKernel:
    def test_identity_has_zero_kernel(self):
        assert kernel_basis(Matrix.identity(3)).is_zero()

    def test_zero_map_has_full_kernel(self):
        K = kernel_basis(Matrix.zero(2, 3))
        assert K == Subspace.full(3)

    def test_rank_one_two_by_two(self):
        # [[1,2],[2,4]] kills exactly the line through (-2, 1)
        K = kernel_basis(Matrix([[1, 2], [2, 4]]))
        assert K == span(2, (-2, 1))
        assert K.dim == 1

    def test_kernel_columns_multiply_to_zero(self):
        M = Matrix([[1, 2, 3, 0], [0, 1, -1, 2], [1, 3, 2, 2]])
        K = kernel_basis(M)
        for j in range(K.dim):
            assert all(x == 0 for x in M.apply(K.basis.column(j)))
        assert rank(M) + K.dim == M.cols

    def test_fractional_entries(self):
        M = Matrix([[Fraction(1, 2), Fraction(1, 3)]])
        K = kernel_basis(M)
        assert K.dim == 1
        assert all(x == 0 for x in M.apply(K.basis.column(0)))


class TestSubspaceLattice:
    def test_intersection_idempotent(self):
        S = span(4, (1, 0, 2, 0), (0, 1, 1, 1))
        assert S.intersect(S) == S

    def test_complementary_planes_meet_in_zero(self):
        S1 = span(4, e(4, 0), e(4, 1))
        S2 = span(4, e(4, 2), e(4, 3))
        assert S1.intersect(S2).is_zero()

    def test_adjacent_planes_meet_in_line(self):
        S1 = span(3, e(3, 0), e(3, 1))
        S2 = span(3, e(3, 1), e(3, 2))
        assert S1.intersect(S2) == span(3, e(3, 1))

    def test_contains_zero_and_self(self):
        S = span(3, (1, 2, 3))
        assert S.contains(Subspace.zero(3))
        assert S.contains(S)

    def test_strict_noncontainment(self):
        assert not span(2, (1, 0)).contains(span(2, (1, 1)))

    def test_ambient_mismatch_raises(self):
        with pytest.raises(ValueError):
            span(2, (1, 0)).intersect(span(3, (1, 0, 0)))

    def test_complement_in(self):
        big = span(3, (1, 0, 0), (0, 1, 0), (0, 0, 1))
        small = span(3, (1, 1, 0))
        C = small.complement_in(big)
        assert small.sum(C) == big
        assert small.intersect(C).is_zero()


class TestCanonicality:
    def test_same_span_same_basis(self):
        S1 = span(3, (1, 1, 0), (0, 1, 1))
        S2 = span(3, (1, 2, 1), (2, 3, 1))
        assert S1 == S2
        assert S1.basis == S2.basis

    def test_pivots_normalized(self):
        S = span(2, (-2, 1))
        col = S.basis.column(0)
        assert col == (F(1), Fraction(-1, 2))

    def test_solve(self):
        M = Matrix([[1, 2], [3, 4], [5, 6]])
        x = solve(M, (5, 11, 17))
        assert x is not None
        assert M.apply(x) == (F(5), F(11), F(17))
        assert solve(M, (1, 0, 0)) is None

    def test_rref_shape(self):
        R, piv = rref(Matrix([[0, 2, 4], [1, 1, 1]]))
        assert piv == (0, 1)
        assert R.row(0)[0] == 1 and R.row(1)[1] == 1


small_entries = st.integers(min_value=-4, max_value=4)


def matrices(rows, cols):
    return st.lists(
        st.lists(small_entries, min_size=cols, max_size=cols),
        min_size=rows, max_size=rows,
    ).map(Matrix)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4).flatmap(lambda n: st.tuples(matrices(n, 3), matrices(n, 3))))
def test_dimension_formula(pair):
    M1, M2 = pair
    S1 = column_space(M1)
    S2 = column_space(M2)
    inter = S1.intersect(S2)
    total = S1.sum(S2)
    assert S1.dim + S2.dim == total.dim + inter.dim
    assert S1.contains(inter) and S2.contains(inter)
    assert total.contains(S1) and total.contains(S2)


@settings(max_examples=60, deadline=None)
@given(matrices(3, 5))
def test_kernel_exactness_property(M):
    K = kernel_basis(M)
    assert rank(M) + K.dim == 5
    for j in range(K.dim):
        assert all(x == 0 for x in M.apply(K.basis.column(j)))


@settings(max_examples=40, deadline=None)
@given(matrices(4, 3))
def test_canonical_representative_property(M):
    S = column_space(M)
    # re-canonicalizing a shuffled, rescaled spanning set gives the same basis
    cols = [tuple(3 * x for x in c) for c in reversed(S.basis.columns())]
    cols += [S.basis.column(j) for j in range(S.dim)]
    assert Subspace.from_columns(4, cols) == S
