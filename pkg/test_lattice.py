"""Tests for torus geometry, multi-indices and finite differences"""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from src.errors import ConfigurationError, DomainError, PreconditionError
from src.lattice import (
    Automorphism, CoordinatePatch, MultiIndex, SignedPermutation, TorusGeometry, UnitVector, apply_multi_index,
    binom, forward_difference, hyperoctahedral_group, inflate, patch_contains, read_value, redundancy_identity_check,
    stencil, unit_vectors,
)

E1, E2 = UnitVector(0, 1), UnitVector(1, 1)


def polynomial_function(coefficients):
    """f(x) = Σ c_k (x_1 + 2 x_2)^k, an exact function on Z^2"""
    def f(x):
        t = x[0] + 2 * x[1]
        return sum((Fraction(c) * t ** k for k, c in enumerate(coefficients)), Fraction(0))
    return f


small_alpha = st.lists(st.integers(0, 2), min_size=4, max_size=4).map(lambda c: MultiIndex(tuple(c)))
coefficients = st.lists(st.integers(-5, 5), min_size=1, max_size=5)
points_2d = st.tuples(st.integers(-4, 4), st.integers(-4, 4))


class TestBinom:
    @pytest.mark.parametrize("x, k, expected", [
        (5, 2, 10),
        (3, 5, 0),
        (0, 0, 1),
        (-1, 3, -1),
        (-2, 2, 3),
        (4, -1, 0),
    ])
    def test_values(self, x, k, expected):
        assert binom(x, k) == expected

    @given(st.integers(-20, 20), st.integers(1, 6))
    def test_pascal(self, x, k):
        assert binom(x + 1, k) == binom(x, k) + binom(x, k - 1)


class TestMultiIndex:
    def test_counts_layout(self):
        alpha = MultiIndex.of(2, {E1: 2, -E2: 1})
        assert alpha.counts == (2, 0, 0, 1)
        assert alpha.norm1 == 3
        assert alpha.norm_inf == 2
        assert not alpha.is_forward
        assert alpha.backward_count == 1

    def test_json_labels(self):
        alpha = MultiIndex.of(2, {E1: 2, -E2: 1})
        assert alpha.to_json() == {"+1": 2, "-2": 1}
        assert MultiIndex.from_json(2, {"+1": 2, "-2": 1}) == alpha

    def test_bad_label(self):
        with pytest.raises(ConfigurationError):
            UnitVector.parse("x1")

    def test_negative_count(self):
        with pytest.raises(PreconditionError):
            MultiIndex.of(1, {E1: -1})

    def test_made_forward(self):
        alpha = MultiIndex.from_directions(1, [E1, -E1])
        assert alpha.opposed_axis() == 0
        assert alpha.made_forward() == MultiIndex.from_forward([2])

    def test_unit_vector_order(self):
        assert [e.label() for e in unit_vectors(2)] == ["+1", "-1", "+2", "-2"]


class TestStencil:
    def test_second_difference(self):
        alpha = MultiIndex.from_forward([2])
        assert stencil(alpha) == (((0,), 1), ((1,), -2), ((2,), 1))

    def test_backward_difference(self):
        f = {(0,): Fraction(3), (-1,): Fraction(1)}
        assert forward_difference(f, -UnitVector(0, 1), (0,)) == -2

    def test_undefined_point(self):
        with pytest.raises(DomainError):
            read_value({(0,): Fraction(1)}, (1,))

    @given(small_alpha, small_alpha, coefficients, points_2d)
    @settings(max_examples=40, deadline=None)
    def test_differences_commute(self, alpha, beta, coeffs, x):
        f = polynomial_function(coeffs)
        combined = MultiIndex(tuple(a + b for a, b in zip(alpha.counts, beta.counts)))
        nested = apply_multi_index(lambda y: apply_multi_index(f, beta, y), alpha, x)
        assert nested == apply_multi_index(f, combined, x)

    @given(coefficients, points_2d, st.sampled_from(unit_vectors(2)))
    @settings(max_examples=40, deadline=None)
    def test_redundancy_identity(self, coeffs, x, e):
        assert redundancy_identity_check(polynomial_function(coeffs), e, x)


class TestTorus:
    def test_point_wraps(self):
        g = TorusGeometry(2, 2, 3)
        assert g.period == 8
        assert g.point((9, -1)) == (1, 7)

    def test_separation(self):
        g = TorusGeometry(1, 4, 1)
        assert g.separation((0,), (3,)) == (-1,)
        assert g.separation((0,), (2,)) == (2,)

    def test_adjacency(self):
        g = TorusGeometry(2, 4, 1)
        assert g.are_adjacent((0, 0), (3, 0))
        assert not g.are_adjacent((0, 0), (1, 1))

    @pytest.mark.parametrize("d, L, N", [(0, 4, 1), (1, 1, 3), (1, 4, 0)])
    def test_rejects_bad_geometry(self, d, L, N):
        with pytest.raises(ConfigurationError):
            TorusGeometry(d, L, N)


class TestPatch:
    def test_chart_round_trip(self, plane_patch):
        for x in plane_patch.points():
            assert plane_patch.unchart(plane_patch.chart(x)) == x
        assert len(list(plane_patch.points())) == 49

    def test_contains(self, plane, plane_patch):
        assert plane_patch.contains(plane.point((-3, 3)))
        assert not plane_patch.contains(plane.point((4, 0)))

    def test_patch_contains_set(self, plane, plane_patch):
        inside = [plane.point((-3, 3)), plane.point((0, 0)), plane.point((2, -1))]
        assert patch_contains(plane_patch, inside)
        assert patch_contains(plane_patch, [])
        assert not patch_contains(plane_patch, inside + [plane.point((0, 4))])

    def test_wrap_around_rejected(self):
        with pytest.raises(ConfigurationError):
            CoordinatePatch(TorusGeometry(1, 2, 2), (0,), (2,))

    def test_inflate(self):
        assert inflate([(0,)], 1) == [(-1,), (0,), (1,)]


class TestAutomorphisms:
    def test_group_order(self):
        assert len(hyperoctahedral_group(2)) == 8
        assert len(hyperoctahedral_group(3)) == 48

    def test_rotation_fixes_centre(self, plane):
        quarter = SignedPermutation((1, 0), (1, -1))
        E = Automorphism.rotate(plane, quarter, (1, 2))
        assert E.apply((1, 2)) == (1, 2)

    @given(st.sampled_from(hyperoctahedral_group(2)), points_2d, points_2d)
    @settings(max_examples=30, deadline=None)
    def test_inverse(self, rotation, t, x):
        g = TorusGeometry(2, 4, 2)
        E = Automorphism.translate(g, t).compose(Automorphism.rotate(g, rotation))
        x = g.point(x)
        assert E.inverse().apply(E.apply(x)) == x
        assert E.compose(E.inverse()).apply(x) == x

    def test_compose_order(self, plane):
        shift = Automorphism.translate(plane, (1, 0))
        flip = Automorphism.rotate(plane, SignedPermutation((0, 1), (-1, 1)))
        assert shift.compose(flip).apply((2, 0)) == plane.point((-1, 0))
        assert flip.compose(shift).apply((2, 0)) == plane.point((-3, 0))

    def test_rejects_non_permutation(self):
        with pytest.raises(ConfigurationError):
            SignedPermutation((0, 0), (1, 1))
