"""Tests for point functionals, automorphisms, conjugation and supersymmetry"""

from fractions import Fraction

import pytest

from src.errors import ConfigurationError, PreconditionError
from src.functionals import (
    Functional, GradedFunctional, automorphism_act, conjugate_swap, evaluate_polynomial_at, multiply,
    pair_zero, project_sector, sum_over, supersymmetry_Q,
)
from src.lattice import Automorphism, MultiIndex, SignedPermutation, hyperoctahedral_group
from src.monomials import FieldPolynomial, MonomialKey, automorphism_theta, sigma_act
from src.testfn import make_test_function, pullback

PHI, PHIBAR, PSI, PSIBAR = 0, 1, 2, 3


class TestFunctional:
    def test_fermion_square_vanishes(self, boson_fermion_d2):
        x = (0, 0)
        assert Functional.term([(1, x), (1, x)], boson_fermion_d2).is_zero()

    def test_fermion_reorder_sign(self, boson_fermion_d2):
        x, y = (0, 0), (1, 0)
        assert Functional.term([(1, y), (1, x)], boson_fermion_d2) == \
            -Functional.term([(1, x), (1, y)], boson_fermion_d2)

    def test_multiply(self, boson_d1):
        F = Functional.field(0, (0,)) + Functional.field(0, (1,))
        square = multiply(F, F, boson_d1)
        assert square.coefficient(((0, (0,)), (0, (1,)))) == 2
        assert square.coefficient(((0, (0,)), (0, (0,)))) == 1
        assert len(square) == 3

    def test_support_and_signatures(self, boson_fermion_d2):
        F = Functional.term([(0, (0, 0)), (2, (1, 1))], boson_fermion_d2, Fraction(1, 3))
        assert F.support() == {(0, 0), (1, 1)}
        assert F.signatures() == {(0, 2)}


class TestPolynomialEvaluation:
    def test_gradient_expands(self, boson_d1, line):
        grad = FieldPolynomial.monomial(MonomialKey(((0, MultiIndex.from_forward([1])),)))
        F = evaluate_polynomial_at(grad, (3,), boson_d1, line)
        assert F == Functional.field(0, (4,)) - Functional.field(0, (3,))

    def test_sum_over_set(self, boson_d1, line):
        phi = FieldPolynomial.monomial(MonomialKey(((0, MultiIndex.zero(1)),)))
        F = sum_over(phi, [(0,), (1,), (1,)], boson_d1, line)
        assert F == Functional.field(0, (0,)) + Functional.field(0, (1,))

    def test_pairing(self, boson_d1, line_patch):
        g = make_test_function((0, 0), boson_d1, lambda z: Fraction(z[0][0] * z[1][0]))
        F = Functional.term([(0, (1,)), (0, (2,))], boson_d1, 3)
        assert pair_zero(F, g, line_patch) == 6
        h = make_test_function((0,), boson_d1, lambda z: Fraction(1))
        assert pair_zero(F, h, line_patch) == 0


class TestSymmetries:
    def test_translation(self, boson_d1, line):
        E = Automorphism.translate(line, (2,))
        F = Functional.term([(0, (0,)), (0, (1,))], boson_d1)
        assert automorphism_act(E, F, boson_d1) == Functional.term([(0, (2,)), (0, (3,))], boson_d1)

    def test_reflection(self, boson_d1, line):
        E = Automorphism.rotate(line, SignedPermutation((0,), (-1,)))
        assert automorphism_act(E, Functional.field(0, (1,)), boson_d1) == Functional.field(0, line.point((-1,)))

    @pytest.mark.parametrize("rotation, shift", [((1,), (2,)), ((-1,), (0,)), ((-1,), (3,))])
    def test_pullback_moves_pairing(self, boson_d1, line, line_patch, rotation, shift):
        """⟨EF, g⟩ = ⟨F, E*g⟩"""
        E = Automorphism.translate(line, shift).compose(Automorphism.rotate(line, SignedPermutation((0,), rotation)))
        F = Functional.term([(0, (1,)), (0, (2,))], boson_d1, 3) + Functional.field(0, (0,))
        g = make_test_function((0, 0), boson_d1, lambda z: Fraction(z[0][0] * z[1][0] + z[0][0]))
        h = make_test_function((0,), boson_d1, lambda z: Fraction(z[0][0] ** 2 + 1))
        for test_fn in (g, h):
            moved = pair_zero(automorphism_act(E, F, boson_d1), test_fn, line_patch)
            assert moved == pair_zero(F, pullback(test_fn, E, line_patch), line_patch)

    @pytest.mark.parametrize("rotation", hyperoctahedral_group(2))
    def test_derivative_patterns_follow_rotation(self, boson_d2, plane, rotation):
        """E(P(X)) = (Θ_E P)(EX)"""
        E = Automorphism.translate(plane, (1, 2)).compose(Automorphism.rotate(plane, rotation))
        P = FieldPolynomial.from_factors(
            [(0, MultiIndex.zero(2)), (0, MultiIndex.from_forward([1, 0])), (0, MultiIndex.from_forward([0, 2]))], boson_d2,
        )
        X = [(0, 0), (1, 0)]
        lhs = automorphism_act(E, sum_over(P, X, boson_d2, plane), boson_d2)
        rhs = sum_over(sigma_act(automorphism_theta(rotation), P, boson_d2), [E.apply(x) for x in X], boson_d2, plane)
        assert lhs == rhs

    def test_conjugate_swap(self, complex_boson_d1):
        F = Functional.term([(0, (0,)), (0, (0,)), (1, (1,))], complex_boson_d1, 5)
        swapped = conjugate_swap(F, complex_boson_d1)
        assert swapped == Functional.term([(1, (0,)), (1, (0,)), (0, (1,))], complex_boson_d1, 5)
        assert conjugate_swap(swapped, complex_boson_d1) == F

    def test_conjugate_swap_needs_pairs(self, boson_d1):
        with pytest.raises(ConfigurationError):
            conjugate_swap(Functional.field(0, (0,)), boson_d1)

    def test_supersymmetry_of_tau(self, quartet_d1):
        x = (0,)
        tau = Functional.term([(PHI, x), (PHIBAR, x)], quartet_d1)
        expected = Functional.term([(PSI, x), (PHIBAR, x)], quartet_d1) + \
            Functional.term([(PHI, x), (PSIBAR, x)], quartet_d1)
        assert supersymmetry_Q(tau, quartet_d1) == expected

    def test_supersymmetry_squares_to_minus_one_on_phi(self, quartet_d1):
        phi = Functional.field(PHI, (1,))
        assert supersymmetry_Q(supersymmetry_Q(phi, quartet_d1), quartet_d1) == -phi

    def test_supersymmetric_form_is_closed(self, quartet_d1):
        """τ + ψψ̄ is annihilated by Q"""
        x = (0,)
        form = Functional.term([(PHI, x), (PHIBAR, x)], quartet_d1) + \
            Functional.term([(PSI, x), (PSIBAR, x)], quartet_d1)
        assert supersymmetry_Q(form, quartet_d1).is_zero()

    def test_supersymmetry_needs_quartet(self, boson_d1):
        with pytest.raises(ConfigurationError):
            supersymmetry_Q(Functional.field(0, (0,)), boson_d1)


class TestGraded:
    def test_unknown_sector(self):
        with pytest.raises(ConfigurationError):
            GradedFunctional({"c": Functional.one()})

    def test_projection(self):
        F = GradedFunctional({"a": Functional.field(0, (0,)), "ab": Functional.one()})
        assert project_sector(F, "ab") == GradedFunctional({"ab": Functional.one()})
        assert project_sector(F, "b").is_zero()
        with pytest.raises(PreconditionError):
            project_sector(F, "ba")
