"""Tests for norm weights, the T0 surrogate and the contraction experiment"""

from fractions import Fraction

import pytest

from src.errors import ConfigurationError, PreconditionError
from src.functionals import Functional
from src.norms import (
    NormParams, contraction_experiment, exact_power, gamma_reference, phi_norm_window, t0_upper,
)
from src.testfn import Window, make_test_function

PHI_CUBED = [(1, [(0, (0, 0)), (0, (0, 0)), (0, (0, 0))])]
PHI_SQUARED = [(1, [(0, (0, 0)), (0, (0, 0))])]


class TestWeights:
    def test_exact_power(self):
        assert exact_power(2, -3) == Fraction(1, 8)
        assert exact_power(3, 2) == 9
        with pytest.raises(ConfigurationError):
            exact_power(2, Fraction(1, 2))

    def test_scale_weights(self, boson_d2):
        params = NormParams.at_scale(boson_d2, 3, 2, 1)
        assert params.h == (Fraction(1, 9),)
        assert params.R == 9
        primed = params.primed(boson_d2, 3)
        assert primed.h == (Fraction(1, 27),)
        assert primed.R == 27

    def test_rejects_non_positive_weight(self):
        with pytest.raises(ConfigurationError):
            NormParams((Fraction(0),), Fraction(1), 1)

    def test_gamma_reference(self):
        assert gamma_reference(2, 3, 2, 1) == Fraction(1, 8) + Fraction(1, 8)


class TestSurrogates:
    def test_t0_upper(self, boson_d1):
        params = NormParams((Fraction(1, 2),), Fraction(1), 1)
        F = Functional.term([(0, (0,)), (0, (1,))], boson_d1, -3) + Functional.one() * 2
        assert t0_upper(F, params) == 3 * Fraction(1, 4) + 2

    def test_phi_norm_of_linear_function(self, boson_d1):
        g = make_test_function((0,), boson_d1, lambda z: Fraction(z[0][0]))
        params = NormParams((Fraction(1),), Fraction(2), 1)
        # largest of |g| = 2 on the window and R |∇g| = 2
        assert phi_norm_window(g, params, Window((-2,), (2,))) == 2
        weighted = NormParams((Fraction(1, 2),), Fraction(1), 1)
        assert phi_norm_window(g, weighted, Window((-2,), (2,))) == 4


class TestContraction:
    def test_cubic_contracts_at_irrelevant_rate(self, boson_d2):
        report = contraction_experiment(boson_d2, 2, [PHI_CUBED], [2, 3, 4], [(0, 0)], (2, 2), N=4, A=2)
        for row in report.rows:
            assert row["ratio"] == Fraction(1, row["L"] ** 3)
        assert report.slope == pytest.approx(-3.0)
        assert report.reference_slope == -3.0
        assert not report.vacuous
        assert not report.annihilated

    def test_relevant_family_is_annihilated(self, boson_d2):
        report = contraction_experiment(boson_d2, 2, [PHI_SQUARED], [2, 3], [(0, 0)], (2, 2), N=4, A=2)
        assert all(row["ratio"] == 0 for row in report.rows)
        assert report.vacuous
        assert report.annihilated
        assert report.slope is None

    def test_json_shape(self, boson_d2):
        report = contraction_experiment(boson_d2, 2, [PHI_CUBED], [2, 3], [(0, 0)], (2, 2), N=4, A=2)
        payload = report.to_json()
        assert payload["rows"][0]["ratio"] == [1, 8]
        assert payload["rows"][0]["gamma"] == [1, 4]
        assert set(payload) == {"rows", "slope", "reference_slope", "vacuous", "annihilated"}

    def test_p_phi_too_small(self, boson_d2):
        with pytest.raises(ConfigurationError):
            contraction_experiment(boson_d2, 2, [PHI_CUBED], [2, 3], [(0, 0)], (2, 2), N=4, A=2, p_phi=1)

    def test_empty_family(self, boson_d2):
        with pytest.raises(PreconditionError):
            contraction_experiment(boson_d2, 2, [], [2, 3], [(0, 0)], (2, 2), N=4, A=2)
