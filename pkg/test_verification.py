"""Tests running the verify battery over the shipped scenarios at their configured sample counts"""

import pytest

from src.errors import ConfigurationError
from src.lattice import MultiIndex
from src.scenario import load_scenario, parse_scenario
from src.verification import VerificationSuite

SEED = 20240917

# fewest random samples each identity must survive
MINIMUM_SAMPLES = {
    "defining_property": 100,
    "composition": 50,
    "additivity": 50,
    "partition": 50,
    "base_point_independence": 50,
    "covariance": 50,
    "graded": 50,
    "supersymmetry": 50,
    "conjugate_swap": 50,
}

SHIPPED = ["boson_d1", "boson_fermion_d2", "supersymmetry", "graded", "two_bosons_d2"]


def suite_for(scenario, seed=SEED):
    return VerificationSuite(
        lambda: scenario.build_context(verify=False),
        seed,
        samples=scenario.options.get("samples"),
        X=scenario.X,
        check_samples=scenario.options.get("check_samples"),
    )


def by_name(results):
    return {r.name: r for r in results}


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_sample_counts(scenario_path, name):
    scenario = load_scenario(scenario_path(name))
    suite = suite_for(scenario)
    for check, minimum in MINIMUM_SAMPLES.items():
        assert suite.check_samples.get(check, suite.default_samples) >= minimum, check


@pytest.mark.parametrize("name", ["boson_d1", "boson_fermion_d2", "supersymmetry", "graded"])
def test_operator_identities(scenario_path, name):
    scenario = load_scenario(scenario_path(name))
    results = suite_for(scenario).run(only=MINIMUM_SAMPLES)
    assert results[0].name == "p_hat_table" and results[0].passed
    for result in results[1:]:
        assert result.passed, (result.name, result.counterexample)
        if not result.skipped:
            assert result.samples >= MINIMUM_SAMPLES[result.name]


def test_supersymmetric_quartet_with_derivatives(scenario_path):
    scenario = load_scenario(scenario_path("supersymmetry"))
    suite = suite_for(scenario)
    results = by_name(suite.run(only=["supersymmetry", "conjugate_swap"]))
    assert any(alpha != MultiIndex.zero(1) for m in suite.ctx.basis for _, alpha in m.factors)
    for name in ("supersymmetry", "conjugate_swap"):
        assert results[name].passed and not results[name].skipped
        assert results[name].samples >= 50


def test_graded_identities_use_observables(scenario_path):
    scenario = load_scenario(scenario_path("graded"))
    results = by_name(suite_for(scenario).run(only=["graded"]))
    assert results["graded"].passed and not results["graded"].skipped
    assert results["graded"].samples >= 50


@pytest.mark.parametrize("name", SHIPPED)
def test_dual_duality(scenario_path, name):
    results = suite_for(load_scenario(scenario_path(name))).run(only=["dual_duality"])
    assert [r.passed for r in results] == [True, True]
    assert results[1].samples > 0


def test_two_boson_dimensions(scenario_path):
    scenario = load_scenario(scenario_path("two_bosons_d2"))
    assert scenario.species.d == 2
    assert sorted(str(c.dimension) for c in scenario.species.components) == ["1", "3/2"]


class TestCheckSelection:
    def line(self, **options):
        return parse_scenario({
            "name": "line",
            "d": 1,
            "species": [{"name": "phi", "statistics": "boson", "dimension": [1, 2], "components": ["phi"]}],
            "d_plus": 2,
            "geometry": {"L": 4, "N": 2},
            "patch": {"anchor": [0], "radii": [5]},
            "options": options,
        })

    def test_per_check_samples(self):
        scenario = self.line(samples=2, check_samples={"composition": 3})
        results = by_name(suite_for(scenario).run(only=["composition", "partition"]))
        assert list(results) == ["p_hat_table", "composition", "partition"]
        assert results["composition"].samples == 3
        assert results["partition"].samples == 2

    def test_unknown_check(self):
        with pytest.raises(ConfigurationError):
            suite_for(self.line(samples=2)).run(only=["loc_twice"])

    def test_unknown_check_sample_count(self):
        with pytest.raises(ConfigurationError):
            suite_for(self.line(samples=2, check_samples={"loc_twice": 4})).run()
