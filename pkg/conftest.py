"""Shared fixtures: species tables, patches and localisation contexts"""

import os
from fractions import Fraction

import pytest

from src.lattice import CoordinatePatch, TorusGeometry
from src.loc import LocContext
from src.monomials import BOSON, FERMION, Species, SpeciesTable

SCENARIO_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "scenarios")


def scenario_file(name: str) -> str:
    return os.path.join(SCENARIO_DIR, f"{name}.json")


@pytest.fixture(scope="session")
def scenario_path():
    return scenario_file


@pytest.fixture(scope="session")
def boson_d1():
    """One real boson of dimension 1/2 on a line"""
    return SpeciesTable(1, (Species("phi", BOSON, Fraction(1, 2), ("phi",)),))


@pytest.fixture(scope="session")
def boson_d2():
    return SpeciesTable(2, (Species("phi", BOSON, Fraction(1), ("phi",)),))


@pytest.fixture(scope="session")
def complex_boson_d1():
    return SpeciesTable(
        1,
        (Species("phi", BOSON, Fraction(1, 2), ("phi", "phibar")),),
        (("phi", "phibar"),),
    )


@pytest.fixture(scope="session")
def complex_boson_d2():
    return SpeciesTable(
        2,
        (Species("phi", BOSON, Fraction(1), ("phi", "phibar")),),
        (("phi", "phibar"),),
    )


@pytest.fixture(scope="session")
def boson_fermion_d2():
    return SpeciesTable(
        2,
        (
            Species("phi", BOSON, Fraction(1), ("phi",)),
            Species("psi", FERMION, Fraction(1), ("psi", "psibar")),
        ),
        (("psi", "psibar"),),
    )


@pytest.fixture(scope="session")
def quartet_d1():
    """φ, φ̄, ψ, ψ̄ with a common dimension and the supersymmetry generator"""
    return SpeciesTable(
        1,
        (
            Species("phi", BOSON, Fraction(1, 2), ("phi", "phibar")),
            Species("psi", FERMION, Fraction(1, 2), ("psi", "psibar")),
        ),
        (("phi", "phibar"), ("psi", "psibar")),
        ("phi", "phibar", "psi", "psibar"),
    )


@pytest.fixture(scope="session")
def two_bosons_d1():
    """Bosons of unequal dimension 1 and 3/2"""
    return SpeciesTable(
        1,
        (
            Species("phi", BOSON, Fraction(1), ("phi",)),
            Species("chi", BOSON, Fraction(3, 2), ("chi",)),
        ),
    )


@pytest.fixture(scope="session")
def line():
    return TorusGeometry(1, 4, 2)


@pytest.fixture(scope="session")
def plane():
    return TorusGeometry(2, 4, 2)


@pytest.fixture(scope="session")
def line_patch(line):
    return CoordinatePatch(line, (0,), (5,))


@pytest.fixture(scope="session")
def plane_patch(plane):
    return CoordinatePatch(plane, (0, 0), (3, 3))


@pytest.fixture(scope="session")
def boson_d1_ctx(boson_d1, line_patch):
    """d=1, [φ]=1/2, d_plus=2"""
    return LocContext(boson_d1, 2, line_patch)


@pytest.fixture(scope="session")
def complex_d1_ctx(complex_boson_d1, line_patch):
    return LocContext(complex_boson_d1, 2, line_patch, observables={"a": (0,), "b": (2,)})
