"""Seeded random inputs shared by the verify battery and the tests"""

import random
from fractions import Fraction
from typing import List, Optional, Sequence

from src.functionals import Functional, GradedFunctional, SECTORS
from src.lattice import Automorphism, CoordinatePatch, Point, SignedPermutation, TorusGeometry
from src.monomials import SpeciesTable
from src.testfn import TestFunction, Window, make_test_function


def random_fraction(rng: random.Random, bound: int = 5) -> Fraction:
    value = Fraction(0)
    while value == 0:
        value = Fraction(rng.randint(-bound, bound), rng.randint(1, 3))
    return value


def random_functional(rng: random.Random, species: SpeciesTable, points: Sequence[Point],
                      terms: int = 4, max_degree: int = 4) -> Functional:
    """Random polynomial functional supported on the given points"""
    total = Functional()
    n = species.p_lambda
    for _ in range(terms):
        degree = rng.randint(0, max_degree)
        factors = [(rng.randrange(n), rng.choice(list(points))) for _ in range(degree)]
        total = total + Functional.term(factors, species, random_fraction(rng))
    return total


def random_graded(rng: random.Random, species: SpeciesTable, points: Sequence[Point],
                  terms: int = 3, max_degree: int = 4) -> GradedFunctional:
    return GradedFunctional({s: random_functional(rng, species, points, terms, max_degree) for s in SECTORS})


def random_subset(rng: random.Random, points: Sequence[Point], max_size: int) -> List[Point]:
    size = rng.randint(1, min(max_size, len(points)))
    return sorted(rng.sample(list(points), size))


def central_points(patch: CoordinatePatch, radius: int) -> List[Point]:
    """Patch points within sup-distance radius of the anchor"""
    return [patch.unchart(z) for z in patch.coords() if max((abs(c) for c in z), default=0) <= radius]


def random_signed_permutation(rng: random.Random, d: int) -> SignedPermutation:
    perm = list(range(d))
    rng.shuffle(perm)
    return SignedPermutation(tuple(perm), tuple(rng.choice((1, -1)) for _ in range(d)))


def random_automorphism(rng: random.Random, geometry: TorusGeometry, max_shift: int = 1,
                        centre: Optional[Point] = None) -> Automorphism:
    rotation = Automorphism.rotate(geometry, random_signed_permutation(rng, geometry.d), centre)
    shift = Automorphism.translate(geometry, [rng.randint(-max_shift, max_shift) for _ in range(geometry.d)])
    return shift.compose(rotation)


def random_integer_function(seed: int, signature: Sequence[int], species: SpeciesTable,
                            bound: int = 9, window: Optional[Window] = None) -> TestFunction:
    """Deterministic pseudo-random integer values, a function of (seed, z) only"""
    def value(z) -> Fraction:
        return Fraction(random.Random(f"{seed}:{z}").randint(-bound, bound))

    return make_test_function(signature, species, value, window, "random")
