"""Localisation operators loc_{+,a}, loc_X, loc_{X,Y} and the observable-graded Loc"""

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import sympy
from dotenv import load_dotenv

from src.errors import ConfigurationError, DomainError, PreconditionError, VerificationError
from src.functionals import (
    SECTORS, Functional, GradedFunctional, pair_zero, sum_over,
)
from src.lattice import CoordinatePatch, Offset, Point, inflate
from src.logger import setup_logger
from src.monomials import (
    FieldPolynomial, MonomialKey, PHatTable, SpeciesTable, enumerate_v_bar_plus,
)
from src.testfn import TestFunction, binomial_basis, dual_basis

load_dotenv()
logger = setup_logger()


def to_rational(x: Fraction) -> sympy.Rational:
    return sympy.Rational(x.numerator, x.denominator)


def to_fraction(x) -> Fraction:
    x = sympy.Rational(x)
    return Fraction(int(x.p), int(x.q))


class LocContext:
    """Everything loc needs that does not depend on the functional"""

    def __init__(self, species: SpeciesTable, d_plus, patch: CoordinatePatch, strategy: str = 'symmetrise',
                 sector_d_plus: Optional[Mapping[str, Fraction]] = None,
                 observables: Optional[Mapping[str, Point]] = None,
                 overrides: Optional[Mapping[MonomialKey, FieldPolynomial]] = None,
                 verify: Optional[bool] = None):
        """
        Initialize a localisation context

        Args:
            species: Field species table
            d_plus: Dimension threshold of the local polynomials
            patch: Coordinate patch holding every support
            strategy: 'symmetrise' or 'laplacian' choice of covariant representatives
            sector_d_plus: Per-sector thresholds for graded use
            observables: Observable points under keys 'a' and 'b'
            overrides: Replacement representatives for selected monomials
            verify: Check the defining property on every loc call
        """
        if patch.geometry.d != species.d:
            raise ConfigurationError(f"patch is {patch.geometry.d}-dimensional but species live in d={species.d}")
        self.species = species
        self.patch = patch
        self.geometry = patch.geometry
        self.d_plus = Fraction(d_plus)
        self.strategy = strategy
        self.overrides = dict(overrides or {})
        self.p_hat = PHatTable(species, self.d_plus, strategy, self.overrides)
        self.basis: List[MonomialKey] = list(self.p_hat.basis)
        self.index = {m: k for k, m in enumerate(self.basis)}
        if verify is None:
            verify = os.getenv('LATTICE_LOC_VERIFY', 'off').lower() in ('1', 'on', 'true', 'yes')
        self.verify = verify

        half = self.d_plus / 2
        self.sector_d_plus = {'empty': self.d_plus, 'a': half, 'b': half, 'ab': Fraction(0)}
        for sector, value in (sector_d_plus or {}).items():
            if sector not in SECTORS:
                raise ConfigurationError(f"unknown sector {sector!r} in sector d_plus")
            self.sector_d_plus[sector] = Fraction(value)
        self.observables = {k: self.geometry.point(v) for k, v in (observables or {}).items()}
        for name, x in self.observables.items():
            if not patch.contains(x):
                raise ConfigurationError(f"observable point {name}={x} lies outside the patch")

        self._sectors: Dict[str, "LocContext"] = {'empty': self}
        self._duals: Dict[Tuple[MonomialKey, Offset], TestFunction] = {}
        self._inverses: Dict[Tuple[frozenset, Point], Tuple["BMatrix", sympy.Matrix]] = {}

    def sector(self, name: str) -> "LocContext":
        """Context with the sector's own threshold"""
        if name not in SECTORS:
            raise PreconditionError(f"unknown sector {name!r}")
        if name not in self._sectors:
            self._sectors[name] = LocContext(
                self.species, self.sector_d_plus[name], self.patch, self.strategy,
                observables=self.observables, overrides=self.overrides, verify=self.verify,
            )
        return self._sectors[name]

    def base_point(self, X: Iterable[Point]) -> Point:
        """Lexicographically smallest point of X in patch coordinates"""
        return min(X, key=self.patch.chart)

    def dual(self, m: MonomialKey, a: Point) -> TestFunction:
        z = self.patch.chart(a)
        if (m, z) not in self._duals:
            self._duals[(m, z)] = dual_basis(m, z, self.species, self.d_plus)
        return self._duals[(m, z)]

    def check_support(self, F: Functional):
        outside = sorted(x for x in F.support() if not self.patch.contains(x))
        if outside:
            raise DomainError(f"functional support leaves the coordinate patch at {outside[0]}")

    def check_hull(self, X: Iterable[Point]):
        """X inflated by the widest representative stencil must fit in the patch"""
        reach = self.p_hat.max_reach
        for z in inflate((self.patch.chart(x) for x in X), reach):
            if not self.patch.contains_coords(z):
                raise DomainError(f"stencil hull of X (radius {reach}) leaves the patch at coordinates {z}")


@dataclass
class BMatrix:
    basis: List[MonomialKey]
    matrix: sympy.SparseMatrix
    size: int
    base_point: Point

    def normalised(self) -> sympy.SparseMatrix:
        return self.matrix / self.size


@dataclass
class LocResult:
    polynomial: FieldPolynomial
    functional: Functional
    base_point: Optional[Point]


def _alpha(F: Functional, ctx: LocContext, a: Point) -> List[Fraction]:
    return [pair_zero(F, ctx.dual(m, a), ctx.patch) for m in ctx.basis]


def loc_plus_a(F: Functional, ctx: LocContext, a: Point) -> FieldPolynomial:
    """Σ_{m ∈ 𝔳₊} ⟨F, f_m^{(a)}⟩ M_m"""
    ctx.check_support(F)
    terms = {m: c for m, c in zip(ctx.basis, _alpha(F, ctx, a)) if c}
    return FieldPolynomial(terms)


def build_B(ctx: LocContext, X: Iterable[Point], a: Optional[Point] = None) -> BMatrix:
    """B_{m',m} = ⟨P̂_{m'}(X), f_m^{(a)}⟩ with the triangular structure asserted"""
    X = sorted(set(X))
    if not X:
        raise PreconditionError("B is defined for nonempty X only")
    a = a if a is not None else ctx.base_point(X)
    ctx.check_hull(X)
    sp = ctx.species
    n = len(ctx.basis)
    entries = {}
    for row, m_row in enumerate(ctx.basis):
        image = sum_over(ctx.p_hat[m_row], X, sp, ctx.geometry, ctx.patch)
        row_dim = m_row.dimension(sp)
        for col, m_col in enumerate(ctx.basis):
            if m_col.component_counts() != m_row.component_counts():
                value = Fraction(0)
            else:
                value = pair_zero(image, ctx.dual(m_col, a), ctx.patch)
            if row_dim >= m_col.dimension(sp):
                expected = len(X) if row == col else 0
                if value != expected:
                    raise VerificationError(
                        f"B is not triangular at ({m_row.label(sp)}, {m_col.label(sp)}): {value} != {expected}",
                        {"row": m_row.to_json(sp), "column": m_col.to_json(sp), "value": str(value)},
                    )
            if value:
                entries[(row, col)] = to_rational(value)
    logger.debug(f"B assembled for |X|={len(X)}: {len(entries)} nonzero entries of {n * n}")
    return BMatrix(list(ctx.basis), sympy.SparseMatrix(n, n, entries), len(X), a)


def invert_A(B: BMatrix) -> sympy.SparseMatrix:
    """A⁻¹ = Σ_j (-1)^j (A - I)^j for the unipotent A = B/|X|"""
    A = B.normalised()
    n = A.rows
    identity = sympy.SparseMatrix(sympy.eye(n))
    nilpotent = A - identity
    inverse = identity
    term = identity
    for _ in range(1, n + 1):
        term = -(term * nilpotent)
        if term.is_zero_matrix:
            break
        inverse = inverse + term
    if not (A * inverse - identity).is_zero_matrix:
        raise VerificationError("A · A⁻¹ is not the identity")
    return inverse


def _inverse_for(ctx: LocContext, X: List[Point], a: Point) -> Tuple[BMatrix, sympy.SparseMatrix]:
    cache_key = (frozenset(X), a)
    if cache_key not in ctx._inverses:
        B = build_B(ctx, X, a)
        ctx._inverses[cache_key] = (B, invert_A(B))
    return ctx._inverses[cache_key]


def loc_X(F: Functional, ctx: LocContext, X: Iterable[Point], a: Optional[Point] = None) -> LocResult:
    """The unique V ∈ 𝒱 with ⟨F - V(X), g⟩ = 0 for all g ∈ Π"""
    X = sorted(set(X))
    if not X:
        return LocResult(FieldPolynomial(), Functional(), None)
    a = a if a is not None else ctx.base_point(X)
    if a not in X:
        raise PreconditionError(f"base point {a} is not in X")
    ctx.check_support(F)
    B, inverse = _inverse_for(ctx, X, a)
    alpha = sympy.SparseMatrix(1, len(ctx.basis), {
        (0, k): to_rational(v) for k, v in enumerate(_alpha(F, ctx, a)) if v
    })
    beta = (alpha * inverse) / len(X)
    V = FieldPolynomial()
    for k, m in enumerate(ctx.basis):
        if beta[0, k] != 0:
            V = V + ctx.p_hat[m] * to_fraction(beta[0, k])
    image = sum_over(V, X, ctx.species, ctx.geometry, ctx.patch)
    if ctx.verify:
        failures = pi_perp_check(F - image, ctx, [a])
        if failures:
            raise VerificationError(f"defining property fails for {len(failures)} basis functions", failures[0])
    logger.debug(f"loc over {len(X)} points: {len(V)} monomials")
    return LocResult(V, image, a)


def loc_XY(F: Functional, ctx: LocContext, X: Iterable[Point], Y: Iterable[Point]) -> Functional:
    """The polynomial of loc_X F evaluated on Y ⊆ X"""
    X, Y = set(X), set(Y)
    if not Y <= X:
        raise PreconditionError(f"Y is not a subset of X: {sorted(Y - X)[0]} lies outside")
    if not Y:
        return Functional()
    V = loc_X(F, ctx, X).polynomial
    return sum_over(V, Y, ctx.species, ctx.geometry, ctx.patch)


def pi_perp_check(G: Functional, ctx: LocContext, base_points: Iterable[Point]) -> List[Dict]:
    """Pairings of G against b_m^{(a')} that fail to vanish"""
    sp = ctx.species
    signatures = G.signatures()
    keys = [m for m in enumerate_v_bar_plus(sp, ctx.d_plus) if m.components in signatures]
    failures = []
    for a in base_points:
        z = ctx.patch.chart(a)
        for m in keys:
            value = pair_zero(G, binomial_basis(m, z, sp), ctx.patch)
            if value:
                failures.append({"monomial": m.to_json(sp), "base_point": list(a), "pairing": str(value)})
    return failures


def dual_basis_export(ctx: LocContext, X: Iterable[Point]) -> Dict[MonomialKey, FieldPolynomial]:
    """D_n = Σ_m (B⁻¹)_{n,m} P̂_m, so that ⟨D_n(X), f_k^{(a)}⟩ = δ_{n,k}"""
    X = sorted(set(X))
    B, inverse = _inverse_for(ctx, X, ctx.base_point(X))
    out = {}
    for n, m_n in enumerate(ctx.basis):
        D = FieldPolynomial()
        for k, m_k in enumerate(ctx.basis):
            entry = inverse[n, k]
            if entry != 0:
                D = D + ctx.p_hat[m_k] * (to_fraction(entry) / len(X))
        out[m_n] = D
    return out


def sector_sets(ctx: LocContext, X: Iterable[Point]) -> Dict[str, List[Point]]:
    """X(∅) = X, X(a) = X ∩ {a}, X(b) = X ∩ {b}, X(ab) = X ∩ {a, b}"""
    X = set(X)
    obs = ctx.observables
    if 'a' not in obs or 'b' not in obs:
        raise ConfigurationError("graded localisation needs observable points a and b")
    return {
        'empty': sorted(X),
        'a': sorted(X & {obs['a']}),
        'b': sorted(X & {obs['b']}),
        'ab': sorted(X & {obs['a'], obs['b']}),
    }


def Loc_graded(F: GradedFunctional, ctx: LocContext, X: Iterable[Point],
               Y: Optional[Iterable[Point]] = None) -> GradedFunctional:
    """Sectorwise loc_{X(α), Y(α)} with the sector threshold d_plus^α"""
    X = set(X)
    Y = set(X if Y is None else Y)
    if not Y <= X:
        raise PreconditionError("Y is not a subset of X")
    xs, ys = sector_sets(ctx, X), sector_sets(ctx, Y)
    out = {}
    for sector in SECTORS:
        if F[sector].is_zero() or not xs[sector]:
            out[sector] = Functional()
            continue
        out[sector] = loc_XY(F[sector], ctx.sector(sector), xs[sector], ys[sector])
    return GradedFunctional(out)
