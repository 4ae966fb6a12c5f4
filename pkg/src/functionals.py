"""Polynomial field functionals: products, zero-field pairing, automorphisms and supersymmetry"""

from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from src.errors import ConfigurationError, DomainError, PreconditionError
from src.lattice import Automorphism, CoordinatePatch, Offset, Point, TorusGeometry, stencil
from src.logger import setup_logger
from src.monomials import FieldPolynomial, MonomialKey, SpeciesTable, fermion_sort_sign
from src.testfn import TestFunction, symmetrise_S

logger = setup_logger()

PointFactor = Tuple[int, Point]
TermKey = Tuple[PointFactor, ...]

SECTORS = ('empty', 'a', 'b', 'ab')


def canonical_term(factors: Sequence[PointFactor], species: SpeciesTable) -> Optional[Tuple[int, TermKey]]:
    """Sort factors by (component, point); None when a fermionic factor repeats"""
    result = fermion_sort_sign(list(factors), [species.is_fermion(c) for c, _ in factors])
    if result is None:
        return None
    sign, order = result
    return sign, tuple(factors[k] for k in order)


class Functional:
    """Finite sum of coefficient times a product of point-evaluated field components"""

    __slots__ = ('_terms',)

    def __init__(self, terms: Optional[Mapping[TermKey, Fraction]] = None):
        self._terms: Dict[TermKey, Fraction] = {
            k: Fraction(v) for k, v in (terms or {}).items() if v != 0
        }

    @classmethod
    def one(cls) -> "Functional":
        return cls({(): Fraction(1)})

    @classmethod
    def term(cls, factors: Sequence[PointFactor], species: SpeciesTable, coefficient=1) -> "Functional":
        canon = canonical_term(list(factors), species)
        if canon is None:
            return cls()
        sign, key = canon
        return cls({key: sign * Fraction(coefficient)})

    @classmethod
    def field(cls, component: int, x: Point) -> "Functional":
        return cls({((component, x),): Fraction(1)})

    def items(self) -> List[Tuple[TermKey, Fraction]]:
        return sorted(self._terms.items())

    @property
    def terms(self) -> Dict[TermKey, Fraction]:
        return dict(self._terms)

    def coefficient(self, key: TermKey) -> Fraction:
        return self._terms.get(key, Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def support(self) -> Set[Point]:
        return {x for key in self._terms for _, x in key}

    def signatures(self) -> Set[Tuple[int, ...]]:
        return {tuple(c for c, _ in key) for key in self._terms}

    def __add__(self, other: "Functional") -> "Functional":
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, 0) + v
        return Functional(out)

    def __neg__(self) -> "Functional":
        return Functional({k: -v for k, v in self._terms.items()})

    def __sub__(self, other: "Functional") -> "Functional":
        return self + (-other)

    def __mul__(self, scalar) -> "Functional":
        scalar = Fraction(scalar)
        return Functional({k: v * scalar for k, v in self._terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, Functional) and self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def map_terms(self, fn) -> "Functional":
        out: Dict[TermKey, Fraction] = {}
        for k, v in self._terms.items():
            for coeff, key in fn(k):
                out[key] = out.get(key, 0) + coeff * v
        return Functional(out)

    def to_json(self, species: SpeciesTable) -> List[Dict]:
        return [
            {
                "coeff": [v.numerator, v.denominator],
                "factors": [list(x) + [species.name(c)] for c, x in key],
            }
            for key, v in self.items()
        ]

    def label(self, species: SpeciesTable) -> str:
        if not self._terms:
            return "0"
        parts = []
        for key, v in self.items():
            fields = " ".join(f"{species.name(c)}{list(x)}" for c, x in key) or "1"
            parts.append(f"({v})·{fields}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"Functional({len(self._terms)} terms)"


def multiply(F: Functional, G: Functional, species: SpeciesTable) -> Functional:
    """Product in the field algebra; fermionic factors anticommute"""
    out: Dict[TermKey, Fraction] = {}
    for k1, c1 in F.items():
        for k2, c2 in G.items():
            canon = canonical_term(k1 + k2, species)
            if canon is None:
                continue
            sign, key = canon
            out[key] = out.get(key, 0) + sign * c1 * c2
    return Functional(out)


def pair_zero(F: Functional, g: TestFunction, patch: CoordinatePatch) -> Fraction:
    """⟨F, g⟩ at zero field: Σ coefficient × (Sg) at each term's point sequence.

    Terms whose component sequence differs from g's signature contribute 0.
    """
    sg = symmetrise_S(g)
    total = Fraction(0)
    for key, coeff in F.items():
        if tuple(c for c, _ in key) != g.signature:
            continue
        z = tuple(patch.chart(x) for _, x in key)
        total += coeff * sg(z)
    return total


@lru_cache(maxsize=None)
def _expand_key(key: MonomialKey) -> Tuple[Tuple[Tuple[Tuple[int, Offset], ...], int], ...]:
    """Finite-difference expansion of M_m at the origin, in key factor order"""
    expanded: List[Tuple[Tuple[Tuple[int, Offset], ...], int]] = [((), 1)]
    for i, alpha in key.factors:
        nxt = []
        for prefix, w in expanded:
            for offset, v in stencil(alpha):
                nxt.append((prefix + ((i, offset),), w * v))
        expanded = nxt
    return tuple(expanded)


def evaluate_polynomial_at(P: FieldPolynomial, x: Point, species: SpeciesTable, geometry: TorusGeometry,
                           patch: Optional[CoordinatePatch] = None) -> Functional:
    """P_x: every ∇^α φ_i(x) expanded into point evaluations"""
    out: Dict[TermKey, Fraction] = {}
    for key, coeff in P.items():
        for factors, weight in _expand_key(key):
            placed = [(i, geometry.shift(x, offset)) for i, offset in factors]
            if patch is not None:
                for _, y in placed:
                    if not patch.contains(y):
                        raise DomainError(f"stencil of {key.label(species)} at {x} leaves the patch at {y}")
            canon = canonical_term(placed, species)
            if canon is None:
                continue
            sign, term = canon
            out[term] = out.get(term, 0) + sign * weight * coeff
    return Functional(out)


def sum_over(P: FieldPolynomial, X: Iterable[Point], species: SpeciesTable, geometry: TorusGeometry,
             patch: Optional[CoordinatePatch] = None) -> Functional:
    """P(X) = Σ_{x ∈ X} P_x"""
    total = Functional()
    for x in sorted(set(X)):
        total = total + evaluate_polynomial_at(P, x, species, geometry, patch)
    return total


def automorphism_act(E: Automorphism, F: Functional, species: SpeciesTable) -> Functional:
    """Move every factor point by E and re-sort"""
    def moved(key: TermKey):
        canon = canonical_term([(c, E.apply(x)) for c, x in key], species)
        return [] if canon is None else [canon]
    return F.map_terms(moved)


def _component_map(F: Functional, species: SpeciesTable, image: Dict[int, Tuple[int, int]]) -> Functional:
    """Replace components factorwise as an algebra automorphism"""
    def mapped(key: TermKey):
        sign = 1
        factors = []
        for c, x in key:
            s, target = image.get(c, (1, c))
            sign *= s
            factors.append((target, x))
        canon = canonical_term(factors, species)
        return [] if canon is None else [(sign * canon[0], canon[1])]
    return F.map_terms(mapped)


def conjugate_swap(F: Functional, species: SpeciesTable) -> Functional:
    """Exchange every component with its declared conjugate"""
    if not species.conjugate_pairs:
        raise ConfigurationError("species table declares no conjugate pairs")
    image = {c.index: (1, species.conjugate(c.index)) for c in species.components}
    return _component_map(F, species, image)


def supersymmetry_Q(F: Functional, species: SpeciesTable) -> Functional:
    """Antiderivation with φ→ψ, ψ→-φ, φ̄→ψ̄, ψ̄→φ̄"""
    phi, phibar, psi, psibar = species.quartet()
    generator = {phi: (1, psi), psi: (-1, phi), phibar: (1, psibar), psibar: (1, phibar)}

    def derive(key: TermKey):
        out = []
        odd_before = 0
        for k, (c, x) in enumerate(key):
            if c in generator:
                s, target = generator[c]
                factors = list(key)
                factors[k] = (target, x)
                canon = canonical_term(factors, species)
                if canon is not None:
                    out.append(((-1) ** odd_before * s * canon[0], canon[1]))
            if species.is_fermion(c):
                odd_before += 1
        return out

    return F.map_terms(derive)


class GradedFunctional:
    """F = F_∅ + σ F_a + σ̄ F_b + σσ̄ F_ab"""

    def __init__(self, sectors: Optional[Mapping[str, Functional]] = None):
        sectors = dict(sectors or {})
        unknown = set(sectors) - set(SECTORS)
        if unknown:
            raise ConfigurationError(f"unknown observable sectors {sorted(unknown)}, expected {SECTORS}")
        self.sectors: Dict[str, Functional] = {s: sectors.get(s, Functional()) for s in SECTORS}

    def __getitem__(self, sector: str) -> Functional:
        return self.sectors[sector]

    def __add__(self, other: "GradedFunctional") -> "GradedFunctional":
        return GradedFunctional({s: self[s] + other[s] for s in SECTORS})

    def __eq__(self, other) -> bool:
        return isinstance(other, GradedFunctional) and self.sectors == other.sectors

    def __hash__(self) -> int:
        return hash(tuple(self.sectors[s] for s in SECTORS))

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.sectors.values())

    def to_json(self, species: SpeciesTable) -> Dict[str, List[Dict]]:
        return {s: self.sectors[s].to_json(species) for s in SECTORS}


def project_sector(F: GradedFunctional, sector: str) -> GradedFunctional:
    """π_α: keep one sector, zero the others"""
    if sector not in SECTORS:
        raise PreconditionError(f"unknown sector {sector!r}")
    return GradedFunctional({sector: F[sector]})
