"""Field species, local monomials, the derivative symmetry group and covariant representatives"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import sympy
from sympy.utilities.iterables import multiset_permutations

from src.errors import ConfigurationError, ConstructionError, PreconditionError
from src.lattice import MultiIndex, SignedPermutation, UnitVector, hyperoctahedral_group
from src.logger import setup_logger

logger = setup_logger()

INFINITY = math.inf
Dimension = Union[Fraction, float]
Factor = Tuple[int, MultiIndex]

BOSON = 'boson'
FERMION = 'fermion'


@dataclass(frozen=True)
class Species:
    name: str
    statistics: str
    dimension: Dimension
    components: Tuple[str, ...]


@dataclass(frozen=True)
class Component:
    index: int
    name: str
    species: str
    statistics: str
    dimension: Dimension

    @property
    def is_fermion(self) -> bool:
        return self.statistics == FERMION


@dataclass(frozen=True)
class SpeciesTable:
    """Field species on a d-dimensional lattice.

    Components are numbered in declaration order; that numbering is the
    component order used by canonical monomial keys.
    """

    d: int
    species: Tuple[Species, ...]
    conjugate_pairs: Tuple[Tuple[str, str], ...] = ()
    supersymmetry: Optional[Tuple[str, str, str, str]] = None

    def __post_init__(self):
        if self.d < 1:
            raise ConfigurationError(f"lattice dimension must be positive, got {self.d}")
        names = [c for s in self.species for c in s.components]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"component names must be unique, got {names}")
        for s in self.species:
            if s.statistics not in (BOSON, FERMION):
                raise ConfigurationError(f"species {s.name}: statistics must be boson or fermion")
            if not s.dimension > 0:
                raise ConfigurationError(
                    f"species {s.name}: scaling dimension must be positive, got {s.dimension}"
                )
            if not s.components:
                raise ConfigurationError(f"species {s.name} has no components")
        seen = set()
        for a, b in self.conjugate_pairs:
            ca, cb = self.component(self.index(a)), self.component(self.index(b))
            if a in seen or b in seen or a == b:
                raise ConfigurationError(f"conjugate pairing is not an involution at ({a}, {b})")
            seen.update((a, b))
            if ca.statistics != cb.statistics or ca.dimension != cb.dimension:
                raise ConfigurationError(f"conjugate pair ({a}, {b}) mixes statistics or dimension")
        if self.supersymmetry is not None:
            phi, phibar, psi, psibar = (self.component(self.index(n)) for n in self.supersymmetry)
            if phi.is_fermion or phibar.is_fermion or not psi.is_fermion or not psibar.is_fermion:
                raise ConfigurationError("supersymmetric quartet must be (boson, boson, fermion, fermion)")
            if len({phi.dimension, phibar.dimension, psi.dimension, psibar.dimension}) != 1:
                raise ConfigurationError("supersymmetric quartet must share one scaling dimension")

    @cached_property
    def components(self) -> Tuple[Component, ...]:
        out = []
        for s in self.species:
            for name in s.components:
                out.append(Component(len(out), name, s.name, s.statistics, s.dimension))
        return tuple(out)

    @cached_property
    def _index(self) -> Dict[str, int]:
        return {c.name: c.index for c in self.components}

    @cached_property
    def _conjugate(self) -> Dict[int, int]:
        out = {}
        for a, b in self.conjugate_pairs:
            out[self.index(a)] = self.index(b)
            out[self.index(b)] = self.index(a)
        return out

    @property
    def p_lambda(self) -> int:
        return len(self.components)

    def index(self, name: str) -> int:
        if name not in self._index:
            raise ConfigurationError(f"unknown field component {name!r}")
        return self._index[name]

    def component(self, i: int) -> Component:
        return self.components[i]

    def name(self, i: int) -> str:
        return self.components[i].name

    def is_fermion(self, i: int) -> bool:
        return self.components[i].is_fermion

    def dimension(self, i: int) -> Dimension:
        return self.components[i].dimension

    def conjugate(self, i: int) -> int:
        """Partner component under the declared pairing (itself when unpaired)"""
        return self._conjugate.get(i, i)

    @property
    def min_dimension(self) -> Dimension:
        return min(c.dimension for c in self.components)

    def quartet(self) -> Tuple[int, int, int, int]:
        if self.supersymmetry is None:
            raise ConfigurationError("species table declares no supersymmetric quartet")
        return tuple(self.index(n) for n in self.supersymmetry)


@dataclass(frozen=True, order=True)
class MonomialKey:
    """A sequence of (component, multi-index) factors.

    Canonical keys have components nondecreasing, multi-indices
    nondecreasing within one component and no repeated fermionic factor.
    """

    factors: Tuple[Factor, ...] = ()

    @property
    def degree(self) -> int:
        return len(self.factors)

    @property
    def components(self) -> Tuple[int, ...]:
        return tuple(i for i, _ in self.factors)

    @property
    def alphas(self) -> Tuple[MultiIndex, ...]:
        return tuple(a for _, a in self.factors)

    @property
    def derivative_order(self) -> int:
        return sum(a.norm1 for _, a in self.factors)

    @property
    def is_forward(self) -> bool:
        return all(a.is_forward for _, a in self.factors)

    def dimension(self, species: SpeciesTable) -> Dimension:
        return sum((species.dimension(i) + a.norm1 for i, a in self.factors), Fraction(0))

    def multiplicities(self) -> Dict[Factor, int]:
        out: Dict[Factor, int] = {}
        for f in self.factors:
            out[f] = out.get(f, 0) + 1
        return out

    def component_counts(self) -> Dict[int, int]:
        out: Dict[int, int] = {}
        for i in self.components:
            out[i] = out.get(i, 0) + 1
        return out

    def is_canonical(self, species: SpeciesTable) -> bool:
        if list(self.factors) != sorted(self.factors):
            return False
        return not any(n > 1 and species.is_fermion(f[0]) for f, n in self.multiplicities().items())

    def label(self, species: SpeciesTable) -> str:
        if not self.factors:
            return "1"
        return " ".join(f"{a}{species.name(i)}" for i, a in self.factors)

    def to_json(self, species: SpeciesTable) -> List:
        return [[species.name(i), a.to_json()] for i, a in self.factors]

    @classmethod
    def from_json(cls, species: SpeciesTable, payload: Sequence) -> "MonomialKey":
        factors = []
        for entry in payload:
            name, alpha = entry
            factors.append((species.index(name), MultiIndex.from_json(species.d, alpha)))
        return cls(tuple(factors))


def fermion_sort_sign(keys: Sequence, fermionic: Sequence[bool]) -> Optional[Tuple[int, List[int]]]:
    """Stable sort order of keys and the sign of its fermionic restriction.

    Returns None when two fermionic entries have equal keys.
    """
    order = sorted(range(len(keys)), key=lambda k: keys[k])
    fermions = [k for k in order if fermionic[k]]
    for a, b in zip(fermions, fermions[1:]):
        if keys[a] == keys[b]:
            return None
    inversions = sum(1 for p in range(len(fermions)) for q in range(p + 1, len(fermions)) if fermions[p] > fermions[q])
    return (-1) ** inversions, order


def canonicalize(factors: Sequence[Factor], species: SpeciesTable) -> Optional[Tuple[int, MonomialKey]]:
    """Sort factors into canonical order; None when the product vanishes"""
    result = fermion_sort_sign(list(factors), [species.is_fermion(i) for i, _ in factors])
    if result is None:
        return None
    sign, order = result
    return sign, MonomialKey(tuple(factors[k] for k in order))


class FieldPolynomial:
    """Finite rational combination of local monomials"""

    __slots__ = ('_terms',)

    def __init__(self, terms: Optional[Mapping[MonomialKey, Fraction]] = None):
        self._terms: Dict[MonomialKey, Fraction] = {
            k: Fraction(v) for k, v in (terms or {}).items() if v != 0
        }

    @classmethod
    def monomial(cls, key: MonomialKey, coefficient=1) -> "FieldPolynomial":
        return cls({key: Fraction(coefficient)})

    @classmethod
    def from_factors(cls, factors: Sequence[Factor], species: SpeciesTable, coefficient=1) -> "FieldPolynomial":
        canon = canonicalize(factors, species)
        if canon is None:
            return cls()
        sign, key = canon
        return cls({key: sign * Fraction(coefficient)})

    @property
    def terms(self) -> Dict[MonomialKey, Fraction]:
        return dict(self._terms)

    def items(self) -> List[Tuple[MonomialKey, Fraction]]:
        return sorted(self._terms.items())

    def keys(self) -> List[MonomialKey]:
        return sorted(self._terms)

    def coefficient(self, key: MonomialKey) -> Fraction:
        return self._terms.get(key, Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __add__(self, other: "FieldPolynomial") -> "FieldPolynomial":
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, 0) + v
        return FieldPolynomial(out)

    def __neg__(self) -> "FieldPolynomial":
        return FieldPolynomial({k: -v for k, v in self._terms.items()})

    def __sub__(self, other: "FieldPolynomial") -> "FieldPolynomial":
        return self + (-other)

    def __mul__(self, scalar) -> "FieldPolynomial":
        scalar = Fraction(scalar)
        return FieldPolynomial({k: v * scalar for k, v in self._terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, FieldPolynomial) and self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def product(self, other: "FieldPolynomial", species: SpeciesTable) -> "FieldPolynomial":
        out: Dict[MonomialKey, Fraction] = {}
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                canon = canonicalize(k1.factors + k2.factors, species)
                if canon is None:
                    continue
                sign, key = canon
                out[key] = out.get(key, 0) + sign * c1 * c2
        return FieldPolynomial(out)

    def max_dimension(self, species: SpeciesTable) -> Dimension:
        return max((k.dimension(species) for k in self._terms), default=Fraction(0))

    def max_reach(self) -> int:
        """Largest |α|∞ over all factors"""
        return max((a.norm_inf for k in self._terms for _, a in k.factors), default=0)

    def map_keys(self, fn: Callable[[MonomialKey], Optional[Tuple[int, MonomialKey]]]) -> "FieldPolynomial":
        out: Dict[MonomialKey, Fraction] = {}
        for k, v in self._terms.items():
            image = fn(k)
            if image is None:
                continue
            sign, key = image
            out[key] = out.get(key, 0) + sign * v
        return FieldPolynomial(out)

    def to_json(self, species: SpeciesTable) -> List[Dict]:
        return [
            {"monomial": k.to_json(species), "coeff": [v.numerator, v.denominator]}
            for k, v in self.items()
        ]

    def label(self, species: SpeciesTable) -> str:
        if not self._terms:
            return "0"
        return " + ".join(f"({v})·{k.label(species)}" for k, v in self.items())

    def __repr__(self) -> str:
        return f"FieldPolynomial({len(self._terms)} terms)"


@dataclass(frozen=True)
class SigmaElement:
    """A signed permutation of the unit vectors.

    Θ sends (axis i, sign s) to (perm[i], s * flips[i]); the flips form the
    Σ_axes part and the bare permutation the Σ₊ part.
    """

    perm: Tuple[int, ...]
    flips: Tuple[int, ...]

    @classmethod
    def identity(cls, d: int) -> "SigmaElement":
        return cls(tuple(range(d)), (1,) * d)

    @classmethod
    def from_signed(cls, r: SignedPermutation) -> "SigmaElement":
        return cls(r.perm, r.signs)

    @property
    def signed(self) -> SignedPermutation:
        return SignedPermutation(self.perm, self.flips)

    def apply(self, e: UnitVector) -> UnitVector:
        return UnitVector(self.perm[e.axis], e.sign * self.flips[e.axis])

    def __mul__(self, other: "SigmaElement") -> "SigmaElement":
        # (θ θ')(e) = θ'(θ(e)) so that acting by θθ' is acting by θ' then θ
        return SigmaElement.from_signed(other.signed.compose(self.signed))

    def inverse(self) -> "SigmaElement":
        return SigmaElement.from_signed(self.signed.inverse())

    @property
    def is_axes(self) -> bool:
        return self.perm == tuple(range(len(self.perm)))

    @property
    def is_plus(self) -> bool:
        return all(f == 1 for f in self.flips)

    def axes_part(self) -> "SigmaElement":
        """Flip part F with Θ = F∘Π"""
        flips = [1] * len(self.perm)
        for i, target in enumerate(self.perm):
            flips[target] = self.flips[i]
        return SigmaElement(tuple(range(len(self.perm))), tuple(flips))

    def plus_part(self) -> "SigmaElement":
        return SigmaElement(self.perm, (1,) * len(self.perm))

    def act_alpha(self, alpha: MultiIndex) -> MultiIndex:
        """(Θα)(e) = α(Θ(e))"""
        d = alpha.d
        counts = [0] * (2 * d)
        for axis in range(d):
            for sign in (1, -1):
                e = UnitVector(axis, sign)
                counts[e.slot] = alpha.count(self.apply(e))
        return MultiIndex(tuple(counts))

    def reversal_sign(self, key: MonomialKey) -> int:
        """λ(Θ, M): (-1) to the number of derivatives Θ reverses"""
        reversed_count = 0
        for _, alpha in key.factors:
            for e, n in alpha.items():
                if self.apply(e).sign != e.sign:
                    reversed_count += n
        return (-1) ** reversed_count


def sigma_axes(d: int) -> List[SigmaElement]:
    return [SigmaElement(tuple(range(d)), flips) for flips in itertools.product((1, -1), repeat=d)]


def sigma_plus(d: int) -> List[SigmaElement]:
    return [SigmaElement(perm, (1,) * d) for perm in itertools.permutations(range(d))]


def sigma_group(d: int) -> List[SigmaElement]:
    return [SigmaElement.from_signed(r) for r in hyperoctahedral_group(d)]


def automorphism_theta(rotation: SignedPermutation) -> SigmaElement:
    """Θ_E transporting derivative patterns along a lattice rotation R.

    E(P(X)) = (Θ_E P)(EX) with Θ_E(e) = R⁻¹(e).
    """
    return SigmaElement.from_signed(rotation.inverse())


def sigma_act_key(theta: SigmaElement, key: MonomialKey, species: SpeciesTable) -> Optional[Tuple[int, MonomialKey]]:
    return canonicalize([(i, theta.act_alpha(a)) for i, a in key.factors], species)


def sigma_act(theta: SigmaElement, P: FieldPolynomial, species: SpeciesTable) -> FieldPolynomial:
    """Apply Θ to every multi-index and re-canonicalise"""
    return P.map_keys(lambda k: sigma_act_key(theta, k, species))


def symmetrise_P(key: MonomialKey, species: SpeciesTable) -> FieldPolynomial:
    """P(M) = |Σ_axes|⁻¹ Σ_Θ λ(Θ, M) Θ M"""
    if not key.is_forward:
        raise PreconditionError(f"symmetrisation needs forward derivatives only, got {key.label(species)}")
    return _covariant_average(key, key, species)


def _covariant_average(key: MonomialKey, seed: MonomialKey, species: SpeciesTable) -> FieldPolynomial:
    group = sigma_axes(species.d)
    seed_poly = FieldPolynomial.monomial(seed)
    total = FieldPolynomial()
    for theta in group:
        total = total + sigma_act(theta, seed_poly, species) * theta.reversal_sign(key)
    return total * Fraction(1, len(group))


def laplacian_representative(key: MonomialKey, species: SpeciesTable) -> FieldPolynomial:
    """Covariant representative trading each ∇^e∇^e pair for -∇^-e∇^e"""
    if not key.is_forward:
        raise PreconditionError(f"representatives need forward derivatives only, got {key.label(species)}")
    sign = 1
    factors = []
    for i, alpha in key.factors:
        counts = list(alpha.counts)
        for axis in range(species.d):
            pairs = counts[2 * axis] // 2
            counts[2 * axis] -= pairs
            counts[2 * axis + 1] += pairs
            sign *= (-1) ** pairs
        factors.append((i, MultiIndex(tuple(counts))))
    canon = canonicalize(factors, species)
    if canon is None:
        return FieldPolynomial()
    s, seed = canon
    return _covariant_average(key, seed, species) * (sign * s)


STRATEGIES: Dict[str, Callable[[MonomialKey, SpeciesTable], FieldPolynomial]] = {
    'symmetrise': symmetrise_P,
    'laplacian': laplacian_representative,
}


@lru_cache(maxsize=None)
def _r1_monomial(key: MonomialKey, species: SpeciesTable) -> FieldPolynomial:
    for position, (i, alpha) in enumerate(key.factors):
        axis = alpha.opposed_axis()
        if axis is None:
            continue
        plus, minus = UnitVector(axis, 1), UnitVector(axis, -1)
        total = FieldPolynomial()
        # ∇^e ∇^-e = -(∇^e + ∇^-e)
        for reduced in (alpha.add(minus, -1), alpha.add(plus, -1)):
            factors = list(key.factors)
            factors[position] = (i, reduced)
            canon = canonicalize(factors, species)
            if canon is None:
                continue
            sign, new_key = canon
            total = total + _r1_monomial(new_key, species) * (-sign)
        return total
    return FieldPolynomial.monomial(key)


def r1_normal_form(P: FieldPolynomial, species: SpeciesTable) -> FieldPolynomial:
    """Rewrite until no factor carries both e and -e"""
    total = FieldPolynomial()
    for key, coeff in P.items():
        total = total + _r1_monomial(key, species) * coeff
    return total


def in_r1(P: FieldPolynomial, species: SpeciesTable) -> bool:
    return r1_normal_form(P, species).is_zero()


def leading_symbol(P: FieldPolynomial, species: SpeciesTable) -> FieldPolynomial:
    """Replace every ∇^-e by -∇^e.

    ∇^-e = -∇^e - ∇^-e∇^e, so on homogeneous P this is P modulo ℛ₁ and
    monomials of strictly higher dimension.
    """
    def lead(key: MonomialKey):
        sign = (-1) ** sum(a.backward_count for _, a in key.factors)
        canon = canonicalize([(i, a.made_forward()) for i, a in key.factors], species)
        if canon is None:
            return None
        return sign * canon[0], canon[1]
    return P.map_keys(lead)


def forward_alphas(d: int, budget: int) -> List[MultiIndex]:
    """Forward multi-indices with |α|₁ <= budget, by order then lexicographically"""
    out = []
    for total in range(budget + 1):
        for combo in itertools.combinations_with_replacement(range(d), total):
            counts = [0] * d
            for axis in combo:
                counts[axis] += 1
            out.append(MultiIndex.from_forward(counts))
    return sorted(set(out), key=lambda a: (a.norm1, a))


def _check_d_plus(species: SpeciesTable, d_plus) -> Fraction:
    d_plus = Fraction(d_plus)
    if d_plus < 0:
        raise ConfigurationError(f"d_plus must be non-negative, got {d_plus}")
    return d_plus


def basis_sort_key(key: MonomialKey, species: SpeciesTable):
    return (key.dimension(species), key.degree, key)


@lru_cache(maxsize=None)
def _v_plus(species: SpeciesTable, d_plus: Fraction) -> Tuple[MonomialKey, ...]:
    atoms: List[Tuple[Factor, Fraction]] = []
    for c in species.components:
        if c.dimension > d_plus:
            continue
        for alpha in forward_alphas(species.d, math.floor(d_plus - c.dimension)):
            atoms.append(((c.index, alpha), c.dimension + alpha.norm1))
    atoms.sort()
    found: List[MonomialKey] = []

    def extend(start: int, prefix: List[Factor], dim: Fraction):
        found.append(MonomialKey(tuple(prefix)))
        for k in range(start, len(atoms)):
            factor, weight = atoms[k]
            if dim + weight > d_plus:
                continue
            nxt = k + 1 if species.is_fermion(factor[0]) else k
            extend(nxt, prefix + [factor], dim + weight)

    extend(0, [], Fraction(0))
    return tuple(sorted(found, key=lambda k: basis_sort_key(k, species)))


def enumerate_v_plus(species: SpeciesTable, d_plus) -> List[MonomialKey]:
    """Canonical forward monomials of dimension <= d_plus in basis order"""
    keys = list(_v_plus(species, _check_d_plus(species, d_plus)))
    logger.debug(f"enumerated {len(keys)} monomials with d_plus={d_plus}")
    return keys


def orbit_keys(key: MonomialKey) -> List[MonomialKey]:
    """All reorderings of the multi-indices within each component block"""
    blocks: Dict[int, List[MultiIndex]] = {}
    for i, a in key.factors:
        blocks.setdefault(i, []).append(a)
    per_block = [
        [tuple((i, a) for a in perm) for perm in multiset_permutations(sorted(blocks[i]))]
        for i in sorted(blocks)
    ]
    out = []
    for choice in itertools.product(*per_block):
        out.append(MonomialKey(tuple(f for block in choice for f in block)))
    return out


def enumerate_v_bar_plus(species: SpeciesTable, d_plus) -> List[MonomialKey]:
    """As enumerate_v_plus without the within-component order condition"""
    out = []
    for key in enumerate_v_plus(species, d_plus):
        out.extend(orbit_keys(key))
    return sorted(out, key=lambda k: basis_sort_key(k, species))


def forward_sequences(signature: Sequence[int], species: SpeciesTable, d_plus) -> List[MonomialKey]:
    """Keys of 𝔳̄₊ whose component sequence equals the given signature"""
    signature = tuple(signature)
    wanted = sorted(signature)
    if list(signature) != wanted:
        raise PreconditionError(f"signature {signature} is not sorted by component")
    return [k for k in enumerate_v_bar_plus(species, d_plus) if k.components == signature]


def relevance(key: MonomialKey, species: SpeciesTable, d_plus) -> str:
    dim = key.dimension(species)
    d_plus = Fraction(d_plus)
    if dim < d_plus:
        return 'relevant'
    if dim == d_plus:
        return 'marginal'
    return 'irrelevant'


def minimal_irrelevant_dimension(species: SpeciesTable, d_plus) -> Dimension:
    """Smallest dimension of a forward monomial outside 𝔳₊"""
    d_plus = _check_d_plus(species, d_plus)
    finite = [c.dimension for c in species.components if c.dimension != INFINITY]
    if not finite:
        return INFINITY
    ceiling = d_plus + max(min(finite), Fraction(1))
    dims = [k.dimension(species) for k in enumerate_v_plus(species, ceiling)]
    return min(dim for dim in dims if dim > d_plus)


class PHatTable:
    """Covariant representatives P̂(M) for every M in 𝔳₊, checked on construction"""

    def __init__(self, species: SpeciesTable, d_plus, strategy: str = 'symmetrise',
                 overrides: Optional[Mapping[MonomialKey, FieldPolynomial]] = None):
        if strategy not in STRATEGIES:
            raise ConfigurationError(f"unknown representative strategy {strategy!r}, use one of {sorted(STRATEGIES)}")
        self.species = species
        self.d_plus = Fraction(d_plus)
        self.strategy = strategy
        self.basis = enumerate_v_plus(species, d_plus)
        build = STRATEGIES[strategy]
        self.table: Dict[MonomialKey, FieldPolynomial] = {}
        for key in self.basis:
            if overrides and key in overrides:
                self.table[key] = overrides[key]
            else:
                self.table[key] = build(key, species)
        self._check()
        logger.info(f"P-hat table built: {len(self.table)} representatives, strategy={strategy}")

    def __getitem__(self, key: MonomialKey) -> FieldPolynomial:
        return self.table[key]

    def __len__(self) -> int:
        return len(self.table)

    def items(self) -> List[Tuple[MonomialKey, FieldPolynomial]]:
        return [(k, self.table[k]) for k in self.basis]

    @property
    def max_reach(self) -> int:
        return max((p.max_reach() for p in self.table.values()), default=0)

    def _check(self):
        sp = self.species
        for key in self.basis:
            rep = self.table[key]
            label = key.label(sp)
            if rep.is_zero():
                raise ConstructionError('i', label, "representative is zero")
            for theta in sigma_axes(sp.d):
                if sigma_act(theta, rep, sp) != rep * theta.reversal_sign(key):
                    raise ConstructionError('i', label, f"not covariant under flips {theta.flips}")
            residue = leading_symbol(FieldPolynomial.monomial(key) - rep, sp)
            if not residue.is_zero():
                raise ConstructionError('ii', label, f"leading part of M - P̂(M) is {residue.label(sp)}")
            for theta in sigma_plus(sp.d):
                image = sigma_act_key(theta, key, sp)
                if image is None:
                    continue
                sign, moved = image
                if self.table[moved] * sign != sigma_act(theta, rep, sp):
                    raise ConstructionError('iii', label, f"not equivariant under axis permutation {theta.perm}")

    def span_contains(self, P: FieldPolynomial) -> bool:
        """Exact test that P lies in the rational span of the table"""
        columns = [self.table[k] for k in self.basis]
        monomials = sorted({m for poly in columns + [P] for m in poly.keys()})
        row = {m: r for r, m in enumerate(monomials)}

        def as_matrix(polys: List[FieldPolynomial]) -> sympy.SparseMatrix:
            entries = {}
            for c, poly in enumerate(polys):
                for m, v in poly.items():
                    entries[(row[m], c)] = sympy.Rational(v.numerator, v.denominator)
            return sympy.SparseMatrix(len(monomials), len(polys), entries)

        base = as_matrix(columns)
        return base.rank() == as_matrix(columns + [P]).rank()


def build_P_hat_table(species: SpeciesTable, d_plus, strategy: str = 'symmetrise',
                      overrides: Optional[Mapping[MonomialKey, FieldPolynomial]] = None) -> PHatTable:
    return PHatTable(species, d_plus, strategy, overrides)
