"""Polynomial test functions: binomial and dual bases, symmetrisation and the lattice Taylor operator"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from src.errors import DomainError, PreconditionError
from src.lattice import Offset, binom, stencil, MultiIndex
from src.logger import setup_logger
from src.monomials import MonomialKey, SpeciesTable, enumerate_v_plus, fermion_sort_sign, forward_sequences

logger = setup_logger()

PointSequence = Tuple[Offset, ...]


@dataclass(frozen=True)
class Window:
    """Box lower <= z <= upper in patch coordinates"""

    lower: Offset
    upper: Offset

    @classmethod
    def around(cls, centre: Offset, radius: int) -> "Window":
        return cls(tuple(c - radius for c in centre), tuple(c + radius for c in centre))

    def contains(self, z: Offset) -> bool:
        return all(lo <= c <= hi for lo, c, hi in zip(self.lower, z, self.upper))

    def points(self) -> Iterator[Offset]:
        return itertools.product(*(range(lo, hi + 1) for lo, hi in zip(self.lower, self.upper)))

    def sequences(self, arity: int) -> Iterator[PointSequence]:
        return itertools.product(list(self.points()), repeat=arity)

    def inflated(self, radius: int) -> "Window":
        return Window(tuple(c - radius for c in self.lower), tuple(c + radius for c in self.upper))

    def contains_window(self, other: "Window") -> bool:
        return self.contains(other.lower) and self.contains(other.upper)


@dataclass(frozen=True)
class TestFunction:
    """Exact function of p patch-coordinate points with a fixed component signature.

    Outside the window (when one is declared) the function is zero.
    """

    __test__ = False  # not a pytest class

    signature: Tuple[int, ...]
    fermionic: Tuple[bool, ...]
    evaluator: Callable[[PointSequence], Fraction] = field(compare=False)
    window: Optional[Window] = None
    provenance: str = "explicit"
    symmetric: bool = False

    @property
    def arity(self) -> int:
        return len(self.signature)

    def in_window(self, z: PointSequence) -> bool:
        return self.window is None or all(self.window.contains(zk) for zk in z)

    def __call__(self, z: PointSequence) -> Fraction:
        if len(z) != self.arity:
            raise PreconditionError(f"test function of arity {self.arity} called with {len(z)} points")
        if not self.in_window(z):
            return Fraction(0)
        return self.evaluator(tuple(z))

    def strict(self, z: PointSequence) -> Fraction:
        """Value at z, refusing to extend by zero"""
        if not self.in_window(z):
            raise DomainError(f"test function evaluated at {z}, outside its window {self.window}")
        return self.evaluator(tuple(z))

    def __sub__(self, other: "TestFunction") -> "TestFunction":
        _check_same_signature(self, other)
        return TestFunction(self.signature, self.fermionic, lambda z: self(z) - other(z),
                            _meet(self.window, other.window), "combination",
                            self.symmetric and other.symmetric)

    def __add__(self, other: "TestFunction") -> "TestFunction":
        _check_same_signature(self, other)
        return TestFunction(self.signature, self.fermionic, lambda z: self(z) + other(z),
                            _meet(self.window, other.window), "combination",
                            self.symmetric and other.symmetric)

    def scaled(self, c) -> "TestFunction":
        c = Fraction(c)
        return TestFunction(self.signature, self.fermionic, lambda z: c * self(z),
                            self.window, self.provenance, self.symmetric)


def _check_same_signature(f: TestFunction, g: TestFunction):
    if f.signature != g.signature:
        raise PreconditionError(f"signatures differ: {f.signature} vs {g.signature}")


def _meet(a: Optional[Window], b: Optional[Window]) -> Optional[Window]:
    if a is None:
        return b
    if b is None:
        return a
    return Window(tuple(max(x, y) for x, y in zip(a.lower, b.lower)),
                  tuple(min(x, y) for x, y in zip(a.upper, b.upper)))


def fermion_flags(signature: Sequence[int], species: SpeciesTable) -> Tuple[bool, ...]:
    return tuple(species.is_fermion(i) for i in signature)


def make_test_function(signature: Sequence[int], species: SpeciesTable, evaluator: Callable[[PointSequence], Fraction],
                       window: Optional[Window] = None, provenance: str = "explicit") -> TestFunction:
    signature = tuple(signature)
    return TestFunction(signature, fermion_flags(signature, species), evaluator, window, provenance)


def derivative(g: TestFunction, alphas: Sequence[MultiIndex], z: PointSequence, strict: bool = True) -> Fraction:
    """∇^{α_1}_1 ... ∇^{α_p}_p g at z, slot by slot"""
    if len(alphas) != g.arity or len(z) != g.arity:
        raise PreconditionError("one multi-index and one point per slot are required")
    read = g.strict if strict else g
    total = Fraction(0)
    for combo in itertools.product(*(stencil(a) for a in alphas)):
        weight = 1
        shifted = []
        for (offset, w), zk in zip(combo, z):
            weight *= w
            shifted.append(tuple(c + o for c, o in zip(zk, offset)))
        total += weight * read(tuple(shifted))
    return total


def eval_binomial(m: MonomialKey, a: Offset, z: PointSequence) -> int:
    """b_{m,z}^{(a)} = Π_k binom(z_k - a, α_k), axis by axis"""
    if len(z) != m.degree:
        raise PreconditionError(f"binomial basis function of arity {m.degree} evaluated at {len(z)} points")
    value = 1
    for (_, alpha), zk in zip(m.factors, z):
        if not alpha.is_forward:
            raise PreconditionError("binomial basis keys carry forward derivatives only")
        for n, c, ac in zip(alpha.forward_vector(), zk, a):
            if n:
                value *= binom(c - ac, n)
                if not value:
                    return 0
    return value


def binomial_basis(m: MonomialKey, a: Offset, species: SpeciesTable) -> TestFunction:
    return make_test_function(m.components, species, lambda z: Fraction(eval_binomial(m, a, z)),
                              provenance="binomial")


@lru_cache(maxsize=None)
def slot_permutations(signature: Tuple[int, ...], fermionic: Tuple[bool, ...]) -> Tuple[Tuple[Tuple[int, ...], int], ...]:
    """Component-preserving slot permutations π with the sign of their fermionic part"""
    blocks: Dict[int, List[int]] = {}
    for k, i in enumerate(signature):
        blocks.setdefault(i, []).append(k)
    out = []
    for choice in itertools.product(*(itertools.permutations(b) for b in blocks.values())):
        perm = list(range(len(signature)))
        for block, image in zip(blocks.values(), choice):
            for k, target in zip(block, image):
                perm[k] = target
        keys = list(perm)
        result = fermion_sort_sign(keys, fermionic)
        sign = result[0] if result is not None else 1
        out.append((tuple(perm), sign))
    return tuple(out)


def symmetrise_S(g: TestFunction) -> TestFunction:
    """Average over component-preserving slot permutations with fermionic signs"""
    if g.symmetric:
        return g
    perms = slot_permutations(g.signature, g.fermionic)
    norm = Fraction(1, len(perms))

    def averaged(z: PointSequence) -> Fraction:
        total = Fraction(0)
        for perm, sign in perms:
            total += sign * g(tuple(z[k] for k in perm))
        return total * norm

    return TestFunction(g.signature, g.fermionic, averaged, g.window, g.provenance, True)


def group_orders(m: MonomialKey) -> Tuple[int, int]:
    """(|Σ⃗(m)|, |Σ⃗₀(m)|)"""
    full = math.prod(math.factorial(n) for n in m.component_counts().values())
    stabiliser = math.prod(math.factorial(n) for n in m.multiplicities().values())
    return full, stabiliser


def normalisation(m: MonomialKey) -> Fraction:
    full, stabiliser = group_orders(m)
    return Fraction(full, stabiliser)


def dual_basis(m: MonomialKey, a: Offset, species: SpeciesTable, d_plus) -> TestFunction:
    """f_m^{(a)} = N_m S b_m^{(a)}"""
    if m not in set(enumerate_v_plus(species, d_plus)):
        raise PreconditionError(f"{m.label(species)} is not a basis monomial for d_plus={d_plus}")
    n_m = normalisation(m)
    base = symmetrise_S(binomial_basis(m, a, species))

    @lru_cache(maxsize=4096)
    def value(z: PointSequence) -> Fraction:
        return n_m * base(z)

    return TestFunction(m.components, fermion_flags(m.components, species), value, None, "dual", True)


def taylor_degree(signature: Sequence[int], species: SpeciesTable, d_plus) -> int:
    """Largest total derivative order s allowed for the signature (negative when none)"""
    weight = sum((species.dimension(i) for i in signature), Fraction(0))
    if weight == math.inf:
        return -1
    return math.floor(Fraction(d_plus) - weight)


def taylor(g: TestFunction, a: Offset, species: SpeciesTable, d_plus) -> TestFunction:
    """Tay_a g = Σ_{m ∈ 𝔳̄₊} (∇^m g)(a, ..., a) b_m^{(a)}"""
    base = (tuple(a),) * g.arity
    coefficients = []
    for m in forward_sequences(g.signature, species, d_plus):
        c = derivative(g, m.alphas, base)
        if c:
            coefficients.append((m, c))

    def value(z: PointSequence) -> Fraction:
        return sum((c * eval_binomial(m, a, z) for m, c in coefficients), Fraction(0))

    return TestFunction(g.signature, g.fermionic, value, None, "taylor", False)


def taylor_remainder_bound_check(g: TestFunction, a: Offset, z: PointSequence, beta: Sequence[MultiIndex],
                                 species: SpeciesTable, d_plus) -> Tuple[Fraction, Fraction, bool]:
    """Compare |∇^β (g - Tay_a g)_z| with M_g binom(|z - a|₁, s - t + 1).

    Backward parts of β are moved onto the translate of z, which must
    still dominate a coordinatewise.
    """
    p = g.arity
    s = taylor_degree(g.signature, species, d_plus)
    t = sum(b.norm1 for b in beta)
    if len(beta) != p or len(z) != p:
        raise PreconditionError("one multi-index and one point per slot are required")
    if s < 0 or t > s:
        raise PreconditionError(f"derivative order t={t} exceeds the Taylor degree s={s}")
    for zk in z:
        if any(c < ac for c, ac in zip(zk, a)):
            raise PreconditionError(f"point {zk} does not dominate the base point {a}")
    for zk, b in zip(z, beta):
        if any(c - back < ac for c, back, ac in zip(zk, b.backward_vector(), a)):
            raise PreconditionError(f"backward derivatives {b} carry {zk} below the base point {a}")

    remainder = g - taylor(g, a, species, d_plus)
    lhs = abs(derivative(remainder, beta, z))

    box = [range(ac - s, c + 1) for zk in z for c, ac in zip(zk, a)]
    d = len(a)
    sup = Fraction(0)
    distributions = [
        alphas for alphas in itertools.product(_forward_of_order_at_most(d, s + 1), repeat=p)
        if sum(x.norm1 for x in alphas) == s + 1
    ]
    for flat in itertools.product(*box):
        y = tuple(tuple(flat[k * d:(k + 1) * d]) for k in range(p))
        for alphas in distributions:
            sup = max(sup, abs(derivative(g, alphas, y)))
    distance = sum(c - ac for zk in z for c, ac in zip(zk, a))
    rhs = sup * binom(distance, s - t + 1)
    return lhs, rhs, lhs <= rhs


def _forward_of_order_at_most(d: int, order: int) -> List[MultiIndex]:
    return [MultiIndex.from_forward(v) for v in itertools.product(range(order + 1), repeat=d) if sum(v) <= order]


def vandermonde_sides(s: int, y: Sequence[int], z_p: int) -> Tuple[int, int]:
    """Both sides of Σ_{|β|≤s} binom(y,β) binom(z_p, s-|β|+1) + binom(|y|, s+1) = binom(|z|, s+1)"""
    lhs = 0
    for beta in itertools.product(*(range(min(yi, s) + 1) for yi in y)):
        order = sum(beta)
        if order > s:
            continue
        lhs += math.prod(binom(yi, bi) for yi, bi in zip(y, beta)) * binom(z_p, s - order + 1)
    lhs += binom(sum(y), s + 1)
    return lhs, binom(sum(y) + z_p, s + 1)


def vandermonde_identity_check(s: int, y: Sequence[int], z_p: int) -> bool:
    lhs, rhs = vandermonde_sides(s, y, z_p)
    return lhs == rhs


def pi_membership(g: TestFunction, window: Window, species: SpeciesTable, d_plus,
                  a: Optional[Offset] = None) -> bool:
    """True iff g agrees on the window with an element of Π.

    g lies in Π on the window iff it equals its own Taylor polynomial
    there; the window must carry the forward stencil of every Taylor
    coefficient.
    """
    a = tuple(a) if a is not None else window.lower
    s = taylor_degree(g.signature, species, d_plus)
    if s < 0:
        return all(g(z) == 0 for z in window.sequences(g.arity))
    reach = tuple(c + s for c in a)
    if not (window.contains(a) and window.contains(reach)):
        raise DomainError(f"window {window} is too small to decide membership; it must contain {a} to {reach}")
    projected = taylor(g, a, species, d_plus)
    return all(g(z) == projected(z) for z in window.sequences(g.arity))


def pullback(g: TestFunction, E, patch) -> TestFunction:
    """(E*g)_z = g_{Ez} in the coordinates of the given patch"""
    def value(z: PointSequence) -> Fraction:
        return g(tuple(patch.chart(E.apply(patch.unchart(zk))) for zk in z))

    return TestFunction(g.signature, g.fermionic, value, None, "pullback", g.symmetric)
