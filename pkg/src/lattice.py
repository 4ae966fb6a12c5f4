"""Lattice geometry: torus, coordinate patches, multi-indices and finite differences"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Tuple, Union

from src.errors import ConfigurationError, DomainError, PreconditionError
from src.logger import setup_logger

logger = setup_logger()

Point = Tuple[int, ...]
Offset = Tuple[int, ...]
PointFunction = Union[Mapping[Point, Fraction], Callable[[Point], Fraction]]


def binom(x: int, k: int) -> int:
    """Binomial coefficient binom(x, k) for any integer x and k >= 0"""
    if k < 0:
        return 0
    if x >= 0:
        return math.comb(x, k)
    return (-1) ** k * math.comb(k - x - 1, k)


@dataclass(frozen=True)
class TorusGeometry:
    """Discrete torus of side L**N in d dimensions"""

    d: int
    L: int
    N: int

    def __post_init__(self):
        if self.d < 1:
            raise ConfigurationError(f"dimension d must be positive, got {self.d}")
        if self.L < 2:
            raise ConfigurationError(f"scale base L must be at least 2, got {self.L}")
        if self.N < 1:
            raise ConfigurationError(f"number of scales N must be positive, got {self.N}")

    @property
    def period(self) -> int:
        return self.L ** self.N

    def point(self, coords: Iterable[int]) -> Point:
        """Canonical torus representative of an integer vector"""
        coords = tuple(int(c) for c in coords)
        if len(coords) != self.d:
            raise ConfigurationError(f"point {coords} does not have {self.d} coordinates")
        return tuple(c % self.period for c in coords)

    def shift(self, x: Point, offset: Offset) -> Point:
        return tuple((xi + oi) % self.period for xi, oi in zip(x, offset))

    def separation(self, x: Point, y: Point) -> Offset:
        """Shortest representative of y - x, components in (-period/2, period/2]"""
        half = self.period // 2
        out = []
        for xi, yi in zip(x, y):
            delta = (yi - xi) % self.period
            if delta > half:
                delta -= self.period
            out.append(delta)
        return tuple(out)

    def are_adjacent(self, x: Point, y: Point) -> bool:
        delta = self.separation(x, y)
        return sum(abs(c) for c in delta) == 1 or (
            self.period == 2 and sum(1 for c in delta if c != 0) == 1
        )


class UnitVector(NamedTuple):
    """One of the 2d unit vectors; axis is zero-based"""

    axis: int
    sign: int

    def __neg__(self) -> "UnitVector":
        return UnitVector(self.axis, -self.sign)

    def vector(self, d: int) -> Offset:
        return tuple(self.sign if i == self.axis else 0 for i in range(d))

    @property
    def slot(self) -> int:
        """Position inside MultiIndex.counts"""
        return 2 * self.axis + (0 if self.sign > 0 else 1)

    def label(self) -> str:
        return f"{'+' if self.sign > 0 else '-'}{self.axis + 1}"

    @classmethod
    def parse(cls, label: str) -> "UnitVector":
        try:
            sign = 1 if label[0] == '+' else -1 if label[0] == '-' else None
            axis = int(label[1:]) - 1
        except (IndexError, ValueError):
            sign, axis = None, -1
        if sign is None or axis < 0:
            raise ConfigurationError(f"bad direction label {label!r}, expected e.g. '+1' or '-2'")
        return cls(axis, sign)


def unit_vectors(d: int) -> List[UnitVector]:
    """All 2d unit vectors in axis order, + before -"""
    return [UnitVector(axis, sign) for axis in range(d) for sign in (1, -1)]


@dataclass(frozen=True, order=True)
class MultiIndex:
    """Counts of difference operators per unit vector.

    counts lists (+e_1, -e_1, +e_2, -e_2, ...); the dataclass ordering is
    therefore lexicographic on that vector.
    """

    counts: Tuple[int, ...]

    @classmethod
    def zero(cls, d: int) -> "MultiIndex":
        return cls((0,) * (2 * d))

    @classmethod
    def of(cls, d: int, mapping: Mapping[UnitVector, int]) -> "MultiIndex":
        counts = [0] * (2 * d)
        for e, n in mapping.items():
            if n < 0:
                raise PreconditionError(f"negative count {n} for direction {e.label()}")
            counts[e.slot] += n
        return cls(tuple(counts))

    @classmethod
    def from_directions(cls, d: int, directions: Iterable[UnitVector]) -> "MultiIndex":
        counts = [0] * (2 * d)
        for e in directions:
            counts[e.slot] += 1
        return cls(tuple(counts))

    @classmethod
    def from_forward(cls, forward: Iterable[int]) -> "MultiIndex":
        counts: List[int] = []
        for n in forward:
            counts.extend((n, 0))
        return cls(tuple(counts))

    @property
    def d(self) -> int:
        return len(self.counts) // 2

    @property
    def norm1(self) -> int:
        return sum(self.counts)

    @property
    def norm_inf(self) -> int:
        return max(self.counts, default=0)

    @property
    def is_forward(self) -> bool:
        return all(n == 0 for n in self.counts[1::2])

    @property
    def backward_count(self) -> int:
        return sum(self.counts[1::2])

    def count(self, e: UnitVector) -> int:
        return self.counts[e.slot]

    def items(self) -> Iterator[Tuple[UnitVector, int]]:
        for e in unit_vectors(self.d):
            n = self.counts[e.slot]
            if n:
                yield e, n

    def add(self, e: UnitVector, n: int = 1) -> "MultiIndex":
        counts = list(self.counts)
        counts[e.slot] += n
        if counts[e.slot] < 0:
            raise PreconditionError(f"count for {e.label()} would become negative")
        return MultiIndex(tuple(counts))

    def forward_vector(self) -> Tuple[int, ...]:
        """Forward counts per axis"""
        return self.counts[0::2]

    def backward_vector(self) -> Tuple[int, ...]:
        return self.counts[1::2]

    def made_forward(self) -> "MultiIndex":
        """Every backward count moved onto the matching forward direction"""
        return MultiIndex.from_forward(f + b for f, b in zip(self.counts[0::2], self.counts[1::2]))

    def opposed_axis(self) -> Optional[int]:
        """First axis carrying both a forward and a backward difference"""
        for axis in range(self.d):
            if self.counts[2 * axis] and self.counts[2 * axis + 1]:
                return axis
        return None

    def to_json(self) -> Dict[str, int]:
        return {e.label(): n for e, n in self.items()}

    @classmethod
    def from_json(cls, d: int, payload: Mapping[str, int]) -> "MultiIndex":
        return cls.of(d, {UnitVector.parse(k): int(v) for k, v in payload.items()})

    def __str__(self) -> str:
        if not self.norm1:
            return ""
        return "".join(f"∇[{e.label()}]" * n for e, n in self.items())


@lru_cache(maxsize=None)
def stencil(alpha: MultiIndex) -> Tuple[Tuple[Offset, int], ...]:
    """Offsets and integer weights with ∇^α f(x) = Σ w f(x + offset)"""
    d = alpha.d
    weights: Dict[Offset, int] = {(0,) * d: 1}
    for e, n in alpha.items():
        step = e.vector(d)
        # (T_e - 1)^n = Σ_k binom(n, k) (-1)^(n-k) T_e^k
        single = {tuple(k * s for s in step): math.comb(n, k) * (-1) ** (n - k) for k in range(n + 1)}
        combined: Dict[Offset, int] = {}
        for off, w in weights.items():
            for delta, v in single.items():
                key = tuple(a + b for a, b in zip(off, delta))
                combined[key] = combined.get(key, 0) + w * v
        weights = {k: v for k, v in combined.items() if v}
    return tuple(sorted(weights.items()))


def read_value(f: PointFunction, x: Point) -> Fraction:
    """Evaluate a point function, raising DomainError on an undefined point"""
    if isinstance(f, Mapping):
        if x not in f:
            raise DomainError(f"point {x} is outside the domain of the function")
        return f[x]
    try:
        return f(x)
    except KeyError as exc:
        raise DomainError(f"point {x} is outside the domain of the function") from exc


def forward_difference(f: PointFunction, e: UnitVector, x: Point) -> Fraction:
    """∇^e f(x) = f(x + e) - f(x)"""
    step = e.vector(len(x))
    return read_value(f, tuple(a + b for a, b in zip(x, step))) - read_value(f, x)


def apply_multi_index(f: PointFunction, alpha: MultiIndex, x: Point) -> Fraction:
    """Apply ∇^α to f at x through its expanded stencil"""
    total = Fraction(0)
    for offset, weight in stencil(alpha):
        total += weight * read_value(f, tuple(a + b for a, b in zip(x, offset)))
    return total


def redundancy_identity_check(f: PointFunction, e: UnitVector, x: Point) -> bool:
    """True iff (∇^e + ∇^-e) f(x) = -(∇^-e ∇^e) f(x)"""
    d = len(x)
    lhs = forward_difference(f, e, x) + forward_difference(f, -e, x)
    rhs = -apply_multi_index(f, MultiIndex.from_directions(d, [e, -e]), x)
    return lhs == rhs


@dataclass(frozen=True)
class CoordinatePatch:
    """Rectangle |z_i| <= r_i around an anchor, embedded without wrap-around"""

    geometry: TorusGeometry
    anchor: Point
    radii: Tuple[int, ...]
    p_phi: int = 1

    def __post_init__(self):
        g = self.geometry
        if len(self.anchor) != g.d or len(self.radii) != g.d:
            raise ConfigurationError("patch anchor and radii must have d entries")
        if any(r < 0 for r in self.radii):
            raise ConfigurationError(f"patch radii must be non-negative, got {self.radii}")
        object.__setattr__(self, 'anchor', g.point(self.anchor))
        for axis, r in enumerate(self.radii):
            if 2 * (r + self.margin) >= g.period:
                raise ConfigurationError(
                    f"patch wraps around the torus on axis {axis + 1}: "
                    f"2(r + margin) = {2 * (r + self.margin)} is not below period {g.period}"
                )

    @property
    def margin(self) -> int:
        return max(1, self.p_phi)

    def chart(self, x: Point) -> Offset:
        """Patch coordinates of a torus point"""
        return self.geometry.separation(self.anchor, x)

    def unchart(self, z: Offset) -> Point:
        return self.geometry.shift(self.anchor, z)

    def contains(self, x: Point) -> bool:
        return all(abs(c) <= r for c, r in zip(self.chart(x), self.radii))

    def contains_coords(self, z: Offset) -> bool:
        return all(abs(c) <= r for c, r in zip(z, self.radii))

    def coords(self) -> Iterator[Offset]:
        """Every coordinate vector of the rectangle, lexicographically"""
        return itertools.product(*(range(-r, r + 1) for r in self.radii))

    def points(self) -> Iterator[Point]:
        for z in self.coords():
            yield self.unchart(z)

    def image(self, E: "Automorphism") -> "CoordinatePatch":
        """The patch carried by an automorphism"""
        radii = [0] * self.geometry.d
        for i, r in enumerate(self.radii):
            radii[E.rotation.perm[i]] = r
        return CoordinatePatch(self.geometry, E.apply(self.anchor), tuple(radii), self.p_phi)


def patch_contains(patch: CoordinatePatch, X: Iterable[Point]) -> bool:
    """True iff every point of X lies in the patch rectangle"""
    return all(patch.contains(x) for x in X)


def inflate(points: Iterable[Offset], radius: int) -> List[Offset]:
    """All coordinate vectors within sup-distance radius of the given ones"""
    out = set()
    for z in points:
        for delta in itertools.product(range(-radius, radius + 1), repeat=len(z)):
            out.add(tuple(a + b for a, b in zip(z, delta)))
    return sorted(out)


@dataclass(frozen=True)
class SignedPermutation:
    """Axis i is sent to axis perm[i] and multiplied by signs[i]"""

    perm: Tuple[int, ...]
    signs: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ConfigurationError(f"{self.perm} is not a permutation of the axes")
        if any(s not in (1, -1) for s in self.signs) or len(self.signs) != len(self.perm):
            raise ConfigurationError(f"signs {self.signs} must be ±1 per axis")

    @classmethod
    def identity(cls, d: int) -> "SignedPermutation":
        return cls(tuple(range(d)), (1,) * d)

    def apply(self, v: Offset) -> Offset:
        out = [0] * len(v)
        for i, c in enumerate(v):
            out[self.perm[i]] = self.signs[i] * c
        return tuple(out)

    def apply_unit(self, e: UnitVector) -> UnitVector:
        return UnitVector(self.perm[e.axis], e.sign * self.signs[e.axis])

    def compose(self, other: "SignedPermutation") -> "SignedPermutation":
        """self after other"""
        d = len(self.perm)
        perm = tuple(self.perm[other.perm[i]] for i in range(d))
        signs = tuple(other.signs[i] * self.signs[other.perm[i]] for i in range(d))
        return SignedPermutation(perm, signs)

    def inverse(self) -> "SignedPermutation":
        d = len(self.perm)
        perm = [0] * d
        signs = [1] * d
        for i in range(d):
            perm[self.perm[i]] = i
            signs[self.perm[i]] = self.signs[i]
        return SignedPermutation(tuple(perm), tuple(signs))


@dataclass(frozen=True)
class Automorphism:
    """x -> R x + t on the torus"""

    geometry: TorusGeometry
    rotation: SignedPermutation
    translation: Point

    @classmethod
    def identity(cls, geometry: TorusGeometry) -> "Automorphism":
        return cls(geometry, SignedPermutation.identity(geometry.d), (0,) * geometry.d)

    @classmethod
    def translate(cls, geometry: TorusGeometry, t: Iterable[int]) -> "Automorphism":
        return cls(geometry, SignedPermutation.identity(geometry.d), geometry.point(t))

    @classmethod
    def rotate(cls, geometry: TorusGeometry, rotation: SignedPermutation, centre: Optional[Point] = None) -> "Automorphism":
        """Rotation about a centre point (the origin by default)"""
        centre = geometry.point(centre or (0,) * geometry.d)
        moved = rotation.apply(centre)
        t = geometry.point(c - m for c, m in zip(centre, moved))
        return cls(geometry, rotation, t)

    def apply(self, x: Point) -> Point:
        return self.geometry.shift(self.geometry.point(self.rotation.apply(x)), self.translation)

    def compose(self, other: "Automorphism") -> "Automorphism":
        """self after other"""
        rotation = self.rotation.compose(other.rotation)
        t = self.geometry.shift(self.geometry.point(self.rotation.apply(other.translation)), self.translation)
        return Automorphism(self.geometry, rotation, t)

    def inverse(self) -> "Automorphism":
        inv = self.rotation.inverse()
        t = self.geometry.point(-c for c in inv.apply(self.translation))
        return Automorphism(self.geometry, inv, t)


def hyperoctahedral_group(d: int) -> List[SignedPermutation]:
    """All 2^d d! signed permutations of the axes"""
    return [
        SignedPermutation(perm, signs)
        for perm in itertools.permutations(range(d))
        for signs in itertools.product((1, -1), repeat=d)
    ]
