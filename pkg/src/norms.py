"""Test-function norms, the T0 surrogate and the contraction experiment for 1 - loc"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import ConfigurationError, PreconditionError
from src.functionals import Functional
from src.lattice import CoordinatePatch, MultiIndex, Offset, TorusGeometry
from src.loc import LocContext, loc_X
from src.logger import setup_logger
from src.monomials import SpeciesTable, minimal_irrelevant_dimension
from src.testfn import TestFunction, Window, derivative

logger = setup_logger()

Number = Union[Fraction, float]
FunctionalSpec = Sequence[Tuple[Fraction, Sequence[Tuple[int, Offset]]]]


def exact_power(base: int, exponent) -> Fraction:
    """base**exponent for an integral exponent, as an exact rational"""
    exponent = Fraction(exponent)
    if exponent.denominator != 1:
        raise ConfigurationError(f"exponent {exponent} is not integral; weights would not be rational")
    return Fraction(base) ** int(exponent)


@dataclass(frozen=True)
class NormParams:
    """Weights 𝔥 per component, scale R and derivative order p_Φ"""

    h: Tuple[Fraction, ...]
    R: Fraction
    p_phi: int

    def __post_init__(self):
        if any(x <= 0 for x in self.h) or self.R <= 0:
            raise ConfigurationError("norm weights and scale must be positive")
        if self.p_phi < 0:
            raise ConfigurationError("p_phi must be non-negative")

    @classmethod
    def at_scale(cls, species: SpeciesTable, L: int, j: int, p_phi: int) -> "NormParams":
        """𝔥_i = L^(-j[φ_i]), R = L^j"""
        h = tuple(exact_power(L, -j * c.dimension) for c in species.components)
        return cls(h, Fraction(L) ** j, p_phi)

    def primed(self, species: SpeciesTable, L: int) -> "NormParams":
        """Next scale: 𝔥'_i = 𝔥_i L^(-[φ_i]), R' = L R"""
        h = tuple(hi * exact_power(L, -c.dimension) for hi, c in zip(self.h, species.components))
        return NormParams(h, self.R * L, self.p_phi)


def _slot_multi_indices(d: int, p_phi: int) -> List[MultiIndex]:
    return [MultiIndex(counts) for counts in itertools.product(range(p_phi + 1), repeat=2 * d)]


def phi_norm_window(g: TestFunction, params: NormParams, window: Window) -> Fraction:
    """sup over z in the window and |α|∞ <= p_Φ of 𝔥^-z R^|α| |∇^α g_z|.

    The supremum runs over the finite window only, so it bounds the
    global norm from below.
    """
    d = len(window.lower)
    per_slot = _slot_multi_indices(d, params.p_phi)
    weight = Fraction(1)
    for i in g.signature:
        weight /= params.h[i]
    best = Fraction(0)
    for z in window.sequences(g.arity):
        for alphas in itertools.product(per_slot, repeat=g.arity):
            value = abs(derivative(g, alphas, z))
            if value:
                order = sum(a.norm1 for a in alphas)
                best = max(best, weight * params.R ** order * value)
    return best


def t0_upper(F: Functional, params: NormParams) -> Fraction:
    """Σ_terms |coefficient| Π 𝔥, an upper bound for the T0 semi-norm"""
    total = Fraction(0)
    for key, coeff in F.items():
        weight = Fraction(1)
        for c, _ in key:
            weight *= params.h[c]
        total += abs(coeff) * weight
    return total


def gamma_reference(L: int, d_plus_prime, A: int, phi_min) -> Number:
    """L^(-d₊') + L^(-(A+1)[φ_min])"""
    try:
        return exact_power(L, -Fraction(d_plus_prime)) + exact_power(L, -(A + 1) * Fraction(phi_min))
    except ConfigurationError:
        return float(L) ** -float(d_plus_prime) + float(L) ** (-(A + 1) * float(phi_min))


@dataclass
class ContractionReport:
    rows: List[Dict] = field(default_factory=list)
    slope: Optional[float] = None
    reference_slope: Optional[float] = None
    vacuous: bool = False
    annihilated: bool = False

    def to_json(self) -> Dict:
        return {
            "rows": [
                {
                    "L": r["L"],
                    "j": r["j"],
                    "ratio": [r["ratio"].numerator, r["ratio"].denominator],
                    "log_ratio": r["log_ratio"],
                    "gamma": _number_json(r["gamma"]),
                }
                for r in self.rows
            ],
            "slope": self.slope,
            "reference_slope": self.reference_slope,
            "vacuous": self.vacuous,
            "annihilated": self.annihilated,
        }


def _number_json(x: Number):
    if isinstance(x, Fraction):
        return [x.numerator, x.denominator]
    return x


def build_functional(spec: FunctionalSpec, geometry: TorusGeometry, species: SpeciesTable) -> Functional:
    total = Functional()
    for coeff, factors in spec:
        total = total + Functional.term([(c, geometry.point(z)) for c, z in factors], species, coeff)
    return total


def contraction_experiment(species: SpeciesTable, d_plus, family: Sequence[FunctionalSpec], L_values: Sequence[int],
                           X: Sequence[Offset], radii: Sequence[int], N: int, A: int, j: int = 1, p_phi: int = 2,
                           strategy: str = 'symmetrise') -> ContractionReport:
    """Worst ratio t0'((1 - loc_X)F) / t0(F) over the family, per L.

    Weights follow 𝔥_i = L^(-j[φ_i]) at scale j and the primed weights
    one scale up; the log-log slope is compared against -d₊'.
    """
    if not family:
        raise PreconditionError("contraction experiment needs at least one functional")
    d_plus_prime = minimal_irrelevant_dimension(species, d_plus)
    phi_min = species.min_dimension
    if p_phi < d_plus_prime - phi_min:
        raise ConfigurationError(f"p_phi={p_phi} is below d_plus' - [phi_min] = {d_plus_prime - phi_min}")
    report = ContractionReport(reference_slope=-float(d_plus_prime))
    fixed_everywhere = True
    for L in sorted(L_values):
        geometry = TorusGeometry(species.d, L, N)
        patch = CoordinatePatch(geometry, (0,) * species.d, tuple(radii), p_phi)
        ctx = LocContext(species, d_plus, patch, strategy)
        points = [geometry.point(z) for z in X]
        params = NormParams.at_scale(species, L, j, p_phi)
        primed = params.primed(species, L)
        worst = Fraction(0)
        for spec in family:
            F = build_functional(spec, geometry, species)
            localised = loc_X(F, ctx, points).functional
            if localised != F:
                fixed_everywhere = False
            norm = t0_upper(F, params)
            if norm == 0:
                continue
            worst = max(worst, t0_upper(F - localised, primed) / norm)
        report.rows.append({
            "L": L,
            "j": j,
            "ratio": worst,
            "log_ratio": math.log(worst) if worst > 0 else None,
            "gamma": gamma_reference(L, d_plus_prime, A, phi_min),
        })
        logger.info(f"contraction L={L}: ratio {worst}")

    positive = [r for r in report.rows if r["ratio"] > 0]
    report.annihilated = not positive
    report.vacuous = fixed_everywhere
    if report.vacuous:
        logger.warning("loc fixes every functional of the family; the experiment is vacuous")
    if len(positive) >= 2:
        xs = np.log(np.array([r["L"] for r in positive], dtype=float))
        ys = np.array([r["log_ratio"] for r in positive], dtype=float)
        report.slope = float(np.polyfit(xs, ys, 1)[0])
    return report
