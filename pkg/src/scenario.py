"""Load, validate and interpret scenario files"""

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from jsonschema import Draft202012Validator

from src.errors import ConfigurationError
from src.functionals import Functional, GradedFunctional
from src.lattice import CoordinatePatch, Offset, Point, TorusGeometry
from src.loc import LocContext
from src.logger import setup_logger
from src.monomials import INFINITY, FieldPolynomial, MonomialKey, Species, SpeciesTable

logger = setup_logger()

SCHEMA_PATH = Path(__file__).resolve().parent.parent / 'scenarios' / 'schema.json'

ComplexPair = Tuple[Fraction, Fraction]


def parse_rational(value) -> Fraction:
    if isinstance(value, int):
        return Fraction(value)
    num, den = value
    if den == 0:
        raise ConfigurationError(f"rational {value} has a zero denominator")
    return Fraction(num, den)


def parse_dimension(value):
    return INFINITY if value == "inf" else parse_rational(value)


def parse_coefficient(value) -> ComplexPair:
    """(real, imaginary) parts of a rational or {"re", "im"} coefficient"""
    if isinstance(value, dict):
        return parse_rational(value.get("re", 0)), parse_rational(value.get("im", 0))
    return parse_rational(value), Fraction(0)


@dataclass
class ComplexFunctional:
    """Real and imaginary rational parts of a functional"""

    re: Functional = field(default_factory=Functional)
    im: Functional = field(default_factory=Functional)

    def add_term(self, factors, species: SpeciesTable, coeff: ComplexPair):
        re, im = coeff
        if re:
            self.re = self.re + Functional.term(factors, species, re)
        if im:
            self.im = self.im + Functional.term(factors, species, im)

    @property
    def is_complex(self) -> bool:
        return not self.im.is_zero()

    def is_zero(self) -> bool:
        return self.re.is_zero() and self.im.is_zero()


@dataclass
class Scenario:
    """A validated scenario with every cross-reference resolved"""

    raw: Dict[str, Any]
    name: str
    species: SpeciesTable
    d_plus: Fraction
    strategy: str = 'symmetrise'
    p_phi: int = 1
    geometry: Optional[TorusGeometry] = None
    patch: Optional[CoordinatePatch] = None
    sector_d_plus: Dict[str, Fraction] = field(default_factory=dict)
    X: List[Point] = field(default_factory=list)
    Y: Optional[List[Point]] = None
    observables: Dict[str, Point] = field(default_factory=dict)
    functional: ComplexFunctional = field(default_factory=ComplexFunctional)
    graded: Optional[Dict[str, ComplexFunctional]] = None
    overrides: Dict[MonomialKey, FieldPolynomial] = field(default_factory=dict)
    options: Dict[str, Any] = field(default_factory=dict)
    contract: Optional[Dict[str, Any]] = None

    def require_patch(self) -> CoordinatePatch:
        if self.patch is None:
            raise ConfigurationError(f"scenario {self.name!r} needs 'geometry' and 'patch' for this command")
        return self.patch

    def build_context(self, verify: Optional[bool] = None) -> LocContext:
        patch = self.require_patch()
        return LocContext(
            self.species, self.d_plus, patch, self.strategy,
            sector_d_plus=self.sector_d_plus,
            observables=self.observables,
            overrides=self.overrides,
            verify=verify,
        )

    def graded_parts(self) -> Tuple[GradedFunctional, GradedFunctional]:
        sectors = self.graded or {}
        re = GradedFunctional({s: f.re for s, f in sectors.items()})
        im = GradedFunctional({s: f.im for s, f in sectors.items()})
        return re, im


def load_schema() -> Dict[str, Any]:
    with open(SCHEMA_PATH, 'r', encoding='utf-8') as f:
        return json.load(f)


def validate(payload: Dict[str, Any]):
    """Raise ConfigurationError naming the field path of the first schema violation"""
    validator = Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(payload), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        first = errors[0]
        path = "/".join(str(p) for p in first.absolute_path) or "<root>"
        raise ConfigurationError(f"scenario field {path}: {first.message}")


def load_scenario(path: str) -> Scenario:
    """Read a scenario file, validate it against the schema and resolve it"""
    if not os.path.exists(path):
        raise ConfigurationError(f"scenario file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            payload = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"scenario {path} is not valid JSON: {e}") from e
    scenario = parse_scenario(payload)
    logger.info(f"loaded scenario {scenario.name!r} from {path}")
    return scenario


def parse_scenario(payload: Dict[str, Any]) -> Scenario:
    validate(payload)
    d = payload["d"]
    species = SpeciesTable(
        d,
        tuple(
            Species(s["name"], s["statistics"], parse_dimension(s["dimension"]), tuple(s["components"]))
            for s in payload["species"]
        ),
        tuple(tuple(p) for p in payload.get("conjugate_pairs", [])),
        tuple(payload["supersymmetry"]) if "supersymmetry" in payload else None,
    )
    scenario = Scenario(
        raw=payload,
        name=payload["name"],
        species=species,
        d_plus=parse_rational(payload["d_plus"]),
        strategy=payload.get("strategy", 'symmetrise'),
        p_phi=payload.get("p_phi", 1),
        sector_d_plus={k: parse_rational(v) for k, v in payload.get("sector_d_plus", {}).items()},
        options=dict(payload.get("options", {})),
    )
    if scenario.d_plus < 0:
        raise ConfigurationError("scenario field d_plus: must be non-negative")

    if "geometry" in payload:
        g = payload["geometry"]
        scenario.geometry = TorusGeometry(d, g["L"], g["N"])
    if "patch" in payload:
        if scenario.geometry is None:
            raise ConfigurationError("scenario field patch: a patch needs 'geometry'")
        p = payload["patch"]
        _check_length("patch/radii", p["radii"], d)
        anchor = tuple(p.get("anchor", [0] * d))
        _check_length("patch/anchor", anchor, d)
        scenario.patch = CoordinatePatch(scenario.geometry, anchor, tuple(p["radii"]), scenario.p_phi)

    scenario.X = _points(scenario, "X", payload.get("X", []))
    if "Y" in payload:
        scenario.Y = _points(scenario, "Y", payload["Y"])
    scenario.observables = {k: _point(scenario, f"observables/{k}", v) for k, v in payload.get("observables", {}).items()}

    if "functional" in payload:
        scenario.functional = _functional(scenario, "functional", payload["functional"])
    if "graded" in payload:
        scenario.graded = {s: _functional(scenario, f"graded/{s}", terms) for s, terms in payload["graded"].items()}

    for k, entry in enumerate(payload.get("p_hat_overrides", [])):
        key = _monomial(species, f"p_hat_overrides/{k}/monomial", entry["monomial"])
        poly = FieldPolynomial()
        for term in entry["polynomial"]:
            m = _monomial(species, f"p_hat_overrides/{k}/polynomial", term["monomial"])
            poly = poly + FieldPolynomial.monomial(m, parse_rational(term["coeff"]))
        scenario.overrides[key] = poly

    if "contract" in payload:
        scenario.contract = _contract(scenario, payload["contract"])
    return scenario


def _check_length(where: str, values: Sequence, d: int):
    if len(values) != d:
        raise ConfigurationError(f"scenario field {where}: expected {d} coordinates, got {len(values)}")


def _point(scenario: Scenario, where: str, coords: Sequence[int]) -> Point:
    _check_length(where, coords, scenario.species.d)
    if scenario.geometry is None:
        raise ConfigurationError(f"scenario field {where}: points need 'geometry'")
    x = scenario.geometry.point(coords)
    if scenario.patch is not None and not scenario.patch.contains(x):
        raise ConfigurationError(f"scenario field {where}: point {list(coords)} lies outside the patch")
    return x


def _points(scenario: Scenario, where: str, values: Sequence[Sequence[int]]) -> List[Point]:
    return sorted({_point(scenario, f"{where}/{k}", v) for k, v in enumerate(values)})


def _monomial(species: SpeciesTable, where: str, payload) -> MonomialKey:
    try:
        key = MonomialKey.from_json(species, payload)
    except ConfigurationError as e:
        raise ConfigurationError(f"scenario field {where}: {e}") from e
    if not key.is_canonical(species):
        raise ConfigurationError(f"scenario field {where}: monomial {key.label(species)} is not in canonical order")
    return key


def _factor(scenario: Scenario, where: str, entry: Sequence) -> Tuple[int, Offset]:
    *coords, name = entry
    if not isinstance(name, str):
        raise ConfigurationError(f"scenario field {where}: the last entry must name a component")
    _check_length(where, coords, scenario.species.d)
    return scenario.species.index(name), tuple(coords)


def _functional(scenario: Scenario, where: str, terms: Sequence[Dict]) -> ComplexFunctional:
    species = scenario.species
    out = ComplexFunctional()
    for k, term in enumerate(terms):
        here = f"{where}/{k}"
        if term.get("kind") == "convolution":
            _convolution(scenario, here, term, out)
            continue
        factors = []
        for n, entry in enumerate(term["factors"]):
            c, coords = _factor(scenario, f"{here}/factors/{n}", entry)
            factors.append((c, _point(scenario, f"{here}/factors/{n}", coords)))
        out.add_term(factors, species, parse_coefficient(term["coeff"]))
    return out


def _convolution(scenario: Scenario, where: str, term: Dict, out: ComplexFunctional):
    """Σ_{x ∈ X} Σ_{offset} q(offset) Π factors with y = x - offset"""
    if not scenario.X:
        raise ConfigurationError(f"scenario field {where}: a convolution needs a nonempty X")
    geometry, species = scenario.geometry, scenario.species
    components = [(role, species.index(name)) for role, name in term["factors"]]
    for n, entry in enumerate(term["kernel"]):
        _check_length(f"{where}/kernel/{n}/offset", entry["offset"], species.d)
        coeff = parse_coefficient(entry["coeff"])
        back = [-c for c in entry["offset"]]
        for x in scenario.X:
            y = geometry.shift(x, back)
            if scenario.patch is not None and not scenario.patch.contains(y):
                raise ConfigurationError(f"scenario field {where}/kernel/{n}: point {list(y)} lies outside the patch")
            out.add_term([(c, x if role == "x" else y) for role, c in components], species, coeff)


def _contract(scenario: Scenario, payload: Dict[str, Any]) -> Dict[str, Any]:
    d = scenario.species.d
    _check_length("contract/radii", payload["radii"], d)
    X = []
    for k, coords in enumerate(payload["X"]):
        _check_length(f"contract/X/{k}", coords, d)
        X.append(tuple(coords))
    family = []
    for k, terms in enumerate(payload["family"]):
        spec = []
        for n, term in enumerate(terms):
            re, im = parse_coefficient(term["coeff"])
            if im:
                raise ConfigurationError(f"scenario field contract/family/{k}/{n}: contraction needs real coefficients")
            spec.append((re, [_factor(scenario, f"contract/family/{k}/{n}", f) for f in term["factors"]]))
        family.append(spec)
    return {
        "L_values": list(payload["L_values"]),
        "N": payload["N"],
        "A": payload["A"],
        "j": payload.get("j", 1),
        "p_phi": payload.get("p_phi", 2),
        "X": X,
        "radii": tuple(payload["radii"]),
        "family": family,
    }

