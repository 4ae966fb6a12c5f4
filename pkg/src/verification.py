"""Property battery behind the verify command"""

import os
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence

from dotenv import load_dotenv

from src.errors import ConfigurationError, ConstructionError, DomainError, LatticeLocError, VerificationError
from src.functionals import (
    SECTORS, Functional, automorphism_act, conjugate_swap, evaluate_polynomial_at, pair_zero,
    project_sector, supersymmetry_Q, sum_over,
)
from src.lattice import (
    Automorphism, CoordinatePatch, MultiIndex, Point, UnitVector, hyperoctahedral_group, redundancy_identity_check,
)
from src.loc import LocContext, Loc_graded, build_B, loc_X, loc_XY, pi_perp_check
from src.logger import setup_logger
from src.monomials import (
    FieldPolynomial, automorphism_theta, forward_sequences, sigma_act, sigma_group,
)
from src.sampling import (
    central_points, random_automorphism, random_functional, random_graded, random_integer_function,
    random_subset,
)
from src.testfn import (
    Window, binomial_basis, derivative, eval_binomial, make_test_function, symmetrise_S, taylor,
    taylor_degree, taylor_remainder_bound_check, vandermonde_sides,
)

load_dotenv()
logger = setup_logger()


@dataclass
class CheckResult:
    name: str
    passed: bool
    samples: int = 0
    counterexample: Optional[Dict] = None
    skipped: Optional[str] = None

    def to_json(self) -> Dict:
        out = {"name": self.name, "passed": self.passed, "samples": self.samples}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        if self.skipped:
            out["skipped"] = self.skipped
        return out


class _Skip(Exception):
    pass


class _Failed(Exception):
    def __init__(self, counterexample: Dict):
        self.counterexample = counterexample
        super().__init__(str(counterexample))


def _fail_if(condition: bool, **counterexample):
    if condition:
        raise _Failed(counterexample)


class VerificationSuite:
    """Runs every identity that applies to one configuration.

    Each check draws from its own generator seeded by (seed, check name),
    so adding or skipping a check never changes another check's samples.
    """

    def __init__(self, context_factory: Callable[[], LocContext], seed: int, samples: Optional[int] = None,
                 X: Optional[Sequence[Point]] = None, check_samples: Optional[Mapping[str, int]] = None):
        """
        Initialize the suite

        Args:
            context_factory: Builds the LocContext (construction errors become a failed check)
            seed: Seed for every random draw
            samples: Random samples per check (LATTICE_LOC_SAMPLES by default)
            X: Candidate points for random localisation sets
            check_samples: Per-check sample counts overriding samples
        """
        self.context_factory = context_factory
        self.seed = seed
        self.default_samples = samples if samples is not None else int(os.getenv('LATTICE_LOC_SAMPLES', '20'))
        self.samples = self.default_samples
        self.check_samples = dict(check_samples or {})
        self.X = list(X or [])
        self.ctx: Optional[LocContext] = None
        self._image_contexts: Dict[CoordinatePatch, LocContext] = {}

    def rng(self, name: str) -> random.Random:
        return random.Random(f"{self.seed}:{name}")

    def run(self, only: Optional[Iterable[str]] = None) -> List[CheckResult]:
        """
        Build the context, then run every check (or just those named in only)

        Returns:
            The p_hat_table result followed by one result per check run
        """
        checks = self.checks()
        wanted = list(checks) if only is None else list(only)
        unknown = sorted((set(wanted) | set(self.check_samples)) - set(checks))
        if unknown:
            raise ConfigurationError(f"unknown verify check {unknown[0]!r}")
        results = [self.check_p_hat_table()]
        if self.ctx is None:
            return results
        for name in wanted:
            results.append(self._run_one(name, checks[name]))
        failed = [r.name for r in results if not r.passed]
        logger.info(f"verification finished: {len(results) - len(failed)}/{len(results)} checks passed")
        return results

    def checks(self) -> Dict[str, Callable[[random.Random], int]]:
        return {
            "dual_duality": self.check_duality,
            "binomial_kronecker": self.check_binomial_kronecker,
            "span_invariance": self.check_span_invariance,
            "b_triangular": self.check_b_triangular,
            "defining_property": self.check_defining_property,
            "composition": self.check_composition,
            "additivity": self.check_additivity,
            "partition": self.check_partition,
            "base_point_independence": self.check_base_point_independence,
            "covariance": self.check_covariance,
            "symmetry_inheritance": self.check_symmetry_inheritance,
            "graded": self.check_graded,
            "supersymmetry": self.check_supersymmetry,
            "conjugate_swap": self.check_conjugate_swap,
            "taylor_properties": self.check_taylor_properties,
            "taylor_dual_pairing": self.check_taylor_dual_pairing,
            "remainder_bound": self.check_remainder_bound,
            "vandermonde": self.check_vandermonde,
            "redundancy": self.check_redundancy,
        }

    def _run_one(self, name: str, check: Callable[[random.Random], int]) -> CheckResult:
        try:
            self.samples = self.check_samples.get(name, self.default_samples)
            count = check(self.rng(name))
        except _Failed as failure:
            logger.error(f"check {name} failed: {failure.counterexample}")
            return CheckResult(name, False, counterexample=failure.counterexample)
        except _Skip as skip:
            logger.info(f"check {name} skipped: {skip}")
            return CheckResult(name, True, skipped=str(skip))
        except LatticeLocError as e:
            logger.error(f"check {name} raised {type(e).__name__}: {e}")
            payload = {"error": type(e).__name__, "message": str(e)}
            if isinstance(e, VerificationError):
                payload.update(e.counterexample)
            return CheckResult(name, False, counterexample=payload)
        logger.info(f"check {name}: {count} samples passed")
        return CheckResult(name, True, samples=count)

    # --- construction ---

    def check_p_hat_table(self) -> CheckResult:
        try:
            self.ctx = self.context_factory()
        except ConstructionError as e:
            logger.error(f"P-hat table rejected: {e}")
            return CheckResult("p_hat_table", False, counterexample={
                "condition": e.condition, "monomial": e.monomial, "detail": e.detail,
            })
        return CheckResult("p_hat_table", True, samples=len(self.ctx.basis))

    # --- shared helpers ---

    @property
    def anchor(self) -> Point:
        return self.ctx.patch.anchor

    def candidates(self) -> List[Point]:
        """Points whose stencil hull stays inside the patch"""
        if self.X:
            return sorted(self.X)
        patch = self.ctx.patch
        free = min(patch.radii) - self.ctx.p_hat.max_reach
        if free < 0:
            raise _Skip("patch too small for the representative stencils")
        return central_points(patch, min(free, 1))

    def random_F(self, rng: random.Random, points: Sequence[Point]) -> Functional:
        return random_functional(rng, self.ctx.species, points, terms=4, max_degree=self.max_degree())

    def max_degree(self) -> int:
        dims = [c.dimension for c in self.ctx.species.components]
        return max(1, min(4, int(self.ctx.d_plus / min(dims)) + 1))

    def polynomial_json(self, P: FieldPolynomial) -> List[Dict]:
        return P.to_json(self.ctx.species)

    def functional_json(self, F: Functional) -> List[Dict]:
        return F.to_json(self.ctx.species)

    def image_context(self, E: Automorphism) -> LocContext:
        patch = self.ctx.patch.image(E)
        if patch not in self._image_contexts:
            ctx = self.ctx
            self._image_contexts[patch] = LocContext(ctx.species, ctx.d_plus, patch, ctx.strategy,
                                                     overrides=ctx.overrides, verify=False)
        return self._image_contexts[patch]

    # --- dual bases and the representative table ---

    def check_duality(self, rng: random.Random) -> int:
        ctx, sp = self.ctx, self.ctx.species
        a = self.anchor
        count = 0
        for m in ctx.basis:
            M = evaluate_polynomial_at(FieldPolynomial.monomial(m), a, sp, ctx.geometry)
            for m2 in ctx.basis:
                if m.components != m2.components:
                    continue
                value = pair_zero(M, ctx.dual(m2, a), ctx.patch)
                _fail_if(value != (1 if m == m2 else 0), monomial=m.to_json(sp), dual=m2.to_json(sp),
                         pairing=str(value))
                count += 1
        return count

    def check_binomial_kronecker(self, rng: random.Random) -> int:
        ctx, sp = self.ctx, self.ctx.species
        z = (0,) * sp.d
        signatures = sorted({m.components for m in ctx.basis if m.degree <= 2})
        count = 0
        for signature in signatures:
            keys = forward_sequences(signature, sp, ctx.d_plus)
            base = (z,) * len(signature)
            for m2 in keys:
                b = binomial_basis(m2, z, sp)
                for m in keys:
                    value = derivative(b, m.alphas, base, strict=False)
                    _fail_if(value != (1 if m == m2 else 0), derivative=m.to_json(sp), basis=m2.to_json(sp),
                             value=str(value))
                    count += 1
        return count

    def check_span_invariance(self, rng: random.Random) -> int:
        ctx, sp = self.ctx, self.ctx.species
        group = sigma_group(sp.d)
        count = 0
        for _ in range(self.samples):
            theta = rng.choice(group)
            m = rng.choice(ctx.basis)
            image = sigma_act(theta, ctx.p_hat[m], sp)
            _fail_if(not ctx.p_hat.span_contains(image), monomial=m.to_json(sp),
                     theta={"perm": list(theta.perm), "flips": list(theta.flips)})
            count += 1
        return count

    def check_b_triangular(self, rng: random.Random) -> int:
        points = self.candidates()
        for _ in range(min(self.samples, 5)):
            build_B(self.ctx, random_subset(rng, points, 4))
        return min(self.samples, 5)

    # --- loc operator identities ---

    def check_defining_property(self, rng: random.Random) -> int:
        ctx = self.ctx
        points = self.candidates()
        patch_points = list(ctx.patch.points())
        for _ in range(self.samples):
            X = random_subset(rng, points, 4)
            F = self.random_F(rng, X)
            result = loc_X(F, ctx, X)
            bases = rng.sample(patch_points, min(3, len(patch_points))) + [result.base_point]
            failures = pi_perp_check(F - result.functional, ctx, bases)
            _fail_if(bool(failures), X=[list(x) for x in X], F=self.functional_json(F), failure=failures[:1])
        return self.samples

    def check_composition(self, rng: random.Random) -> int:
        ctx = self.ctx
        points = self.candidates()
        for _ in range(self.samples):
            X = random_subset(rng, points, 3)
            X2 = random_subset(rng, points, 3)
            F = self.random_F(rng, sorted(set(X) | set(X2)))
            inner = loc_X(F, ctx, X2).functional
            lhs = loc_X(inner, ctx, X).functional
            rhs = loc_X(F, ctx, X).functional
            _fail_if(lhs != rhs, X=[list(x) for x in X], X_prime=[list(x) for x in X2],
                     F=self.functional_json(F))
            idempotent = loc_X(F - rhs, ctx, X).functional
            _fail_if(not idempotent.is_zero(), X=[list(x) for x in X], F=self.functional_json(F),
                     residue=self.functional_json(idempotent))
        return self.samples

    def check_additivity(self, rng: random.Random) -> int:
        ctx, sp, geometry = self.ctx, self.ctx.species, self.ctx.geometry
        points = self.candidates()
        for _ in range(self.samples):
            X = random_subset(rng, points, 3)
            x0 = X[0]
            F0 = self.random_F(rng, [x0])
            total = Functional()
            for x in X:
                shift = Automorphism.translate(geometry, geometry.separation(x0, x))
                total = total + automorphism_act(shift, F0, sp)
            P = loc_X(F0, ctx, [x0]).polynomial
            lhs = loc_X(total, ctx, X).functional
            rhs = sum_over(P, X, sp, geometry, ctx.patch)
            _fail_if(lhs != rhs, X=[list(x) for x in X], F0=self.functional_json(F0))
        return self.samples

    def check_partition(self, rng: random.Random) -> int:
        ctx = self.ctx
        points = self.candidates()
        for _ in range(self.samples):
            X = random_subset(rng, points, 4)
            F = self.random_F(rng, X)
            cut = rng.randint(0, len(X))
            shuffled = list(X)
            rng.shuffle(shuffled)
            X1, X2 = shuffled[:cut], shuffled[cut:]
            lhs = loc_XY(F, ctx, X, X1) + loc_XY(F, ctx, X, X2)
            _fail_if(lhs != loc_X(F, ctx, X).functional, X1=[list(x) for x in X1], X2=[list(x) for x in X2],
                     F=self.functional_json(F))
        return self.samples

    def check_base_point_independence(self, rng: random.Random) -> int:
        ctx = self.ctx
        points = self.candidates()
        for _ in range(self.samples):
            X = random_subset(rng, points, 3)
            F = self.random_F(rng, X)
            a1, a2 = rng.choice(X), rng.choice(X)
            first = loc_X(F, ctx, X, a1).polynomial
            second = loc_X(F, ctx, X, a2).polynomial
            _fail_if(first != second, X=[list(x) for x in X], base_points=[list(a1), list(a2)],
                     F=self.functional_json(F))
        return self.samples

    def check_covariance(self, rng: random.Random) -> int:
        ctx, sp, geometry = self.ctx, self.ctx.species, self.ctx.geometry
        points = self.candidates()
        for _ in range(self.samples):
            E = random_automorphism(rng, geometry, 1, self.anchor)
            X = random_subset(rng, points, 3)
            F = self.random_F(rng, X)
            lhs = automorphism_act(E, loc_X(F, ctx, X).functional, sp)
            image_X = [E.apply(x) for x in X]
            rhs = loc_X(automorphism_act(E, F, sp), self.image_context(E), image_X).functional
            _fail_if(lhs != rhs, X=[list(x) for x in X], F=self.functional_json(F),
                     rotation={"perm": list(E.rotation.perm), "signs": list(E.rotation.signs)},
                     translation=list(E.translation))
        return self.samples

    def check_symmetry_inheritance(self, rng: random.Random) -> int:
        ctx, sp, geometry = self.ctx, self.ctx.species, self.ctx.geometry
        a = self.anchor
        group = hyperoctahedral_group(sp.d)
        count = max(1, self.samples // 4)
        for _ in range(count):
            F0 = self.random_F(rng, [a])
            F = Functional()
            for R in group:
                F = F + automorphism_act(Automorphism.rotate(geometry, R, a), F0, sp)
            P = loc_X(F, ctx, [a]).polynomial
            for R in group:
                moved = sigma_act(automorphism_theta(R), P, sp)
                _fail_if(moved != P, F0=self.functional_json(F0),
                         rotation={"perm": list(R.perm), "signs": list(R.signs)},
                         polynomial=self.polynomial_json(P))
        return count

    def check_graded(self, rng: random.Random) -> int:
        ctx, sp = self.ctx, self.ctx.species
        if 'a' not in ctx.observables or 'b' not in ctx.observables:
            raise _Skip("no observable points configured")
        points = set(self.candidates())
        for x in ctx.observables.values():
            try:
                ctx.check_hull([x])
            except DomainError:
                continue
            points.add(x)
        points = sorted(points)
        for _ in range(self.samples):
            X = random_subset(rng, points, 4)
            F = random_graded(rng, sp, X, terms=2, max_degree=self.max_degree())
            full = Loc_graded(F, ctx, X)
            for sector in SECTORS:
                lhs = Loc_graded(project_sector(F, sector), ctx, X)
                _fail_if(lhs != project_sector(full, sector), sector=sector, X=[list(x) for x in X],
                         F=F.to_json(sp))
            X2 = random_subset(rng, X, len(X))
            _fail_if(Loc_graded(full, ctx, X2) != Loc_graded(F, ctx, X2), X=[list(x) for x in X],
                     X_prime=[list(x) for x in X2], F=F.to_json(sp))
        return self.samples

    def check_supersymmetry(self, rng: random.Random) -> int:
        ctx, sp = self.ctx, self.ctx.species
        if sp.supersymmetry is None:
            raise _Skip("no supersymmetric quartet declared")
        return self._commutes_with(rng, lambda F: supersymmetry_Q(F, sp))

    def check_conjugate_swap(self, rng: random.Random) -> int:
        sp = self.ctx.species
        if not sp.conjugate_pairs:
            raise _Skip("no conjugate pairs declared")
        return self._commutes_with(rng, lambda F: conjugate_swap(F, sp))

    def _commutes_with(self, rng: random.Random, op: Callable[[Functional], Functional]) -> int:
        ctx = self.ctx
        points = self.candidates()
        for _ in range(self.samples):
            X = random_subset(rng, points, 3)
            F = self.random_F(rng, X)
            lhs = op(loc_X(F, ctx, X).functional)
            rhs = loc_X(op(F), ctx, X).functional
            _fail_if(lhs != rhs, X=[list(x) for x in X], F=self.functional_json(F))
        return self.samples

    # --- lattice Taylor machinery ---

    def taylor_signatures(self) -> List[tuple]:
        ctx, sp = self.ctx, self.ctx.species
        out = []
        for m in ctx.basis:
            if 1 <= m.degree <= 2 and m.components not in out:
                if 0 <= taylor_degree(m.components, sp, ctx.d_plus) <= 3:
                    out.append(m.components)
        if not out:
            raise _Skip("no signature with a Taylor degree between 0 and 3")
        return out

    def check_taylor_properties(self, rng: random.Random) -> int:
        ctx, sp = self.ctx, self.ctx.species
        d = sp.d
        count = 0
        for signature in self.taylor_signatures():
            s = taylor_degree(signature, sp, ctx.d_plus)
            a = (0,) * d
            window = Window(a, tuple(s + 1 for _ in range(d)))
            keys = forward_sequences(signature, sp, ctx.d_plus)
            for _ in range(max(1, self.samples // 4)):
                g = random_integer_function(rng.getrandbits(32), signature, sp)
                tay = taylor(g, a, sp, ctx.d_plus)
                base = (a,) * len(signature)
                for m in keys:
                    residue = derivative(g - tay, m.alphas, base)
                    _fail_if(residue != 0, property="derivatives match at a", monomial=m.to_json(sp),
                             residue=str(residue))
                twice = taylor(tay, a, sp, ctx.d_plus)
                sym_first = taylor(symmetrise_S(g), a, sp, ctx.d_plus)
                sym_last = symmetrise_S(tay)
                coefficients = [(m, rng.randint(-3, 3)) for m in keys]
                in_pi = make_test_function(
                    signature, sp, lambda z, cs=coefficients: Fraction(sum(c * eval_binomial(m, a, z) for m, c in cs)),
                )
                in_pi_taylor = taylor(in_pi, a, sp, ctx.d_plus)
                for z in window.sequences(len(signature)):
                    _fail_if(twice(z) != tay(z), property="projection", z=[list(p) for p in z])
                    _fail_if(sym_first(z) != sym_last(z), property="commutes with S", z=[list(p) for p in z])
                    _fail_if(in_pi_taylor(z) != in_pi(z), property="fixes Pi", z=[list(p) for p in z])
                count += 1
        return count

    def check_taylor_dual_pairing(self, rng: random.Random) -> int:
        ctx, sp = self.ctx, self.ctx.species
        a = self.anchor
        a_coords = ctx.patch.chart(a)
        count = 0
        for signature in self.taylor_signatures():
            keys = [m for m in ctx.basis if m.components == signature]
            s = taylor_degree(signature, sp, ctx.d_plus)
            window = Window(a_coords, tuple(c + s + 1 for c in a_coords))
            for _ in range(max(1, self.samples // 4)):
                g = random_integer_function(rng.getrandbits(32), signature, sp)
                lhs = taylor(symmetrise_S(g), a_coords, sp, ctx.d_plus)
                weights = []
                for m in keys:
                    M = evaluate_polynomial_at(FieldPolynomial.monomial(m), a, sp, ctx.geometry)
                    weights.append((pair_zero(M, g, ctx.patch), ctx.dual(m, a)))
                for z in window.sequences(len(signature)):
                    rhs = sum((w * f(z) for w, f in weights), Fraction(0))
                    _fail_if(lhs(z) != rhs, z=[list(p) for p in z], lhs=str(lhs(z)), rhs=str(rhs))
                count += 1
        return count

    def check_remainder_bound(self, rng: random.Random) -> int:
        ctx, sp = self.ctx, self.ctx.species
        d = sp.d
        signature = self.taylor_signatures()[0][:1]
        s = taylor_degree(signature, sp, ctx.d_plus)
        if not 0 <= s <= 3:
            raise _Skip(f"single-slot Taylor degree {s} is outside 0..3")
        a = (0,) * d
        count = 0
        for _ in range(self.samples):
            g = random_integer_function(rng.getrandbits(32), signature, sp)
            z = tuple(rng.randint(0, 3) for _ in range(d))
            order = rng.randint(0, s)
            beta = MultiIndex.zero(d)
            for _ in range(order):
                e = UnitVector(rng.randrange(d), rng.choice((1, -1)))
                if e.sign < 0 and z[e.axis] - beta.count(e) - 1 < a[e.axis]:
                    e = -e
                beta = beta.add(e)
            lhs, rhs, ok = taylor_remainder_bound_check(g, a, (z,), (beta,), sp, ctx.d_plus)
            _fail_if(not ok, z=list(z), beta=beta.to_json(), lhs=str(lhs), rhs=str(rhs))
            count += 1
        return count

    def check_vandermonde(self, rng: random.Random) -> int:
        count = 0
        for s in range(5):
            for total in range(11):
                for p in range(1, 4):
                    for y in _compositions(total, p):
                        z_p = y[-1]
                        lhs, rhs = vandermonde_sides(s, y[:-1], z_p)
                        _fail_if(lhs != rhs, s=s, y=list(y[:-1]), z_p=z_p, lhs=lhs, rhs=rhs)
                        count += 1
        return count

    def check_redundancy(self, rng: random.Random) -> int:
        d = self.ctx.species.d
        values: Dict[Point, Fraction] = {}

        def f(x: Point) -> Fraction:
            if x not in values:
                values[x] = Fraction(rng.randint(-9, 9))
            return values[x]

        count = 0
        for _ in range(self.samples):
            x = tuple(rng.randint(-3, 3) for _ in range(d))
            e = UnitVector(rng.randrange(d), rng.choice((1, -1)))
            _fail_if(not redundancy_identity_check(f, e, x), x=list(x), direction=e.label())
            count += 1
        return count


def _compositions(total: int, parts: int):
    """Non-negative integer vectors of the given length summing to total"""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail

