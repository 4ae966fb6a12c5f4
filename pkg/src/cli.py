"""Command-line front end: enumerate, loc, verify and contract"""

import argparse
import os
import sys
import time
from typing import Dict, List, Optional, Sequence

from dotenv import load_dotenv

from src.errors import (
    ConfigurationError, ConstructionError, DomainError, PreconditionError, VerificationError,
)
from src.functionals import SECTORS, Functional
from src.lattice import Point
from src.loc import LocContext, Loc_graded, dual_basis_export, loc_X, loc_XY, pi_perp_check, sector_sets
from src.logger import setup_logger
from src.monomials import enumerate_v_plus, minimal_irrelevant_dimension, relevance
from src.norms import contraction_experiment
from src.report import (
    FORMATS, Report, ReportFormatter, complex_functional_json, complex_polynomial_json, rational_json,
)
from src.scenario import Scenario, load_scenario
from src.verification import VerificationSuite

load_dotenv()
logger = setup_logger()

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_CONFIGURATION = 2
EXIT_DOMAIN = 3

SLOPE_TOLERANCE = 0.5


class LocalisationRunner:
    """Runs one command against a loaded scenario"""

    def __init__(self, scenario: Scenario, seed: Optional[int] = None, verify: bool = True):
        """
        Initialize runner

        Args:
            scenario: Validated scenario
            seed: Seed for randomised checks (LATTICE_LOC_SEED by default)
            verify: Attach verification sections to the loc and contract reports
        """
        self.scenario = scenario
        self.seed = seed if seed is not None else int(os.getenv('LATTICE_LOC_SEED', '20240917'))
        self.verify = verify

    def run(self, command: str) -> Report:
        handler = {
            'enumerate': self.cmd_enumerate,
            'loc': self.cmd_loc,
            'verify': self.cmd_verify,
            'contract': self.cmd_contract,
        }.get(command)
        if handler is None:
            raise ConfigurationError(f"unknown command {command!r}")
        started = time.perf_counter()
        report = handler()
        logger.info(f"{command} on {self.scenario.name!r} took {time.perf_counter() - started:.2f}s")
        return report

    def cmd_enumerate(self) -> Report:
        """𝔳₊ with dimensions and the relevant/marginal split"""
        sc = self.scenario
        sp = sc.species
        keys = enumerate_v_plus(sp, sc.d_plus)
        monomials = []
        rows = []
        for key in keys:
            kind = relevance(key, sp, sc.d_plus)
            dim = key.dimension(sp)
            monomials.append({
                "monomial": key.to_json(sp),
                "label": key.label(sp),
                "dimension": rational_json(dim),
                "relevance": kind,
            })
            rows.append([key.label(sp), str(dim), kind])
        results = {
            "d_plus": rational_json(sc.d_plus),
            "count": len(keys),
            "relevant": sum(1 for m in monomials if m["relevance"] == 'relevant'),
            "marginal": sum(1 for m in monomials if m["relevance"] == 'marginal'),
            "minimal_irrelevant_dimension": rational_json(minimal_irrelevant_dimension(sp, sc.d_plus)),
            "monomials": monomials,
        }
        logger.info(f"enumerated {len(keys)} monomials for d_plus={sc.d_plus}")
        return Report('enumerate', sc.raw, results, columns=["monomial", "dimension", "relevance"], rows=rows)

    def cmd_loc(self) -> Report:
        sc = self.scenario
        ctx = sc.build_context(verify=False)
        if sc.graded is not None:
            return self._graded_loc(ctx)
        sp = sc.species
        X = sc.X
        re = loc_X(sc.functional.re, ctx, X)
        im = loc_X(sc.functional.im, ctx, X)
        results = {
            "X": [list(x) for x in X],
            "base_point": list(re.base_point) if re.base_point is not None else None,
            "polynomial": complex_polynomial_json(re.polynomial, im.polynomial, sp),
            "functional": complex_functional_json(re.functional, im.functional, sp),
        }
        if sc.Y is not None:
            results["Y"] = [list(y) for y in sc.Y]
            results["functional_Y"] = complex_functional_json(
                loc_XY(sc.functional.re, ctx, X, sc.Y), loc_XY(sc.functional.im, ctx, X, sc.Y), sp,
            )
        if sc.options.get("export_dual") and X:
            results["dual_basis"] = [
                {"monomial": m.to_json(sp), "polynomial": D.to_json(sp)}
                for m, D in dual_basis_export(ctx, X).items()
            ]
        checks = []
        if self.verify and X:
            residues = [sc.functional.re - re.functional, sc.functional.im - im.functional]
            checks.append(self._defining_property(ctx, residues, re.base_point))
        keys = sorted(set(re.polynomial.keys()) | set(im.polynomial.keys()))
        rows = [
            [key.label(sp), *_coefficient_row(entry["coeff"])]
            for key, entry in zip(keys, results["polynomial"])
        ]
        logger.info(f"loc over {len(X)} points: {len(results['polynomial'])} monomials")
        return Report('loc', sc.raw, results, checks,
                      columns=["monomial", "re_num", "re_den", "im_num", "im_den"], rows=rows)

    def _graded_loc(self, ctx: LocContext) -> Report:
        sc = self.scenario
        sp = sc.species
        X = sc.X
        Y = sc.Y if sc.Y is not None else X
        F_re, F_im = sc.graded_parts()
        out_re = Loc_graded(F_re, ctx, X, Y)
        out_im = Loc_graded(F_im, ctx, X, Y)
        results = {
            "X": [list(x) for x in X],
            "Y": [list(y) for y in Y],
            "graded": {s: complex_functional_json(out_re[s], out_im[s], sp) for s in SECTORS},
        }
        checks = []
        rows = []
        xs = sector_sets(ctx, X)
        for s in SECTORS:
            for entry in results["graded"][s]:
                rows.append([s, _factors_label(entry["factors"]), *_coefficient_row(entry["coeff"])])
            if not self.verify or not xs[s] or (F_re[s].is_zero() and F_im[s].is_zero()):
                continue
            sector_ctx = ctx.sector(s)
            residues = [F_re[s] - loc_X(F_re[s], sector_ctx, xs[s]).functional,
                        F_im[s] - loc_X(F_im[s], sector_ctx, xs[s]).functional]
            check = self._defining_property(sector_ctx, residues, sector_ctx.base_point(xs[s]))
            check["name"] = f"defining_property[{s}]"
            checks.append(check)
        return Report('loc', sc.raw, results, checks,
                      columns=["sector", "factors", "re_num", "re_den", "im_num", "im_den"], rows=rows)

    def _defining_property(self, ctx: LocContext, residues: Sequence[Functional], base_point: Point) -> Dict:
        if self.scenario.options.get("verify_base_points", "patch") == "patch":
            bases = list(ctx.patch.points())
        else:
            bases = [base_point]
        failures: List[Dict] = []
        for residue in residues:
            failures.extend(pi_perp_check(residue, ctx, bases))
        check = {"name": "defining_property", "passed": not failures, "samples": len(bases)}
        if failures:
            check["counterexample"] = failures[0]
            logger.error(f"defining property fails at {len(failures)} pairings")
        return check

    def cmd_verify(self) -> Report:
        sc = self.scenario
        suite = VerificationSuite(
            lambda: sc.build_context(verify=False),
            self.seed,
            samples=sc.options.get("samples"),
            X=sc.X,
            check_samples=sc.options.get("check_samples"),
        )
        results = suite.run()
        checks = [r.to_json() for r in results]
        rows = [[r.name, r.passed, r.samples, r.skipped or ""] for r in results]
        return Report('verify', sc.raw, {"checks_run": len(results)}, checks,
                      columns=["check", "passed", "samples", "skipped"], rows=rows, seed=self.seed)

    def cmd_contract(self) -> Report:
        sc = self.scenario
        if sc.contract is None:
            raise ConfigurationError(f"scenario {sc.name!r} has no 'contract' section")
        c = sc.contract
        outcome = contraction_experiment(
            sc.species, sc.d_plus, c["family"], c["L_values"], c["X"], c["radii"], c["N"], c["A"],
            j=c["j"], p_phi=c["p_phi"], strategy=sc.strategy,
        )
        results = outcome.to_json()
        rows = [
            [r["L"], r["j"], r["ratio"].numerator, r["ratio"].denominator,
             "" if r["log_ratio"] is None else r["log_ratio"]]
            for r in outcome.rows
        ]
        checks = []
        if self.verify:
            check = {"name": "contraction_slope", "passed": True, "samples": len(outcome.rows)}
            if outcome.slope is None:
                check["skipped"] = "fewer than two nonzero ratios"
            elif outcome.slope > outcome.reference_slope + SLOPE_TOLERANCE:
                check["passed"] = False
                check["counterexample"] = {"slope": outcome.slope, "reference_slope": outcome.reference_slope}
            checks.append(check)
        return Report('contract', sc.raw, results, checks,
                      columns=["L", "j", "ratio_num", "ratio_den", "log_ratio"], rows=rows)


def _coefficient_row(coeff) -> List:
    if isinstance(coeff, dict):
        re, im = coeff["re"], coeff["im"]
    else:
        re, im = coeff, [0, 1]
    return [re[0], re[1], im[0], im[1]]


def _factors_label(factors) -> str:
    return " ".join(f"{f[-1]}{list(f[:-1])}" for f in factors) or "1"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lattice-loc",
        description="Exact localisation of lattice field functionals onto local polynomials",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("enumerate", "List the local monomials below the dimension threshold"),
        ("loc", "Localise the scenario functional"),
        ("verify", "Run the property battery"),
        ("contract", "Run the contraction experiment for 1 - loc"),
    ):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--scenario", required=True, help="Path to the scenario JSON file")
        cmd.add_argument("--seed", type=int, default=None, help="Seed for randomised checks")
        cmd.add_argument("--format", choices=FORMATS, default='json', help="Report format")
        cmd.add_argument("--verify", choices=("on", "off"), default="on", help="Attach verification sections")
        cmd.add_argument("--out", default=None, help="Write the report to this path instead of stdout")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the command and map failures to exit codes"""
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        runner = LocalisationRunner(scenario, args.seed, args.verify == "on")
        report = runner.run(args.command)
        text = ReportFormatter().write(report, args.format, args.out)
    except ConfigurationError as e:
        logger.error(f"configuration error: {e}", exc_info=True)
        return EXIT_CONFIGURATION
    except (DomainError, PreconditionError) as e:
        logger.error(f"domain error: {e}", exc_info=True)
        return EXIT_DOMAIN
    except (ConstructionError, VerificationError) as e:
        logger.error(f"verification error: {e}", exc_info=True)
        return EXIT_VERIFICATION
    if not args.out:
        sys.stdout.write(text)
    if not report.passed:
        logger.error(f"{args.command}: verification failed")
        return EXIT_VERIFICATION
    logger.info(f"{args.command}: ok")
    return EXIT_OK
