"""Deterministic report assembly and rendering as JSON, CSV or text"""

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

from src.errors import ConfigurationError
from src.logger import setup_logger
from src.monomials import INFINITY, FieldPolynomial, SpeciesTable
from src.functionals import Functional

logger = setup_logger()

FORMATS = ('json', 'csv', 'text')


def rational_json(x) -> Any:
    if x == INFINITY:
        return "inf"
    x = Fraction(x)
    return [x.numerator, x.denominator]


def complex_json(re: Fraction, im: Fraction) -> Any:
    if im == 0:
        return rational_json(re)
    return {"re": rational_json(re), "im": rational_json(im)}


def complex_polynomial_json(re: FieldPolynomial, im: FieldPolynomial, species: SpeciesTable) -> List[Dict]:
    """Canonical JSON of re + i·im, one entry per monomial in key order"""
    keys = sorted(set(re.keys()) | set(im.keys()))
    return [
        {"monomial": k.to_json(species), "coeff": complex_json(re.coefficient(k), im.coefficient(k))}
        for k in keys
    ]


def complex_functional_json(re: Functional, im: Functional, species: SpeciesTable) -> List[Dict]:
    keys = sorted(set(re.terms) | set(im.terms))
    return [
        {
            "factors": [list(x) + [species.name(c)] for c, x in key],
            "coeff": complex_json(re.coefficient(key), im.coefficient(key)),
        }
        for key in keys
    ]


@dataclass
class Report:
    """Command echo, results and verification outcomes.

    The table is the flat view used by CSV and text output.
    """

    command: str
    scenario: Dict[str, Any]
    results: Dict[str, Any] = field(default_factory=dict)
    checks: List[Dict[str, Any]] = field(default_factory=list)
    columns: List[str] = field(default_factory=list)
    rows: List[Sequence[Any]] = field(default_factory=list)
    seed: Optional[int] = None

    @property
    def passed(self) -> bool:
        return all(c.get("passed", False) for c in self.checks)

    def to_json(self) -> Dict[str, Any]:
        out = {
            "command": self.command,
            "scenario": self.scenario,
            "results": self.results,
            "verification": {"passed": self.passed, "checks": self.checks},
        }
        if self.seed is not None:
            out["seed"] = self.seed
        return out


class ReportFormatter:
    """Render reports in one of the supported formats"""

    def render(self, report: Report, fmt: str = 'json') -> str:
        """
        Render a report

        Args:
            report: Report to render
            fmt: 'json', 'csv' or 'text'

        Returns:
            The rendered document, newline-terminated
        """
        if fmt == 'json':
            return self._format_json(report)
        if fmt == 'csv':
            return self._format_csv(report)
        if fmt == 'text':
            return self._format_text(report)
        raise ConfigurationError(f"unknown report format {fmt!r}, use one of {FORMATS}")

    def _format_json(self, report: Report) -> str:
        return json.dumps(report.to_json(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def _format_csv(self, report: Report) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(report.columns)
        for row in report.rows:
            writer.writerow(row)
        return buffer.getvalue()

    def _format_text(self, report: Report) -> str:
        lines = [f"=== {report.command}: {report.scenario.get('name', '')} ==="]
        if report.seed is not None:
            lines.append(f"seed: {report.seed}")
        for row in report.rows:
            lines.append("  " + "  ".join(f"{col}={value}" for col, value in zip(report.columns, row)))
        if report.checks:
            lines.append("")
            lines.append("verification:")
            for check in report.checks:
                status = "PASS" if check.get("passed") else "FAIL"
                note = f" (skipped: {check['skipped']})" if check.get("skipped") else ""
                lines.append(f"  [{status}] {check['name']}{note}")
                if not check.get("passed") and "counterexample" in check:
                    lines.append(f"         {json.dumps(check['counterexample'], sort_keys=True, ensure_ascii=False)}")
        lines.append(f"result: {'ok' if report.passed else 'FAILED'}")
        return "\n".join(lines) + "\n"

    def write(self, report: Report, fmt: str, out_path: Optional[str] = None) -> str:
        text = self.render(report, fmt)
        if out_path:
            with open(out_path, 'w', encoding='utf-8') as f:
                f.write(text)
            logger.info(f"report written to {out_path}")
        return text
