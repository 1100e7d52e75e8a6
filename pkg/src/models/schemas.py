"""
Request/report models and exact-number serialization for command output
"""

from collections import Counter
from fractions import Fraction
from typing import Any, Dict, List, Optional

from mpmath import mp, nstr
from pydantic import BaseModel, Field

from src.services.exactnum import QuadExt
from src.services.kactable import KacLabel

SUBCOMMANDS = (
    "table",
    "singular",
    "diagram",
    "char",
    "kac-structure",
    "kac-dims",
    "intertwiner",
    "fock-image",
    "bpz",
    "constants",
    "fuse",
    "zhu",
    "rigidity",
    "consistency",
    "verify",
)


class Command(BaseModel):
    """A parsed subcommand with its flags"""

    name: str = Field(description="Subcommand name")
    p: Optional[int] = Field(default=None, description="First central charge parameter")
    q: Optional[int] = Field(default=None, description="Second central charge parameter")
    r: Optional[int] = Field(default=None, description="Kac label r")
    s: Optional[int] = Field(default=None, description="Kac label s")
    level: Optional[int] = Field(default=None, description="Grading level cap; falls back to VIRASORO_LEVEL (8)")
    branch: Optional[str] = Field(default=None, description="Intertwiner branch: plus or minus")
    format: str = Field(default="json", description="Output format: json or text")
    precision: int = Field(default=256, description="Binary precision for transcendental constants")
    options: Dict[str, Any] = Field(default_factory=dict, description="Subcommand-specific flags")


class CheckResult(BaseModel):
    """Outcome of one acceptance check"""

    name: str = Field(description="Check name")
    status: str = Field(description="pass or fail")
    expected: str = Field(description="What the check requires")
    actual: str = Field(description="What was observed")
    elapsed: float = Field(description="Wall time in seconds")


class VerifyReport(BaseModel):
    """Acceptance-suite report; passes exactly when every check passes"""

    p: int
    q: int
    level: int
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.status == "pass" for check in self.checks)

    def summary(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "q": self.q,
            "level": self.level,
            "passed": self.passed,
            "checks": [
                {
                    "name": check.name,
                    "status": check.status,
                    "expected": check.expected,
                    "actual": check.actual,
                }
                for check in self.checks
            ],
        }


# =============================================
# EXACT NUMBER SERIALIZATION
# =============================================

def format_fraction(value) -> str:
    """Always "num/den", so "0/1" and "2/1" for integers"""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def parse_fraction(text: str) -> Fraction:
    return Fraction(text)


def format_quad(value: QuadExt) -> Dict[str, Any]:
    return {"a": format_fraction(value.a), "b": format_fraction(value.b), "D": value.d}


def format_label(label: KacLabel) -> Dict[str, int]:
    return {"r": label.r, "s": label.s}


def format_partition(part) -> str:
    """PBW/Heisenberg monomial as "3,1,1"; the empty partition is ""."""
    return ",".join(str(k) for k in part)


def format_coefficients(coeffs, level_order) -> List[Dict[str, Any]]:
    """Coefficient map as a list in basis order, QuadExt or Fraction values"""
    entries = []
    for part in level_order:
        if part in coeffs:
            value = coeffs[part]
            entries.append({
                "monomial": format_partition(part),
                "coefficient": format_quad(value) if isinstance(value, QuadExt) else format_fraction(value),
            })
    return entries


def format_class(cls: Counter) -> List[Dict[str, int]]:
    """Grothendieck class as sorted {r, s, mult} records"""
    return [
        {"r": label.r, "s": label.s, "mult": count}
        for label, count in sorted(cls.items())
        if count
    ]


def format_decimal(value, digits: int) -> str:
    with mp.workdps(digits + 10):
        return nstr(value, digits)
