"""A tiny pass/fail record shared by verification suites and reports."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CheckResult:
    name: str
    tolerance: float
    observed: float
    passed: bool

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.name} tolerance={self.tolerance:.3e} observed={self.observed:.6e}"


def check_leq(name: str, observed: float, tolerance: float) -> CheckResult:
    """Pass when observed <= tolerance."""
    return CheckResult(name, float(tolerance), float(observed), float(observed) <= float(tolerance))
