"""Structured pass/fail records for verification runs."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

__all__ = ["Check", "VerificationReport", "observed_order"]


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    measured: float
    threshold: float
    passed: bool
    note: str = ""

    def as_dict(self) -> dict:
        d = {
            "suite": self.suite,
            "check": self.name,
            "measured": _json_float(self.measured),
            "threshold": _json_float(self.threshold),
            "passed": bool(self.passed),
        }
        if self.note:
            d["note"] = self.note
        return d


def _json_float(x: float):
    x = float(x)
    return x if math.isfinite(x) else repr(x)


@dataclass
class VerificationReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, suite: str, name: str, measured: float, threshold: float,
            passed: bool | None = None, note: str = "") -> Check:
        """Record a check; by default it passes iff ``measured <= threshold``."""
        measured = float(measured)
        if passed is None:
            passed = math.isfinite(measured) and measured <= threshold
        check = Check(suite, name, measured, float(threshold), bool(passed), note)
        self.checks.append(check)
        return check

    def extend(self, other: "VerificationReport") -> None:
        self.checks.extend(other.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def sorted(self) -> "VerificationReport":
        return VerificationReport(sorted(self.checks, key=lambda c: (c.suite, c.name)))

    def to_json(self) -> str:
        payload = {"overall": self.overall, "checks": [c.as_dict() for c in self.checks]}
        return json.dumps(payload, indent=2, sort_keys=True)

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            mark = "PASS" if c.passed else "FAIL"
            lines.append(f"{mark} [{c.suite}] {c.name}: measured={c.measured:.3e} "
                         f"threshold={c.threshold:.3e}" + (f" ({c.note})" if c.note else ""))
        lines.append(f"overall: {'PASS' if self.overall else 'FAIL'}")
        return "\n".join(lines)


def observed_order(errors, ratio: float = 2.0) -> list[float]:
    """Successive convergence orders ``log(e_k/e_{k+1})/log(ratio)``."""
    orders = []
    for coarse, fine in zip(errors[:-1], errors[1:]):
        if coarse <= 0 or fine <= 0:
            orders.append(math.inf if fine <= 0 < coarse else math.nan)
        else:
            orders.append(math.log(coarse / fine) / math.log(ratio))
    return orders
