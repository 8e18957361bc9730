"""Two-sided numerical bounds and check reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

PASS = "PASS"
FAIL = "FAIL"
SKIPPED = "SKIPPED"
INFORMATIONAL = "INFORMATIONAL"
STAGNATED = "STAGNATED"

CONVERGED = "converged"
STAGNATED_STATUS = "stagnated"


@dataclass(frozen=True)
class CertifiedInterval:
    """A (lower, upper) pair with the objects that reproduce each side.

    ``exact`` is True when both sides come from closed forms or exhaustive
    enumeration; otherwise ``upper`` may contain a heuristic slack and the
    interval is only as good as the optimizer behind it.
    """

    lower: float
    upper: float
    lower_witness: Any = None
    upper_witness: Any = None
    status: str = CONVERGED
    exact: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError(f"non-finite interval ({lo}, {hi})")
        if lo > hi:
            # round-off between two independent routes
            if lo - hi > 1e-9 * max(1.0, abs(hi)):
                raise ValueError(f"lower bound {lo} exceeds upper bound {hi}")
            lo = hi
        object.__setattr__(self, "lower", max(lo, 0.0))
        object.__setattr__(self, "upper", max(hi, 0.0))

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def rel_width(self) -> float:
        return self.width / self.upper if self.upper > 0 else 0.0

    def contains(self, value: float, rtol: float = 0.0) -> bool:
        slack = rtol * max(abs(value), self.upper)
        return self.lower - slack <= value <= self.upper + slack

    def scaled(self, c: float) -> "CertifiedInterval":
        c = abs(float(c))
        return CertifiedInterval(
            self.lower * c, self.upper * c, self.lower_witness, self.upper_witness,
            self.status, self.exact, dict(self.meta),
        )

    @classmethod
    def point(cls, value: float, **kw) -> "CertifiedInterval":
        return cls(value, value, exact=True, **kw)


@dataclass
class CheckReport:
    """Outcome of one inequality or identity check.

    ``margin`` is rhs_upper - lhs_lower for inequalities (positive is good)
    and the negated relative discrepancy for identities.
    """

    status: str
    lhs: CertifiedInterval | None = None
    rhs: CertifiedInterval | None = None
    margin: float = float("nan")
    detail: str = ""
    witnesses: list = field(default_factory=list)
    values: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status != FAIL


def inequality_status(lhs_lower: float, rhs_upper: float, tol: float) -> tuple[str, float]:
    """PASS unless lhs_lower exceeds rhs_upper by more than tol (relative)."""
    margin = rhs_upper - lhs_lower
    if lhs_lower > rhs_upper + tol * max(1.0, abs(rhs_upper)):
        return FAIL, margin
    return PASS, margin
