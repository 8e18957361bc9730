"""Declared upper bounds for geometric constants.

Numbers that no finite search can certify (type 2 / cotype 2 constants,
2-convexity / 2-concavity constants) enter the checks only through this
registry. Analytic entries come from the objects themselves; user entries are
keyed by descriptor string and must carry a provenance text. User entries
flagged ``heuristic`` are usable for reporting but never for PASS/FAIL.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

KINDS = {
    "T2_upper",
    "C2_upper",
    "M2_concavity_upper",
    "M2_convexity_upper",
}


@dataclass(frozen=True)
class Entry:
    value: float
    provenance: str
    heuristic: bool = False


@dataclass
class ConstantsRegistry:
    """Lookup of constant upper bounds by object and kind.

    ``kind`` is one of :data:`KINDS`, or ``("convexity", r)`` /
    ``("concavity", r)`` for general exponents (lattices only).
    """

    overrides: dict[tuple[str, Any], Entry] = field(default_factory=dict)

    def add(self, descriptor: str, kind, value: float, provenance: str, heuristic: bool = False):
        if not provenance:
            raise ValueError("registry entries need a provenance string")
        if isinstance(kind, str) and kind not in KINDS:
            raise ValueError(f"unknown constant kind {kind!r}")
        if value < 1.0 - 1e-12:
            raise ValueError(f"{kind} bound {value} < 1 is impossible")
        self.overrides[(descriptor, kind)] = Entry(float(value), provenance, heuristic)

    def lookup(self, obj, kind) -> Entry | None:
        key = (obj.descriptor, kind)
        if key in self.overrides:
            return self.overrides[key]
        fn = getattr(obj, "analytic_constant", None)
        if fn is None:
            return None
        return fn(kind, self)

    def value(self, obj, kind) -> float | None:
        e = self.lookup(obj, kind)
        return None if e is None else e.value

    # shorthands used throughout the checks
    def T2(self, space) -> Entry | None:
        return self.lookup(space, "T2_upper")

    def C2(self, space) -> Entry | None:
        return self.lookup(space, "C2_upper")

    def M2_concavity(self, lattice) -> Entry | None:
        return self.lookup(lattice, "M2_concavity_upper")

    def M2_convexity(self, lattice) -> Entry | None:
        return self.lookup(lattice, "M2_convexity_upper")

    def copy(self) -> "ConstantsRegistry":
        return ConstantsRegistry(dict(self.overrides))


DEFAULT_REGISTRY = ConstantsRegistry()


def combine(entries, op, provenance: str) -> Entry | None:
    """Apply op to entry values; None if any entry is missing."""
    if any(e is None for e in entries):
        return None
    return Entry(
        float(op(*[e.value for e in entries])),
        provenance,
        heuristic=any(e.heuristic for e in entries),
    )
