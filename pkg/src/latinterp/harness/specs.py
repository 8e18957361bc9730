"""Parsing of space descriptors used in instance files.

The grammar mirrors the ``descriptor`` strings the library prints:

    l1^3            weighted-free l_1 on 3 coordinates
    l4/3^2          exponent given as a fraction
    linf^2[w=1,2]   weights
    l2^3(l1^2)      vector-valued: l_2^3 with fibers l_1^2
"""

from __future__ import annotations

import re
from fractions import Fraction

import numpy as np

from ..lattice import LpNorm
from ..spaces import LatticeSpace, NormedSpace, VectorValued

_HEAD = re.compile(r"l(inf|\d+(?:\.\d+)?(?:/\d+)?)\^(\d+)(?:\[w=([^\]]*)\])?")


def parse_exponent(text) -> float:
    if isinstance(text, (int, float)):
        p = float(text)
    else:
        t = str(text).strip()
        p = np.inf if t == "inf" else float(Fraction(t))
    if not p >= 1:
        raise ValueError(f"exponent {text!r} must be >= 1")
    return p


def _split(desc: str):
    m = _HEAD.match(desc)
    if m is None:
        raise ValueError(f"cannot parse space descriptor {desc!r}")
    rest = desc[m.end():]
    inner = None
    if rest:
        if not (rest.startswith("(") and rest.endswith(")")):
            raise ValueError(f"trailing text in descriptor {desc!r}")
        inner = rest[1:-1]
    return m.group(1), int(m.group(2)), m.group(3), inner


def parse_lattice(desc: str) -> LpNorm:
    """A weighted l_p lattice from ``l<p>^<n>[w=...]``."""
    p, n, w, inner = _split(desc.strip())
    if inner is not None:
        raise ValueError(f"{desc!r} is vector-valued, a lattice was expected")
    if n < 1:
        raise ValueError(f"dimension must be positive in {desc!r}")
    weights = None
    if w is not None:
        weights = [float(Fraction(s.strip())) for s in w.split(",")]
        if len(weights) != n or min(weights) <= 0:
            raise ValueError(f"need {n} positive weights in {desc!r}")
    return LpNorm(n, parse_exponent(p), weights)


def parse_space(desc: str, field: str = "complex") -> NormedSpace:
    """A lattice space, or X(E) when the descriptor carries a fiber."""
    desc = desc.strip()
    p, n, w, inner = _split(desc)
    head = desc[: len(desc) - (len(inner) + 2 if inner is not None else 0)]
    X = parse_lattice(head)
    if inner is None:
        return LatticeSpace(X, field)
    return VectorValued(X, parse_space(inner, field))
