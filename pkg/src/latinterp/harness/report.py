"""CSV report and summary table."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter, defaultdict

from .. import intervals as iv
from .suites import SUITE_ORDER, CheckRecord

COLUMNS = ("suite", "instance", "theta", "lhs_lo", "lhs_hi", "rhs_lo", "rhs_hi", "margin", "status", "seconds")
STATUSES = (iv.PASS, iv.FAIL, iv.SKIPPED, iv.INFORMATIONAL, iv.STAGNATED)


def _num(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(float(x), ".10g")


def csv_text(records: list[CheckRecord], timings: bool = False) -> str:
    """The report as CSV text.

    ``seconds`` is left empty unless ``timings`` is set, so that two runs with
    the same config and seed produce identical files.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in records:
        w.writerow([r.suite, r.instance, "" if r.theta is None else format(r.theta, "g"),
                    _num(r.lhs_lo), _num(r.lhs_hi), _num(r.rhs_lo), _num(r.rhs_hi), _num(r.margin),
                    r.status, format(r.seconds, ".3f") if timings else ""])
    return buf.getvalue()


def write_csv(records: list[CheckRecord], path, timings: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(records, timings))


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summary_table(records: list[CheckRecord]) -> str:
    """Per-suite status counts, smallest margin and wall time."""
    counts: dict[str, Counter] = defaultdict(Counter)
    worst: dict[str, float] = {}
    secs: dict[str, float] = defaultdict(float)
    for r in records:
        counts[r.suite][r.status] += 1
        secs[r.suite] += r.seconds
        if not math.isnan(r.margin) and r.status in (iv.PASS, iv.FAIL):
            worst[r.suite] = min(worst.get(r.suite, math.inf), r.margin)
    header = ["suite", *STATUSES, "min margin", "seconds"]
    rows = []
    for s in [s for s in SUITE_ORDER if s in counts]:
        m = worst.get(s)
        rows.append([s, *(str(counts[s][k]) for k in STATUSES), "-" if m is None else f"{m:.3g}", f"{secs[s]:.1f}"])
    total = Counter()
    for c in counts.values():
        total.update(c)
    rows.append(["total", *(str(total[k]) for k in STATUSES), "", f"{sum(secs.values()):.1f}"])
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    line = lambda cells: "  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(cells, widths)))
    out = [line(header), line(["-" * w for w in widths])]
    out += [line(r) for r in rows]
    return "\n".join(out)


def exit_code(records: list[CheckRecord], strict: bool = False) -> int:
    statuses = {r.status for r in records}
    if iv.FAIL in statuses:
        return 1
    if strict and statuses - {iv.PASS}:
        return 1
    return 0
