"""Verdicts and their JSON / CSV emission."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

SCHEMA_VERSION = 1

PASS = "pass"
FAIL = "fail"
INAPPLICABLE = "inapplicable"
BUG = "bug"
STATUSES = (PASS, FAIL, INAPPLICABLE, BUG)

SURROGATE = "surrogate family"

CSV_COLUMNS = (
    "schema_version",
    "check_id",
    "status",
    "qualifier",
    "horizon",
    "tolerance",
    "failed_hypotheses",
    "quantities",
)


@dataclass
class Verdict:
    """Outcome of one check.

    status is inapplicable when a hypothesis failed, bug when every hypothesis
    passed but the conclusion did not, and pass/fail for plain diagnostics.
    """

    check_id: str
    status: str
    quantities: dict[str, Any] = field(default_factory=dict)
    hypothesis_report: dict[str, bool] = field(default_factory=dict)
    horizon: int | None = None
    tolerance: float | None = None
    assumptions: list[str] = field(default_factory=list)
    qualifier: str = ""
    details: dict[str, Any] = field(default_factory=dict)
    children: list["Verdict"] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @property
    def label(self) -> str:
        return f"{self.status} ({self.qualifier})" if self.qualifier else self.status

    def failed_hypotheses(self) -> list[str]:
        return [k for k, ok in self.hypothesis_report.items() if not ok]

    def child(self, check_id: str) -> "Verdict":
        for c in self.children:
            if c.check_id == check_id:
                return c
        raise KeyError(check_id)

    def walk(self) -> Iterable["Verdict"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def to_dict(self, details: bool = True) -> dict:
        doc: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "check_id": self.check_id,
            "status": self.status,
            "qualifier": self.qualifier,
            "quantities": dict(self.quantities),
            "hypothesis_report": dict(self.hypothesis_report),
            "horizon": self.horizon,
            "tolerance": self.tolerance,
            "assumptions": list(self.assumptions),
        }
        if details and self.details:
            doc["details"] = dict(self.details)
        if self.children:
            doc["children"] = [c.to_dict(details) for c in self.children]
        return doc


def hypothesis_status(hyps: dict[str, bool], conclusion: bool) -> str:
    """Engine status rule: inapplicable on a failed hypothesis, else pass or bug."""
    if not all(hyps.values()):
        return INAPPLICABLE
    return PASS if conclusion else BUG


def combine_status(children: Iterable[Verdict]) -> str:
    sts = [c.status for c in children]
    for s in (BUG, FAIL):
        if s in sts:
            return s
    if PASS in sts:
        return PASS
    return INAPPLICABLE


# ---------------------------------------------------------------------------
# Number formatting and JSON


def fmt_number(x) -> str:
    """17 significant digits; infinities as the strings inf / -inf."""
    v = float(x)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def _json(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            out.append(fmt_number(v))
        else:
            out.append(f'"{fmt_number(v)}"')
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            _json(str(k), out)
            out.append(":")
            _json(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _json(v, out)
        out.append("]")
    elif hasattr(obj, "to_dict"):
        _json(obj.to_dict(), out)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON text with 17-digit numbers and string infinities."""
    out: list[str] = []
    _json(obj, out)
    return "".join(out) + "\n"


# ---------------------------------------------------------------------------
# CSV


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_number(v)
    return str(v)


def verdict_rows(verdicts: Iterable[Verdict]) -> list[list[str]]:
    rows = []
    for top in verdicts:
        for v in top.walk():
            qs = ";".join(f"{k}={_cell(x)}" for k, x in v.quantities.items() if not isinstance(x, (list, dict, tuple, np.ndarray)))
            rows.append([
                str(SCHEMA_VERSION),
                v.check_id,
                v.status,
                v.qualifier,
                _cell(v.horizon),
                _cell(v.tolerance),
                ";".join(v.failed_hypotheses()),
                qs,
            ])
    return rows


def to_csv(header: Iterable[str], rows: Iterable[Iterable[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for r in rows:
        w.writerow([_cell(x) for x in r])
    return buf.getvalue()


def verdicts_csv(verdicts: Iterable[Verdict]) -> str:
    return to_csv(CSV_COLUMNS, verdict_rows(verdicts))
