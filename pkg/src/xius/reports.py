"""Check records, reports and their JSON / CSV emission.

Exact values are stored as strings ("p/q"); the CSV carries a decimal
approximation next to the exact column.  Reports contain no timestamps, so a
fixed configuration always produces identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import __version__
from .params import FinVec, frac_str, parse_frac

SCHEMA_VERSION = 1
STATUSES = ("pass", "fail", "inconclusive")

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3


def exact(value):
    """Recursively turn Fractions (and vectors) into JSON-safe exact values."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, Fraction):
        return frac_str(value)
    if isinstance(value, FinVec):
        return value.to_json()
    if isinstance(value, dict):
        return {str(k): exact(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value, key=repr) if isinstance(value, (set, frozenset)) else value
        return [exact(v) for v in items]
    if isinstance(value, (int, float, str)):
        return value
    if hasattr(value, "to_json"):
        return value.to_json()
    return repr(value)


def decimal_string(value, digits: int = 15) -> str:
    """Decimal approximation of an exact rational (or pass-through text)."""
    if isinstance(value, str):
        try:
            value = parse_frac(value)
        except (ValueError, ZeroDivisionError):
            return ""
    if isinstance(value, bool) or not isinstance(value, (int, Fraction)):
        return ""
    value = Fraction(value)
    with localcontext() as ctx:
        ctx.prec = digits
        return str(Decimal(value.numerator) / Decimal(value.denominator))


@dataclass
class CheckRecord:
    claim: str
    anchor: str                      # which result the check exercises, in words
    status: str
    values: dict = field(default_factory=dict)
    slack: Optional[Fraction] = None
    reason: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.status == "inconclusive" and not self.reason:
            raise ValueError(f"inconclusive check {self.claim!r} needs a reason")

    def to_json(self) -> dict:
        return {"claim": self.claim, "anchor": self.anchor, "status": self.status,
                "values": exact(self.values), "slack": exact(self.slack), "reason": self.reason}

    @staticmethod
    def from_json(data: dict) -> "CheckRecord":
        slack = data.get("slack")
        return CheckRecord(data["claim"], data["anchor"], data["status"], data.get("values", {}),
                           parse_frac(slack) if slack is not None else None, data.get("reason", ""))


@dataclass
class Report:
    suite: str
    config: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    version: str = __version__

    def add(self, claim: str, anchor: str, status: str, values: Optional[dict] = None,
            slack: Optional[Fraction] = None, reason: str = "") -> CheckRecord:
        rec = CheckRecord(claim, anchor, status, values or {}, slack, reason)
        self.records.append(rec)
        return rec

    def extend(self, other: "Report"):
        self.records.extend(other.records)

    def counts(self) -> dict:
        out = {s: 0 for s in STATUSES}
        for r in self.records:
            out[r.status] += 1
        return out

    @property
    def status(self) -> str:
        c = self.counts()
        if c["fail"]:
            return "fail"
        return "inconclusive" if c["inconclusive"] else "pass"

    @property
    def exit_code(self) -> int:
        return {"pass": EXIT_PASS, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}[self.status]

    def to_json(self) -> dict:
        return {"schema": SCHEMA_VERSION, "tool_version": self.version, "suite": self.suite,
                "config": exact(self.config), "status": self.status, "counts": self.counts(),
                "records": [r.to_json() for r in self.records]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    @staticmethod
    def from_json(data: dict) -> "Report":
        if data.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        return Report(data["suite"], data.get("config", {}),
                      [CheckRecord.from_json(r) for r in data.get("records", [])], data.get("tool_version", ""))

    def to_csv(self) -> str:
        """One row per recorded scalar value: exact column plus a decimal approximation."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["claim", "anchor", "status", "quantity", "exact", "decimal_approx", "reason"])
        for r in self.records:
            rows = list(_flatten(exact(r.values)))
            if r.slack is not None:
                rows.append(("slack", frac_str(r.slack)))
            if not rows:
                rows = [("", "")]
            for name, value in rows:
                w.writerow([r.claim, r.anchor, r.status, name, value, decimal_string(value), r.reason])
        return buf.getvalue()


def _flatten(data, prefix: str = ""):
    if isinstance(data, dict):
        for k in sorted(data):
            yield from _flatten(data[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(data, list) and not data:
        yield prefix, "[]"
    elif isinstance(data, list) and all(not isinstance(v, (dict, list)) for v in data) and len(data) <= 8:
        for i, v in enumerate(data):
            yield f"{prefix}[{i}]", "" if v is None else str(v)
    elif isinstance(data, list):
        yield prefix, json.dumps(data, sort_keys=True)
    else:
        yield prefix, "" if data is None else str(data)


def emit(report: Report, fmt: str, out: Optional[Path] = None) -> str:
    """Serialize ``report``; writes to ``out`` when given and returns the text."""
    if fmt == "json":
        text = report.dumps()
    elif fmt == "csv":
        text = report.to_csv()
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
    return text


def load_report(path) -> Report:
    return Report.from_json(json.loads(Path(path).read_text()))
