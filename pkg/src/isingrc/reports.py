"""Structured report records and their serialization.

Rationals are written as ``"num/den"`` strings so nothing is rounded on the
way out.  Every record carries ``schema_version``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, TextIO

SCHEMA_VERSION = 1


def frac_str(x: Fraction | int) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_frac(text: str) -> Fraction:
    return Fraction(text)


def jsonable(value: Any) -> Any:
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, Fraction):
        return frac_str(value)
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "item") and callable(value.item):  # numpy scalar
        return value.item()
    return value


def dumps(record: dict) -> str:
    body = {"schema_version": SCHEMA_VERSION, **record}
    return json.dumps(jsonable(body), sort_keys=False, separators=(",", ":"))


def write_jsonl(records: Iterable[dict], out: TextIO) -> None:
    for rec in records:
        out.write(dumps(rec) + "\n")


@dataclass
class Check:
    """One verification outcome: ``lhs`` compared against ``rhs``.

    ``relation`` is ``"=="`` or ``"<="``.  Rational checks are exact; float
    checks carry the tolerance they were judged with.
    """

    check: str
    graph: str
    params: dict
    lhs: Any
    rhs: Any
    relation: str = "=="
    mode: str = "rational"
    tolerance: float | None = None
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if self.mode == "rational":
            if self.relation == "==":
                return self.lhs == self.rhs
            return self.lhs <= self.rhs
        tol = self.tolerance or 0.0
        if self.relation == "==":
            return abs(self.lhs - self.rhs) <= tol
        return self.lhs <= self.rhs + tol

    def to_record(self) -> dict:
        rec = {
            "check": self.check,
            "graph": self.graph,
            "params": self.params,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "relation": self.relation,
            "mode": self.mode,
        }
        if self.mode == "float":
            rec["tolerance"] = self.tolerance
        if self.detail:
            rec["detail"] = self.detail
        rec["pass"] = self.passed
        return rec
