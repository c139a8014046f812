"""VerificationRecord and its JSON-lines / CSV serialisation."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

RECORD_SCHEMA = "qlslab.record/1"
_REQUIRED = {"schema": str, "claim_id": str, "inputs": dict, "lhs": (float, int, type(None)),
             "rhs": (float, int, type(None)), "ratio": (float, int, type(None)),
             "passed": (bool, type(None)), "paper_ref": str}


class SchemaError(ValueError):
    pass


def _finite(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, complex):
        return [_finite(value.real), _finite(value.imag)]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        value = value.item()
    if isinstance(value, float):
        return _finite(value)
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    return str(value)


@dataclass(frozen=True)
class VerificationRecord:
    """One checked claim.

    ``passed`` is ``None`` for inconclusive checks (degenerate inputs, or a
    trend that needs more points than supplied).
    """

    claim_id: str
    inputs: dict
    lhs: float
    rhs: float
    passed: Optional[bool]
    statement: str = ""
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.passed is not None:
            object.__setattr__(self, "passed", bool(self.passed))

    @property
    def ratio(self) -> Optional[float]:
        if self.rhs is None or self.lhs is None:
            return None
        if self.rhs > 0 and math.isfinite(self.rhs):
            return self.lhs / self.rhs
        return None

    @property
    def status(self) -> str:
        if self.passed is None:
            return "inconclusive"
        return "passed" if self.passed else "failed"

    def to_dict(self) -> dict:
        return {
            "schema": RECORD_SCHEMA,
            "claim_id": self.claim_id,
            "inputs": _jsonable(self.inputs),
            "lhs": _finite(self.lhs),
            "rhs": _finite(self.rhs),
            "ratio": _finite(self.ratio),
            "passed": self.passed,
            "paper_ref": self.statement,
            "notes": _jsonable(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "VerificationRecord":
        validate_record_dict(data)
        lhs = data["lhs"]
        rhs = data["rhs"]
        return cls(claim_id=data["claim_id"], inputs=data["inputs"],
                   lhs=float("nan") if lhs is None else lhs,
                   rhs=float("nan") if rhs is None else rhs,
                   passed=data["passed"], statement=data["paper_ref"],
                   notes=data.get("notes", {}))

    def summary_line(self) -> str:
        ratio = self.ratio
        ratio_s = "n/a" if ratio is None else f"{ratio:.6g}"
        return f"[{self.status.upper():>12}] {self.claim_id}: lhs={self.lhs:.6g} rhs={self.rhs:.6g} ratio={ratio_s}"


def validate_record_dict(data: Any) -> None:
    if not isinstance(data, dict):
        raise SchemaError("record must be a JSON object")
    for key, types in _REQUIRED.items():
        if key not in data:
            raise SchemaError(f"record missing key {key!r}")
        if not isinstance(data[key], types):
            raise SchemaError(f"record key {key!r} has wrong type {type(data[key]).__name__}")
    if data["schema"] != RECORD_SCHEMA:
        raise SchemaError(f"unsupported record schema {data['schema']!r}")


def dumps_jsonl(records: Iterable[VerificationRecord]) -> str:
    return "".join(r.to_json() + "\n" for r in records)


def loads_jsonl(text: str) -> list[VerificationRecord]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"line {lineno}: {exc}") from exc
        out.append(VerificationRecord.from_dict(data))
    return out


def rows_to_csv(rows: list[dict], columns: Optional[list[str]] = None) -> str:
    if not rows:
        return ""
    columns = columns or list(rows[0])
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_cell(row.get(k)) for k in columns})
    return buf.getvalue()


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (dict, list, tuple)):
        return json.dumps(_jsonable(v), sort_keys=True)
    return v


def records_to_rows(records: Iterable[VerificationRecord]) -> list[dict]:
    """Flatten records into the sweep CSV layout ``(M, N, family, lhs, rhs, ratio, passed)`` plus extras."""
    rows = []
    for r in records:
        row = {"claim_id": r.claim_id}
        row.update({k: v for k, v in r.inputs.items()})
        row.update({"lhs": r.lhs, "rhs": r.rhs, "ratio": r.ratio, "passed": r.status})
        rows.append(row)
    return rows


def all_ok(records: Iterable[VerificationRecord]) -> bool:
    return all(r.passed is not False for r in records)
