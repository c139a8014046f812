import csv
import io
import json
import math

import numpy as np
import pytest

from qlslab.records import (RECORD_SCHEMA, SchemaError, VerificationRecord, all_ok, dumps_jsonl, loads_jsonl,
                            records_to_rows, rows_to_csv, validate_record_dict)


def rec(passed=True, lhs=1.0, rhs=2.0, **notes):
    return VerificationRecord("demo.claim", {"M": "1/2", "N": 4}, lhs, rhs, passed, "demo", notes)


def test_ratio_and_status():
    assert rec().ratio == 0.5
    assert rec(rhs=0.0).ratio is None and rec(rhs=float("inf")).ratio is None
    assert rec(True).status == "passed" and rec(False).status == "failed"
    assert rec(None).status not in ("passed", "failed")


def test_json_round_trip_is_lossless():
    r = rec(extra=[1.5, 2], z=1 + 2j)
    d = json.loads(r.to_json())
    assert d["schema"] == RECORD_SCHEMA and d["ratio"] == 0.5
    back = VerificationRecord.from_dict(d)
    assert (back.claim_id, back.inputs, back.lhs, back.rhs, back.passed) == (r.claim_id, r.inputs, 1.0, 2.0, True)
    assert back.notes["z"] == [1.0, 2.0]


def test_non_finite_values_serialise_as_null():
    d = json.loads(rec(lhs=float("nan"), rhs=float("inf"), bad=float("nan")).to_json())
    assert d["lhs"] is None and d["rhs"] is None and d["notes"]["bad"] is None
    assert math.isnan(VerificationRecord.from_dict(d).lhs)


def test_numpy_bool_passed_is_coerced():
    r = VerificationRecord("x", {}, 1.0, 2.0, np.float64(1.0) < 2.0)
    assert type(r.passed) is bool
    assert json.loads(r.to_json())["passed"] is True


def test_validation_rejects_bad_documents():
    good = rec().to_dict()
    validate_record_dict(good)
    for broken in ({**good, "schema": "qlslab.record/0"}, {k: v for k, v in good.items() if k != "lhs"},
                   {**good, "passed": "yes"}, [good]):
        with pytest.raises(SchemaError):
            validate_record_dict(broken)


def test_jsonl_round_trip_and_errors():
    recs = [rec(), rec(False, lhs=3.0), rec(None)]
    text = dumps_jsonl(recs)
    assert [r.passed for r in loads_jsonl(text + "\n")] == [True, False, None]
    with pytest.raises(SchemaError):
        loads_jsonl(text + "{not json\n")


def test_rows_and_csv():
    rows = records_to_rows([rec(), rec(False)])
    assert rows[0]["M"] == "1/2" and rows[1]["passed"] == "failed"
    text = rows_to_csv(rows)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert float(parsed[0]["lhs"]) == 1.0 and parsed[0]["claim_id"] == "demo.claim"
    assert rows_to_csv([]) == ""
    assert rows_to_csv([{"a": 0.1, "b": None, "c": [1, 2]}]) == 'a,b,c\n0.1,,"[1, 2]"\n'


def test_all_ok_treats_inconclusive_as_ok():
    assert all_ok([rec(True), rec(None)])
    assert not all_ok([rec(True), rec(False)])
    assert all_ok([])
