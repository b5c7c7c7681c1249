import csv
import io
import json

import jsonschema
import pytest

from fairaudit.balance import ClassDistribution, plan_rebalance
from fairaudit.report import REPORT_SCHEMA, build_audit, pct2, render_plan, render_report
from fairaudit.simulator import Accuracy, SimSpec, paper_roster, simulate

from conftest import perfect_log


@pytest.fixture(scope="module")
def paper_report():
    roster = paper_roster()
    log = simulate(SimSpec(roster, Accuracy(0.8), 3, 40))
    return build_audit(log, roster, ["gender", "age", "ethnicity"])


@pytest.mark.parametrize("value, text", [
    (0.125, "0.12"), (0.135, "0.14"), (2.5, "2.50"), (99.995, "100.00"),
    (100.0, "100.00"), (0.0, "0.00"), (3.7449999, "3.74"), (1 / 3 * 100, "33.33"),
])
def test_pct2_half_even(value, text):
    assert pct2(value) == text


def test_r4_baseline_row(r4):
    report = build_audit(perfect_log(r4), r4, ["gender"])
    out = render_report(report, "table").decode()
    assert "baseline" in out and "100.00    100.00    100.00" in out


def test_structure_sorted(paper_report):
    assert [f.attribute for f in paper_report.fairness] == ["age", "ethnicity", "gender"]
    labels = [(g.attribute, g.group) for g in paper_report.groups]
    assert labels == sorted(labels)


def test_group_rows_cover_roster(paper_report):
    for attribute in ("age", "gender", "ethnicity"):
        assert sum(g.metrics.class_count for g in paper_report.groups if g.attribute == attribute) == 80


def test_json_matches_schema(paper_report):
    doc = json.loads(render_report(paper_report, "json"))
    jsonschema.validate(doc, REPORT_SCHEMA)
    assert doc["fairness"][0]["dpd"] == paper_report.fairness[0].dpd  # full precision


def test_csv_round_trip(paper_report):
    rows = list(csv.DictReader(io.StringIO(render_report(paper_report, "csv").decode())))
    fair = {r["attribute"]: r for r in rows if r["section"] == "fairness"}
    for f in paper_report.fairness:
        for key in ("dpd", "tpd", "fpd", "eod"):
            assert float(fair[f.attribute][key]) == pytest.approx(getattr(f, key), abs=0.005)
            assert fair[f.attribute][key] == pct2(getattr(f, key))
    base = next(r for r in rows if r["section"] == "baseline")
    assert float(base["recall"]) == pytest.approx(100 * paper_report.baseline.recall, abs=0.005)
    groups = [r for r in rows if r["section"] == "group"]
    assert len(groups) == len(paper_report.groups)


@pytest.mark.parametrize("fmt", ["table", "csv", "json"])
def test_rendering_is_pure(paper_report, fmt):
    assert render_report(paper_report, fmt) == render_report(paper_report, fmt)


@pytest.mark.parametrize("fmt", ["table", "csv", "json"])
def test_empty_log_report(r4, fmt):
    report = build_audit((), r4, ["gender", "age"])
    out = render_report(report, fmt)
    if fmt == "json":
        doc = json.loads(out)
        jsonschema.validate(doc, REPORT_SCHEMA)
        assert doc["baseline"]["undefined"]["recall"] == 4
        assert all(not f["defined"] for f in doc["fairness"])
    elif fmt == "csv":
        assert b"undefined" in out
    else:
        assert b"zero-filled" in out


def test_internal_values_not_rounded(paper_report):
    f = paper_report.fairness[0]
    assert f.dpd != round(f.dpd, 2)


def test_unknown_format(paper_report):
    with pytest.raises(ValueError):
        render_report(paper_report, "xml")


@pytest.mark.parametrize("fmt", ["table", "csv", "json"])
def test_render_plan(fmt):
    plan = plan_rebalance(ClassDistribution({"A": 60, "B": 3, "C": 17}), "augment-max")
    out = render_plan(plan, fmt, "ethnicity").decode()
    if fmt == "json":
        doc = json.loads(out)
        assert [r["delta"] for r in doc["rows"]] == [0, 57, 43]
    elif fmt == "csv":
        assert "B,3,60,57" in out
    else:
        assert "+57" in out and "3.75" in out
