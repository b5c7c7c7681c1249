"""Audit assembly and rendering (table, CSV, JSON).

Internal values stay at full precision; percentages are rounded half-even to
two decimals only when rendered as table or CSV.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Any, Iterable, Sequence

from . import __version__
from .balance import RebalancePlan
from .fairness import FairnessSummary, fairness_summary
from .ingest import PredictionRecord, Roster, apply_grouping
from .metrics import ConfusionTable, MacroMetrics, macro_over_classes

SCHEMA_VERSION = "fairaudit.audit/1"
FORMATS = ("table", "csv", "json")
CSV_FIELDS = (
    "section", "attribute", "group", "class_count",
    "precision", "recall", "f1", "dpd", "tpd", "fpd", "eod", "flag",
)

_metrics_schema = {
    "type": "object",
    "required": ["precision", "recall", "f1", "class_count", "undefined"],
    "properties": {
        "precision": {"type": "number", "minimum": 0, "maximum": 100},
        "recall": {"type": "number", "minimum": 0, "maximum": 100},
        "f1": {"type": "number", "minimum": 0, "maximum": 100},
        "class_count": {"type": "integer", "minimum": 1},
        "undefined": {
            "type": "object",
            "required": ["precision", "recall", "f1"],
            "properties": {k: {"type": "integer", "minimum": 0} for k in ("precision", "recall", "f1")},
            "additionalProperties": False,
        },
    },
}

# JSON Schema (draft 2020-12) for the ``json`` audit format.
REPORT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "fairaudit audit report",
    "type": "object",
    "required": ["schema", "metadata", "baseline", "groups", "fairness"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "metadata": {
            "type": "object",
            "required": ["tool_version", "records", "subjects"],
            "properties": {
                "tool_version": {"type": "string"},
                "records": {"type": "integer", "minimum": 0},
                "subjects": {"type": "integer", "minimum": 1},
                "inputs": {
                    "type": "object",
                    "additionalProperties": {
                        "type": "object",
                        "required": ["sha256"],
                        "properties": {
                            "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
                            "records": {"type": "integer", "minimum": 0},
                        },
                    },
                },
                "filter": {"type": "object", "additionalProperties": {"type": "string"}},
            },
        },
        "baseline": _metrics_schema,
        "groups": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["attribute", "group", "metrics"],
                "properties": {
                    "attribute": {"type": "string"},
                    "group": {"type": "string"},
                    "metrics": _metrics_schema,
                },
            },
        },
        "fairness": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["attribute", "dpd", "tpd", "fpd", "eod", "class_count", "group_count", "defined"],
                "properties": {
                    "attribute": {"type": "string"},
                    **{k: {"type": "number", "minimum": 0, "maximum": 100} for k in ("dpd", "tpd", "fpd", "eod")},
                    "class_count": {"type": "integer", "minimum": 1},
                    "group_count": {"type": "integer", "minimum": 2},
                    "defined": {"type": "boolean"},
                },
            },
        },
    },
}


@dataclass(frozen=True)
class GroupRow:
    attribute: str
    group: str
    metrics: MacroMetrics


@dataclass(frozen=True)
class AuditReport:
    baseline: MacroMetrics
    groups: tuple[GroupRow, ...]
    fairness: tuple[FairnessSummary, ...]
    metadata: dict[str, Any] = field(default_factory=dict)


def build_audit(
    log: Sequence[PredictionRecord],
    roster: Roster,
    attributes: Iterable[str],
    metadata: dict[str, Any] | None = None,
    workers: int = 1,
) -> AuditReport:
    table = ConfusionTable.from_log(log, workers)
    baseline = macro_over_classes(table, roster.ids)
    groups, fairness = [], []
    for attribute in sorted(set(attributes)):
        grouping = apply_grouping(roster, attribute)
        for label in grouping.labels:
            groups.append(GroupRow(attribute, label, macro_over_classes(table, grouping.members(label))))
        fairness.append(fairness_summary(table, roster, grouping, workers))
    meta = {"tool_version": __version__, "records": len(log), "subjects": len(roster)}
    meta.update(metadata or {})
    return AuditReport(baseline, tuple(groups), tuple(fairness), meta)


def pct2(value: float) -> str:
    """Two-decimal string, rounded half-even on the shortest decimal repr."""
    return str(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


def _metrics_json(m: MacroMetrics) -> dict[str, Any]:
    return {
        "precision": 100.0 * m.precision,
        "recall": 100.0 * m.recall,
        "f1": 100.0 * m.f1,
        "class_count": m.class_count,
        "undefined": {"precision": m.undefined_precision, "recall": m.undefined_recall, "f1": m.undefined_f1},
    }


def report_to_dict(report: AuditReport) -> dict[str, Any]:
    return {
        "schema": SCHEMA_VERSION,
        "metadata": report.metadata,
        "baseline": _metrics_json(report.baseline),
        "groups": [
            {"attribute": g.attribute, "group": g.group, "metrics": _metrics_json(g.metrics)}
            for g in report.groups
        ],
        "fairness": [
            {
                "attribute": f.attribute,
                "dpd": f.dpd, "tpd": f.tpd, "fpd": f.fpd, "eod": f.eod,
                "class_count": f.class_count,
                "group_count": f.group_count,
                "defined": f.defined,
            }
            for f in report.fairness
        ],
    }


def _perf_cells(m: MacroMetrics) -> list[str]:
    return [pct2(100.0 * m.precision), pct2(100.0 * m.recall), pct2(100.0 * m.f1)]


def _render_csv(report: AuditReport) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    b = report.baseline
    w.writerow(["baseline", "", "", b.class_count, *_perf_cells(b), "", "", "", "", "undefined" if b.flagged else ""])
    for g in report.groups:
        m = g.metrics
        w.writerow(["group", g.attribute, g.group, m.class_count, *_perf_cells(m), "", "", "", "",
                    "undefined" if m.flagged else ""])
    for f in report.fairness:
        w.writerow(["fairness", f.attribute, "", f.class_count, "", "", "",
                    pct2(f.dpd), pct2(f.tpd), pct2(f.fpd), pct2(f.eod), "" if f.defined else "undefined"])
    return buf.getvalue()


def _render_table(report: AuditReport) -> str:
    lines = []
    head = f"{'Performance (%)':<28}{'Precision':>10}{'Recall':>10}{'F1-Score':>10}{'Classes':>9}"
    lines += [head, "-" * len(head)]
    flagged = False

    def perf(name: str, m: MacroMetrics) -> str:
        nonlocal flagged
        mark = "*" if m.flagged else ""
        flagged |= m.flagged
        cells = "".join(f"{c:>10}" for c in _perf_cells(m))
        return f"{name + mark:<28}{cells}{m.class_count:>9}"

    lines.append(perf("baseline", report.baseline))
    last = None
    for g in report.groups:
        if g.attribute != last:
            lines.append("")
            last = g.attribute
        lines.append(perf(f"{g.attribute}:{g.group}", g.metrics))
    lines.append("")
    head = f"{'Fairness (%)':<28}{'DPD':>10}{'TPD':>10}{'FPD':>10}{'EOD':>10}{'Groups':>9}"
    lines += [head, "-" * len(head)]
    for f in report.fairness:
        mark = "" if f.defined else "*"
        flagged |= not f.defined
        cells = "".join(f"{pct2(v):>10}" for v in (f.dpd, f.tpd, f.fpd, f.eod))
        lines.append(f"{f.attribute + mark:<28}{cells}{f.group_count:>9}")
    if flagged:
        lines += ["", "* includes zero-filled rates (zero denominator)"]
    meta = report.metadata
    lines += ["", f"records: {meta.get('records', 0)}  subjects: {meta.get('subjects', 0)}  "
                  f"fairaudit {meta.get('tool_version', __version__)}"]
    return "\n".join(lines) + "\n"


def render_report(report: AuditReport, fmt: str = "table") -> bytes:
    if fmt == "json":
        text = json.dumps(report_to_dict(report), indent=2) + "\n"
    elif fmt == "csv":
        text = _render_csv(report)
    elif fmt == "table":
        text = _render_table(report)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")
    return text.encode("utf-8")


def render_plan(plan: RebalancePlan, fmt: str = "table", attribute: str = "", unit: str = "subjects") -> bytes:
    if fmt == "json":
        doc = {
            "schema": "fairaudit.plan/1",
            "attribute": attribute,
            "unit": unit,
            "strategy": plan.strategy,
            "rows": [{"group": r.label, "current": r.current, "target": r.target, "delta": r.delta}
                     for r in plan.rows],
        }
        return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    if fmt == "csv":
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["group", "current", "target", "delta"])
        w.writerows([r.label, r.current, r.target, r.delta] for r in plan.rows)
        return buf.getvalue().encode("utf-8")
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")
    total = sum(r.current for r in plan.rows)
    lines = [f"{attribute or 'groups'} ({unit}), strategy {plan.strategy}",
             f"{'group':<16}{'current':>9}{'prior%':>9}{'target':>9}{'delta':>9}"]
    for r in plan.rows:
        prior = pct2(100.0 * r.current / total) if total else "0.00"
        lines.append(f"{r.label:<16}{r.current:>9}{prior:>9}{r.target:>9}{r.delta:>+9d}")
    return ("\n".join(lines) + "\n").encode("utf-8")
