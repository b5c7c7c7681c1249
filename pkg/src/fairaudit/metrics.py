"""One-vs-rest confusion counting and precision / recall / F1.

Counts are exact integers; rates are derived from them only at the end.
A rate whose denominator is zero evaluates to 0 and is marked undefined.
"""
from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .ingest import GroupingScheme, PredictionRecord, Roster


@dataclass(frozen=True)
class Rate:
    value: float
    defined: bool = True

    def __float__(self) -> float:
        return self.value


def ratio(num: int, den: int) -> Rate:
    if den == 0:
        return Rate(0.0, False)
    return Rate(num / den)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


class ConfusionTable:
    """Joint (true, predicted) counts for a log; one pass, reusable for every class."""

    def __init__(self, pairs: Counter, n: int):
        self.pairs = pairs
        self.n = n
        self.true_totals: Counter = Counter()
        self.pred_totals: Counter = Counter()
        for (t, p), k in pairs.items():
            self.true_totals[t] += k
            self.pred_totals[p] += k

    @classmethod
    def from_log(cls, log: Iterable[PredictionRecord], workers: int = 1) -> "ConfusionTable":
        records = log if isinstance(log, Sequence) else list(log)
        if workers <= 1 or len(records) < 2:
            pairs = Counter((r.true_subject, r.predicted_subject) for r in records)
            return cls(pairs, len(records))
        size = math.ceil(len(records) / workers)
        chunks = [records[i:i + size] for i in range(0, len(records), size)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partial = list(pool.map(
                lambda chunk: Counter((r.true_subject, r.predicted_subject) for r in chunk), chunks
            ))
        pairs: Counter = Counter()
        for c in partial:
            pairs.update(c)
        return cls(pairs, len(records))

    def for_class(self, cls_id: str) -> ConfusionCounts:
        tp = self.pairs.get((cls_id, cls_id), 0)
        fp = self.pred_totals.get(cls_id, 0) - tp
        fn = self.true_totals.get(cls_id, 0) - tp
        return ConfusionCounts(tp, fp, fn, self.n - tp - fp - fn)


LogOrTable = Union[Iterable[PredictionRecord], ConfusionTable]


def _table(log: LogOrTable) -> ConfusionTable:
    return log if isinstance(log, ConfusionTable) else ConfusionTable.from_log(log)


def confusion_for_class(log: LogOrTable, cls_id: str) -> ConfusionCounts:
    return _table(log).for_class(cls_id)


def precision(c: ConfusionCounts) -> Rate:
    return ratio(c.tp, c.tp + c.fp)


def recall(c: ConfusionCounts) -> Rate:
    return ratio(c.tp, c.tp + c.fn)


def f1(c: ConfusionCounts) -> Rate:
    # count form of the harmonic mean; equals 2PR/(P+R) whenever P+R > 0
    return ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn)


@dataclass(frozen=True)
class MacroMetrics:
    precision: float
    recall: float
    f1: float
    class_count: int
    undefined_precision: int = 0
    undefined_recall: int = 0
    undefined_f1: int = 0

    @property
    def flagged(self) -> bool:
        return bool(self.undefined_precision or self.undefined_recall or self.undefined_f1)


def macro_over_classes(log: LogOrTable, classes: Iterable[str]) -> MacroMetrics:
    """Unweighted mean of per-class precision, recall and F1.

    Macro F1 is the mean of per-class F1 values, not the harmonic mean of the
    macro precision and recall. Zero-filled rates take part in the mean.
    """
    ordered = sorted(set(classes))
    if not ordered:
        raise ValueError("class set is empty")
    table = _table(log)
    p, r, f = [], [], []
    for c in ordered:
        counts = table.for_class(c)
        p.append(precision(counts))
        r.append(recall(counts))
        f.append(f1(counts))
    n = len(ordered)
    return MacroMetrics(
        precision=math.fsum(x.value for x in p) / n,
        recall=math.fsum(x.value for x in r) / n,
        f1=math.fsum(x.value for x in f) / n,
        class_count=n,
        undefined_precision=sum(not x.defined for x in p),
        undefined_recall=sum(not x.defined for x in r),
        undefined_f1=sum(not x.defined for x in f),
    )


def group_row_metrics(
    log: LogOrTable, roster: Roster, grouping: GroupingScheme, group_label: str
) -> MacroMetrics:
    """Macro metrics over the identities of one demographic group.

    Per-class counts come from the full log, so false positives attributed to
    a group's identities may originate from samples of any group.
    """
    if group_label not in grouping.labels:
        raise ValueError(f"unknown group label {group_label!r} for attribute {grouping.attribute!r}")
    members = [sid for sid in roster.ids if grouping.label_of(sid) == group_label]
    return macro_over_classes(log, members)
