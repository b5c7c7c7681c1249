"""Group selection rates and the DPD / TPD / FPD / EOD fairness scores.

Multiclass identification is reduced one-vs-rest: each identity is a binary
target, every demographic group gets a selection rate, TPR and FPR for it,
and the per-identity gaps are averaged (unweighted) over the roster and
reported on a percent scale.

Each sample belongs to the demographic group of its true subject. The gap
for a rate is max-minus-min over all groups of the attribute; a group whose
denominator is zero contributes a zero-filled rate to that max/min.
"""
from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping

from .ingest import GroupingScheme, PredictionRecord, Roster
from .metrics import ConfusionTable, LogOrTable, Rate, ratio


@dataclass(frozen=True)
class GroupRate:
    selection_rate: Rate
    tpr: Rate
    fpr: Rate


@dataclass(frozen=True)
class GroupRates:
    target: str
    rates: Mapping[str, GroupRate]


@dataclass(frozen=True)
class ClassFairness:
    target: str
    dpd: float
    tpd: float
    fpd: float

    @property
    def eod(self) -> float:
        return max(self.tpd, self.fpd)


@dataclass(frozen=True)
class FairnessSummary:
    """Fairness of one demographic attribute; all scores in percent."""

    attribute: str
    dpd: float
    tpd: float
    fpd: float
    eod: float
    class_count: int
    group_count: int
    defined: bool = True
    per_class: tuple[ClassFairness, ...] = ()


class GroupTable:
    """Per-group marginals derived once from a confusion table."""

    def __init__(self, table: ConfusionTable, grouping: GroupingScheme):
        self.table = table
        self.grouping = grouping
        self.labels = grouping.labels
        self.size: Counter = Counter()
        self.predicted: Counter = Counter()
        for (t, p), k in table.pairs.items():
            try:
                g = grouping.label_of(t)
            except KeyError:
                raise ValueError(f"true subject {t!r} is not covered by the {grouping.attribute} grouping") from None
            self.size[g] += k
            self.predicted[g, p] += k

    def rates(self, target: str) -> GroupRates:
        own = self.grouping.assignment.get(target)
        tp_all = self.table.pairs.get((target, target), 0)
        pos_all = self.table.true_totals.get(target, 0)
        out = {}
        for g in self.labels:
            n = self.size[g]
            picked = self.predicted[g, target]
            tp, pos = (tp_all, pos_all) if g == own else (0, 0)
            out[g] = GroupRate(
                selection_rate=ratio(picked, n),
                tpr=ratio(tp, pos),
                fpr=ratio(picked - tp, n - pos),
            )
        return GroupRates(target, out)


def _check_groups(grouping: GroupingScheme) -> None:
    if len(grouping.labels) < 2:
        raise ValueError(
            f"{grouping.attribute} grouping has {len(grouping.labels)} group(s); at least 2 are needed"
        )


def group_rates(
    log: LogOrTable, roster: Roster, grouping: GroupingScheme, target: str
) -> GroupRates:
    _check_groups(grouping)
    table = log if isinstance(log, ConfusionTable) else ConfusionTable.from_log(log)
    return GroupTable(table, grouping).rates(target)


def _spread(values: Iterable[float]) -> float:
    values = list(values)
    if len(values) < 2:
        raise ValueError("at least 2 groups are needed")
    return max(values) - min(values)


def dpd_class(r: GroupRates) -> float:
    return _spread(g.selection_rate.value for g in r.rates.values())


def tpd_class(r: GroupRates) -> float:
    return _spread(g.tpr.value for g in r.rates.values())


def fpd_class(r: GroupRates) -> float:
    return _spread(g.fpr.value for g in r.rates.values())


def eod_class(r: GroupRates) -> float:
    return max(tpd_class(r), fpd_class(r))


def class_fairness(r: GroupRates) -> ClassFairness:
    return ClassFairness(r.target, dpd_class(r), tpd_class(r), fpd_class(r))


def fairness_summary(
    log: LogOrTable | Iterable[PredictionRecord],
    roster: Roster,
    grouping: GroupingScheme,
    workers: int = 1,
) -> FairnessSummary:
    """Mean per-identity DPD, TPD, FPD and EOD over the roster, times 100.

    EOD is taken per identity (the larger of its TPD and FPD) before
    averaging, so the reported EOD can exceed both averaged components.
    """
    if len(roster) == 0:
        raise ValueError("roster is empty")
    _check_groups(grouping)
    table = log if isinstance(log, ConfusionTable) else ConfusionTable.from_log(log, workers)
    groups = GroupTable(table, grouping)
    targets = roster.ids
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_class = tuple(pool.map(lambda c: class_fairness(groups.rates(c)), targets))
    else:
        per_class = tuple(class_fairness(groups.rates(c)) for c in targets)

    n = len(per_class)

    def mean_pct(values: Iterable[float]) -> float:
        return 100.0 * math.fsum(values) / n

    return FairnessSummary(
        attribute=grouping.attribute,
        dpd=mean_pct(c.dpd for c in per_class),
        tpd=mean_pct(c.tpd for c in per_class),
        fpd=mean_pct(c.fpd for c in per_class),
        eod=mean_pct(c.eod for c in per_class),
        class_count=n,
        group_count=len(grouping.labels),
        defined=table.n > 0,
        per_class=per_class,
    )
