"""Demographic priors and rebalancing plans.

A plan is a per-group count prescription (how many synthetic samples to
add, or how many to drop) that equalizes a distribution. The counts can be
subjects or samples; the caller decides which distribution to pass in.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .ingest import GroupingScheme, PredictionRecord, Roster

STRATEGIES = ("augment-max", "subsample-min", "target:N")


@dataclass(frozen=True)
class ClassDistribution:
    counts: Mapping[str, int]

    def __post_init__(self):
        for label, n in self.counts.items():
            if n < 0:
                raise ValueError(f"negative count {n} for group {label!r}")
        object.__setattr__(self, "counts", {g: self.counts[g] for g in sorted(self.counts)})

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def priors(self) -> dict[str, Fraction]:
        total = self.total
        if total == 0:
            raise ValueError("distribution is empty")
        return {g: Fraction(n, total) for g, n in self.counts.items()}


@dataclass(frozen=True)
class PlanRow:
    label: str
    current: int
    target: int

    @property
    def delta(self) -> int:
        return self.target - self.current


@dataclass(frozen=True)
class RebalancePlan:
    strategy: str
    rows: tuple[PlanRow, ...]

    @property
    def deltas(self) -> dict[str, int]:
        return {r.label: r.delta for r in self.rows}

    def apply(self) -> ClassDistribution:
        return ClassDistribution({r.label: r.current + r.delta for r in self.rows})


def priors(roster: Roster, grouping: GroupingScheme) -> ClassDistribution:
    """Subject counts per group."""
    if len(roster) == 0:
        raise ValueError("roster is empty")
    counts = Counter(grouping.label_of(sid) for sid in roster.ids)
    return ClassDistribution(dict(counts))


def sample_distribution(
    log: Iterable[PredictionRecord], grouping: GroupingScheme
) -> ClassDistribution:
    """Sample counts per group, keyed by each sample's true subject."""
    counts = Counter({g: 0 for g in grouping.labels})
    for r in log:
        counts[grouping.label_of(r.true_subject)] += 1
    return ClassDistribution(dict(counts))


def parse_strategy(strategy: str) -> tuple[str, int | None]:
    if strategy in ("augment-max", "subsample-min"):
        return strategy, None
    m = re.fullmatch(r"target:(-?\d+)", strategy)
    if not m:
        raise ValueError(f"unknown strategy {strategy!r}; expected augment-max, subsample-min or target:N")
    n = int(m.group(1))
    if n < 0:
        raise ValueError(f"target count must be non-negative, got {n}")
    return "target", n


def plan_rebalance(dist: ClassDistribution, strategy: str) -> RebalancePlan:
    kind, n = parse_strategy(strategy)
    if not dist.counts:
        raise ValueError("distribution is empty")
    if kind == "augment-max":
        target = max(dist.counts.values())
    elif kind == "subsample-min":
        target = min(dist.counts.values())
    else:
        target = n
    return RebalancePlan(strategy, tuple(PlanRow(g, c, target) for g, c in dist.counts.items()))
