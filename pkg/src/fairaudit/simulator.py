"""Seeded synthetic prediction logs for classifiers of known quality.

Random streams
--------------
Every subject draws from its own Philox-4x64 counter-based generator
(NumPy's ``Philox`` bit generator), keyed by
``SeedSequence(seed, spawn_key=(subject_index,))`` where ``subject_index`` is
the subject's position in the roster sorted by ``subject_id``. Only raw
64-bit words are consumed (``random_raw``) and mapped to decisions with
integer arithmetic, so logs do not depend on NumPy's distribution code,
the platform, or how many threads generate them.

Each sample consumes two words ``(w0, w1)``:

* hit test: ``(w0 >> 11) < ceil(p * 2**53)``, i.e. a 53-bit uniform below ``p``;
* index pick among ``m`` candidates: ``((w1 >> 32) * m) >> 32``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .ingest import PredictionRecord, Roster, SubjectProfile, apply_grouping, MODALITIES

DEFAULT_SAMPLES_PER_SUBJECT = 478
RNG_NAME = "philox4x64-10/seedsequence-spawn-per-subject/v1"
MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class Perfect:
    name = "perfect"


@dataclass(frozen=True)
class Uniform:
    name = "uniform"


@dataclass(frozen=True)
class Accuracy:
    p: float
    name = "accuracy"

    def __post_init__(self):
        _check_p(self.p, "p")


@dataclass(frozen=True)
class GroupAccuracy:
    attribute: str
    p: Mapping[str, float]
    name = "group-accuracy"

    def __post_init__(self):
        for label, value in self.p.items():
            _check_p(value, f"p[{label}]")


Model = Union[Perfect, Uniform, Accuracy, GroupAccuracy]


def _check_p(value: float, what: str) -> None:
    if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
        raise ValueError(f"{what} must be in [0, 1], got {value!r}")


@dataclass(frozen=True)
class SimSpec:
    roster: Roster
    model: Model
    seed: int
    samples_per_subject: Union[int, Mapping[str, int]] = DEFAULT_SAMPLES_PER_SUBJECT
    modality: str = "visual"
    masked: bool = False
    counts: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.roster, Roster):
            object.__setattr__(self, "roster", Roster(self.roster))
        if len(self.roster) == 0:
            raise ValueError("roster is empty")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed <= MAX_SEED:
            raise ValueError(f"seed must be an integer in [0, 2**64 - 1], got {self.seed!r}")
        if self.modality not in MODALITIES:
            raise ValueError(f"modality must be one of {', '.join(MODALITIES)}")

        sps = self.samples_per_subject
        if isinstance(sps, int):
            counts = {sid: sps for sid in self.roster.ids}
        else:
            unknown = sorted(set(sps) - set(self.roster.ids))
            if unknown:
                raise ValueError(f"sample counts given for unknown subjects {unknown}")
            counts = {sid: sps.get(sid, DEFAULT_SAMPLES_PER_SUBJECT) for sid in self.roster.ids}
        for sid, n in counts.items():
            if isinstance(n, bool) or not isinstance(n, int) or n < 0:
                raise ValueError(f"sample count for {sid!r} must be a non-negative integer, got {n!r}")
        object.__setattr__(self, "counts", counts)

        if isinstance(self.model, GroupAccuracy):
            grouping = apply_grouping(self.roster, self.model.attribute)
            absent = sorted(set(self.model.p) - set(grouping.labels))
            if absent:
                raise ValueError(f"group-accuracy labels {absent} not present in the {self.model.attribute} grouping")
            missing = sorted(set(grouping.labels) - set(self.model.p))
            if missing:
                raise ValueError(f"group-accuracy has no p for {self.model.attribute} groups {missing}")
        if isinstance(self.model, (Accuracy, GroupAccuracy)) and len(self.roster) < 2:
            raise ValueError(f"{self.model.name} model needs at least 2 subjects")


def _stream(seed: int, index: int) -> np.random.Philox:
    return np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,)))


def _hit_threshold(p: float) -> int:
    return math.ceil(p * 2**53)


def _pick(words: np.ndarray, m: int) -> np.ndarray:
    return ((words >> np.uint64(32)) * np.uint64(m)) >> np.uint64(32)


def _subject_predictions(spec: SimSpec, index: int, p: float | None) -> np.ndarray:
    """Roster indices predicted for one subject's samples."""
    n = spec.counts[spec.roster.ids[index]]
    size = len(spec.roster)
    if p is None and isinstance(spec.model, Perfect):
        return np.full(n, index, dtype=np.int64)
    words = _stream(spec.seed, index).random_raw(2 * n).reshape(n, 2)
    if isinstance(spec.model, Uniform):
        return _pick(words[:, 1], size).astype(np.int64)
    hits = (words[:, 0] >> np.uint64(11)) < np.uint64(_hit_threshold(p))
    other = _pick(words[:, 1], size - 1).astype(np.int64)
    other[other >= index] += 1
    return np.where(hits, index, other)


def _subject_p(spec: SimSpec) -> list[float | None]:
    model = spec.model
    if isinstance(model, Accuracy):
        return [float(model.p)] * len(spec.roster)
    if isinstance(model, GroupAccuracy):
        grouping = apply_grouping(spec.roster, model.attribute)
        return [float(model.p[grouping.label_of(sid)]) for sid in spec.roster.ids]
    return [None] * len(spec.roster)


def simulate(spec: SimSpec, workers: int = 1) -> tuple[PredictionRecord, ...]:
    """Generate the log for ``spec``; records ordered by subject, then sample index."""
    ids = spec.roster.ids
    probs = _subject_p(spec)
    jobs = range(len(ids))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            picks = list(pool.map(lambda i: _subject_predictions(spec, i, probs[i]), jobs))
    else:
        picks = [_subject_predictions(spec, i, probs[i]) for i in jobs]

    width = max(6, len(str(max(spec.counts.values(), default=0))))
    log = []
    for i, sid in enumerate(ids):
        for k, j in enumerate(picks[i].tolist()):
            log.append(PredictionRecord(f"{sid}-{k:0{width}d}", sid, ids[j], spec.modality, spec.masked))
    return tuple(log)


# -- the 80-subject demographic layout -----------------------------------------

PAPER_GENDER = (("Male", 45), ("Female", 35))
PAPER_ETHNICITY = (("A", 60), ("B", 3), ("C", 17))
PAPER_AGE_BINS = (("under25", 31), ("25-30", 26), ("31-35", 10), ("over35", 13))
_BIN_AGES = {
    "under25": (20, 21, 22, 23, 24),
    "25-30": (25, 26, 27, 28, 29, 30),
    "31-35": (31, 32, 33, 34, 35),
    "over35": (36, 37, 39, 40, 41, 45, 46, 57),
}


def _interleave(counts) -> list[str]:
    # evenly spaced label sequence; each label's k-th slot sits at (k + 1/2) / count
    slots = [
        ((2 * k + 1) / (2 * n), order, label)
        for order, (label, n) in enumerate(counts)
        for k in range(n)
    ]
    return [label for _, _, label in sorted(slots)]


def paper_roster() -> Roster:
    """Fixed 80-subject roster: gender 45/35, ethnicity 60/3/17, age bins 31/26/10/13."""
    genders = _interleave(PAPER_GENDER)
    ethnicities = _interleave(PAPER_ETHNICITY)
    bins = _interleave(PAPER_AGE_BINS)
    seen = {b: 0 for b in _BIN_AGES}
    subjects = []
    for i in range(80):
        b = bins[i]
        choices = _BIN_AGES[b]
        age = choices[seen[b] % len(choices)]
        seen[b] += 1
        subjects.append(SubjectProfile(f"s{i + 1:02d}", age, genders[i], ethnicities[i]))
    return Roster(subjects)
