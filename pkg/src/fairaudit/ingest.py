"""Subject rosters, prediction logs and demographic groupings.

Both inputs are read either as strict CSV (exact lowercase header, UTF-8,
comma-delimited) or as line-delimited JSON with the same field names.
Every rejection carries the 1-based line number of the offending input line.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Mapping, Sequence, Union

logger = logging.getLogger(__name__)

SUBJECT_FIELDS = ("subject_id", "age", "gender", "ethnicity")
PREDICTION_FIELDS = ("sample_id", "true_subject", "predicted_subject", "modality", "masked")
MODALITIES = ("visual", "thermal")
MASK_TOKENS = {"yes": True, "no": False}
ATTRIBUTES = ("age", "gender", "ethnicity")
AGE_BINS = ("under25", "25-30", "31-35", "over35")
MIN_AGE, MAX_AGE = 1, 120

Source = Union[bytes, str, IO[bytes], IO[str]]


class IngestError(ValueError):
    """Malformed or inconsistent input; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        self.reason = message
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class SubjectProfile:
    subject_id: str
    age_years: int
    gender: str
    ethnicity: str

    def attribute(self, name: str) -> str:
        if name == "age":
            return bin_age(self.age_years)
        if name == "gender":
            return self.gender
        if name == "ethnicity":
            return self.ethnicity
        raise ValueError(f"unknown attribute {name!r}; expected one of {', '.join(ATTRIBUTES)}")


@dataclass(frozen=True)
class PredictionRecord:
    sample_id: str
    true_subject: str
    predicted_subject: str
    modality: str = "visual"
    masked: bool = False

    @property
    def correct(self) -> bool:
        return self.true_subject == self.predicted_subject


class Roster(Sequence[SubjectProfile]):
    """Immutable set of subject profiles, ordered by ``subject_id``."""

    def __init__(self, subjects: Iterable[SubjectProfile] = ()):
        ordered = sorted(subjects, key=lambda s: s.subject_id)
        index: dict[str, SubjectProfile] = {}
        for s in ordered:
            if s.subject_id in index:
                raise ValueError(f"duplicate subject_id {s.subject_id!r}")
            index[s.subject_id] = s
        self._subjects = tuple(ordered)
        self._index = index

    def __getitem__(self, item):  # type: ignore[override]
        if isinstance(item, str):
            return self._index[item]
        return self._subjects[item]

    def __len__(self) -> int:
        return len(self._subjects)

    def __iter__(self) -> Iterator[SubjectProfile]:
        return iter(self._subjects)

    def __contains__(self, item: object) -> bool:
        if isinstance(item, str):
            return item in self._index
        return item in self._subjects

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Roster):
            return self._subjects == other._subjects
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._subjects)

    def __repr__(self) -> str:
        return f"Roster({len(self)} subjects)"

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(s.subject_id for s in self._subjects)


@dataclass(frozen=True)
class GroupingScheme:
    """Total map from subject id to a group label for one attribute."""

    attribute: str
    assignment: Mapping[str, str]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.assignment.values())))

    def label_of(self, subject_id: str) -> str:
        return self.assignment[subject_id]

    def members(self, label: str) -> tuple[str, ...]:
        if label not in set(self.assignment.values()):
            raise KeyError(f"unknown group label {label!r} for attribute {self.attribute!r}")
        return tuple(sorted(s for s, g in self.assignment.items() if g == label))

    def sizes(self) -> dict[str, int]:
        counts = Counter(self.assignment.values())
        return {g: counts[g] for g in sorted(counts)}


def bin_age(age_years: int) -> str:
    if age_years < MIN_AGE:
        raise ValueError(f"age must be a positive integer, got {age_years}")
    if age_years < 25:
        return "under25"
    if age_years <= 30:
        return "25-30"
    if age_years <= 35:
        return "31-35"
    return "over35"


def apply_grouping(roster: Iterable[SubjectProfile], attribute: str) -> GroupingScheme:
    """Partition the roster by ``attribute``.

    ``attribute`` is one of age/gender/ethnicity, or several of them joined
    with ``*`` for an intersectional grouping (labels joined with ``|``).
    """
    parts = attribute.split("*")
    for p in parts:
        if p not in ATTRIBUTES:
            raise ValueError(f"unknown attribute {p!r}; expected one of {', '.join(ATTRIBUTES)}")
    assignment: dict[str, str] = {}
    for s in roster:
        labels = []
        for p in parts:
            label = s.attribute(p)
            if not label:
                raise ValueError(f"subject {s.subject_id!r} has an empty {p} label")
            labels.append(label)
        assignment[s.subject_id] = "|".join(labels)
    return GroupingScheme(attribute, assignment)


# -- parsing -----------------------------------------------------------------

def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        data = source
    elif isinstance(source, str):
        return source
    else:
        data = source.read()
        if isinstance(data, str):
            return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise IngestError(f"input is not valid UTF-8 ({exc.reason} at byte {exc.start})") from None


def _is_jsonl(text: str) -> bool:
    # whitespace-only input counts as an empty JSONL document
    return not text.strip() or text.lstrip().startswith("{")


def _csv_rows(text: str, fields: Sequence[str]) -> Iterator[tuple[int, dict[str, str]]]:
    reader = csv.reader(io.StringIO(text, newline=""), strict=True)
    try:
        header = next(reader, None)
    except csv.Error as exc:
        raise IngestError(f"bad CSV: {exc}", 1) from None
    if header is None:
        raise IngestError("missing header", 1)
    if tuple(header) != tuple(fields):
        unknown = [h for h in header if h not in fields]
        missing = [f for f in fields if f not in header]
        detail = []
        if unknown:
            detail.append(f"unknown columns {unknown}")
        if missing:
            detail.append(f"missing columns {missing}")
        if not detail:
            detail.append("columns out of order")
        raise IngestError(f"bad header ({'; '.join(detail)}); expected {','.join(fields)}", 1)
    while True:
        line = reader.line_num + 1  # first physical line of the record
        try:
            row = next(reader)
        except StopIteration:
            return
        except csv.Error as exc:
            raise IngestError(f"bad CSV: {exc}", line) from None
        if not row:
            continue
        if len(row) != len(fields):
            raise IngestError(f"expected {len(fields)} fields, found {len(row)}", line)
        yield line, dict(zip(fields, row))


def _jsonl_rows(text: str, fields: Sequence[str]) -> Iterator[tuple[int, dict[str, object]]]:
    for line, raw in enumerate(text.split("\n"), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise IngestError(f"invalid JSON: {exc.msg}", line) from None
        if not isinstance(obj, dict):
            raise IngestError("each line must hold one JSON object", line)
        unknown = sorted(set(obj) - set(fields))
        missing = [f for f in fields if f not in obj]
        if unknown:
            raise IngestError(f"unknown fields {unknown}", line)
        if missing:
            raise IngestError(f"missing fields {missing}", line)
        yield line, obj


def _rows(text: str, fields: Sequence[str]):
    return _jsonl_rows(text, fields) if _is_jsonl(text) else _csv_rows(text, fields)


def _label(value: object, name: str, line: int) -> str:
    if not isinstance(value, str):
        raise IngestError(f"{name} must be a string", line)
    if any(ord(ch) < 32 or ord(ch) == 127 for ch in value):
        raise IngestError(f"{name} contains a control character", line)
    return value


def _token(value: object, name: str, line: int) -> str:
    value = _label(value, name, line)
    if not value:
        raise IngestError(f"empty {name}", line)
    return value


def _age(value: object, line: int) -> int:
    if isinstance(value, bool):
        raise IngestError(f"age must be an integer, got {value!r}", line)
    if isinstance(value, int):
        age = value
    elif isinstance(value, str) and value.isascii() and value.isdigit():
        age = int(value)
    else:
        raise IngestError(f"age must be an integer, got {value!r}", line)
    if not MIN_AGE <= age <= MAX_AGE:
        raise IngestError(f"age {age} outside [{MIN_AGE}, {MAX_AGE}]", line)
    return age


def parse_subjects(source: Source) -> Roster:
    text = _read_text(source)
    seen: dict[str, int] = {}
    subjects = []
    for line, row in _rows(text, SUBJECT_FIELDS):
        sid = _token(row["subject_id"], "subject_id", line)
        if sid in seen:
            raise IngestError(f"duplicate subject_id {sid!r} (first seen on line {seen[sid]})", line)
        seen[sid] = line
        gender = _label(row["gender"], "gender", line)
        ethnicity = _label(row["ethnicity"], "ethnicity", line)
        subjects.append(SubjectProfile(sid, _age(row["age"], line), gender, ethnicity))
    if not subjects:
        raise IngestError("no subjects", 1)
    return Roster(subjects)


def parse_predictions(source: Source, roster: Roster) -> tuple[PredictionRecord, ...]:
    text = _read_text(source)
    seen: dict[str, int] = {}
    log = []
    for line, row in _rows(text, PREDICTION_FIELDS):
        sample_id = _token(row["sample_id"], "sample_id", line)
        if sample_id in seen:
            raise IngestError(f"duplicate sample_id {sample_id!r} (first seen on line {seen[sample_id]})", line)
        seen[sample_id] = line
        true_subject = _token(row["true_subject"], "true_subject", line)
        predicted = _token(row["predicted_subject"], "predicted_subject", line)
        for sid in (true_subject, predicted):
            if sid not in roster:
                raise IngestError(f"unknown subject {sid!r}", line)
        modality = row["modality"]
        if modality not in MODALITIES:
            raise IngestError(f"invalid modality {modality!r}; expected one of {', '.join(MODALITIES)}", line)
        masked = row["masked"]
        if not isinstance(masked, str) or masked not in MASK_TOKENS:
            raise IngestError(f"invalid masked token {masked!r}; expected yes or no", line)
        log.append(PredictionRecord(sample_id, true_subject, predicted, modality, MASK_TOKENS[masked]))
    if not log:
        logger.warning("prediction log has no records")
    return tuple(log)


# -- serialization -------------------------------------------------------------

def _csv_bytes(fields: Sequence[str], rows: Iterable[Sequence[object]]) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def subjects_to_csv(roster: Iterable[SubjectProfile]) -> bytes:
    return _csv_bytes(
        SUBJECT_FIELDS,
        ((s.subject_id, s.age_years, s.gender, s.ethnicity) for s in roster),
    )


def predictions_to_csv(log: Iterable[PredictionRecord]) -> bytes:
    return _csv_bytes(
        PREDICTION_FIELDS,
        (
            (r.sample_id, r.true_subject, r.predicted_subject, r.modality, "yes" if r.masked else "no")
            for r in log
        ),
    )


def subjects_to_jsonl(roster: Iterable[SubjectProfile]) -> bytes:
    lines = [
        json.dumps(dict(zip(SUBJECT_FIELDS, (s.subject_id, s.age_years, s.gender, s.ethnicity))))
        for s in roster
    ]
    return "".join(line + "\n" for line in lines).encode("utf-8")


def predictions_to_jsonl(log: Iterable[PredictionRecord]) -> bytes:
    lines = [
        json.dumps(dict(zip(
            PREDICTION_FIELDS,
            (r.sample_id, r.true_subject, r.predicted_subject, r.modality, "yes" if r.masked else "no"),
        )))
        for r in log
    ]
    return "".join(line + "\n" for line in lines).encode("utf-8")


# -- validation ----------------------------------------------------------------

@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    subject_counts: dict[str, int] = field(default_factory=dict)
    group_totals: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(log: Iterable[PredictionRecord], roster: Roster) -> ValidationReport:
    """Cross-check a log against a roster without modifying either."""
    report = ValidationReport()
    counts = Counter()
    seen: set[str] = set()
    for i, r in enumerate(log):
        if r.sample_id in seen:
            report.violations.append(f"record {i + 1}: duplicate sample_id {r.sample_id!r}")
        seen.add(r.sample_id)
        for role, sid in (("true_subject", r.true_subject), ("predicted_subject", r.predicted_subject)):
            if sid not in roster:
                report.violations.append(f"record {i + 1}: {role} {sid!r} not in roster")
        counts[r.true_subject] += 1

    report.subject_counts = {sid: counts[sid] for sid in roster.ids}
    for sid, n in report.subject_counts.items():
        if n == 0:
            report.warnings.append(f"subject {sid!r} has no samples in the log")
    for attribute in ATTRIBUTES:
        try:
            grouping = apply_grouping(roster, attribute)
        except ValueError as exc:
            report.warnings.append(f"{attribute}: {exc}")
            continue
        totals = Counter()
        for sid, n in report.subject_counts.items():
            totals[grouping.label_of(sid)] += n
        report.group_totals[attribute] = {g: totals[g] for g in grouping.labels}
    return report
