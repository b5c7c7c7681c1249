import random

import pytest

from fairaudit.ingest import PredictionRecord, Roster, SubjectProfile


def make_log(pairs, modality="visual", masked=False):
    return tuple(
        PredictionRecord(f"x{i}", t, p, modality, masked) for i, (t, p) in enumerate(pairs)
    )


def perfect_log(roster, per_subject=10):
    return make_log((s.subject_id, s.subject_id) for s in roster for _ in range(per_subject))


@pytest.fixture
def r4():
    return Roster([
        SubjectProfile("s1", 22, "Male", "A"),
        SubjectProfile("s2", 27, "Female", "A"),
        SubjectProfile("s3", 33, "Male", "B"),
        SubjectProfile("s4", 40, "Female", "B"),
    ])


def random_case(rng: random.Random, max_ids=6, max_groups=3, max_records=60):
    """Small roster (genders used as arbitrary group labels) plus a random log."""
    n_ids = rng.randint(2, max_ids)
    k = rng.randint(2, min(max_groups, n_ids))
    labels = [f"g{j}" for j in range(k)] + [f"g{rng.randrange(k)}" for _ in range(n_ids - k)]
    rng.shuffle(labels)
    roster = Roster(
        SubjectProfile(f"id{i}", rng.randint(18, 70), labels[i], rng.choice("AB")) for i in range(n_ids)
    )
    ids = roster.ids
    n = rng.randint(0, max_records)
    log = make_log((rng.choice(ids), rng.choice(ids)) for _ in range(n))
    return roster, log


_ACCEPTANCE = []


def record_acceptance(line):
    _ACCEPTANCE.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
