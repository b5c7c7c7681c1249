"""``fairaudit`` command line: audit, simulate, plan, validate.

Exit status: 0 success, 1 invalid input or arguments, 2 I/O failure.
Warnings go to stderr and never change the exit status.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

from . import __version__
from .balance import plan_rebalance, priors, sample_distribution
from .ingest import (
    ATTRIBUTES,
    MASK_TOKENS,
    MODALITIES,
    IngestError,
    apply_grouping,
    parse_predictions,
    parse_subjects,
    predictions_to_csv,
    subjects_to_csv,
    validate,
)
from .report import FORMATS, build_audit, render_plan, render_report
from .simulator import (
    DEFAULT_SAMPLES_PER_SUBJECT,
    Accuracy,
    GroupAccuracy,
    Perfect,
    SimSpec,
    Uniform,
    paper_roster,
    simulate,
)

log = logging.getLogger("fairaudit")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _read(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def write_atomic(path: str | os.PathLike, data: bytes) -> None:
    """Write ``data`` to a temporary sibling file, then rename it over ``path``."""
    target = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _load_roster(path: str, raw: bytes | None = None):
    try:
        return parse_subjects(_read(path) if raw is None else raw)
    except IngestError as exc:
        raise IngestError(f"{path}: {exc}") from None


def _load_log(path: str, roster, raw: bytes | None = None):
    try:
        return parse_predictions(_read(path) if raw is None else raw, roster)
    except IngestError as exc:
        raise IngestError(f"{path}: {exc}") from None


def _emit(data: bytes, output: str | None) -> None:
    if output:
        write_atomic(output, data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _attributes(text: str) -> list[str]:
    attrs = [a.strip() for a in text.split(",") if a.strip()]
    if not attrs:
        raise UsageError("--group-by needs at least one attribute")
    for a in attrs:
        for part in a.split("*"):
            if part not in ATTRIBUTES:
                raise UsageError(f"unknown attribute {part!r}; expected {', '.join(ATTRIBUTES)}")
    return attrs


def _filters(text: str | None) -> dict[str, str]:
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or key not in ("modality", "masked"):
            raise UsageError(f"bad filter {item!r}; expected modality=... or masked=...")
        allowed = MODALITIES if key == "modality" else tuple(MASK_TOKENS)
        if value not in allowed:
            raise UsageError(f"bad {key} filter value {value!r}; expected one of {', '.join(allowed)}")
        out[key] = value
    return out


def cmd_audit(args) -> int:
    attrs = _attributes(args.group_by)
    filters = _filters(args.filter)
    subjects_raw = _read(args.subjects)
    predictions_raw = _read(args.predictions)
    roster = _load_roster(args.subjects, subjects_raw)
    records = _load_log(args.predictions, roster, predictions_raw)
    check = validate(records, roster)
    if not check.ok:
        for v in check.violations:
            print(f"fairaudit: {v}", file=sys.stderr)
        return EXIT_INVALID
    for w in check.warnings:
        log.warning(w)

    selected = records
    if "modality" in filters:
        selected = tuple(r for r in selected if r.modality == filters["modality"])
    if "masked" in filters:
        want = MASK_TOKENS[filters["masked"]]
        selected = tuple(r for r in selected if r.masked == want)

    metadata = {
        "inputs": {
            "subjects": {"sha256": hashlib.sha256(subjects_raw).hexdigest(), "records": len(roster)},
            "predictions": {"sha256": hashlib.sha256(predictions_raw).hexdigest(), "records": len(records)},
        },
        "filter": filters,
    }
    report = build_audit(selected, roster, attrs, metadata, workers=args.threads)
    _emit(render_report(report, args.format), args.output)
    return EXIT_OK


def _model(args):
    if args.model == "perfect":
        return Perfect()
    if args.model == "uniform":
        return Uniform()
    if args.model == "accuracy":
        if args.p is None:
            raise UsageError("--model accuracy requires --p")
        return Accuracy(args.p)
    if not args.group_p:
        raise UsageError("--model group-accuracy requires --group-p LABEL=F")
    if not args.group_attribute:
        raise UsageError("--model group-accuracy requires --group-attribute")
    mapping = {}
    for item in args.group_p:
        label, sep, value = item.rpartition("=")
        if not sep or not label:
            raise UsageError(f"bad --group-p {item!r}; expected LABEL=F")
        try:
            mapping[label] = float(value)
        except ValueError:
            raise UsageError(f"bad probability in --group-p {item!r}") from None
    return GroupAccuracy(args.group_attribute, mapping)


def cmd_simulate(args) -> int:
    if args.paper_roster:
        roster = paper_roster()
    else:
        roster = _load_roster(args.subjects)
    spec = SimSpec(
        roster=roster,
        model=_model(args),
        seed=args.seed,
        samples_per_subject=args.samples_per_subject,
        modality=args.modality,
        masked=args.masked,
    )
    records = simulate(spec, workers=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.paper_roster:
        write_atomic(out / "subjects.csv", subjects_to_csv(roster))
    write_atomic(out / "predictions.csv", predictions_to_csv(records))
    log.info("wrote %d records for %d subjects to %s", len(records), len(roster), out)
    return EXIT_OK


def cmd_plan(args) -> int:
    roster = _load_roster(args.subjects)
    grouping = apply_grouping(roster, args.attribute)
    if args.predictions:
        records = _load_log(args.predictions, roster)
        dist, unit = sample_distribution(records, grouping), "samples"
    else:
        dist, unit = priors(roster, grouping), "subjects"
    plan = plan_rebalance(dist, args.strategy)
    _emit(render_plan(plan, args.format, args.attribute, unit), args.output)
    return EXIT_OK


def cmd_validate(args) -> int:
    roster = _load_roster(args.subjects)
    records = _load_log(args.predictions, roster)
    report = validate(records, roster)
    lines = [f"subjects: {len(roster)}  records: {len(records)}"]
    lines += [f"violation: {v}" for v in report.violations]
    lines += [f"warning: {w}" for w in report.warnings]
    for attribute, totals in report.group_totals.items():
        cells = ", ".join(f"{g}={n}" for g, n in totals.items())
        lines.append(f"{attribute}: {cells}")
    lines.append("ok" if report.ok else "FAILED")
    print("\n".join(lines))
    return EXIT_OK if report.ok else EXIT_INVALID


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fairaudit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fairaudit {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("audit", help="per-group performance and fairness of a prediction log")
    p.add_argument("--subjects", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--group-by", default="age,gender,ethnicity")
    p.add_argument("--format", choices=FORMATS, default="table")
    p.add_argument("--filter", help="e.g. modality=thermal,masked=yes")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("simulate", help="write a seeded synthetic prediction log")
    p.add_argument("--model", choices=("perfect", "uniform", "accuracy", "group-accuracy"), required=True)
    p.add_argument("--p", type=float)
    p.add_argument("--group-p", action="append", metavar="LABEL=F")
    p.add_argument("--group-attribute", choices=ATTRIBUTES)
    p.add_argument("--seed", type=_non_negative_int, required=True)
    p.add_argument("--samples-per-subject", type=_non_negative_int, default=DEFAULT_SAMPLES_PER_SUBJECT)
    p.add_argument("--modality", choices=MODALITIES, default="visual")
    p.add_argument("--masked", action="store_true")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--subjects")
    src.add_argument("--paper-roster", action="store_true", help="built-in 80-subject roster")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plan", help="rebalancing plan for one attribute")
    p.add_argument("--subjects", required=True)
    p.add_argument("--predictions", help="plan over sample counts instead of subject counts")
    p.add_argument("--attribute", required=True)
    p.add_argument("--strategy", default="augment-max", help="augment-max | subsample-min | target:N")
    p.add_argument("--format", choices=FORMATS, default="table")
    p.add_argument("--output")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("validate", help="check a prediction log against a roster")
    p.add_argument("--subjects", required=True)
    p.add_argument("--predictions", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="fairaudit: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except IngestError as exc:
        print(f"fairaudit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"fairaudit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError) as exc:
        print(f"fairaudit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
