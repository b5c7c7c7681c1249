"""Fairness auditing for multiclass biometric identification."""

__version__ = "0.1.0"

from .ingest import (  # noqa: E402
    GroupingScheme,
    IngestError,
    PredictionRecord,
    Roster,
    SubjectProfile,
    apply_grouping,
    bin_age,
    parse_predictions,
    parse_subjects,
    validate,
)
from .metrics import ConfusionCounts, MacroMetrics, confusion_for_class, f1, macro_over_classes, precision, recall  # noqa: E402
from .fairness import FairnessSummary, fairness_summary, group_rates  # noqa: E402
from .simulator import Accuracy, GroupAccuracy, Perfect, SimSpec, Uniform, paper_roster, simulate  # noqa: E402

__all__ = [
    "Accuracy", "ConfusionCounts", "FairnessSummary", "GroupAccuracy", "GroupingScheme",
    "IngestError", "MacroMetrics", "Perfect", "PredictionRecord", "Roster", "SimSpec",
    "SubjectProfile", "Uniform", "apply_grouping", "bin_age", "confusion_for_class", "f1",
    "fairness_summary", "group_rates", "macro_over_classes", "paper_roster",
    "parse_predictions", "parse_subjects", "precision", "recall", "simulate", "validate",
]
