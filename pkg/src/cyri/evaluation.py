"""Batch evaluation over labeled email datasets.

Runs each record through the analysis pipeline (statelessly, no store
writes), streams per-record outcomes to a JSONL results file, and
computes a classification report: confusion counts, per-class
precision/recall/F1, accuracy, macro and weighted averages, plus
per-feature detection accuracy binned into high/medium/low.

Phishing is the positive class throughout.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Optional, Sequence

from .catalog import UNKNOWN, FeatureCatalog
from .errors import EmptyDataset, LengthMismatch
from .ingest import EmailRecord, parse_eml

#: Per-feature accuracy bins; the boundary values are config, not doctrine.
BIN_HIGH = 0.8
BIN_MEDIUM = 0.5


@dataclass(frozen=True)
class EvalRecord:
    """One labeled email: content fields plus gold label and features."""

    sender_address: str
    subject: str
    body_text: str
    gold_label: str  # phishing | safe
    gold_features: tuple[str, ...] = ()
    sender_name: str = ""
    body_html: Optional[str] = None
    sender_in_contacts: bool = False
    record_id: str = ""

    def __post_init__(self):
        if self.gold_label not in ("phishing", "safe"):
            raise ValueError(f"gold_label must be phishing|safe, got {self.gold_label!r}")
        if self.gold_label == "safe" and self.gold_features:
            raise ValueError("safe records carry no gold features")

    def to_email_record(self, index: int) -> EmailRecord:
        return EmailRecord(
            message_id=self.record_id or f"eval-{index}",
            sender_name=self.sender_name,
            sender_address=self.sender_address,
            subject=self.subject,
            body_text=self.body_text,
            body_html=self.body_html,
            received_at=datetime.now(timezone.utc).replace(microsecond=0),
            sender_in_contacts=self.sender_in_contacts,
            source="file",
        )


@dataclass(frozen=True)
class Outcome:
    """A (label, features) pair; used for both predictions and golds."""

    label: str
    features: tuple[str, ...] = ()


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall,
                "f1": self.f1, "support": self.support}


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    fn: int
    tn: int
    per_class: dict  # label -> ClassScores
    accuracy: float
    macro_avg: ClassScores
    weighted_avg: ClassScores
    per_feature_accuracy: dict
    feature_bins: dict
    errored: int = 0
    bin_thresholds: tuple[float, float] = (BIN_HIGH, BIN_MEDIUM)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {
            "confusion": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
            "per_class": {k: v.to_dict() for k, v in self.per_class.items()},
            "accuracy": self.accuracy,
            "macro_avg": self.macro_avg.to_dict(),
            "weighted_avg": self.weighted_avg.to_dict(),
            "per_feature_accuracy": dict(self.per_feature_accuracy),
            "feature_bins": dict(self.feature_bins),
            "errored": self.errored,
            "bin_thresholds": {"high": self.bin_thresholds[0],
                               "medium": self.bin_thresholds[1]},
        }


def _rate(num: int, den: int) -> float:
    return num / den if den else 0.0


def _f1(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


def bin_accuracy(fraction: float,
                 thresholds: tuple[float, float] = (BIN_HIGH, BIN_MEDIUM)) -> str:
    high, medium = thresholds
    if fraction >= high:
        return "high"
    if fraction >= medium:
        return "medium"
    return "low"


def compute_metrics(predictions: Sequence[Outcome], golds: Sequence[Outcome],
                    errored: int = 0,
                    bin_thresholds: tuple[float, float] = (BIN_HIGH, BIN_MEDIUM),
                    ) -> MetricsReport:
    """Classification report over aligned prediction/gold lists."""
    if len(predictions) != len(golds):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(golds)} golds")
    if not golds:
        raise EmptyDataset("no records to score")

    tp = fp = fn = tn = 0
    for pred, gold in zip(predictions, golds):
        if gold.label == "phishing":
            if pred.label == "phishing":
                tp += 1
            else:
                fn += 1
        else:
            if pred.label == "phishing":
                fp += 1
            else:
                tn += 1

    # Per-class scores: each class scored as the positive class in turn.
    phishing = ClassScores(
        precision=_rate(tp, tp + fp),
        recall=_rate(tp, tp + fn),
        f1=_f1(_rate(tp, tp + fp), _rate(tp, tp + fn)),
        support=tp + fn,
    )
    safe = ClassScores(
        precision=_rate(tn, tn + fn),
        recall=_rate(tn, tn + fp),
        f1=_f1(_rate(tn, tn + fn), _rate(tn, tn + fp)),
        support=tn + fp,
    )
    total = tp + fp + fn + tn
    accuracy = _rate(tp + tn, total)

    macro = ClassScores(
        precision=(phishing.precision + safe.precision) / 2,
        recall=(phishing.recall + safe.recall) / 2,
        f1=(phishing.f1 + safe.f1) / 2,
        support=total,
    )
    weighted = ClassScores(
        precision=_rate_weighted(phishing, safe, "precision"),
        recall=_rate_weighted(phishing, safe, "recall"),
        f1=_rate_weighted(phishing, safe, "f1"),
        support=total,
    )

    feature_hits: dict[str, int] = {}
    feature_totals: dict[str, int] = {}
    for pred, gold in zip(predictions, golds):
        if gold.label != "phishing":
            continue
        predicted = set(pred.features)
        for feat in gold.features:
            feature_totals[feat] = feature_totals.get(feat, 0) + 1
            if feat in predicted:
                feature_hits[feat] = feature_hits.get(feat, 0) + 1
    per_feature = {
        feat: _rate(feature_hits.get(feat, 0), count)
        for feat, count in sorted(feature_totals.items())
    }
    bins = {feat: bin_accuracy(acc, bin_thresholds) for feat, acc in per_feature.items()}

    return MetricsReport(
        tp=tp, fp=fp, fn=fn, tn=tn,
        per_class={"phishing": phishing, "safe": safe},
        accuracy=accuracy,
        macro_avg=macro,
        weighted_avg=weighted,
        per_feature_accuracy=per_feature,
        feature_bins=bins,
        errored=errored,
        bin_thresholds=bin_thresholds,
    )


def _rate_weighted(phishing: ClassScores, safe: ClassScores, attr: str) -> float:
    total = phishing.support + safe.support
    if not total:
        return 0.0
    return (getattr(phishing, attr) * phishing.support
            + getattr(safe, attr) * safe.support) / total


def _record_from_json(data: dict, catalog: FeatureCatalog) -> EvalRecord:
    features = []
    for raw in data.get("gold_features", ()):
        name = catalog.normalize_name(raw)
        if name == UNKNOWN:
            raise ValueError(f"gold feature not in catalog: {raw!r}")
        features.append(name)
    return EvalRecord(
        sender_address=data["sender_address"],
        subject=data.get("subject", ""),
        body_text=data["body_text"],
        gold_label=data["gold_label"],
        gold_features=tuple(features),
        sender_name=data.get("sender_name", ""),
        body_html=data.get("body_html"),
        sender_in_contacts=bool(data.get("sender_in_contacts", False)),
        record_id=str(data.get("id", "")),
    )


def load_dataset(path: str, catalog: FeatureCatalog):
    """Load labeled emails from a JSONL file or an .eml+.labels.json dir.

    Returns (records, load_errors); malformed entries become error
    strings instead of aborting the run.
    """
    records: list[EvalRecord] = []
    errors: list[str] = []
    if os.path.isdir(path):
        for name in sorted(os.listdir(path)):
            if not name.endswith(".eml"):
                continue
            eml_path = os.path.join(path, name)
            labels_path = os.path.join(path, name[:-4] + ".labels.json")
            try:
                with open(eml_path, "rb") as fh:
                    email = parse_eml(fh.read())
                with open(labels_path, "r", encoding="utf-8") as fh:
                    labels = json.load(fh)
                records.append(_record_from_json({
                    "sender_address": email.sender_address,
                    "sender_name": email.sender_name,
                    "subject": email.subject,
                    "body_text": email.body_text,
                    "body_html": email.body_html,
                    "sender_in_contacts": labels.get("sender_in_contacts", False),
                    "gold_label": labels["gold_label"],
                    "gold_features": labels.get("gold_features", []),
                    "id": name[:-4],
                }, catalog))
            except Exception as exc:
                errors.append(f"{name}: {exc}")
        return records, errors

    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(_record_from_json(json.loads(line), catalog))
            except Exception as exc:
                errors.append(f"line {line_no}: {exc}")
    return records, errors


def run_eval(records: Iterable[EvalRecord], pipeline, catalog: FeatureCatalog,
             results_path: Optional[str] = None,
             load_errors: Sequence[str] = (),
             bin_thresholds: tuple[float, float] = (BIN_HIGH, BIN_MEDIUM),
             ) -> MetricsReport:
    """Analyze every record; errored records stay out of the matrix."""
    predictions: list[Outcome] = []
    golds: list[Outcome] = []
    lines: list[dict] = [
        {"error": err, "stage": "load"} for err in load_errors
    ]
    errored = len(lines)

    for index, record in enumerate(records):
        email = record.to_email_record(index)
        entry: dict = {
            "id": record.record_id or f"eval-{index}",
            "gold_label": record.gold_label,
            "gold_features": list(record.gold_features),
        }
        try:
            report = pipeline.analyze_record(email)
        except Exception as exc:
            entry["error"] = str(exc)
            entry["stage"] = getattr(exc, "stage", "pipeline")
            errored += 1
        else:
            entry["predicted_label"] = report.verdict.label
            entry["predicted_features"] = list(report.features_found)
            entry["percentage"] = report.verdict.percentage
            entry["feature_score"] = report.feature_score
            predictions.append(Outcome(report.verdict.label,
                                       report.features_found))
            golds.append(Outcome(record.gold_label, record.gold_features))
        lines.append(entry)

    if results_path:
        with open(results_path, "w", encoding="utf-8") as fh:
            for entry in lines:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")

    metrics = compute_metrics(predictions, golds, errored=errored,
                              bin_thresholds=bin_thresholds)
    return metrics


def recompute_from_results(results_path: str,
                           bin_thresholds: tuple[float, float] = (BIN_HIGH, BIN_MEDIUM),
                           ) -> MetricsReport:
    """Rebuild the summary from a results file; must match the original."""
    predictions: list[Outcome] = []
    golds: list[Outcome] = []
    errored = 0
    with open(results_path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            if "error" in entry:
                errored += 1
                continue
            predictions.append(Outcome(entry["predicted_label"],
                                       tuple(entry.get("predicted_features", ()))))
            golds.append(Outcome(entry["gold_label"],
                                 tuple(entry.get("gold_features", ()))))
    return compute_metrics(predictions, golds, errored=errored,
                           bin_thresholds=bin_thresholds)


def format_table(metrics: MetricsReport) -> str:
    """Human-readable classification table (3-decimal cells)."""
    def fmt(x: float) -> str:
        return f"{x:.3f}"

    rows = [
        ("", "Precision", "Recall", "F1-Score", "Support"),
        ("Phishing",
         fmt(metrics.per_class["phishing"].precision),
         fmt(metrics.per_class["phishing"].recall),
         fmt(metrics.per_class["phishing"].f1),
         str(metrics.per_class["phishing"].support)),
        ("Safe",
         fmt(metrics.per_class["safe"].precision),
         fmt(metrics.per_class["safe"].recall),
         fmt(metrics.per_class["safe"].f1),
         str(metrics.per_class["safe"].support)),
        ("Accuracy", "", "", fmt(metrics.accuracy), str(metrics.total)),
        ("Macro Avg",
         fmt(metrics.macro_avg.precision),
         fmt(metrics.macro_avg.recall),
         fmt(metrics.macro_avg.f1),
         str(metrics.total)),
        ("Weighted Avg",
         fmt(metrics.weighted_avg.precision),
         fmt(metrics.weighted_avg.recall),
         fmt(metrics.weighted_avg.f1),
         str(metrics.total)),
    ]
    widths = [max(len(row[i]) for row in rows) for i in range(5)]
    out = []
    for row in rows:
        out.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    if metrics.errored:
        out.append(f"Errored records excluded from the matrix: {metrics.errored}")
    if metrics.per_feature_accuracy:
        high, medium = metrics.bin_thresholds
        out.append("")
        out.append(f"Per-feature detection (high >= {high:g}, medium >= {medium:g}):")
        for feat, acc in metrics.per_feature_accuracy.items():
            out.append(f"  {feat}: {acc:.3f} ({metrics.feature_bins[feat]})")
    return "\n".join(out)
