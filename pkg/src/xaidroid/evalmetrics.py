"""Confusion-matrix scoring for app detection and code localization.

App-level rows treat every report as one prediction. Method- and class-level
rows are computed over malicious apps only, grouped by the planted variant,
with an unweighted macro average across variants. Ratios with a zero
denominator are reported as 0 and flagged rather than NaN.
"""

import io
from dataclasses import dataclass

from .errors import UsageError
from .localize import BENIGN, MALICIOUS

LEVELS = ("app", "class", "method")
DECISIONS = ("gam", "gat", "ensemble")
SWEEP_THRESHOLDS = (5e-3, 1e-3, 5e-4, 1e-4, 5e-5)
METRIC_NAMES = ("accuracy", "precision", "recall", "f1", "fpr", "fnr")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise UsageError("confusion counts must be non-negative")

    def add(self, other):
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp,
            self.tn + other.tn, self.fn + other.fn,
        )

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricRow:
    accuracy: float
    precision: float
    recall: float
    f1: float
    fpr: float
    fnr: float
    undefined: tuple = ()


def score(predictions, truths):
    """Count the confusion matrix; malicious is the positive class."""
    preds = list(predictions)
    trues = list(truths)
    if len(preds) != len(trues):
        raise UsageError(
            f"got {len(preds)} predictions for {len(trues)} truth labels"
        )
    tp = fp = tn = fn = 0
    for pred, true in zip(preds, trues):
        for label in (pred, true):
            if label not in (MALICIOUS, BENIGN):
                raise UsageError(f"invalid label {label!r}")
        if true == MALICIOUS:
            if pred == MALICIOUS:
                tp += 1
            else:
                fn += 1
        elif pred == MALICIOUS:
            fp += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, tn, fn)


def _ratio(num, den, name, undefined):
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def metrics(counts):
    """Standard detection metrics; zero-denominator ratios become 0, flagged."""
    if counts.total == 0:
        raise UsageError("cannot compute metrics from all-zero counts")
    undefined = []
    precision = _ratio(counts.tp, counts.tp + counts.fp, "precision", undefined)
    recall = _ratio(counts.tp, counts.tp + counts.fn, "recall", undefined)
    f1 = _ratio(2.0 * precision * recall, precision + recall, "f1", undefined)
    accuracy = (counts.tp + counts.tn) / counts.total
    fpr = _ratio(counts.fp, counts.fp + counts.tn, "fpr", undefined)
    fnr = _ratio(counts.fn, counts.fn + counts.tp, "fnr", undefined)
    return MetricRow(accuracy, precision, recall, f1, fpr, fnr, tuple(undefined))


def macro_average(rows):
    """Unweighted per-metric mean across variant rows."""
    rows = list(rows)
    if not rows:
        raise UsageError("cannot average zero metric rows")
    undefined = sorted({name for row in rows for name in row.undefined})
    values = [
        sum(getattr(row, name) for row in rows) / len(rows) for name in METRIC_NAMES
    ]
    return MetricRow(*values, undefined=tuple(undefined))


def _truth_for(truths, report):
    if report.app_id not in truths:
        return None
    return truths[report.app_id]


def _check_coverage(reports, truths):
    missing = sorted(r.app_id for r in reports if r.app_id not in truths)
    if missing:
        raise UsageError(f"no truth records for apps: {missing}")


def _unit_pairs(report, truth, level, decision):
    """Aligned (prediction, truth) label lists for one malicious app."""
    preds, trues = [], []
    if level == "method":
        truth_methods = truth.get("methods", {})
        for m in report.methods:
            preds.append(m.verdicts[decision])
            trues.append(truth_methods.get(m.method_id, BENIGN))
    else:
        truth_classes = truth.get("classes", {})
        for c in report.classes:
            preds.append(c.verdicts[decision])
            trues.append(truth_classes.get(c.class_name, BENIGN))
    return preds, trues


def evaluate_corpus(reports, truths, level, decision="ensemble"):
    """MetricRow per variant plus the 'average' macro row.

    App level yields a single 'all' variant over every report; method and
    class level aggregate counts per planted variant over malicious apps.
    """
    if level not in LEVELS:
        raise UsageError(f"level must be one of {LEVELS}")
    if decision not in DECISIONS:
        raise UsageError(f"decision must be one of {DECISIONS}")
    reports = list(reports)
    _check_coverage(reports, truths)
    if level == "app":
        preds = [r.app_verdicts[decision] for r in reports]
        trues = [truths[r.app_id]["label"] for r in reports]
        if not preds:
            raise UsageError("no reports to evaluate")
        row = metrics(score(preds, trues))
        return {"all": row, "average": row}
    per_variant = {}
    for report in reports:
        truth = truths[report.app_id]
        if truth["label"] != MALICIOUS:
            continue
        variant = truth.get("variant", "unknown")
        preds, trues = _unit_pairs(report, truth, level, decision)
        counts = score(preds, trues)
        per_variant[variant] = per_variant.get(variant, ConfusionCounts()).add(counts)
    if not per_variant:
        raise UsageError("no malicious apps present; nothing to localize against")
    rows = {variant: metrics(counts) for variant, counts in sorted(per_variant.items())}
    rows["average"] = macro_average(rows.values())
    return rows


def _thresholded(report, level, decision, threshold):
    units = report.methods if level == "method" else report.classes
    key = "ma_norm" if level == "method" else "ca"
    preds = []
    for unit in units:
        values = getattr(unit, key)
        if decision == "ensemble":
            hit = values["gam"] > threshold and values["gat"] > threshold
        else:
            hit = values[decision] > threshold
        preds.append(MALICIOUS if hit else BENIGN)
    return preds


def threshold_sweep(
    reports, truths, level, thresholds=SWEEP_THRESHOLDS, decision="ensemble"
):
    """Re-threshold stored attention values; returns [(threshold, recall, f1)].

    Counts are pooled over every malicious app so each threshold yields one
    recall/F1 point, mirroring a recall-versus-threshold curve.
    """
    if level not in ("class", "method"):
        raise UsageError("sweep level must be 'class' or 'method'")
    if decision not in DECISIONS:
        raise UsageError(f"decision must be one of {DECISIONS}")
    reports = list(reports)
    _check_coverage(reports, truths)
    out = []
    for threshold in thresholds:
        if threshold <= 0.0:
            raise UsageError("sweep thresholds must be positive")
        pooled = ConfusionCounts()
        seen = False
        for report in reports:
            truth = truths[report.app_id]
            if truth["label"] != MALICIOUS:
                continue
            seen = True
            preds = _thresholded(report, level, decision, threshold)
            _, trues = _unit_pairs(report, truth, level, decision)
            pooled = pooled.add(score(preds, trues))
        if not seen:
            raise UsageError("no malicious apps present; nothing to sweep")
        row = metrics(pooled)
        out.append((threshold, row.recall, row.f1))
    return out


def sweep_csv(rows):
    buffer = io.StringIO()
    buffer.write("threshold,recall,f1\n")
    for threshold, recall, f1 in rows:
        buffer.write(f"{threshold:g},{recall:.6f},{f1:.6f}\n")
    return buffer.getvalue()


def render_rows(rows):
    """Aligned text table over variant rows, 'average' last."""
    names = [name for name in rows if name != "average"] + (
        ["average"] if "average" in rows else []
    )
    width = max(len("variant"), *(len(name) for name in names))
    header = f"{'variant':<{width}}  " + "  ".join(f"{n:>9}" for n in METRIC_NAMES)
    lines = [header]
    for name in names:
        row = rows[name]
        cells = "  ".join(f"{getattr(row, n):>9.4f}" for n in METRIC_NAMES)
        suffix = f"  [zero-denominator: {', '.join(row.undefined)}]" if row.undefined else ""
        lines.append(f"{name:<{width}}  {cells}{suffix}")
    return "\n".join(lines) + "\n"
