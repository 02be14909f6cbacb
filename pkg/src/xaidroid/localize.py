"""Attention roll-up from nodes to methods, classes, and app verdicts.

Per-node attention from each model is summed over the APIs a method calls,
normalized so an app's methods sum to 1, and accumulated per class. Units
whose value strictly exceeds the threshold are flagged malicious; the two
models' flags are combined with a logical AND at every level.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, UsageError

REPORT_FORMAT = "xaidroid-report-v1"
MODEL_TAGS = ("gam", "gat")
MALICIOUS = "malicious"
BENIGN = "benign"
METHOD_THRESHOLD_DEFAULT = 1e-4
CLASS_THRESHOLD_DEFAULT = 1e-3


@dataclass(frozen=True)
class AttentionMap:
    """Per-node attention scores from one model, keyed by vocabulary id."""

    model: str
    scores: dict

    def __post_init__(self):
        if self.model not in MODEL_TAGS:
            raise UsageError(f"model tag must be one of {MODEL_TAGS}")
        for vid, value in self.scores.items():
            if not np.isfinite(value) or value < 0.0:
                raise UsageError(f"attention for node {vid} must be finite and >= 0")


def attention_map(model, graph, vector):
    """Wrap a model's attention vector (graph.nodes order) as an AttentionMap."""
    values = np.asarray(vector, dtype=np.float64)
    if values.shape != (len(graph.nodes),):
        raise UsageError("attention vector must have one entry per graph node")
    return AttentionMap(model, {vid: float(values[i]) for i, vid in enumerate(graph.nodes)})


def method_attention(attn, graph):
    """Sum attention over each method's own API calls; no APIs means 0."""
    known = set(graph.nodes)
    extra = sorted(set(attn.scores) - known)
    if extra:
        raise UsageError(f"attention covers nodes outside the graph: {extra[:5]}")
    out = {}
    for record in graph.methods:
        method_id = f"{record.class_name}->{record.method_name}"
        out[method_id] = float(sum(attn.scores.get(vid, 0.0) for vid in record.api_nodes))
    return out


def normalize_methods(ma):
    """Divide by the app total; a zero total degenerates to all zeros."""
    for method_id, value in ma.items():
        if value < 0.0:
            raise UsageError(f"method attention for {method_id!r} must be >= 0")
    total = sum(ma.values())
    if total == 0.0:
        return {method_id: 0.0 for method_id in ma}
    return {method_id: value / total for method_id, value in ma.items()}


def class_attention(ma_norm, class_of_method):
    """Accumulate normalized method attention per declaring class."""
    out = {}
    for method_id, value in ma_norm.items():
        if method_id not in class_of_method:
            raise UsageError(f"method {method_id!r} has no class mapping")
        cls = class_of_method[method_id]
        out[cls] = out.get(cls, 0.0) + value
    return out


def threshold_verdicts(values, threshold):
    """Malicious iff value strictly exceeds the threshold."""
    if threshold <= 0.0:
        raise UsageError("threshold must be positive")
    return {
        key: MALICIOUS if value > threshold else BENIGN
        for key, value in values.items()
    }


def ensemble_and(verdict_a, verdict_b):
    """Malicious only when both models agree on malicious."""
    for verdict in (verdict_a, verdict_b):
        if verdict not in (MALICIOUS, BENIGN):
            raise UsageError(f"missing or invalid model verdict: {verdict!r}")
    return MALICIOUS if verdict_a == MALICIOUS and verdict_b == MALICIOUS else BENIGN


def _prob_verdict(probs, tag):
    values = np.asarray(probs, dtype=np.float64)
    if values.shape != (2,) or not np.all(np.isfinite(values)) or np.any(values < 0):
        raise UsageError(f"{tag} class probabilities must be two finite non-negatives")
    if abs(values.sum() - 1.0) > 1e-6:
        raise UsageError(f"{tag} class probabilities must sum to 1")
    return MALICIOUS if values[1] > values[0] else BENIGN


def detect_app(gam_probs, gat_probs):
    """Per-model argmax verdicts plus their AND; ties resolve to benign."""
    gam = _prob_verdict(gam_probs, "gam")
    gat = _prob_verdict(gat_probs, "gat")
    return {"gam": gam, "gat": gat, "ensemble": ensemble_and(gam, gat)}


@dataclass(frozen=True)
class MethodReport:
    class_name: str
    method_name: str
    ma: dict
    ma_norm: dict
    verdicts: dict

    @property
    def method_id(self):
        return f"{self.class_name}->{self.method_name}"


@dataclass(frozen=True)
class ClassReport:
    class_name: str
    ca: dict
    verdicts: dict


@dataclass(frozen=True)
class LocalizationReport:
    app_id: str
    methods: tuple
    classes: tuple
    app_verdicts: dict
    method_threshold: float = METHOD_THRESHOLD_DEFAULT
    class_threshold: float = CLASS_THRESHOLD_DEFAULT
    label: str = "unknown"
    extras: dict = field(default_factory=dict)


def localize_app(
    graph,
    gam_attention,
    gat_attention,
    gam_probs,
    gat_probs,
    method_threshold=METHOD_THRESHOLD_DEFAULT,
    class_threshold=CLASS_THRESHOLD_DEFAULT,
):
    """Build the full per-method / per-class / app-level report for one app."""
    if method_threshold <= 0.0 or class_threshold <= 0.0:
        raise UsageError("thresholds must be positive")
    maps = {
        "gam": attention_map("gam", graph, gam_attention),
        "gat": attention_map("gat", graph, gat_attention),
    }
    ma = {tag: method_attention(maps[tag], graph) for tag in MODEL_TAGS}
    ma_norm = {tag: normalize_methods(ma[tag]) for tag in MODEL_TAGS}
    class_of = {
        f"{r.class_name}->{r.method_name}": r.class_name for r in graph.methods
    }
    ca = {tag: class_attention(ma_norm[tag], class_of) for tag in MODEL_TAGS}
    mverd = {tag: threshold_verdicts(ma_norm[tag], method_threshold) for tag in MODEL_TAGS}
    cverd = {tag: threshold_verdicts(ca[tag], class_threshold) for tag in MODEL_TAGS}

    methods = []
    for record in graph.methods:
        mid = f"{record.class_name}->{record.method_name}"
        verdicts = {tag: mverd[tag][mid] for tag in MODEL_TAGS}
        verdicts["ensemble"] = ensemble_and(verdicts["gam"], verdicts["gat"])
        methods.append(
            MethodReport(
                class_name=record.class_name,
                method_name=record.method_name,
                ma={tag: ma[tag][mid] for tag in MODEL_TAGS},
                ma_norm={tag: ma_norm[tag][mid] for tag in MODEL_TAGS},
                verdicts=verdicts,
            )
        )
    classes = []
    for cls in sorted({r.class_name for r in graph.methods}):
        verdicts = {tag: cverd[tag][cls] for tag in MODEL_TAGS}
        verdicts["ensemble"] = ensemble_and(verdicts["gam"], verdicts["gat"])
        classes.append(
            ClassReport(
                class_name=cls,
                ca={tag: ca[tag][cls] for tag in MODEL_TAGS},
                verdicts=verdicts,
            )
        )
    return LocalizationReport(
        app_id=graph.app_id,
        methods=tuple(methods),
        classes=tuple(classes),
        app_verdicts=detect_app(gam_probs, gat_probs),
        method_threshold=method_threshold,
        class_threshold=class_threshold,
        label=graph.label,
    )


def _ensemble_weight(entry):
    return min(entry["gam"], entry["gat"])


def save_report(report, path):
    payload = {
        "format": REPORT_FORMAT,
        "app_id": report.app_id,
        "label": report.label,
        "thresholds": {
            "method": report.method_threshold,
            "class": report.class_threshold,
        },
        "app": dict(report.app_verdicts),
        "methods": [
            {
                "class": m.class_name,
                "method": m.method_name,
                "ma": dict(m.ma),
                "ma_norm": dict(m.ma_norm),
                "verdict": dict(m.verdicts),
            }
            for m in report.methods
        ],
        "classes": [
            {"class": c.class_name, "ca": dict(c.ca), "verdict": dict(c.verdicts)}
            for c in report.classes
        ],
    }
    if report.extras:
        payload["provenance"] = dict(report.extras)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def load_report(path):
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    if not isinstance(payload, dict) or payload.get("format") != REPORT_FORMAT:
        raise DataError(f"{path}: not a {REPORT_FORMAT} file")
    try:
        methods = tuple(
            MethodReport(
                class_name=m["class"],
                method_name=m["method"],
                ma=dict(m["ma"]),
                ma_norm=dict(m["ma_norm"]),
                verdicts=dict(m["verdict"]),
            )
            for m in payload["methods"]
        )
        classes = tuple(
            ClassReport(class_name=c["class"], ca=dict(c["ca"]), verdicts=dict(c["verdict"]))
            for c in payload["classes"]
        )
        return LocalizationReport(
            app_id=payload["app_id"],
            methods=methods,
            classes=classes,
            app_verdicts=dict(payload["app"]),
            method_threshold=float(payload["thresholds"]["method"]),
            class_threshold=float(payload["thresholds"]["class"]),
            label=payload.get("label", "unknown"),
            extras=dict(payload.get("provenance", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed report ({exc})") from exc


def render_report(report):
    """Human-readable rendering, strongest ensemble signal first."""
    lines = [
        f"app {report.app_id}: gam={report.app_verdicts['gam']} "
        f"gat={report.app_verdicts['gat']} ensemble={report.app_verdicts['ensemble']}",
        f"thresholds: method>{report.method_threshold:g} class>{report.class_threshold:g}",
        "",
        f"{'ens':>9}  {'gam_norm':>10}  {'gat_norm':>10}  method",
    ]
    for m in sorted(report.methods, key=lambda m: -_ensemble_weight(m.ma_norm)):
        lines.append(
            f"{m.verdicts['ensemble']:>9}  {m.ma_norm['gam']:>10.6f}  "
            f"{m.ma_norm['gat']:>10.6f}  {m.method_id}"
        )
    lines.append("")
    lines.append(f"{'ens':>9}  {'gam_ca':>10}  {'gat_ca':>10}  class")
    for c in sorted(report.classes, key=lambda c: -_ensemble_weight(c.ca)):
        lines.append(
            f"{c.verdicts['ensemble']:>9}  {c.ca['gam']:>10.6f}  "
            f"{c.ca['gat']:>10.6f}  {c.class_name}"
        )
    return "\n".join(lines) + "\n"
