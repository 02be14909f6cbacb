"""Shared checkpoint envelope for the two models.

One JSON format holds either model: a config echo, the vocabulary
fingerprint the model was trained against, and named parameter tensors
as shape plus row-major values. Serialization is exact (float64 survives
the JSON round-trip bit for bit) and deterministic, so equal models
produce byte-identical files.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import DataError
from .numkernel import ParamSet

CKPT_FORMAT = "xaidroid-ckpt-v1"
MODEL_KINDS = ("gam", "gat")


def save_checkpoint(path, model_kind, config_dict, vocab_size, vocab_sha256, params):
    if model_kind not in MODEL_KINDS:
        raise DataError(f"unknown model kind {model_kind!r}")
    doc = {
        "format": CKPT_FORMAT,
        "model": model_kind,
        "config": config_dict,
        "vocab_size": int(vocab_size),
        "vocab_sha256": vocab_sha256,
        "params": {
            name: {
                "shape": list(params[name].shape),
                "data": params[name].ravel(order="C").tolist(),
            }
            for name in params.names()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_checkpoint(path, expect_kind=None):
    """Read a checkpoint into (kind, config dict, vocab_size, vocab_sha256, ParamSet)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != CKPT_FORMAT:
        raise DataError(f"{path}: expected format {CKPT_FORMAT!r}")
    kind = doc.get("model")
    if kind not in MODEL_KINDS:
        raise DataError(f"{path}: unknown model kind {kind!r}")
    if expect_kind is not None and kind != expect_kind:
        raise DataError(f"{path}: is a {kind} checkpoint, expected {expect_kind}")
    params = ParamSet()
    try:
        for name, spec in doc["params"].items():
            arr = np.asarray(spec["data"], dtype=np.float64).reshape(spec["shape"])
            params.add(name, arr)
        return kind, doc["config"], int(doc["vocab_size"]), doc.get("vocab_sha256"), params
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed checkpoint ({exc})") from exc
