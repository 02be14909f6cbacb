"""The sensitive-API vocabulary: which signatures become graph nodes."""

from __future__ import annotations

import hashlib
import json

from ..errors import DataError, UsageError

VOCAB_FORMAT = "xaidroid-vocab-v1"


class ApiVocabulary:
    """Ordered set of API signatures with dense ids 0..n-1."""

    def __init__(self, apis, superset_sha256=None, min_apps=None):
        apis = tuple(apis)
        if len(set(apis)) != len(apis):
            raise UsageError("vocabulary signatures must be unique")
        self.apis = apis
        self.index = {sig: i for i, sig in enumerate(apis)}
        self.superset_sha256 = superset_sha256
        self.min_apps = min_apps

    def __len__(self):
        return len(self.apis)

    def __contains__(self, sig):
        return sig in self.index

    def __iter__(self):
        return iter(self.apis)

    def __eq__(self, other):
        return isinstance(other, ApiVocabulary) and self.apis == other.apis

    def id_of(self, sig: str) -> int:
        return self.index[sig]

    def signature_of(self, vid: int) -> str:
        return self.apis[vid]


def build_vocabulary(corpus_usage, superset, min_apps: int) -> ApiVocabulary:
    """Keep the superset APIs used by at least min_apps distinct apps.

    corpus_usage maps app id to the set of API signatures that app uses
    (any mapping or iterable of pairs). Result is ordered by signature.
    """
    if min_apps < 1:
        raise UsageError("min_apps must be at least 1")
    items = corpus_usage.items() if hasattr(corpus_usage, "items") else list(corpus_usage)
    counts = {}
    n_apps = 0
    for _, sigs in items:
        n_apps += 1
        for sig in set(sigs):
            counts[sig] = counts.get(sig, 0) + 1
    if n_apps == 0:
        raise UsageError("corpus is empty")
    kept = sorted(sig for sig in set(superset) if counts.get(sig, 0) >= min_apps)
    return ApiVocabulary(kept, min_apps=min_apps)


def hash_superset(signatures) -> str:
    """Stable content hash of a superset signature list."""
    blob = "\n".join(signatures).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def save_vocabulary(vocab: ApiVocabulary, path) -> None:
    doc = {
        "format": VOCAB_FORMAT,
        "apis": list(vocab.apis),
        "superset_sha256": vocab.superset_sha256,
        "min_apps": vocab.min_apps,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_vocabulary(path) -> ApiVocabulary:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != VOCAB_FORMAT:
        raise DataError(f"{path}: expected format {VOCAB_FORMAT!r}")
    return ApiVocabulary(
        doc["apis"],
        superset_sha256=doc.get("superset_sha256"),
        min_apps=doc.get("min_apps"),
    )
