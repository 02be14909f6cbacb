"""App-level API call graph: merge per-method graphs by call-site inlining.

Nodes are collapsed per unique vocabulary API app-wide, so merging only
adds edges: predecessors of a call site connect to the callee's entry
APIs, the callee's exit APIs connect to the followers of the site. A
callee without APIs of its own is looked through recursively via its own
call sites. Call sites whose target is not a method of the app (framework
helpers, reflection) are dropped and counted. The rule application is
repeated until the edge set stops changing, which is immediate here but
guards the contract directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import DataError, UsageError

GRAPH_FORMAT = "xaidroid-graph-v1"
LABELS = ("malicious", "benign", "unknown")


@dataclass(frozen=True)
class MethodRecord:
    class_name: str
    method_name: str
    api_nodes: frozenset
    truth: str = "unknown"


@dataclass(frozen=True)
class ApiCallGraph:
    app_id: str
    label: str
    nodes: tuple
    edges: tuple
    methods: tuple
    unresolved_call_sites: int = 0
    node_apis: dict = field(default=None, compare=False)

    def __post_init__(self):
        if self.label not in LABELS:
            raise UsageError(f"app label must be one of {LABELS}, got {self.label!r}")
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise UsageError("duplicate node ids")
        for s, t in self.edges:
            if s not in node_set or t not in node_set:
                raise UsageError(f"edge ({s},{t}) has an endpoint outside the node set")
        for m in self.methods:
            if m.truth not in LABELS:
                raise UsageError(f"method truth must be one of {LABELS}")
            if not m.api_nodes <= node_set:
                raise UsageError(f"method {m.method_name!r} has APIs outside the graph")

    @property
    def n_nodes(self):
        return len(self.nodes)


def _inline_targets(callee, by_id, seen):
    """Entry/exit API sets a call site connects to, looking through
    API-less callees; sites of an API-less method act as alternatives."""
    mg = by_id.get(callee)
    if mg is None:
        return frozenset(), frozenset()
    if mg.api_nodes:
        return mg.entry_apis, mg.exit_apis
    if callee in seen:
        return frozenset(), frozenset()
    seen = seen | {callee}
    entries, exits = set(), set()
    for site in mg.call_sites:
        e, x = _inline_targets(site.callee, by_id, seen)
        entries |= e
        exits |= x
    return frozenset(entries), frozenset(exits)


def merge_app_graph(methods, app_label="unknown", truth_labels=None, app_id="") -> ApiCallGraph:
    """Union the method graphs of one app and inline call sites into edges."""
    truth_labels = truth_labels or {}
    by_id = {}
    for mg in methods:
        if mg.method_id in by_id:
            raise UsageError(f"duplicate method id {mg.method_id!r}")
        by_id[mg.method_id] = mg

    nodes = set()
    edges = set()
    for mg in methods:
        nodes |= mg.api_nodes
        edges |= set(mg.intra_edges)

    unresolved = 0
    site_links = []
    for mg in methods:
        for site in mg.call_sites:
            if site.callee not in by_id:
                unresolved += 1
                continue
            entries, exits = _inline_targets(site.callee, by_id, frozenset())
            site_links.append((site.preds, site.follows, entries, exits))

    changed = True
    while changed:
        changed = False
        for preds, follows, entries, exits in site_links:
            for p in preds:
                for e in entries:
                    if (p, e) not in edges:
                        edges.add((p, e))
                        changed = True
            for x in exits:
                for f in follows:
                    if (x, f) not in edges:
                        edges.add((x, f))
                        changed = True

    records = tuple(
        MethodRecord(
            mg.class_name,
            mg.method_name,
            mg.api_nodes,
            truth_labels.get(mg.method_id, "unknown"),
        )
        for mg in methods
    )
    return ApiCallGraph(
        app_id=app_id,
        label=app_label,
        nodes=tuple(sorted(nodes)),
        edges=tuple(sorted(edges)),
        methods=records,
        unresolved_call_sites=unresolved,
    )


def save_graph(graph: ApiCallGraph, vocab, path, provenance=None) -> None:
    """Write the versioned JSON graph file; vocab supplies node signatures."""
    doc = {
        "format": GRAPH_FORMAT,
        "app_id": graph.app_id,
        "label": graph.label,
        "nodes": [{"id": n, "api": vocab.signature_of(n)} for n in graph.nodes],
        "edges": [[s, t] for s, t in graph.edges],
        "methods": [
            {
                "class": m.class_name,
                "method": m.method_name,
                "apis": sorted(m.api_nodes),
                "truth": m.truth,
            }
            for m in graph.methods
        ],
    }
    if provenance:
        doc["provenance"] = dict(provenance)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_graph(path) -> ApiCallGraph:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != GRAPH_FORMAT:
        raise DataError(f"{path}: expected format {GRAPH_FORMAT!r}")
    try:
        nodes = tuple(int(n["id"]) for n in doc["nodes"])
        node_apis = {int(n["id"]): n["api"] for n in doc["nodes"]}
        edges = tuple((int(s), int(t)) for s, t in doc["edges"])
        methods = tuple(
            MethodRecord(
                m["class"], m["method"], frozenset(int(a) for a in m["apis"]), m["truth"]
            )
            for m in doc["methods"]
        )
        graph = ApiCallGraph(
            app_id=doc["app_id"],
            label=doc["label"],
            nodes=nodes,
            edges=edges,
            methods=methods,
            node_apis=node_apis,
        )
    except (KeyError, TypeError, ValueError, UsageError) as exc:
        raise DataError(f"{path}: malformed graph file ({exc})") from exc
    return graph
