"""Per-method API adjacency built from instruction-level control flow.

Edge rules: an API node is a call of a vocabulary signature; an edge joins
an API to the next vocabulary API reachable on some control-flow path with
nothing from the vocabulary in between. `if-*` rows branch two ways
(target, fall-through), `goto` one way, `return-*` ends a path, and every
other row, including invokes of non-vocabulary signatures, is passed
through. Non-vocabulary invokes are additionally recorded as call sites
together with the API nodes immediately before and after them, which is
what app-level merging consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .listing import MethodListing
from .vocabulary import ApiVocabulary

_KIND_PLAIN = 0
_KIND_API = 1
_KIND_SITE = 2
_KIND_RETURN = 3


@dataclass(frozen=True)
class CallSite:
    offset: int
    callee: str
    preds: frozenset
    follows: frozenset


@dataclass(frozen=True)
class MethodGraph:
    method_id: str
    class_name: str
    method_name: str
    api_nodes: frozenset
    intra_edges: tuple
    call_sites: tuple
    entry_apis: frozenset
    exit_apis: frozenset


def _successors(listing: MethodListing):
    rows = listing.rows
    index_of = {row.offset: i for i, row in enumerate(rows)}
    succ = []
    for i, row in enumerate(rows):
        op = row.opcode
        if op.startswith("return"):
            succ.append(())
        elif op.startswith("goto"):
            succ.append((index_of[row.target],))
        elif op.startswith("if-"):
            nxt = (index_of[row.target],)
            if i + 1 < len(rows):
                nxt += (i + 1,)
            succ.append(nxt)
        elif i + 1 < len(rows):
            succ.append((i + 1,))
        else:
            succ.append(())
    return succ


def _first_api_rows(seeds, succ, kind):
    """API rows reachable from seeds with no vocabulary API in between."""
    out = set()
    seen = set()
    stack = list(seeds)
    while stack:
        i = stack.pop()
        if i in seen:
            continue
        seen.add(i)
        if kind[i] == _KIND_API:
            out.add(i)
        else:
            stack.extend(succ[i])
    return out


def _first_api_rows_back(seeds, pred, kind):
    out = set()
    seen = set()
    stack = list(seeds)
    while stack:
        i = stack.pop()
        if i in seen:
            continue
        seen.add(i)
        if kind[i] == _KIND_API:
            out.add(i)
        else:
            stack.extend(pred[i])
    return out


def build_method_graph(listing: MethodListing, vocab: ApiVocabulary) -> MethodGraph:
    rows = listing.rows
    succ = _successors(listing)
    pred = [[] for _ in rows]
    for i, nxt in enumerate(succ):
        for j in nxt:
            pred[j].append(i)

    kind = []
    vid = [None] * len(rows)
    for i, row in enumerate(rows):
        sig = row.signature
        if sig is not None and sig in vocab:
            kind.append(_KIND_API)
            vid[i] = vocab.id_of(sig)
        elif sig is not None:
            kind.append(_KIND_SITE)
        elif row.opcode.startswith("return"):
            kind.append(_KIND_RETURN)
        else:
            kind.append(_KIND_PLAIN)

    api_nodes = frozenset(vid[i] for i in range(len(rows)) if kind[i] == _KIND_API)

    edges = set()
    for i in range(len(rows)):
        if kind[i] != _KIND_API:
            continue
        for j in _first_api_rows(succ[i], succ, kind):
            edges.add((vid[i], vid[j]))

    entry = frozenset(vid[i] for i in _first_api_rows([0] if rows else [], succ, kind))

    # An API exits the method if some path from it reaches a return row
    # without crossing another vocabulary API.
    clean = [False] * len(rows)
    exit_rows = set()
    stack = [i for i in range(len(rows)) if kind[i] == _KIND_RETURN]
    for i in stack:
        clean[i] = True
    while stack:
        i = stack.pop()
        for p in pred[i]:
            if kind[p] == _KIND_API:
                exit_rows.add(p)
            elif not clean[p]:
                clean[p] = True
                stack.append(p)
    exit_apis = frozenset(vid[i] for i in exit_rows)

    sites = []
    for i in range(len(rows)):
        if kind[i] != _KIND_SITE:
            continue
        preds = frozenset(vid[j] for j in _first_api_rows_back(pred[i], pred, kind))
        follows = frozenset(vid[j] for j in _first_api_rows(succ[i], succ, kind))
        sites.append(CallSite(rows[i].offset, rows[i].signature, preds, follows))

    return MethodGraph(
        method_id=listing.method_id,
        class_name=listing.class_name,
        method_name=listing.method_name,
        api_nodes=api_nodes,
        intra_edges=tuple(sorted(edges)),
        call_sites=tuple(sites),
        entry_apis=entry,
        exit_apis=exit_apis,
    )
