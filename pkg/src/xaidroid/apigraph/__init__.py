"""Listings to app-level API call graphs."""

from .listing import (
    API_CLASS_PREFIXES,
    InstructionRow,
    MethodListing,
    parse_listing,
    pretty_print,
    rename_identifiers,
)
from .merge import (
    GRAPH_FORMAT,
    ApiCallGraph,
    MethodRecord,
    load_graph,
    merge_app_graph,
    save_graph,
)
from .methodgraph import CallSite, MethodGraph, build_method_graph
from .vocabulary import (
    VOCAB_FORMAT,
    ApiVocabulary,
    build_vocabulary,
    hash_superset,
    load_vocabulary,
    save_vocabulary,
)

__all__ = [
    "API_CLASS_PREFIXES",
    "ApiCallGraph",
    "ApiVocabulary",
    "CallSite",
    "GRAPH_FORMAT",
    "InstructionRow",
    "MethodGraph",
    "MethodListing",
    "MethodRecord",
    "VOCAB_FORMAT",
    "build_method_graph",
    "build_vocabulary",
    "hash_superset",
    "load_graph",
    "load_vocabulary",
    "merge_app_graph",
    "parse_listing",
    "pretty_print",
    "rename_identifiers",
    "save_graph",
    "save_vocabulary",
]
