"""Command line front end covering the whole pipeline.

Subcommands: gen-corpus, build-vocab, extract, train, detect, localize,
evaluate, sweep. Exit codes: 0 on success, 1 for usage errors (bad flags
or violated interface contracts), 2 for malformed or inconsistent data.
Every JSON output file carries its format version and, where the library
writer does not already record it, a provenance block with the invoking
configuration.
"""

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

from .apigraph.listing import API_CLASS_PREFIXES, parse_listing
from .apigraph.merge import load_graph, merge_app_graph, save_graph
from .apigraph.methodgraph import build_method_graph
from .apigraph.vocabulary import (
    build_vocabulary,
    hash_superset,
    load_vocabulary,
    save_vocabulary,
)
from .checkpoint import load_checkpoint
from .errors import DataError, UsageError
from .evalmetrics import (
    DECISIONS,
    LEVELS,
    SWEEP_THRESHOLDS,
    evaluate_corpus,
    render_rows,
    sweep_csv,
    threshold_sweep,
)
from .gam import GamConfig, GamModel, gam_predict, load_gam, save_gam, train_gam
from .gat import GatConfig, GatModel, gat_predict, load_gat, save_gat, train_gat
from .localize import (
    CLASS_THRESHOLD_DEFAULT,
    METHOD_THRESHOLD_DEFAULT,
    detect_app,
    localize_app,
    render_report,
    save_report,
)
from .synthcorpus import CorpusSpec, gen_corpus, load_manifest

METRICS_FORMAT = "xaidroid-metrics-v1"
SWEEP_FORMAT = "xaidroid-sweep-v1"
SPLITS = ("train", "test", "all")
ATTENTION_CHOICES = ("received", "literal")


class _Parser(argparse.ArgumentParser):
    """Argparse subclass that reports bad invocations as UsageError."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _corpus_root(corpus):
    p = Path(corpus)
    return p if p.is_dir() else p.parent


def _read_text(path):
    try:
        with open(path, encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from exc


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _manifest_rows(manifest, split):
    rows = [r for r in manifest["apps"] if split == "all" or r["split"] == split]
    if not rows:
        raise UsageError(f"corpus has no apps in split {split!r}")
    return rows


def _check_vocab_graphs(vocab, graphs):
    """Every stored node signature must match the vocabulary id mapping."""
    for g in graphs:
        for vid, api in g.node_apis.items():
            if vid >= len(vocab.apis) or vocab.signature_of(vid) != api:
                raise DataError(
                    f"graph {g.app_id!r}: node {vid} ({api!r}) does not match "
                    "the vocabulary; re-extract the graphs with this vocabulary"
                )


def _cmd_gen_corpus(args):
    spec = CorpusSpec(
        n_apps=args.apps,
        malware_ratio=args.malware_rate,
        mean_nodes=args.mean_nodes,
        seed=args.seed,
        decoys=args.decoys,
    )
    manifest = gen_corpus(spec, args.out)
    n_mal = sum(1 for row in manifest["apps"] if row["label"] == "malicious")
    print(
        f"corpus: {len(manifest['apps'])} apps ({n_mal} malicious), "
        f"seed {args.seed} -> {args.out}"
    )


def _cmd_build_vocab(args):
    manifest = load_manifest(args.corpus)
    root = _corpus_root(args.corpus)
    usage = {}
    for row in _manifest_rows(manifest, "all"):
        listings = parse_listing(_read_text(root / row["listing"]))
        usage[row["id"]] = {
            r.signature
            for listing in listings
            for r in listing.rows
            if r.signature and r.signature.startswith(API_CLASS_PREFIXES)
        }
    superset = sorted(set().union(*usage.values())) if usage else []
    vocab = build_vocabulary(usage, superset, min_apps=args.min_apps)
    vocab.superset_sha256 = hash_superset(superset)
    save_vocabulary(vocab, args.out)
    print(
        f"vocabulary: {len(vocab.apis)} apis from {len(usage)} apps "
        f"(min_apps={args.min_apps}) -> {args.out}"
    )


def _cmd_extract(args):
    vocab = load_vocabulary(args.vocab)
    listings = parse_listing(_read_text(args.listing))
    graphs = [build_method_graph(listing, vocab) for listing in listings]
    app_id = args.app_id or Path(args.listing).stem
    graph = merge_app_graph(graphs, app_label=args.label, truth_labels={}, app_id=app_id)
    provenance = {
        "command": "extract",
        "listing": str(args.listing),
        "vocab": str(args.vocab),
        "vocab_sha256": hash_superset(vocab.apis),
        "label": args.label,
    }
    save_graph(graph, vocab, args.out, provenance=provenance)
    print(
        f"graph {graph.app_id}: {graph.n_nodes} nodes, {len(graph.edges)} edges, "
        f"{len(graph.methods)} methods -> {args.out}"
    )


def _config_overrides(args, mapping):
    return {field: getattr(args, flag) for flag, field in mapping.items()
            if getattr(args, flag) is not None}


def _reject_flags(args, flags, model):
    for flag in flags:
        if getattr(args, flag) is not None:
            raise UsageError(f"--{flag} does not apply to --model {model}")


def _cmd_train(args):
    manifest = load_manifest(args.corpus)
    root = _corpus_root(args.corpus)
    vocab_path = args.vocab or root / manifest.get("vocabulary", "vocabulary.json")
    vocab = load_vocabulary(vocab_path)
    rows = _manifest_rows(manifest, args.split)
    graphs = [load_graph(root / r["graph"]) for r in rows]
    _check_vocab_graphs(vocab, graphs)
    sha = hash_superset(vocab.apis)

    common = {"epochs": "epochs", "lr": "learning_rate", "seed": "seed",
              "hidden": "hidden_dim"}
    if args.model == "gam":
        _reject_flags(args, ("heads", "layers"), "gam")
        common.update({"agents": "n_agents", "steps": "step_size"})
        config = GamConfig(**_config_overrides(args, common))
        model = GamModel(len(vocab.apis), config, vocab_sha256=sha)
        model, losses = train_gam(model, graphs, config)
        save_gam(model, args.out)
    else:
        _reject_flags(args, ("agents", "steps"), "gat")
        common.update({"heads": "n_heads", "layers": "n_layers"})
        config = GatConfig(**_config_overrides(args, common))
        model = GatModel(len(vocab.apis), config, vocab_sha256=sha)
        model, losses = train_gat(model, graphs, config)
        save_gat(model, args.out)
    print(
        f"trained {args.model} on {len(graphs)} graphs ({args.split} split), "
        f"epoch loss {losses[0]:.4f} -> {losses[-1]:.4f} -> {args.out}"
    )


def _load_model(path):
    kind, _, _, _, _ = load_checkpoint(path)
    if kind == "gam":
        return kind, load_gam(path)
    return kind, load_gat(path)


def _cmd_detect(args):
    graph = load_graph(args.graph)
    if args.checkpoint:
        if args.gam or args.gat:
            raise UsageError("--checkpoint conflicts with --gam/--gat")
        kind, model = _load_model(args.checkpoint)
        if kind == "gam":
            probs, _ = gam_predict(model, graph, model.config)
        else:
            probs, _ = gat_predict(model, graph, model.config)
        verdict = "malicious" if probs[1] > probs[0] else "benign"
        print(f"app {graph.app_id}: {kind}={verdict} p_malicious={probs[1]:.4f}")
        return
    if not (args.gam and args.gat):
        raise UsageError("detect needs --checkpoint or both --gam and --gat")
    gam_model = load_gam(args.gam)
    gat_model = load_gat(args.gat)
    gam_probs, _ = gam_predict(gam_model, graph, gam_model.config)
    gat_probs, _ = gat_predict(gat_model, graph, gat_model.config)
    verdicts = detect_app(gam_probs, gat_probs)
    print(
        f"app {graph.app_id}: gam={verdicts['gam']} (p={gam_probs[1]:.4f}) "
        f"gat={verdicts['gat']} (p={gat_probs[1]:.4f}) "
        f"ensemble={verdicts['ensemble']}"
    )


def _localize_one(graph, gam_model, gat_model, mth, cth, attention_mode):
    gam_probs, gam_att = gam_predict(gam_model, graph, gam_model.config)
    gat_probs, gat_att = gat_predict(gat_model, graph, gat_model.config, attention_mode)
    return localize_app(graph, gam_att, gat_att, gam_probs, gat_probs, mth, cth)


def _cmd_localize(args):
    graph = load_graph(args.graph)
    gam_model = load_gam(args.gam)
    gat_model = load_gat(args.gat)
    report = _localize_one(
        graph, gam_model, gat_model,
        args.method_threshold, args.class_threshold, args.attention,
    )
    if args.out:
        provenance = {
            "command": "localize",
            "graph": str(args.graph),
            "gam": str(args.gam),
            "gat": str(args.gat),
            "attention": args.attention,
        }
        save_report(replace(report, extras=provenance), args.out)
    sys.stdout.write(render_report(report))


_WORKER_MODELS = None


def _init_worker(gam_path, gat_path):
    global _WORKER_MODELS
    _WORKER_MODELS = (load_gam(gam_path), load_gat(gat_path))


def _report_job(job):
    path, mth, cth, attention = job
    gam_model, gat_model = _WORKER_MODELS
    return _localize_one(load_graph(path), gam_model, gat_model, mth, cth, attention)


def _corpus_reports(args):
    """Localization reports plus truth records for one corpus split.

    Worker processes only change wall time: jobs are mapped in manifest
    order and each report depends on nothing but its own graph.
    """
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    manifest = load_manifest(args.corpus)
    root = _corpus_root(args.corpus)
    rows = _manifest_rows(manifest, args.split)
    jobs = [
        (str(root / r["graph"]), args.method_threshold, args.class_threshold,
         args.attention)
        for r in rows
    ]
    if args.workers > 1:
        with ProcessPoolExecutor(
            max_workers=args.workers,
            initializer=_init_worker,
            initargs=(args.gam, args.gat),
        ) as pool:
            reports = list(pool.map(_report_job, jobs))
    else:
        _init_worker(args.gam, args.gat)
        reports = [_report_job(job) for job in jobs]
    truths = {}
    for r in rows:
        truths[r["id"]] = json.loads(_read_text(root / r["truth"]))
    return reports, truths


def _report_provenance(args, command):
    return {
        "command": command,
        "corpus": str(args.corpus),
        "gam": str(args.gam),
        "gat": str(args.gat),
        "split": args.split,
        "decision": args.decision,
        "method_threshold": args.method_threshold,
        "class_threshold": args.class_threshold,
        "attention": args.attention,
    }


def _cmd_evaluate(args):
    reports, truths = _corpus_reports(args)
    rows = evaluate_corpus(reports, truths, args.level, args.decision)
    if args.out:
        provenance = _report_provenance(args, "evaluate")
        provenance["level"] = args.level
        _write_json(args.out, {
            "format": METRICS_FORMAT,
            "provenance": provenance,
            "rows": {name: asdict(row) for name, row in rows.items()},
        })
    sys.stdout.write(render_rows(rows))


def _cmd_sweep(args):
    reports, truths = _corpus_reports(args)
    rows = threshold_sweep(
        reports, truths, args.level, tuple(args.thresholds), args.decision
    )
    provenance = _report_provenance(args, "sweep")
    provenance["level"] = args.level
    fields = " ".join(f"{k}={provenance[k]}" for k in sorted(provenance) if k != "command")
    text = f"# {SWEEP_FORMAT} {fields}\n" + sweep_csv(rows)
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
        print(f"sweep: {len(rows)} thresholds ({args.level} level) -> {args.out}")
    else:
        sys.stdout.write(text)


def _add_report_args(p):
    p.add_argument("--corpus", required=True, help="corpus directory")
    p.add_argument("--gam", required=True, help="gam checkpoint")
    p.add_argument("--gat", required=True, help="gat checkpoint")
    p.add_argument("--split", choices=SPLITS, default="test")
    p.add_argument("--decision", choices=DECISIONS, default="ensemble")
    p.add_argument("--method-threshold", type=float, default=METHOD_THRESHOLD_DEFAULT)
    p.add_argument("--class-threshold", type=float, default=CLASS_THRESHOLD_DEFAULT)
    p.add_argument("--attention", choices=ATTENTION_CHOICES, default="received")
    p.add_argument("--workers", type=int, default=1,
                   help="worker processes for per-app prediction")


def build_parser():
    parser = _Parser(
        prog="xaidroid",
        description="API call graph malware detection and localization toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("gen-corpus", help="generate a synthetic labeled corpus")
    p.add_argument("--out", required=True, help="corpus output directory")
    p.add_argument("--apps", type=int, default=500)
    p.add_argument("--malware-rate", type=float, default=0.5)
    p.add_argument("--mean-nodes", type=int, default=84)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--decoys", action="store_true",
                   help="give some benign apps unreachable suspicious APIs")
    p.set_defaults(func=_cmd_gen_corpus)

    p = sub.add_parser("build-vocab", help="build an API vocabulary from a corpus")
    p.add_argument("--corpus", required=True, help="corpus directory")
    p.add_argument("--out", required=True, help="vocabulary JSON path")
    p.add_argument("--min-apps", type=int, default=10,
                   help="keep APIs used by at least this many apps")
    p.set_defaults(func=_cmd_build_vocab)

    p = sub.add_parser("extract", help="extract an API call graph from a listing")
    p.add_argument("--vocab", required=True, help="vocabulary JSON path")
    p.add_argument("--listing", required=True, help="method listing (.slst)")
    p.add_argument("--out", required=True, help="graph JSON path")
    p.add_argument("--app-id", default=None, help="app id (default: listing stem)")
    p.add_argument("--label", default="unknown",
                   choices=("benign", "malicious", "unknown"))
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("train", help="train a detector on corpus graphs")
    p.add_argument("--model", required=True, choices=("gam", "gat"))
    p.add_argument("--corpus", required=True, help="corpus directory")
    p.add_argument("--vocab", default=None,
                   help="vocabulary JSON (default: the corpus vocabulary)")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--split", choices=SPLITS, default="train")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--hidden", type=int, default=None)
    p.add_argument("--agents", type=int, default=None, help="gam rollout agents")
    p.add_argument("--steps", type=int, default=None, help="gam rollout length")
    p.add_argument("--heads", type=int, default=None, help="gat attention heads")
    p.add_argument("--layers", type=int, default=None, help="gat layer count")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("detect", help="classify one graph")
    p.add_argument("--graph", required=True, help="graph JSON path")
    p.add_argument("--checkpoint", default=None, help="single model checkpoint")
    p.add_argument("--gam", default=None, help="gam checkpoint (with --gat)")
    p.add_argument("--gat", default=None, help="gat checkpoint (with --gam)")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("localize", help="rank methods and classes of one graph")
    p.add_argument("--graph", required=True, help="graph JSON path")
    p.add_argument("--gam", required=True, help="gam checkpoint")
    p.add_argument("--gat", required=True, help="gat checkpoint")
    p.add_argument("--out", default=None, help="report JSON path")
    p.add_argument("--method-threshold", type=float, default=METHOD_THRESHOLD_DEFAULT)
    p.add_argument("--class-threshold", type=float, default=CLASS_THRESHOLD_DEFAULT)
    p.add_argument("--attention", choices=ATTENTION_CHOICES, default="received")
    p.set_defaults(func=_cmd_localize)

    p = sub.add_parser("evaluate", help="score predictions against corpus truth")
    _add_report_args(p)
    p.add_argument("--level", choices=LEVELS, default="app")
    p.add_argument("--out", default=None, help="metrics JSON path")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="recall/F1 across detection thresholds")
    _add_report_args(p)
    p.add_argument("--level", choices=("class", "method"), default="method")
    p.add_argument("--thresholds", type=float, nargs="+",
                   default=list(SWEEP_THRESHOLDS))
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
