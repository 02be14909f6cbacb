"""Release acceptance checks, one test per criterion.

Each test prints a single `criterion N: PASS/FAIL (...)` line; the
conftest terminal-summary hook repeats the collected lines after the run
so they stay visible when pytest captures stdout.
"""

import json
import time
from collections import defaultdict

import numpy as np
import pytest

from xaidroid.apigraph import load_graph, load_vocabulary, parse_listing
from xaidroid.apigraph.listing import rename_identifiers
from xaidroid.apigraph.merge import merge_app_graph
from xaidroid.apigraph.methodgraph import build_method_graph
from xaidroid.cli import main as cli_main
from xaidroid.evalmetrics import (
    DECISIONS,
    ConfusionCounts,
    evaluate_corpus,
    macro_average,
    metrics,
    threshold_sweep,
)
from xaidroid.gam import GamConfig, GamModel, gam_predict, graph_arrays, run_rollout, train_gam
from xaidroid.gat import GatConfig, GatModel, _backward, _forward, gat_arrays, gat_predict, train_gat
from xaidroid.localize import (
    ClassReport,
    LocalizationReport,
    MethodReport,
    class_attention,
    ensemble_and,
    localize_app,
    normalize_methods,
    threshold_verdicts,
)
from xaidroid.numkernel import kernels
from xaidroid.numkernel.ops import grad_check
from xaidroid.synthcorpus import CorpusSpec, gen_corpus

RESULTS = []

MALICIOUS, BENIGN = "malicious", "benign"

GOLDEN_EDGES = {
    ("Ljava/lang/StringBuilder;-><init>", "Landroid/content/Intent;->getAction"),
    ("Landroid/content/Intent;->getAction", "Ljava/lang/String;->equals"),
    ("Ljava/lang/String;->equals", "Landroid/content/Intent;->getExtras"),
    ("Ljava/lang/String;->equals", "Ljava/lang/StringBuilder;->toString"),
    ("Landroid/content/Intent;->getExtras", "Landroid/os/Bundle;->get"),
    ("Landroid/content/Intent;->getExtras", "Ljava/lang/StringBuilder;->toString"),
    ("Landroid/os/Bundle;->get", "Landroid/telephony/SmsMessage;->createFromPdu"),
    ("Landroid/os/Bundle;->get", "Ljava/lang/StringBuilder;->toString"),
    ("Landroid/telephony/SmsMessage;->createFromPdu",
     "Landroid/telephony/SmsMessage;->getDisplayOriginatingAddress"),
    ("Landroid/telephony/SmsMessage;->getDisplayOriginatingAddress",
     "Ljava/lang/StringBuilder;->append"),
    ("Ljava/lang/StringBuilder;->append", "Ljava/lang/StringBuilder;->append"),
    ("Ljava/lang/StringBuilder;->append",
     "Landroid/telephony/SmsMessage;->getDisplayMessageBody"),
    ("Landroid/telephony/SmsMessage;->getDisplayMessageBody",
     "Ljava/lang/StringBuilder;->append"),
    ("Ljava/lang/StringBuilder;->append", "Ljava/lang/StringBuilder;->toString"),
    ("Ljava/util/ArrayList;-><init>", "Ljava/util/List;->add"),
    ("Ljava/util/List;->add", "Ljava/lang/Object;->toString"),
    ("Landroid/telephony/SmsManager;->getDefault",
     "Landroid/telephony/SmsManager;->sendTextMessage"),
    ("Ljava/util/ArrayList;-><init>", "Ljava/lang/StringBuilder;-><init>"),
    ("Ljava/lang/StringBuilder;->toString", "Ljava/util/List;->add"),
    ("Ljava/lang/Object;->toString", "Landroid/telephony/SmsManager;->getDefault"),
}

CROSS_METHOD_EDGES = {
    ("Ljava/util/ArrayList;-><init>", "Ljava/lang/StringBuilder;-><init>"),
    ("Ljava/lang/StringBuilder;->toString", "Ljava/util/List;->add"),
    ("Ljava/lang/Object;->toString", "Landroid/telephony/SmsManager;->getDefault"),
}


def _verdict(criterion, ok, detail):
    RESULTS.append((criterion, bool(ok), detail))
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    assert ok, line


def _graph(nodes, edges, label="unknown", app_id="g"):
    from xaidroid.apigraph.merge import ApiCallGraph

    return ApiCallGraph(
        app_id=app_id, label=label, nodes=tuple(sorted(nodes)),
        edges=tuple(sorted(set(edges))), methods=(),
    )


def test_criterion_1_golden_graph(sms_text, sms_vocab):
    started = time.perf_counter()
    listings = parse_listing(sms_text)
    methods = [build_method_graph(l, sms_vocab) for l in listings]
    graph = merge_app_graph(methods, app_label="malicious", app_id="sms")
    elapsed = time.perf_counter() - started
    sig_edges = {
        (sms_vocab.signature_of(s), sms_vocab.signature_of(t)) for s, t in graph.edges
    }
    ok = (
        graph.n_nodes == 15
        and sig_edges == GOLDEN_EDGES
        and CROSS_METHOD_EDGES <= sig_edges
        and elapsed < 1.0
    )
    _verdict(1, ok, f"15 nodes, {len(sig_edges)} edges, 3 inlined, {elapsed * 1e3:.0f} ms")


def _random_graph5(rng, vocab_size=6):
    while True:
        ids = np.sort(rng.choice(vocab_size, size=5, replace=False))
        edges = [
            (int(a), int(b))
            for a in ids
            for b in ids
            if (a != b and rng.random() < 0.35) or (a == b and rng.random() < 0.1)
        ]
        if edges:
            return _graph(ids.tolist(), edges)


def _gat_loss_fd(rng):
    cfg = GatConfig(hidden_dim=3, n_heads=2, epochs=1, seed=int(rng.integers(1 << 31)))
    graph = _random_graph5(rng)
    model = GatModel(6, cfg)
    arrays = gat_arrays(graph, 6)
    y = int(rng.integers(2))

    def loss(params):
        probs, pooled, caches = _forward(params, cfg, arrays)
        dlogits = probs.copy()
        dlogits[y] -= 1.0
        grads = _backward(params, cfg, arrays, caches, pooled, dlogits)
        return float(-np.log(probs[y])), grads

    return grad_check(loss, model.params, step=1e-5)


def _sigmoid(v):
    return 1.0 / (1.0 + np.exp(-v))


def _gam_replay(ps, vids, visited, gamma, d, h, T):
    """Pure-python LSTM replay over a fixed visited sequence."""
    wx, wh, b = ps["lstm.wx"], ps["lstm.wh"], ps["lstm.b"]
    hs = np.zeros((T + 1, h))
    cs = np.zeros((T + 1, h))
    mem = np.zeros(h)
    for t, node in enumerate(visited):
        pre = wx[:, vids[node]] + wh @ hs[t] + b
        ig, fg, og = _sigmoid(pre[:h]), _sigmoid(pre[h:2 * h]), _sigmoid(pre[3 * h:])
        gg = np.tanh(pre[2 * h:3 * h])
        cs[t + 1] = fg * cs[t] + ig * gg
        hs[t + 1] = og * np.tanh(cs[t + 1])
        mem = (1.0 - gamma) * mem + gamma * hs[t + 1]
    return hs, cs, mem


def _gam_path_fd(rng):
    """FD-check the training loss with the sampled trajectory held fixed.

    The policy term scores candidates against the recorded context states,
    matching the backward pass, which treats the context as a constant; the
    classification term replays the LSTM so its gradients flow end to end.
    """
    d, h, T = 6, 3, 6
    gamma = 0.1
    config = GamConfig(
        step_size=T, n_agents=1, epochs=1, hidden_dim=h,
        memory_decay=gamma, seed=int(rng.integers(1 << 31)),
    )
    graph = _random_graph5(rng, vocab_size=d)
    base = GamModel(d, config)
    params = base.params.copy()
    for name in params.names():
        params.set(name, params[name] + 0.1 * rng.standard_normal(params[name].shape))
    model = base.with_params(params)
    arrays = graph_arrays(graph, d)
    vids = arrays[4]
    roll = run_rollout(model, graph, config, "sample", np.random.default_rng(rng.integers(1 << 31)))
    y = int(rng.integers(2))
    pg_coeff = float(rng.uniform(-2.0, 2.0))
    hs_fixed = roll.hidden_states

    def objective(ps):
        hs, _, mem = _gam_replay(ps, vids, roll.visited, gamma, d, h, T)
        node_score = ps["phi.w"][:, :d].T @ ps["attn.a"]
        ctx_proj = ps["phi.w"][:, d:].T @ ps["attn.a"]
        bias = float(ps["attn.a"] @ ps["phi.b"])
        logp = 0.0
        for t in range(T):
            pos = int(roll.chosen_pos[t])
            if pos < 0:
                continue
            lo, hi = roll.cand_indptr[t], roll.cand_indptr[t + 1]
            logits = (
                node_score[vids[roll.cand_nodes[lo:hi]]]
                + float(ctx_proj @ hs_fixed[t]) + bias
            )
            seg = np.exp(logits - logits.max())
            seg /= seg.sum()
            logp += float(np.log(seg[pos]))
        z = np.concatenate([mem, hs[-1]])
        cls_logits = ps["cls.w"] @ z + ps["cls.b"]
        e = np.exp(cls_logits - cls_logits.max())
        probs = e / e.sum()
        value = float(-np.log(probs[y])) + pg_coeff * logp

        dlogits = probs.copy()
        dlogits[y] -= 1.0
        grads = {"cls.w": np.outer(dlogits, z), "cls.b": dlogits}
        dz = ps["cls.w"].T @ dlogits
        back = kernels().gam_walk_backward(
            vids, ps["phi.w"], ps["phi.b"], ps["attn.a"],
            ps["lstm.wx"], ps["lstm.wh"], ps["lstm.b"],
            roll.visited, roll.cand_indptr, roll.cand_nodes, roll.cand_probs,
            roll.chosen_pos, roll.hidden_states, roll.cell_states, roll.gates,
            dz[h:], dz[:h], pg_coeff, gamma,
        )
        for name, grad in zip(
            ("phi.w", "phi.b", "attn.a", "lstm.wx", "lstm.wh", "lstm.b"), back
        ):
            grads[name] = grad
        return value, grads

    # the replay must agree with the kernel before any parameter is bumped
    hs, _, mem = _gam_replay(params, vids, roll.visited, gamma, d, h, T)
    assert np.allclose(hs, roll.hidden_states, atol=1e-9)
    assert np.allclose(mem, roll.memory, atol=1e-9)
    base_value, _ = objective(params)
    expect = -np.log(roll.class_probs[y]) + pg_coeff * float(roll.logps.sum())
    assert np.isclose(base_value, expect, atol=1e-9)
    return grad_check(objective, params, step=1e-5)


def test_criterion_2_gradient_verification():
    started = time.perf_counter()
    rng = np.random.default_rng(1234)
    trials = 20
    worst_gat = max(_gat_loss_fd(rng) for _ in range(trials))
    worst_gam = max(_gam_path_fd(rng) for _ in range(trials))
    elapsed = time.perf_counter() - started
    ok = worst_gat <= 1e-4 and worst_gam <= 1e-4 and elapsed < 60.0
    _verdict(
        2, ok,
        f"{trials} trials each, max rel err gat {worst_gat:.1e} "
        f"gam {worst_gam:.1e}, {elapsed:.1f} s",
    )


def _inv_softmax(rng):
    graph = _random_graph5(rng, vocab_size=16)
    arrays = gat_arrays(graph, 16)
    n = len(graph.nodes)
    k, fin, fout = 2, int(rng.integers(1, 4)), 3
    hp_in = rng.standard_normal((n, fin))
    w = rng.standard_normal((k, fout, fin))
    a_self = rng.standard_normal((k, fout))
    a_neigh = rng.standard_normal((k, fout))
    _, _, alpha, _ = kernels().gat_edge_forward(
        hp_in, w, a_self, a_neigh, arrays[1], arrays[2], arrays[3], 0.2
    )
    sums = np.add.reduceat(alpha, arrays[3][:-1], axis=1)
    if np.max(np.abs(sums - 1.0)) > 1e-12:
        return False
    config = GamConfig(step_size=5, n_agents=1, epochs=1, hidden_dim=3,
                       seed=int(rng.integers(1 << 31)))
    model = GamModel(16, config)
    roll = run_rollout(model, graph, config, "sample",
                       np.random.default_rng(rng.integers(1 << 31)))
    for t in range(5):
        lo, hi = roll.cand_indptr[t], roll.cand_indptr[t + 1]
        if hi > lo and abs(float(roll.cand_probs[lo:hi].sum()) - 1.0) > 1e-12:
            return False
    return True


def _random_ma(rng):
    k = int(rng.integers(0, 7))
    ma = {}
    for i in range(k):
        v = 0.0 if rng.random() < 0.3 else float(rng.exponential(1.0))
        ma[f"Lc{int(rng.integers(0, 3))};->m{i}"] = v
    return ma


def _inv_ma_norm(rng):
    norm = normalize_methods(_random_ma(rng))
    total = sum(norm.values())
    return total == 0.0 or abs(total - 1.0) <= 1e-9


def _inv_class_partition(rng):
    norm = normalize_methods(_random_ma(rng))
    class_of = {m: m.split(";->")[0] + ";" for m in norm}
    ca = class_attention(norm, class_of)
    return abs(sum(ca.values()) - sum(norm.values())) <= 1e-9


def _inv_ensemble(rng):
    units = [f"u{i}" for i in range(int(rng.integers(1, 10)))]
    va = {u: MALICIOUS if rng.random() < 0.5 else BENIGN for u in units}
    vb = {u: MALICIOUS if rng.random() < 0.5 else BENIGN for u in units}
    ens = {u: ensemble_and(va[u], vb[u]) for u in units}
    flagged = {u for u, v in ens.items() if v == MALICIOUS}
    expect = {u for u in units if va[u] == MALICIOUS} & {
        u for u in units if vb[u] == MALICIOUS
    }
    return flagged == expect


def _inv_threshold(rng):
    t_lo, t_hi = np.sort(rng.uniform(1e-6, 1e-2, size=2))
    if t_lo == t_hi:
        return True
    values = {f"u{i}": float(rng.uniform(0, 2e-2)) for i in range(8)}
    values["u0"] = 0.0
    values["u1"] = float(t_hi)  # boundary value: strictly-greater must exclude it
    lo = threshold_verdicts(values, float(t_lo))
    hi = threshold_verdicts(values, float(t_hi))
    flagged_lo = {u for u, v in lo.items() if v == MALICIOUS}
    flagged_hi = {u for u, v in hi.items() if v == MALICIOUS}
    return flagged_hi <= flagged_lo and "u1" not in flagged_hi and "u0" not in flagged_lo


def _inv_permutation(rng):
    graph = _random_graph5(rng, vocab_size=16)
    arrays = gat_arrays(graph, 16)
    x, src, dst, seg, deg = arrays
    n = len(graph.nodes)
    k, fin, fout = 2, 2, 3
    feats = rng.standard_normal((n, fin))
    w = rng.standard_normal((k, fout, fin))
    a_self = rng.standard_normal((k, fout))
    a_neigh = rng.standard_normal((k, fout))
    _, _, alpha, agg = kernels().gat_edge_forward(
        feats, w, a_self, a_neigh, src, dst, seg, 0.2
    )
    pos = rng.permutation(n)
    feats2 = np.empty_like(feats)
    feats2[pos] = feats
    src2, dst2 = pos[src], pos[dst]
    order = np.lexsort((src2, dst2))
    src2, dst2 = src2[order], dst2[order]
    seg2 = np.searchsorted(dst2, np.arange(n + 1))
    _, _, alpha2, agg2 = kernels().gat_edge_forward(
        feats2, w, a_self, a_neigh, src2, dst2, seg2, 0.2
    )
    if np.max(np.abs(agg2[:, pos, :] - agg)) > 1e-9:
        return False
    return np.max(np.abs(alpha2[:, order.argsort()] - alpha)) <= 1e-9


def test_criterion_3_invariant_suite():
    rng = np.random.default_rng(77)
    invariants = {
        "attention-softmax": _inv_softmax,
        "method-normalization": _inv_ma_norm,
        "class-partition": _inv_class_partition,
        "ensemble-intersection": _inv_ensemble,
        "threshold-monotone": _inv_threshold,
        "permutation-equivariance": _inv_permutation,
    }
    failed = []
    for name, check in invariants.items():
        if not all(check(rng) for _ in range(100)):
            failed.append(name)
    detail = f"{len(invariants)} invariants x 100 instances"
    if failed:
        detail += f"; failed: {', '.join(failed)}"
    _verdict(3, not failed, detail)


def _extract_with(listings, vocab, app_id, label):
    methods = [build_method_graph(l, vocab) for l in listings]
    return merge_app_graph(methods, app_label=label, truth_labels={}, app_id=app_id)


def test_criterion_4_renaming_invariance(tmp_path):
    spec = CorpusSpec(n_apps=6, malware_ratio=0.5, mean_nodes=28,
                      methods_range=(2, 5), seed=19)
    manifest = gen_corpus(spec, tmp_path)
    vocab = load_vocabulary(tmp_path / "vocabulary.json")
    row = next(r for r in manifest["apps"] if r["label"] == "malicious")
    text = (tmp_path / row["listing"]).read_text(encoding="utf-8")
    base_listings = parse_listing(text)
    base_graph = _extract_with(base_listings, vocab, row["id"], row["label"])

    gam_cfg = GamConfig(step_size=8, n_agents=2, epochs=1, hidden_dim=6, seed=3)
    gat_cfg = GatConfig(seed=3)
    gam = GamModel(len(vocab.apis), gam_cfg)
    gat = GatModel(len(vocab.apis), gat_cfg)

    def snapshot(graph):
        gam_probs, gam_att = gam_predict(gam, graph, gam_cfg)
        gat_probs, gat_att = gat_predict(gat, graph, gat_cfg)
        report = localize_app(graph, gam_att, gat_att, gam_probs, gat_probs)
        return gam_att, gat_att, report

    base_att_gam, base_att_gat, base_report = snapshot(base_graph)
    classes = sorted({l.class_name for l in base_listings})
    names = sorted({l.method_name for l in base_listings})
    rng = np.random.default_rng(40)
    failures = []
    for trial in range(10):
        cperm = rng.permutation(len(classes))
        nperm = rng.permutation(len(names))
        renaming = {c: f"Lq{trial}/w{int(j)}/R{int(j)};" for c, j in zip(classes, cperm)}
        renaming.update({m: f"rn{trial}x{int(j)}" for m, j in zip(names, nperm)})
        renamed = rename_identifiers(base_listings, renaming)
        graph = _extract_with(renamed, vocab, row["id"], row["label"])
        if graph.nodes != base_graph.nodes or set(graph.edges) != set(base_graph.edges):
            failures.append(f"trial {trial}: graph changed")
            continue
        att_gam, att_gat, report = snapshot(graph)
        if att_gam.tobytes() != base_att_gam.tobytes() or att_gat.tobytes() != base_att_gat.tobytes():
            failures.append(f"trial {trial}: attention changed")
            continue
        if report.app_verdicts != base_report.app_verdicts:
            failures.append(f"trial {trial}: app verdicts changed")
            continue
        ren_methods = {(m.class_name, m.method_name): m for m in report.methods}
        for base_m in base_report.methods:
            twin = ren_methods.get(
                (renaming[base_m.class_name], renaming[base_m.method_name])
            )
            if (
                twin is None
                or base_m.ma != twin.ma
                or base_m.ma_norm != twin.ma_norm
                or base_m.verdicts != twin.verdicts
            ):
                failures.append(f"trial {trial}: method report changed")
                break
        ren_classes = {c.class_name: c for c in report.classes}
        for base_c in base_report.classes:
            twin = ren_classes.get(renaming[base_c.class_name])
            if twin is None or twin.ca != base_c.ca or twin.verdicts != base_c.verdicts:
                failures.append(f"trial {trial}: class report changed")
                break
    detail = "10 renamings, graphs/attention/reports identical"
    if failures:
        detail = "; ".join(failures[:3])
    _verdict(4, not failures, detail)


def _random_eval_set(rng):
    variants = ("sms", "http", "dropper")
    labels = (MALICIOUS, BENIGN)
    n_apps = int(rng.integers(1, 6))
    reports, truths = [], {}
    for i in range(n_apps):
        app = f"a{i}"
        mal = bool(rng.random() < 0.6) or i == 0
        methods, truth_methods = [], {}
        class_names = [f"LC{j};" for j in range(int(rng.integers(1, 4)))]
        for m in range(int(rng.integers(1, 6))):
            cls = class_names[int(rng.integers(0, len(class_names)))]
            verdicts = {d: labels[int(rng.integers(2))] for d in DECISIONS}
            methods.append(MethodReport(cls, f"m{m}", {}, {}, verdicts))
            if rng.random() < 0.8:
                truth_methods[f"{cls}->m{m}"] = labels[int(rng.integers(2))]
        class_reports, truth_classes = [], {}
        for cls in class_names:
            verdicts = {d: labels[int(rng.integers(2))] for d in DECISIONS}
            class_reports.append(ClassReport(cls, {}, verdicts))
            if rng.random() < 0.8:
                truth_classes[cls] = labels[int(rng.integers(2))]
        app_verdicts = {d: labels[int(rng.integers(2))] for d in DECISIONS}
        reports.append(LocalizationReport(
            app_id=app, methods=tuple(methods), classes=tuple(class_reports),
            app_verdicts=app_verdicts,
        ))
        truths[app] = {
            "label": MALICIOUS if mal else BENIGN,
            "variant": variants[int(rng.integers(len(variants)))],
            "methods": truth_methods,
            "classes": truth_classes,
        }
    return reports, truths


def _brute_rows(reports, truths, level, decision):
    """Independent confusion tally written as plain loops."""
    def tally(pairs):
        tp = fp = tn = fn = 0
        for pred, true in pairs:
            if true == MALICIOUS and pred == MALICIOUS:
                tp += 1
            elif true == MALICIOUS:
                fn += 1
            elif pred == MALICIOUS:
                fp += 1
            else:
                tn += 1
        return tp, fp, tn, fn

    if level == "app":
        pairs = [
            (r.app_verdicts[decision], truths[r.app_id]["label"]) for r in reports
        ]
        row = metrics(ConfusionCounts(*tally(pairs)))
        return {"all": row, "average": row}
    grouped = defaultdict(list)
    for r in reports:
        truth = truths[r.app_id]
        if truth["label"] != MALICIOUS:
            continue
        variant = truth["variant"]
        if level == "method":
            for m in r.methods:
                true = truth["methods"].get(f"{m.class_name}->{m.method_name}", BENIGN)
                grouped[variant].append((m.verdicts[decision], true))
        else:
            for c in r.classes:
                true = truth["classes"].get(c.class_name, BENIGN)
                grouped[variant].append((c.verdicts[decision], true))
    rows = {v: metrics(ConfusionCounts(*tally(pairs)))
            for v, pairs in sorted(grouped.items())}
    rows["average"] = macro_average(rows.values())
    return rows


def test_criterion_5_confusion_oracle():
    rng = np.random.default_rng(55)
    sets = 1000
    mismatches = 0
    for i in range(sets):
        reports, truths = _random_eval_set(rng)
        level = ("app", "method", "class")[i % 3]
        decision = DECISIONS[int(rng.integers(len(DECISIONS)))]
        got = evaluate_corpus(reports, truths, level, decision)
        want = _brute_rows(reports, truths, level, decision)
        if got != want:
            mismatches += 1
    _verdict(5, mismatches == 0, f"{sets} random sets, {mismatches} mismatches")


@pytest.fixture(scope="module")
def benchmark(tmp_path_factory):
    """Default synthetic corpus plus both models trained at stock settings."""
    started = time.perf_counter()
    out = tmp_path_factory.mktemp("bench") / "corpus"
    manifest = gen_corpus(CorpusSpec(seed=7), out)
    vocab = load_vocabulary(out / "vocabulary.json")
    train_graphs = [
        load_graph(out / r["graph"]) for r in manifest["apps"] if r["split"] == "train"
    ]
    gam_cfg = GamConfig()
    gat_cfg = GatConfig()
    gam = GamModel(len(vocab.apis), gam_cfg)
    gam, gam_losses = train_gam(gam, train_graphs, gam_cfg)
    gat = GatModel(len(vocab.apis), gat_cfg)
    gat, gat_losses = train_gat(gat, train_graphs, gat_cfg)
    reports, truths = [], {}
    for r in manifest["apps"]:
        if r["split"] != "test":
            continue
        graph = load_graph(out / r["graph"])
        gam_probs, gam_att = gam_predict(gam, graph, gam_cfg)
        gat_probs, gat_att = gat_predict(gat, graph, gat_cfg)
        reports.append(localize_app(graph, gam_att, gat_att, gam_probs, gat_probs))
        truths[r["id"]] = json.loads((out / r["truth"]).read_text(encoding="utf-8"))
    return {
        "reports": reports,
        "truths": truths,
        "elapsed": time.perf_counter() - started,
        "losses": (gam_losses, gat_losses),
    }


def test_criterion_6_benchmark(benchmark):
    reports, truths = benchmark["reports"], benchmark["truths"]
    app_rows = evaluate_corpus(reports, truths, "app")
    method_rows = evaluate_corpus(reports, truths, "method")
    class_rows = evaluate_corpus(reports, truths, "class")
    accuracy = app_rows["all"].accuracy
    method_recall = method_rows["average"].recall
    class_recall = class_rows["average"].recall
    minutes = benchmark["elapsed"] / 60.0
    ok = (
        accuracy >= 0.90
        and method_recall >= 0.90
        and class_recall >= 0.90
        and minutes <= 30.0
    )
    _verdict(
        6, ok,
        f"app accuracy {accuracy:.3f}, method recall {method_recall:.3f}, "
        f"class recall {class_recall:.3f}, {minutes:.1f} min",
    )


def test_criterion_7_threshold_sweep(benchmark):
    rows = threshold_sweep(benchmark["reports"], benchmark["truths"], "method")
    recalls = [r for _, r, _ in rows]
    f1 = {t: f for t, _, f in rows}
    monotone = all(a <= b + 1e-12 for a, b in zip(recalls, recalls[1:]))
    operating = f1[1e-4] >= f1[5e-5] - 0.02
    series = " ".join(f"{r:.3f}" for r in recalls)
    _verdict(
        7, monotone and operating,
        f"recall series [{series}], f1@1e-4 {f1[1e-4]:.3f} vs f1@5e-5 {f1[5e-5]:.3f}",
    )


def test_criterion_8_determinism(tmp_path):
    corpus = tmp_path / "corpus"
    assert cli_main([
        "gen-corpus", "--out", str(corpus), "--apps", "12",
        "--mean-nodes", "26", "--seed", "21",
    ]) == 0
    outs = {}
    for tag, argv in {
        "gam": ["train", "--model", "gam", "--corpus", str(corpus),
                "--epochs", "2", "--agents", "2", "--steps", "8", "--seed", "5"],
        "gat": ["train", "--model", "gat", "--corpus", str(corpus),
                "--epochs", "3", "--seed", "5"],
    }.items():
        for run in ("a", "b"):
            path = tmp_path / f"{tag}-{run}.ckpt"
            assert cli_main(argv + ["--out", str(path)]) == 0
            outs[f"{tag}-{run}"] = path.read_bytes()
    graph = corpus / "graphs" / "app0000.json"
    for run in ("a", "b"):
        path = tmp_path / f"report-{run}.json"
        assert cli_main([
            "localize", "--gam", str(tmp_path / "gam-a.ckpt"),
            "--gat", str(tmp_path / "gat-a.ckpt"),
            "--graph", str(graph), "--out", str(path),
        ]) == 0
        outs[f"report-{run}"] = path.read_bytes()
    same = (
        outs["gam-a"] == outs["gam-b"]
        and outs["gat-a"] == outs["gat-b"]
        and outs["report-a"] == outs["report-b"]
    )
    _verdict(8, same, "checkpoints and reports byte-identical across reruns")
