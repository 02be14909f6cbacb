"""Seeded generator of labeled app corpora with planted malicious motifs.

Every app is emitted as an .slst listing; the stored graph file is produced
by running the same parser and merger the pipeline uses, so listings always
re-extract to exactly the stored graphs. A malicious app embeds one motif's
API sequence in 1-3 dedicated methods wired into the benign background via
trigger call sites placed in several background methods. Motif APIs never
appear in benign apps unless decoy mode is enabled, in which case they are
sprinkled into methods nothing calls. Generation is a pure function of the
spec, including its seed.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .apigraph.listing import InstructionRow, MethodListing, pretty_print
from .apigraph.merge import merge_app_graph, save_graph
from .apigraph.methodgraph import build_method_graph
from .apigraph.vocabulary import build_vocabulary, hash_superset, save_vocabulary
from .errors import DataError, UsageError

CORPUS_FORMAT = "xaidroid-corpus-v1"
TRUTH_FORMAT = "xaidroid-truth-v1"
NODE_FLOOR = 20
NODE_CAP = 200
TRAIN_FRACTION = 0.7

_API_PREFIXES = ("Landroid/", "Ljava/", "Ljavax/", "Ldalvik/")

_POOL_TABLE = (
    ("Ljava/lang/StringBuilder;", ("<init>", "append", "toString", "length",
     "charAt", "insert", "replace", "reverse")),
    ("Ljava/lang/String;", ("length", "charAt", "substring", "indexOf", "equals",
     "format", "split", "trim", "replace", "toLowerCase", "toUpperCase", "startsWith")),
    ("Ljava/lang/Object;", ("<init>", "toString", "equals", "hashCode", "getClass",
     "wait", "notify")),
    ("Ljava/lang/Math;", ("abs", "max", "min", "floor", "ceil", "sqrt", "pow", "round")),
    ("Ljava/lang/Integer;", ("parseInt", "valueOf", "toString", "intValue",
     "compare", "toHexString")),
    ("Ljava/lang/Long;", ("parseLong", "valueOf", "toString", "longValue")),
    ("Ljava/lang/Thread;", ("<init>", "start", "sleep", "join", "interrupt",
     "currentThread")),
    ("Ljava/lang/System;", ("currentTimeMillis", "nanoTime", "arraycopy",
     "getProperty", "lineSeparator")),
    ("Ljava/lang/Exception;", ("<init>", "getMessage", "printStackTrace", "getCause")),
    ("Ljava/util/ArrayList;", ("<init>", "add", "get", "size", "remove", "clear",
     "contains", "indexOf", "isEmpty", "iterator")),
    ("Ljava/util/HashMap;", ("<init>", "put", "get", "remove", "containsKey",
     "keySet", "values", "size", "clear")),
    ("Ljava/util/List;", ("add", "get", "size", "remove", "contains", "isEmpty",
     "iterator", "toArray")),
    ("Ljava/util/Map;", ("put", "get", "remove", "containsKey", "keySet",
     "values", "entrySet")),
    ("Ljava/util/Set;", ("add", "contains", "remove", "size", "iterator", "isEmpty")),
    ("Ljava/util/Iterator;", ("hasNext", "next", "remove")),
    ("Ljava/util/Collections;", ("sort", "unmodifiableList", "emptyList",
     "singletonList", "reverse", "shuffle")),
    ("Ljava/util/Arrays;", ("asList", "sort", "copyOf", "fill", "toString",
     "binarySearch")),
    ("Ljava/util/Random;", ("<init>", "nextInt", "nextLong", "nextDouble",
     "nextBoolean")),
    ("Ljava/util/Date;", ("<init>", "getTime", "toString", "before", "after")),
    ("Ljava/util/Calendar;", ("getInstance", "get", "set", "getTime", "add")),
    ("Ljava/util/Locale;", ("getDefault", "getLanguage", "getCountry", "toString")),
    ("Ljava/io/File;", ("<init>", "exists", "getName", "getPath", "getAbsolutePath",
     "isDirectory", "length", "listFiles", "mkdirs", "delete")),
    ("Ljava/io/InputStream;", ("read", "close", "available", "skip", "mark", "reset")),
    ("Ljava/io/OutputStream;", ("write", "flush", "close")),
    ("Ljava/io/BufferedReader;", ("<init>", "readLine", "read", "close", "ready")),
    ("Ljava/io/InputStreamReader;", ("<init>", "read", "close", "getEncoding")),
    ("Ljava/io/FileInputStream;", ("<init>", "read", "close", "getChannel")),
    ("Ljava/io/FileOutputStream;", ("<init>", "write", "close", "getChannel")),
    ("Ljava/io/PrintWriter;", ("<init>", "println", "print", "flush", "close")),
    ("Landroid/util/Log;", ("d", "e", "i", "v", "w", "wtf")),
    ("Landroid/content/Intent;", ("<init>", "getExtras", "putExtra", "getAction",
     "setAction", "getStringExtra", "getData", "setData", "addFlags")),
    ("Landroid/content/Context;", ("getSystemService", "getString", "getResources",
     "getPackageName", "getApplicationContext", "getSharedPreferences",
     "startActivity", "getAssets")),
    ("Landroid/os/Bundle;", ("<init>", "get", "getString", "putString", "getInt",
     "putInt", "containsKey", "keySet")),
    ("Landroid/os/Handler;", ("<init>", "post", "postDelayed", "sendMessage",
     "removeCallbacks", "obtainMessage")),
    ("Landroid/view/View;", ("findViewById", "setOnClickListener", "setVisibility",
     "getVisibility", "invalidate", "getContext")),
    ("Landroid/widget/TextView;", ("setText", "getText", "setTextColor",
     "setTextSize", "append")),
    ("Landroid/widget/Toast;", ("makeText", "show", "setDuration", "setGravity")),
    ("Landroid/app/Activity;", ("onCreate", "findViewById", "setContentView",
     "getIntent", "finish", "startActivity", "onResume", "onPause")),
    ("Landroid/content/SharedPreferences;", ("getString", "getInt", "getBoolean",
     "edit", "contains")),
    ("Landroid/content/SharedPreferences$Editor;", ("putString", "putInt",
     "putBoolean", "apply", "commit")),
    ("Landroid/content/res/Resources;", ("getString", "getColor", "getDimension",
     "getDrawable", "getStringArray")),
    ("Landroid/database/Cursor;", ("moveToFirst", "moveToNext", "getString",
     "getInt", "getCount", "close")),
    ("Landroid/net/Uri;", ("parse", "toString", "getPath", "getHost")),
)

BENIGN_POOL = tuple(
    f"{cls}->{name}" for cls, names in _POOL_TABLE for name in names
)


@dataclass(frozen=True)
class MotifTemplate:
    """A malicious behavior: ordered API sequence, branch points, triggers.

    branch_after lists sequence positions after which a conditional skip is
    laid down; triggers are shared (pool) APIs planted immediately before
    the call site that hands control to the motif.
    """

    name: str
    apis: tuple
    branch_after: tuple = ()
    triggers: tuple = ()

    def __post_init__(self):
        if len(self.apis) < 2:
            raise UsageError(f"motif {self.name!r} needs at least 2 APIs")
        for sig in self.apis + self.triggers:
            if not sig.startswith(_API_PREFIXES) or ";->" not in sig:
                raise UsageError(f"motif {self.name!r} has a non-API signature {sig!r}")
        for pos in self.branch_after:
            if not 0 <= pos < len(self.apis) - 1:
                raise UsageError(f"motif {self.name!r} branch position {pos} out of range")

    @property
    def distinct_apis(self):
        return tuple(dict.fromkeys(self.apis))


MOTIF_LIBRARY = (
    MotifTemplate(
        name="sms-exfiltration",
        apis=(
            "Landroid/telephony/SmsMessage;->createFromPdu",
            "Landroid/telephony/SmsMessage;->getOriginatingAddress",
            "Landroid/telephony/SmsMessage;->getMessageBody",
            "Landroid/telephony/SmsMessage;->getTimestampMillis",
            "Landroid/telephony/TelephonyManager;->getLine1Number",
            "Landroid/content/ContentResolver;->query",
            "Ljavax/crypto/Cipher;->getInstance",
            "Ljavax/crypto/Cipher;->init",
            "Ljavax/crypto/Cipher;->doFinal",
            "Landroid/telephony/SmsManager;->getDefault",
            "Landroid/telephony/SmsManager;->divideMessage",
            "Landroid/app/PendingIntent;->getBroadcast",
            "Landroid/telephony/SmsManager;->sendMultipartTextMessage",
            "Landroid/telephony/SmsManager;->sendTextMessage",
            "Landroid/content/ContentResolver;->delete",
        ),
        branch_after=(2, 9),
        triggers=("Landroid/content/Intent;->getExtras", "Landroid/os/Bundle;->get"),
    ),
    MotifTemplate(
        name="http-upload",
        apis=(
            "Landroid/net/ConnectivityManager;->getActiveNetworkInfo",
            "Ljava/net/URL;-><init>",
            "Ljava/net/URL;->openConnection",
            "Ljavax/net/ssl/SSLContext;->getInstance",
            "Ljavax/net/ssl/HttpsURLConnection;->setSSLSocketFactory",
            "Ljava/net/HttpURLConnection;->setRequestMethod",
            "Ljava/net/HttpURLConnection;->setRequestProperty",
            "Ljava/net/HttpURLConnection;->setDoOutput",
            "Ljava/net/HttpURLConnection;->setConnectTimeout",
            "Ljava/net/HttpURLConnection;->connect",
            "Ljava/util/zip/GZIPOutputStream;-><init>",
            "Ljava/util/zip/GZIPOutputStream;->write",
            "Ljava/util/zip/GZIPOutputStream;->finish",
            "Ljava/net/HttpURLConnection;->getOutputStream",
            "Ljava/net/HttpURLConnection;->getResponseCode",
            "Ljava/net/HttpURLConnection;->getInputStream",
            "Ljava/net/HttpURLConnection;->disconnect",
        ),
        branch_after=(4, 12),
        triggers=("Ljava/lang/StringBuilder;->toString", "Ljava/io/FileInputStream;-><init>"),
    ),
    MotifTemplate(
        name="dynamic-dropper",
        apis=(
            "Ljava/util/zip/ZipInputStream;-><init>",
            "Ljava/util/zip/ZipInputStream;->getNextEntry",
            "Ljava/util/zip/ZipInputStream;->read",
            "Ljavax/crypto/Cipher;->getInstance",
            "Ljavax/crypto/Cipher;->doFinal",
            "Ldalvik/system/DexFile;->loadDex",
            "Ldalvik/system/DexClassLoader;-><init>",
            "Ljava/lang/ClassLoader;->loadClass",
            "Ljava/lang/Class;->forName",
            "Ljava/lang/Class;->getMethod",
            "Ljava/lang/reflect/Method;->setAccessible",
            "Ljava/lang/reflect/Method;->invoke",
            "Ljava/lang/Runtime;->getRuntime",
            "Ljava/lang/Runtime;->exec",
            "Ljava/lang/Process;->waitFor",
        ),
        branch_after=(4, 10),
        triggers=("Ljava/io/File;->getAbsolutePath", "Ljava/io/InputStream;->read"),
    ),
    MotifTemplate(
        name="device-id-harvest",
        apis=(
            "Landroid/telephony/TelephonyManager;->getDeviceId",
            "Landroid/telephony/TelephonyManager;->getSubscriberId",
            "Landroid/telephony/TelephonyManager;->getSimSerialNumber",
            "Landroid/telephony/TelephonyManager;->getNetworkOperatorName",
            "Landroid/provider/Settings$Secure;->getString",
            "Landroid/accounts/AccountManager;->getAccounts",
            "Landroid/location/LocationManager;->getLastKnownLocation",
            "Landroid/location/Location;->getLatitude",
            "Landroid/location/Location;->getLongitude",
            "Landroid/content/pm/PackageManager;->getInstalledPackages",
            "Ljavax/crypto/spec/SecretKeySpec;-><init>",
            "Ljavax/crypto/Cipher;->getInstance",
            "Ljavax/crypto/Cipher;->init",
            "Ljavax/crypto/Cipher;->doFinal",
            "Landroid/content/ContentResolver;->insert",
        ),
        branch_after=(2, 10),
        triggers=("Landroid/content/Context;->getSystemService",
                  "Landroid/content/Context;->getPackageName"),
    ),
)


@dataclass(frozen=True)
class CorpusSpec:
    n_apps: int = 500
    malware_ratio: float = 0.5
    mean_nodes: int = 84
    methods_range: tuple = (4, 18)
    motifs: tuple = MOTIF_LIBRARY
    benign_pool: tuple = BENIGN_POOL
    seed: int = 0
    decoys: bool = False

    def __post_init__(self):
        if self.n_apps < 1:
            raise UsageError("n_apps must be at least 1")
        if not 0.0 <= self.malware_ratio <= 1.0:
            raise UsageError("malware_ratio must lie in [0, 1]")
        if not self.motifs:
            raise UsageError("motif library must not be empty")
        largest = max(len(m.distinct_apis) for m in self.motifs)
        if self.mean_nodes <= NODE_FLOOR or self.mean_nodes < largest:
            raise UsageError(
                f"mean_nodes must exceed {NODE_FLOOR} and cover the largest motif"
            )
        lo, hi = self.methods_range
        if lo < 1 or hi < lo:
            raise UsageError("methods_range must satisfy 1 <= lo <= hi")
        pool = set(self.benign_pool)
        if not pool:
            raise UsageError("benign API pool must not be empty")
        for sig in self.benign_pool:
            if not sig.startswith(_API_PREFIXES) or ";->" not in sig:
                raise UsageError(f"pool entry {sig!r} is not an API signature")
        for motif in self.motifs:
            overlap = pool.intersection(motif.apis)
            if overlap:
                raise UsageError(
                    f"motif {motif.name!r} APIs leak into the benign pool: {sorted(overlap)[:3]}"
                )
            missing = [t for t in motif.triggers if t not in pool]
            if missing:
                raise UsageError(
                    f"motif {motif.name!r} triggers missing from the pool: {missing}"
                )


_SYLLABLES = (
    "ba", "co", "da", "el", "fi", "gu", "ha", "jo", "ka", "li",
    "mo", "na", "pe", "qu", "ra", "su", "ta", "vi", "wo", "ze",
)
_METHOD_WORDS = (
    "run", "init", "load", "update", "handle", "process", "fetch", "store",
    "parse", "render", "bind", "sync", "check", "apply", "queue", "emit",
    "track", "flush", "scan", "merge",
)
_FILLERS = (
    "const/4", "const/16", "move", "move-result", "move-object", "nop",
    "add-int", "sub-int",
)
_INVOKES = ("invoke-virtual", "invoke-static", "invoke-direct", "invoke-interface")
_BRANCHES = ("if-eqz", "if-nez")


def _word(rng):
    n = int(rng.integers(2, 4))
    return "".join(_SYLLABLES[int(rng.integers(0, len(_SYLLABLES)))] for _ in range(n))


def _class_name(rng, taken):
    while True:
        name = f"L{_word(rng)}/{_word(rng)}/{_word(rng).capitalize()};"
        if name not in taken:
            taken.add(name)
            return name


def _method_name(rng, taken, ordinal):
    base = _METHOD_WORDS[int(rng.integers(0, len(_METHOD_WORDS)))]
    name = base if base not in taken else f"{base}{ordinal}"
    while name in taken:
        name += "x"
    taken.add(name)
    return name


def _build_rows(rng, api_sigs, call_blocks, n_branches, start_offset=None):
    """Lay out one method body as parseable instruction rows.

    api_sigs invoke vocabulary APIs in order; each call block is
    (anchor_apis, callee_signature) inserted as one contiguous run at a
    random position. Branches are forward conditional skips.
    """
    items = []
    for sig in api_sigs:
        if rng.random() < 0.4:
            items.append({"op": _FILLERS[int(rng.integers(0, len(_FILLERS)))]})
        items.append({"op": _INVOKES[int(rng.integers(0, len(_INVOKES)))], "sig": sig})
    for anchors, callee in call_blocks:
        pos = int(rng.integers(0, len(items) + 1))
        block = [
            {"op": _INVOKES[int(rng.integers(0, len(_INVOKES)))], "sig": sig}
            for sig in anchors
        ]
        block.append({"op": "invoke-direct", "sig": callee})
        items[pos:pos] = block
    items.append({"op": "return-void"})
    for _ in range(n_branches):
        if len(items) < 2:
            break
        pos = int(rng.integers(0, len(items) - 1))
        jump = int(rng.integers(2, 5))
        target = items[min(pos + jump, len(items) - 1)]
        branch = {"op": _BRANCHES[int(rng.integers(0, 2))], "jump": target}
        items.insert(pos, branch)
    offset = int(rng.integers(0, 3)) * 2 if start_offset is None else start_offset
    for item in items:
        item["offset"] = offset
        offset += int(rng.integers(1, 7)) * 2
    rows = []
    for item in items:
        if "jump" in item:
            rows.append(InstructionRow(item["offset"], item["op"], item["jump"]["offset"]))
        elif "sig" in item:
            rows.append(InstructionRow(item["offset"], item["op"], item["sig"]))
        else:
            rows.append(InstructionRow(item["offset"], item["op"]))
    return tuple(rows)


def _draw_node_budget(spec, rng):
    jitter = rng.normal(0.0, spec.mean_nodes / 8.0)
    return int(min(max(round(spec.mean_nodes + jitter), NODE_FLOOR), NODE_CAP))


def _split_chunks(rng, values, n_chunks):
    """Split a list into n_chunks contiguous non-empty runs."""
    if n_chunks <= 1 or len(values) <= n_chunks:
        n_chunks = max(1, min(n_chunks, len(values)))
    if n_chunks == 1:
        return [list(values)]
    cuts = sorted(
        int(c) for c in rng.choice(np.arange(1, len(values)), size=n_chunks - 1, replace=False)
    )
    bounds = [0] + cuts + [len(values)]
    return [list(values[lo:hi]) for lo, hi in zip(bounds, bounds[1:])]


def _plan_background(spec, rng, apis):
    """Assign background APIs to named methods grouped into classes."""
    lo, hi = spec.methods_range
    n_methods = int(rng.integers(lo, hi + 1))
    n_methods = max(1, min(n_methods, len(apis)))
    order = [apis[int(i)] for i in rng.permutation(len(apis))]
    per_method = _split_chunks(rng, order, n_methods)
    n_classes = max(1, (n_methods + 3) // 4)
    class_sizes = [len(chunk) for chunk in _split_chunks(rng, list(range(n_methods)), n_classes)]
    taken_classes = set()
    methods = []
    idx = 0
    for size in class_sizes:
        cls = _class_name(rng, taken_classes)
        taken_methods = set()
        for _ in range(size):
            name = _method_name(rng, taken_methods, idx)
            body = list(per_method[idx])
            if len(body) > 1 and rng.random() < 0.3:
                body.append(body[int(rng.integers(0, len(body)))])
            methods.append({"class": cls, "name": name, "apis": body, "calls": []})
            idx += 1
    for i in range(1, len(methods)):
        parent = int(rng.integers(0, i))
        callee = f"{methods[i]['class']}->{methods[i]['name']}"
        methods[parent]["calls"].append(((), callee))
    return methods


def _gen_app(spec, rng, motif):
    """Plan and emit one app; returns (listings, truth map, malicious class)."""
    budget = _draw_node_budget(spec, rng)
    motif_apis = motif.distinct_apis if motif else ()
    triggers = tuple(motif.triggers) if motif else ()
    decoy_apis = ()
    if motif is None and spec.decoys and rng.random() < 0.5:
        library = spec.motifs[int(rng.integers(0, len(spec.motifs)))]
        k = int(rng.integers(1, min(3, len(library.distinct_apis)) + 1))
        decoy_apis = library.distinct_apis[:k]
    reserved = len(motif_apis) + len(triggers) + len(decoy_apis)
    n_background = budget - reserved
    if n_background < 1:
        raise UsageError(
            f"motif {motif.name!r} does not fit the node budget of {budget}"
            if motif
            else f"decoys do not fit the node budget of {budget}"
        )
    pool = [sig for sig in spec.benign_pool if sig not in triggers]
    picks = rng.choice(len(pool), size=n_background, replace=False)
    background = [pool[int(i)] for i in picks]
    methods = _plan_background(spec, rng, background)

    truth = {}
    malicious_class = None
    if motif is not None:
        taken = {m["class"] for m in methods}
        malicious_class = _class_name(rng, taken)
        # replay a tail slice so the planted region gets revisit edges
        cut = int(rng.integers(len(motif.apis) // 2, len(motif.apis)))
        sequence = list(motif.apis) + list(motif.apis[cut:])
        max_parts = min(3, len(sequence) // 2)
        n_parts = int(rng.integers(1, max(1, max_parts) + 1))
        chunks = _split_chunks(rng, sequence, n_parts)
        taken_names = set()
        motif_methods = []
        for j, chunk in enumerate(chunks):
            name = _method_name(rng, taken_names, j)
            branch_count = sum(
                1
                for pos in motif.branch_after
                if sum(len(c) for c in chunks[:j]) <= pos < sum(len(c) for c in chunks[: j + 1])
            )
            motif_methods.append(
                {
                    "class": malicious_class,
                    "name": name,
                    "apis": chunk,
                    "calls": [],
                    "branches": max(branch_count, 1),
                }
            )
        for j in range(len(motif_methods) - 1):
            callee = f"{malicious_class}->{motif_methods[j + 1]['name']}"
            motif_methods[j]["calls"].append(((), callee))
        entry = f"{malicious_class}->{motif_methods[0]['name']}"
        n_sites = min(int(rng.integers(3, 7)), len(methods))
        sites = rng.choice(len(methods), size=n_sites, replace=False)
        for site in sorted(int(s) for s in sites):
            methods[site]["calls"].append((triggers, entry))
        for m in motif_methods:
            truth[f"{m['class']}->{m['name']}"] = "malicious"
        methods = methods + motif_methods
    if decoy_apis:
        taken = {m["class"] for m in methods}
        decoy_class = _class_name(rng, taken)
        methods.append(
            {"class": decoy_class, "name": "idle", "apis": list(decoy_apis), "calls": []}
        )

    listings = []
    for m in methods:
        rows = _build_rows(
            rng, m["apis"], m["calls"],
            n_branches=m.get("branches", int(rng.integers(0, 3))),
        )
        listings.append(MethodListing(m["class"], m["name"], rows))
    for l in listings:
        truth.setdefault(l.method_id, "benign")
    return listings, truth, malicious_class


def _own_vocabulary(spec, listings):
    used = sorted(
        {r.signature for l in listings for r in l.rows
         if r.signature and r.signature.startswith(_API_PREFIXES)}
    )
    universe = _universe(spec)
    vocab = build_vocabulary({"app": used}, universe, min_apps=1)
    vocab.superset_sha256 = hash_superset(universe)
    return vocab


def _universe(spec):
    sigs = set(spec.benign_pool)
    for motif in spec.motifs:
        sigs.update(motif.apis)
    return sorted(sigs)


def _extract(listings, vocab, truth, label, app_id):
    graphs = [build_method_graph(l, vocab) for l in listings]
    return merge_app_graph(graphs, app_label=label, truth_labels=truth, app_id=app_id)


def gen_benign_app(spec, rng, app_id="benign-app", vocab=None):
    """One benign app: returns (listings, graph); truth rides on the graph."""
    listings, truth, _ = _gen_app(spec, rng, motif=None)
    if vocab is None:
        vocab = _own_vocabulary(spec, listings)
    return listings, _extract(listings, vocab, truth, "benign", app_id)


def gen_malicious_app(spec, motif, rng, app_id="malicious-app", vocab=None):
    """One malicious app with the given planted motif."""
    listings, truth, _ = _gen_app(spec, rng, motif=motif)
    if vocab is None:
        vocab = _own_vocabulary(spec, listings)
    return listings, _extract(listings, vocab, truth, "malicious", app_id)


def _assignments(spec, rng):
    """Per-app (label, variant, split) rows, stratified 70/30 by label."""
    n_mal = int(round(spec.n_apps * spec.malware_ratio))
    flags = np.zeros(spec.n_apps, dtype=bool)
    flags[rng.permutation(spec.n_apps)[:n_mal]] = True
    rows = []
    mal_seen = 0
    for i in range(spec.n_apps):
        if flags[i]:
            variant = spec.motifs[mal_seen % len(spec.motifs)].name
            rows.append({"label": "malicious", "variant": variant})
            mal_seen += 1
        else:
            rows.append({"label": "benign", "variant": "benign"})
    for label in ("malicious", "benign"):
        ids = [i for i, row in enumerate(rows) if row["label"] == label]
        shuffled = [ids[int(j)] for j in rng.permutation(len(ids))]
        n_train = int(round(TRAIN_FRACTION * len(ids)))
        for rank, i in enumerate(shuffled):
            rows[i]["split"] = "train" if rank < n_train else "test"
    return rows


def _class_truth(graph):
    out = {}
    for record in graph.methods:
        current = out.get(record.class_name, "benign")
        if record.truth == "malicious" or current == "malicious":
            out[record.class_name] = "malicious"
        else:
            out[record.class_name] = "benign"
    return out


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def gen_corpus(spec, out_dir):
    """Generate the full corpus directory; returns the manifest dict.

    Layout: manifest.json, vocabulary.json, apps/<id>.slst,
    graphs/<id>.json, truth/<id>.json.
    """
    out = Path(out_dir)
    for sub in ("apps", "graphs", "truth"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    root = np.random.SeedSequence(spec.seed)
    seqs = root.spawn(spec.n_apps + 1)
    rows = _assignments(spec, np.random.default_rng(seqs[0]))
    motif_by_name = {m.name: m for m in spec.motifs}

    apps = []
    for i, row in enumerate(rows):
        rng = np.random.default_rng(seqs[1 + i])
        motif = motif_by_name.get(row["variant"])
        listings, truth, _ = _gen_app(spec, rng, motif)
        apps.append((f"app{i:04d}", row, listings, truth))

    usage = {
        app_id: {
            r.signature
            for l in listings
            for r in l.rows
            if r.signature and r.signature.startswith(_API_PREFIXES)
        }
        for app_id, _, listings, _ in apps
    }
    universe = _universe(spec)
    vocab = build_vocabulary(usage, universe, min_apps=1)
    vocab.superset_sha256 = hash_superset(universe)
    save_vocabulary(vocab, out / "vocabulary.json")

    manifest_apps = []
    for app_id, row, listings, truth in apps:
        graph = _extract(listings, vocab, truth, row["label"], app_id)
        with open(out / "apps" / f"{app_id}.slst", "w", encoding="utf-8") as handle:
            handle.write(pretty_print(listings))
        save_graph(graph, vocab, out / "graphs" / f"{app_id}.json")
        _write_json(
            out / "truth" / f"{app_id}.json",
            {
                "format": TRUTH_FORMAT,
                "app_id": app_id,
                "label": row["label"],
                "variant": row["variant"],
                "methods": {m: t for m, t in sorted(truth.items())},
                "classes": _class_truth(graph),
            },
        )
        manifest_apps.append(
            {
                "id": app_id,
                "label": row["label"],
                "variant": row["variant"],
                "split": row["split"],
                "n_nodes": graph.n_nodes,
                "listing": f"apps/{app_id}.slst",
                "graph": f"graphs/{app_id}.json",
                "truth": f"truth/{app_id}.json",
            }
        )
    manifest = {
        "format": CORPUS_FORMAT,
        "seed": spec.seed,
        "spec": {
            "n_apps": spec.n_apps,
            "malware_ratio": spec.malware_ratio,
            "mean_nodes": spec.mean_nodes,
            "methods_range": list(spec.methods_range),
            "motifs": [m.name for m in spec.motifs],
            "pool_size": len(spec.benign_pool),
            "pool_sha256": hash_superset(spec.benign_pool),
            "decoys": spec.decoys,
        },
        "vocabulary": "vocabulary.json",
        "vocab_sha256": hash_superset(vocab.apis),
        "apps": manifest_apps,
    }
    _write_json(out / "manifest.json", manifest)
    return manifest


def load_manifest(path):
    """Read manifest.json from a corpus directory or an explicit file path."""
    p = Path(path)
    if p.is_dir():
        p = p / "manifest.json"
    try:
        with open(p, encoding="utf-8") as handle:
            payload = json.load(handle)
    except FileNotFoundError:
        raise DataError(f"{p}: no corpus manifest found") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{p}: not valid JSON ({exc})") from exc
    if not isinstance(payload, dict) or payload.get("format") != CORPUS_FORMAT:
        raise DataError(f"{p}: expected format {CORPUS_FORMAT!r}")
    return payload
