"""Multi-head edge-attention graph classifier with node attention read-out.

Node features are a single normalized vocabulary-id scalar. Attention layers
run over the symmetrized edge set with mandatory self-loops: intermediate
layers concatenate their heads, the final layer averages them, and the graph
verdict comes from mean-pooled features through a linear classifier. Node
attention is the mean coefficient a node receives from its neighbours in the
final layer; a literal degree-reciprocal mode is kept for comparison.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .apigraph.merge import ApiCallGraph
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import UsageError
from .numkernel import ParamSet, kernels, softmax
from .numkernel.ops import adam_update

CLASS_OF_LABEL = {"benign": 0, "malicious": 1}
LEAKY_SLOPE = 0.2
INIT_GAIN = 12.0
ATTENTION_MODES = ("received", "literal")


@dataclass(frozen=True)
class GatConfig:
    """Architecture and training settings for the edge-attention network."""

    in_features: int = 1
    hidden_dim: int = 8
    n_heads: int = 8
    n_classes: int = 2
    epochs: int = 200
    learning_rate: float = 5e-4
    n_layers: int = 2
    seed: int = 1

    def __post_init__(self):
        if self.in_features < 1:
            raise UsageError("in_features must be at least 1")
        if self.hidden_dim < 1:
            raise UsageError("hidden_dim must be at least 1")
        if self.n_heads < 1:
            raise UsageError("n_heads must be at least 1")
        if self.n_classes != 2:
            raise UsageError("this classifier is binary; n_classes must be 2")
        if self.n_layers < 1:
            raise UsageError("n_layers must be at least 1")
        if self.epochs < 1:
            raise UsageError("epochs must be at least 1")
        if self.learning_rate <= 0.0:
            raise UsageError("learning_rate must be positive")


def _layer_in_dims(config):
    dims = [config.in_features]
    dims += [config.hidden_dim * config.n_heads] * (config.n_layers - 1)
    return dims


class GatModel:
    """Parameter container; layer l head k uses gat{l}.w.k{k} and gat{l}.a.k{k}."""

    def __init__(self, vocab_size, config, params=None, vocab_sha256=None):
        if vocab_size < 1:
            raise UsageError("vocab_size must be at least 1")
        self.vocab_size = int(vocab_size)
        self.config = config
        self.vocab_sha256 = vocab_sha256
        self.params = params if params is not None else self._init_params()

    def _init_params(self):
        rng = np.random.default_rng(self.config.seed)
        h, k = self.config.hidden_dim, self.config.n_heads
        params = ParamSet()
        # attention layers start far above unit variance: with scalar inputs
        # the edge logits are otherwise too flat for softmax heads to
        # specialize, and training stalls in a near-uniform basin
        for layer, fin in enumerate(_layer_in_dims(self.config), start=1):
            for head in range(k):
                params.add(
                    f"gat{layer}.w.k{head}",
                    rng.standard_normal((h, fin)) / np.sqrt(fin) * INIT_GAIN,
                )
                params.add(
                    f"gat{layer}.a.k{head}",
                    rng.standard_normal(2 * h) / np.sqrt(2 * h) * INIT_GAIN,
                )
        params.add(
            "cls.w", rng.standard_normal((self.config.n_classes, h)) / np.sqrt(h)
        )
        params.add("cls.b", np.zeros(self.config.n_classes))
        return params

    def with_params(self, params):
        return GatModel(self.vocab_size, self.config, params, self.vocab_sha256)


def gat_arrays(graph, vocab_size):
    """Features plus the dst-sorted symmetrized edge structure with self-loops.

    Returns (x, edge_src, edge_dst, seg_indptr, deg); x holds one scalar row
    (vocab_id + 1) / vocab_size per node, in graph.nodes order.
    """
    n = len(graph.nodes)
    if n == 0:
        raise UsageError("graph has no nodes")
    pos = {vid: i for i, vid in enumerate(graph.nodes)}
    for vid in graph.nodes:
        if vid >= vocab_size:
            raise UsageError(f"node id {vid} outside vocabulary of size {vocab_size}")
    x = (np.asarray(graph.nodes, dtype=np.float64)[:, None] + 1.0) / vocab_size
    pairs = {(i, i) for i in range(n)}
    for s, t in graph.edges:
        pairs.add((pos[s], pos[t]))
        pairs.add((pos[t], pos[s]))
    order = sorted(pairs, key=lambda e: (e[1], e[0]))
    edge_src = np.asarray([e[0] for e in order], dtype=np.int64)
    edge_dst = np.asarray([e[1] for e in order], dtype=np.int64)
    seg_indptr = np.searchsorted(edge_dst, np.arange(n + 1), side="left").astype(
        np.int64
    )
    deg = np.diff(seg_indptr)
    return x, edge_src, edge_dst, seg_indptr, deg


def _stack_layer(params, layer, n_heads):
    w = np.stack([params[f"gat{layer}.w.k{k}"] for k in range(n_heads)])
    a = np.stack([params[f"gat{layer}.a.k{k}"] for k in range(n_heads)])
    h = w.shape[1]
    return w, a[:, :h].copy(), a[:, h:].copy()


def _elu(z):
    return np.where(z > 0.0, z, np.expm1(np.minimum(z, 0.0)))


def _elu_grad(z):
    return np.where(z > 0.0, 1.0, np.exp(np.minimum(z, 0.0)))


def _forward(params, config, arrays):
    """Run all layers plus pooling; returns (probs, pooled, layer caches)."""
    x, edge_src, edge_dst, seg_indptr, _ = arrays
    kern = kernels()
    n = x.shape[0]
    caches = []
    feats = x
    for layer in range(1, config.n_layers + 1):
        w, a_self, a_neigh = _stack_layer(params, layer, config.n_heads)
        hp, epre, alpha, agg = kern.gat_edge_forward(
            feats, w, a_self, a_neigh, edge_src, edge_dst, seg_indptr, LEAKY_SLOPE
        )
        if layer == config.n_layers:
            pre = agg.mean(axis=0)
            out = _elu(pre)
        else:
            pre = agg
            out = np.transpose(_elu(agg), (1, 0, 2)).reshape(
                n, config.n_heads * config.hidden_dim
            )
        caches.append((feats, w, a_self, a_neigh, hp, epre, alpha, pre))
        feats = out
    pooled = feats.mean(axis=0)
    logits = params["cls.w"] @ pooled + params["cls.b"]
    probs = softmax(logits)
    return probs, pooled, caches


def _backward(params, config, arrays, caches, pooled, dlogits):
    """Gradients of a scalar loss given d(logits); mirrors _forward."""
    x, edge_src, edge_dst, seg_indptr, _ = arrays
    kern = kernels()
    n = x.shape[0]
    grads = {name: np.zeros_like(params[name]) for name in params.names()}
    grads["cls.w"] = np.outer(dlogits, pooled)
    grads["cls.b"] = dlogits.copy()
    dfeats = np.tile(params["cls.w"].T @ dlogits / n, (n, 1))
    for layer in range(config.n_layers, 0, -1):
        feats, w, a_self, a_neigh, hp, epre, alpha, pre = caches[layer - 1]
        if layer == config.n_layers:
            d_agg = np.repeat(
                (dfeats * _elu_grad(pre))[None, :, :] / config.n_heads,
                config.n_heads,
                axis=0,
            )
        else:
            stacked = np.transpose(
                dfeats.reshape(n, config.n_heads, config.hidden_dim), (1, 0, 2)
            )
            d_agg = np.ascontiguousarray(stacked) * _elu_grad(pre)
        dx, dw, da_self, da_neigh = kern.gat_edge_backward(
            feats, w, a_self, a_neigh, edge_src, edge_dst, seg_indptr,
            hp, epre, alpha, d_agg, LEAKY_SLOPE,
        )
        for k in range(config.n_heads):
            grads[f"gat{layer}.w.k{k}"] = dw[k]
            grads[f"gat{layer}.a.k{k}"] = np.concatenate([da_self[k], da_neigh[k]])
        dfeats = dx
    return grads


def _check_compatible(model, config):
    mine = model.config
    same = (
        mine.in_features == config.in_features
        and mine.hidden_dim == config.hidden_dim
        and mine.n_heads == config.n_heads
        and mine.n_classes == config.n_classes
        and mine.n_layers == config.n_layers
    )
    if not same:
        raise UsageError("model architecture does not match the supplied config")


def gat_layer(model, layer, graph, features):
    """Apply one attention layer to explicit node features.

    Intermediate layers return the head-concatenated output, the final layer
    the head-averaged one, both after the nonlinearity. Also returns the
    per-head edge coefficients together with (edge_src, edge_dst).
    """
    config = model.config
    if not 1 <= layer <= config.n_layers:
        raise UsageError(f"layer must be in 1..{config.n_layers}")
    _, edge_src, edge_dst, seg_indptr, _ = gat_arrays(graph, model.vocab_size)
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] != len(graph.nodes):
        raise UsageError("features must have one row per graph node")
    w, a_self, a_neigh = _stack_layer(model.params, layer, config.n_heads)
    if feats.shape[1] != w.shape[2]:
        raise UsageError(
            f"layer {layer} expects {w.shape[2]} input features, got {feats.shape[1]}"
        )
    _, _, alpha, agg = kernels().gat_edge_forward(
        feats, w, a_self, a_neigh, edge_src, edge_dst, seg_indptr, LEAKY_SLOPE
    )
    if layer == config.n_layers:
        out = _elu(agg.mean(axis=0))
    else:
        out = np.transpose(_elu(agg), (1, 0, 2)).reshape(
            feats.shape[0], config.n_heads * config.hidden_dim
        )
    return out, alpha, (edge_src, edge_dst)


def gat_predict(model, graph, config, attention_mode="received"):
    """Class probabilities plus per-node attention over graph.nodes order."""
    _check_compatible(model, config)
    if attention_mode not in ATTENTION_MODES:
        raise UsageError(f"attention_mode must be one of {ATTENTION_MODES}")
    arrays = gat_arrays(graph, model.vocab_size)
    probs, _, caches = _forward(model.params, config, arrays)
    _, edge_src, _, _, deg = arrays
    if attention_mode == "literal":
        attention = 1.0 / deg.astype(np.float64)
    else:
        alpha_mean = caches[-1][6].mean(axis=0)
        received = np.bincount(edge_src, weights=alpha_mean, minlength=len(deg))
        attention = received / deg
    return probs, attention


def _corpus_classes(graphs):
    classes = []
    for g in graphs:
        if g.label not in CLASS_OF_LABEL:
            raise UsageError(f"graph {g.app_id!r} has unusable label {g.label!r}")
        classes.append(CLASS_OF_LABEL[g.label])
    if len(set(classes)) < 2:
        raise UsageError("training corpus must contain both labels")
    return np.asarray(classes, dtype=np.int64)


def train_gat(model, corpus, config):
    """Fixed-order mini-batch cross-entropy training; one update per graph.

    Returns (trained model, per-epoch mean loss trace). Deterministic for a
    fixed seed: the only randomness is the per-epoch visit order.
    """
    _check_compatible(model, config)
    graphs = list(corpus)
    classes = _corpus_classes(graphs)
    arrays = [gat_arrays(g, model.vocab_size) for g in graphs]
    params = model.params.copy()
    losses = []
    epoch_seqs = np.random.SeedSequence(config.seed).spawn(config.epochs)
    for epoch in range(config.epochs):
        order = np.random.default_rng(epoch_seqs[epoch]).permutation(len(graphs))
        total = 0.0
        for gi in order:
            y = classes[gi]
            probs, pooled, caches = _forward(params, config, arrays[gi])
            total += -np.log(max(probs[y], 1e-300))
            dlogits = probs.copy()
            dlogits[y] -= 1.0
            grads = _backward(params, config, arrays[gi], caches, pooled, dlogits)
            params = adam_update(params, grads, config.learning_rate)
        losses.append(total / len(graphs))
    return model.with_params(params), losses


def save_gat(model, path):
    save_checkpoint(
        path, "gat", asdict(model.config), model.vocab_size,
        model.vocab_sha256, model.params,
    )


def load_gat(path):
    _, config_dict, vocab_size, vocab_sha256, params = load_checkpoint(path, "gat")
    config = GatConfig(**config_dict)
    return GatModel(vocab_size, config, params, vocab_sha256)
