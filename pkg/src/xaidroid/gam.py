"""Agent-based subgraph attention classifier over API call graphs.

A rollout walks the graph for a fixed number of steps. At each step the
out-neighbours of the current node (falling back to in-neighbours, then
to a uniform restart) are scored by a compatibility map over the node's
one-hot feature and the LSTM context, softmaxed into an attention
distribution, and the next node is sampled from it during training or
taken by argmax (lowest node id on ties) at inference. The visited node
feeds an LSTM whose hidden state also drives a running memory vector;
the concatenation of memory and final hidden state goes through a linear
classifier. Training combines cross-entropy on the classifier/LSTM path
with a REINFORCE term on the selection parameters, using a +/-1 reward
against a moving-average baseline.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .apigraph.merge import ApiCallGraph
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import UsageError
from .numkernel import ParamSet, adam_update, kernels, softmax

CLASS_OF_LABEL = {"benign": 0, "malicious": 1}
BASELINE_DECAY = 0.9
SCORE_GAIN = 3.0


@dataclass(frozen=True)
class GamConfig:
    step_size: int = 40
    n_agents: int = 10
    epochs: int = 50
    learning_rate: float = 1e-4
    hidden_dim: int = 32
    memory_decay: float = 0.1
    seed: int = 1

    def __post_init__(self):
        if self.step_size < 1:
            raise UsageError("step_size must be at least 1")
        if self.n_agents < 1:
            raise UsageError("n_agents must be at least 1")
        if self.epochs < 1:
            raise UsageError("epochs must be at least 1")
        if self.learning_rate <= 0:
            raise UsageError("learning_rate must be positive")
        if self.hidden_dim < 1:
            raise UsageError("hidden_dim must be at least 1")
        if not 0.0 < self.memory_decay < 1.0:
            raise UsageError("memory_decay must be in (0, 1)")


@dataclass(eq=False)
class Rollout:
    """One agent trajectory plus everything training needs to replay it."""

    visited: np.ndarray
    cand_indptr: np.ndarray
    cand_nodes: np.ndarray
    cand_probs: np.ndarray
    chosen_pos: np.ndarray
    logps: np.ndarray
    class_probs: np.ndarray
    hidden_states: np.ndarray
    cell_states: np.ndarray
    gates: np.ndarray
    memory: np.ndarray


class GamModel:
    """Parameter container; vocab_size fixes the one-hot feature dimension."""

    def __init__(self, vocab_size, config: GamConfig, params=None, vocab_sha256=None):
        if vocab_size < 1:
            raise UsageError("vocab_size must be at least 1")
        self.vocab_size = int(vocab_size)
        self.config = config
        self.vocab_sha256 = vocab_sha256
        self.params = params if params is not None else self._init_params()
        h = config.hidden_dim
        d = self.vocab_size
        expected = {
            "phi.w": (h, d + h),
            "phi.b": (h,),
            "attn.a": (h,),
            "lstm.wx": (4 * h, d),
            "lstm.wh": (4 * h, h),
            "lstm.b": (4 * h,),
            "cls.w": (2, 2 * h),
            "cls.b": (2,),
        }
        for name, shape in expected.items():
            if name not in self.params or self.params[name].shape != shape:
                raise UsageError(f"parameter {name!r} missing or has wrong shape")

    def _init_params(self) -> ParamSet:
        rng = np.random.default_rng(self.config.seed)
        h = self.config.hidden_dim
        d = self.vocab_size
        p = ParamSet()
        # the walk-scoring parameters start wider than unit variance so the
        # softmax policy has sharp enough logits to escape its uniform basin
        p.add("phi.w", rng.standard_normal((h, d + h)) / np.sqrt(d + h) * SCORE_GAIN)
        p.add("phi.b", np.zeros(h))
        p.add("attn.a", rng.standard_normal(h) / np.sqrt(h) * SCORE_GAIN)
        p.add("lstm.wx", rng.standard_normal((4 * h, d)) / np.sqrt(d))
        p.add("lstm.wh", rng.standard_normal((4 * h, h)) / np.sqrt(h))
        p.add("lstm.b", np.zeros(4 * h))
        p.add("cls.w", rng.standard_normal((2, 2 * h)) / np.sqrt(2 * h))
        p.add("cls.b", np.zeros(2))
        return p

    def with_params(self, params: ParamSet) -> "GamModel":
        return GamModel(self.vocab_size, self.config, params, vocab_sha256=self.vocab_sha256)


def graph_arrays(graph: ApiCallGraph, vocab_size: int):
    """CSR out/in adjacency over local node indices, plus per-node vocab ids.

    Local index i corresponds to graph.nodes[i]; neighbour lists are sorted
    ascending so that first-max argmax resolves ties to the lowest node id.
    """
    if not graph.nodes:
        raise UsageError("graph has no nodes")
    nodes = graph.nodes
    local = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    if max(nodes) >= vocab_size:
        raise UsageError("graph contains node ids outside the vocabulary")
    out_lists = [[] for _ in range(n)]
    in_lists = [[] for _ in range(n)]
    for s, t in graph.edges:
        out_lists[local[s]].append(local[t])
        in_lists[local[t]].append(local[s])

    def csr(lists):
        indptr = np.zeros(n + 1, dtype=np.int64)
        for i, l in enumerate(lists):
            l.sort()
            indptr[i + 1] = indptr[i] + len(l)
        indices = np.array([v for l in lists for v in l], dtype=np.int64)
        return indptr, indices

    out_indptr, out_indices = csr(out_lists)
    in_indptr, in_indices = csr(in_lists)
    vids = np.array(nodes, dtype=np.int64)
    return out_indptr, out_indices, in_indptr, in_indices, vids


def structural_attention(model: GamModel, candidates, context) -> np.ndarray:
    """Attention distribution over candidate vocabulary ids given a context."""
    cands = np.asarray(candidates, dtype=np.int64)
    if cands.size == 0:
        raise UsageError("candidate set must be non-empty")
    ctx = np.asarray(context, dtype=np.float64)
    wphi, bphi, avec = model.params["phi.w"], model.params["phi.b"], model.params["attn.a"]
    d = model.vocab_size
    logits = np.empty(cands.size)
    for i, vid in enumerate(cands):
        feat = np.zeros(d + ctx.shape[0])
        feat[vid] = 1.0
        feat[d:] = ctx
        logits[i] = avec @ (wphi @ feat + bphi)
    return softmax(logits)


def _start_node(out_indptr, n, u) -> int:
    pool = [i for i in range(n) if out_indptr[i + 1] > out_indptr[i]]
    if not pool:
        pool = list(range(n))
    return pool[min(int(u * len(pool)), len(pool) - 1)]


def run_rollout(model: GamModel, graph, config: GamConfig, mode="sample", rng=None) -> Rollout:
    if mode not in ("sample", "argmax"):
        raise UsageError(f"mode must be 'sample' or 'argmax', got {mode!r}")
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    arrays = graph_arrays(graph, model.vocab_size)
    return _rollout_on_arrays(model, arrays, config, mode, rng)


def _rollout_on_arrays(model, arrays, config, mode, rng) -> Rollout:
    T = config.step_size
    uniforms = rng.random(T + 1)
    start = _start_node(arrays[0], arrays[4].shape[0], uniforms[0])
    p = model.params
    out = kernels().gam_walk(
        *arrays,
        p["phi.w"], p["phi.b"], p["attn.a"],
        p["lstm.wx"], p["lstm.wh"], p["lstm.b"],
        start, uniforms[1:], config.memory_decay, mode == "sample",
    )
    visited, cand_indptr, cand_nodes, cand_probs, chosen_pos, hs, cs, gates, mem, _ = out
    logps = np.zeros(T)
    for t in range(T):
        if chosen_pos[t] >= 0:
            logps[t] = np.log(cand_probs[cand_indptr[t] + chosen_pos[t]])
    z = np.concatenate([mem, hs[-1]])
    class_probs = softmax(p["cls.w"] @ z + p["cls.b"])
    return Rollout(
        visited, cand_indptr, cand_nodes, cand_probs, chosen_pos,
        logps, class_probs, hs, cs, gates, mem,
    )


def gam_predict(model: GamModel, graph, config: GamConfig):
    """Class probabilities and per-node attention from argmax rollouts.

    Probabilities are the mean over n_agents rollouts with distinct start
    seeds. Attention accumulates every step's full candidate distribution
    and divides by the total step count, so it sums to 1 exactly when no
    step had to restart.
    """
    arrays = graph_arrays(graph, model.vocab_size)
    n = arrays[4].shape[0]
    seeds = np.random.SeedSequence(config.seed).spawn(config.n_agents)
    probs = np.zeros(2)
    attention = np.zeros(n)
    for seq in seeds:
        roll = _rollout_on_arrays(model, arrays, config, "argmax", np.random.default_rng(seq))
        probs += roll.class_probs
        np.add.at(attention, roll.cand_nodes, roll.cand_probs)
    probs /= config.n_agents
    attention /= config.n_agents * config.step_size
    return probs, attention


def _corpus_classes(graphs):
    classes = []
    for g in graphs:
        if g.label not in CLASS_OF_LABEL:
            raise UsageError(f"graph {g.app_id!r} has label {g.label!r}; train on labeled graphs")
        classes.append(CLASS_OF_LABEL[g.label])
    if len(set(classes)) < 2:
        raise UsageError("training corpus must contain both labels")
    return np.array(classes, dtype=np.int64)


def train_gam(model: GamModel, corpus, config: GamConfig):
    """REINFORCE plus cross-entropy training; returns (new model, epoch losses)."""
    graphs = list(corpus)
    if config.hidden_dim != model.config.hidden_dim:
        raise UsageError("config.hidden_dim does not match the model")
    y = _corpus_classes(graphs)
    arrays = [graph_arrays(g, model.vocab_size) for g in graphs]
    params = model.params.copy()
    h = config.hidden_dim
    T = config.step_size
    root = np.random.SeedSequence(config.seed)
    epoch_seqs = root.spawn(config.epochs)
    baseline = 0.0
    losses = []
    for epoch_seq in epoch_seqs:
        children = epoch_seq.spawn(1 + len(graphs))
        order = np.random.default_rng(children[0]).permutation(len(graphs))
        epoch_loss = 0.0
        for gi in order:
            agent_seqs = children[1 + gi].spawn(config.n_agents)
            acc = params.zeros_like()
            for seq in agent_seqs:
                rng = np.random.default_rng(seq)
                roll = _rollout_on_arrays(model.with_params(params), arrays[gi], config, "sample", rng)
                probs = roll.class_probs
                epoch_loss += -np.log(max(probs[y[gi]], 1e-300))
                reward = 1.0 if int(np.argmax(probs)) == y[gi] else -1.0
                pg_coeff = -(reward - baseline)
                baseline = BASELINE_DECAY * baseline + (1.0 - BASELINE_DECAY) * reward
                dlogits = probs.copy()
                dlogits[y[gi]] -= 1.0
                z = np.concatenate([roll.memory, roll.hidden_states[-1]])
                acc["cls.w"] += np.outer(dlogits, z)
                acc["cls.b"] += dlogits
                dz = params["cls.w"].T @ dlogits
                back = kernels().gam_walk_backward(
                    arrays[gi][4],
                    params["phi.w"], params["phi.b"], params["attn.a"],
                    params["lstm.wx"], params["lstm.wh"], params["lstm.b"],
                    roll.visited, roll.cand_indptr, roll.cand_nodes,
                    roll.cand_probs, roll.chosen_pos,
                    roll.hidden_states, roll.cell_states, roll.gates,
                    dz[h:], dz[:h], pg_coeff, config.memory_decay,
                )
                for name, grad in zip(
                    ("phi.w", "phi.b", "attn.a", "lstm.wx", "lstm.wh", "lstm.b"), back
                ):
                    acc[name] += grad
            for name in acc:
                acc[name] /= config.n_agents
            params = adam_update(params, acc, config.learning_rate)
        losses.append(epoch_loss / (len(graphs) * config.n_agents))
    trained = GamModel(model.vocab_size, config, params, vocab_sha256=model.vocab_sha256)
    return trained, losses


def save_gam(model: GamModel, path) -> None:
    save_checkpoint(
        path, "gam", asdict(model.config), model.vocab_size, model.vocab_sha256, model.params
    )


def load_gam(path) -> GamModel:
    _, config, vocab_size, vocab_sha256, params = load_checkpoint(path, expect_kind="gam")
    return GamModel(vocab_size, GamConfig(**config), params, vocab_sha256=vocab_sha256)
