"""Reference numpy implementations of the hot kernels.

The compiled extension mirrors these signatures exactly; backend.py picks
one of the two at import time. Keep the selection arithmetic (cumsum +
searchsorted, floor for restarts, first-max argmax) in sync with the
.pyx file, otherwise seeded runs diverge between backends.
"""

from __future__ import annotations

import numpy as np


def gam_walk(
    out_indptr,
    out_indices,
    in_indptr,
    in_indices,
    vids,
    wphi,
    bphi,
    avec,
    wx,
    wh,
    b,
    start,
    uniforms,
    gamma,
    sample,
):
    """Roll a single agent for T = len(uniforms) steps from ``start``.

    Candidates at each step are the out-neighbours of the current node,
    falling back to in-neighbours, falling back to a uniform restart over
    all nodes (a restart consumes the step but records no distribution).
    Returns everything the backward pass and the attention accumulator
    need: visited nodes, per-step candidate segments with their softmax
    probabilities, chosen positions (-1 on restart), the LSTM trajectory,
    the hidden-state running mean and the summed log-probability.
    """
    T = uniforms.shape[0]
    n = vids.shape[0]
    d = wx.shape[1]
    h = wh.shape[1]

    node_score = wphi[:, :d].T @ avec
    ctx_proj = wphi[:, d:].T @ avec
    bias_score = float(avec @ bphi)

    visited = np.empty(T, dtype=np.int64)
    chosen_pos = np.empty(T, dtype=np.int64)
    cand_indptr = np.zeros(T + 1, dtype=np.int64)
    cand_nodes_parts = []
    cand_probs_parts = []
    hs = np.zeros((T + 1, h), dtype=np.float64)
    cs = np.zeros((T + 1, h), dtype=np.float64)
    gates = np.empty((T, 4 * h), dtype=np.float64)
    mem = np.zeros(h, dtype=np.float64)
    logp_sum = 0.0

    cur = int(start)
    for t in range(T):
        cands = out_indices[out_indptr[cur] : out_indptr[cur + 1]]
        if cands.shape[0] == 0:
            cands = in_indices[in_indptr[cur] : in_indptr[cur + 1]]
        if cands.shape[0] == 0:
            nxt = min(int(uniforms[t] * n), n - 1)
            cand_indptr[t + 1] = cand_indptr[t]
            chosen_pos[t] = -1
        else:
            ctx_score = float(ctx_proj @ hs[t]) + bias_score
            logits = node_score[vids[cands]] + ctx_score
            e = np.exp(logits - logits.max())
            probs = e / e.sum()
            if sample:
                cum = np.cumsum(probs)
                pos = int(np.searchsorted(cum, uniforms[t], side="right"))
                if pos >= probs.shape[0]:
                    pos = probs.shape[0] - 1
            else:
                pos = int(np.argmax(probs))
            nxt = int(cands[pos])
            cand_indptr[t + 1] = cand_indptr[t] + cands.shape[0]
            cand_nodes_parts.append(np.asarray(cands, dtype=np.int64))
            cand_probs_parts.append(probs)
            chosen_pos[t] = pos
            logp_sum += float(np.log(probs[pos]))
        visited[t] = nxt

        vid = int(vids[nxt])
        pre = wx[:, vid] + wh @ hs[t] + b
        ig = 1.0 / (1.0 + np.exp(-pre[:h]))
        fg = 1.0 / (1.0 + np.exp(-pre[h : 2 * h]))
        gg = np.tanh(pre[2 * h : 3 * h])
        og = 1.0 / (1.0 + np.exp(-pre[3 * h :]))
        cs[t + 1] = fg * cs[t] + ig * gg
        hs[t + 1] = og * np.tanh(cs[t + 1])
        gates[t, :h] = ig
        gates[t, h : 2 * h] = fg
        gates[t, 2 * h : 3 * h] = gg
        gates[t, 3 * h :] = og
        mem = (1.0 - gamma) * mem + gamma * hs[t + 1]
        cur = nxt

    if cand_nodes_parts:
        cand_nodes = np.concatenate(cand_nodes_parts)
        cand_probs = np.concatenate(cand_probs_parts)
    else:
        cand_nodes = np.empty(0, dtype=np.int64)
        cand_probs = np.empty(0, dtype=np.float64)
    return (
        visited,
        cand_indptr,
        cand_nodes,
        cand_probs,
        chosen_pos,
        hs,
        cs,
        gates,
        mem,
        logp_sum,
    )


def gam_walk_backward(
    vids,
    wphi,
    bphi,
    avec,
    wx,
    wh,
    b,
    visited,
    cand_indptr,
    cand_nodes,
    cand_probs,
    chosen_pos,
    hs,
    cs,
    gates,
    d_h_final,
    d_m_final,
    pg_coeff,
    gamma,
):
    """Backward pass of gam_walk.

    Splits gradient flow the way training does: d_h_final / d_m_final run
    back through the LSTM chain with the visited sequence held fixed, while
    pg_coeff * d(sum log p) reaches only the scoring parameters with the
    context sequence held fixed. Returns (dwphi, dbphi, davec, dwx, dwh, db).
    """
    T = visited.shape[0]
    d = wx.shape[1]
    h = wh.shape[1]

    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros_like(b)
    dh = d_h_final.astype(np.float64).copy()
    dc = np.zeros(h, dtype=np.float64)
    dm = d_m_final.astype(np.float64).copy()

    for t in range(T - 1, -1, -1):
        dh += gamma * dm
        ig = gates[t, :h]
        fg = gates[t, h : 2 * h]
        gg = gates[t, 2 * h : 3 * h]
        og = gates[t, 3 * h :]
        tc = np.tanh(cs[t + 1])
        do = dh * tc
        dct = dc + dh * og * (1.0 - tc * tc)
        di = dct * gg
        df = dct * cs[t]
        dg = dct * ig
        dc = dct * fg
        dpre = np.concatenate(
            [
                di * ig * (1.0 - ig),
                df * fg * (1.0 - fg),
                dg * (1.0 - gg * gg),
                do * og * (1.0 - og),
            ]
        )
        dwx[:, int(vids[visited[t]])] += dpre
        dwh += np.outer(dpre, hs[t])
        db += dpre
        dh = wh.T @ dpre
        dm *= 1.0 - gamma

    sc_total = np.zeros(d, dtype=np.float64)
    ctx_weighted = np.zeros(h, dtype=np.float64)
    dl_total = 0.0
    for t in range(T):
        pos = int(chosen_pos[t])
        if pos < 0:
            continue
        lo, hi = int(cand_indptr[t]), int(cand_indptr[t + 1])
        probs = cand_probs[lo:hi]
        dl = -pg_coeff * probs
        dl[pos] += pg_coeff
        np.add.at(sc_total, vids[cand_nodes[lo:hi]], dl)
        s = float(dl.sum())
        ctx_weighted += s * hs[t]
        dl_total += s

    dwphi = np.empty_like(wphi)
    dwphi[:, :d] = np.outer(avec, sc_total)
    dwphi[:, d:] = np.outer(avec, ctx_weighted)
    dbphi = dl_total * avec
    davec = wphi[:, :d] @ sc_total + wphi[:, d:] @ ctx_weighted + dl_total * bphi
    return dwphi, dbphi, davec, dwx, dwh, db


def gat_edge_forward(x, w, a_self, a_neigh, edge_src, edge_dst, seg_indptr, slope):
    """Multi-head edge attention over dst-sorted edges with self-loops.

    x is (N, Fin); w is (K, Fout, Fin); a_self / a_neigh are the two halves
    of each head's scoring vector, applied to the aggregating node and the
    neighbour respectively. seg_indptr delimits the dst segments, one per
    node (self-loops guarantee none is empty). Returns per-head projected
    features, pre-activation edge scores, normalised coefficients and the
    aggregated output, each with a leading head axis.
    """
    hp = np.matmul(x[None, :, :], np.transpose(w, (0, 2, 1)))
    s_self = np.einsum("knf,kf->kn", hp, a_self)
    s_neigh = np.einsum("knf,kf->kn", hp, a_neigh)
    epre = s_self[:, edge_dst] + s_neigh[:, edge_src]
    eact = np.where(epre >= 0.0, epre, slope * epre)
    starts = seg_indptr[:-1]
    segmax = np.maximum.reduceat(eact, starts, axis=1)
    eexp = np.exp(eact - segmax[:, edge_dst])
    segsum = np.add.reduceat(eexp, starts, axis=1)
    alpha = eexp / segsum[:, edge_dst]
    agg = np.add.reduceat(alpha[:, :, None] * hp[:, edge_src, :], starts, axis=1)
    return hp, epre, alpha, agg


def gat_edge_backward(
    x, w, a_self, a_neigh, edge_src, edge_dst, seg_indptr, hp, epre, alpha, d_agg, slope
):
    """Backward pass of gat_edge_forward given d(agg).

    Returns (dx, dw, da_self, da_neigh).
    """
    K, N, Fout = hp.shape
    starts = seg_indptr[:-1]
    dalpha = np.sum(d_agg[:, edge_dst, :] * hp[:, edge_src, :], axis=2)
    dhp = np.zeros_like(hp)
    scatter = alpha[:, :, None] * d_agg[:, edge_dst, :]
    for k in range(K):
        np.add.at(dhp[k], edge_src, scatter[k])
    inner = np.add.reduceat(alpha * dalpha, starts, axis=1)
    deact = alpha * (dalpha - inner[:, edge_dst])
    depre = deact * np.where(epre >= 0.0, 1.0, slope)
    ds_self = np.add.reduceat(depre, starts, axis=1)
    ds_neigh = np.empty((K, N), dtype=np.float64)
    for k in range(K):
        ds_neigh[k] = np.bincount(edge_src, weights=depre[k], minlength=N)
    dhp += ds_self[:, :, None] * a_self[:, None, :]
    dhp += ds_neigh[:, :, None] * a_neigh[:, None, :]
    da_self = np.einsum("kn,knf->kf", ds_self, hp)
    da_neigh = np.einsum("kn,knf->kf", ds_neigh, hp)
    dw = np.einsum("knf,ni->kfi", dhp, x)
    dx = np.einsum("knf,kfi->ni", dhp, w)
    return dx, dw, da_self, da_neigh
