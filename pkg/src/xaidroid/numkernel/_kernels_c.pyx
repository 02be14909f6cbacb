# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the hot kernels.

Must stay semantically in lock step with _kernels_py.py: identical
signatures, identical selection arithmetic (sequential cumulative sum with
a strict "u < acc" test, floor-based restarts, first-max argmax), so that
a seeded walk visits the same nodes under either backend.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, tanh

cnp.import_array()


cdef inline double _sigmoid(double x) noexcept:
    return 1.0 / (1.0 + exp(-x))


def gam_walk(
    cnp.int64_t[::1] out_indptr,
    cnp.int64_t[::1] out_indices,
    cnp.int64_t[::1] in_indptr,
    cnp.int64_t[::1] in_indices,
    cnp.int64_t[::1] vids,
    double[:, ::1] wphi,
    double[::1] bphi,
    double[::1] avec,
    double[:, ::1] wx,
    double[:, ::1] wh,
    double[::1] b,
    long start,
    double[::1] uniforms,
    double gamma,
    bint sample,
):
    cdef Py_ssize_t T = uniforms.shape[0]
    cdef Py_ssize_t n = vids.shape[0]
    cdef Py_ssize_t p = wphi.shape[0]
    cdef Py_ssize_t h = wh.shape[1]
    cdef Py_ssize_t d = wphi.shape[1] - h
    cdef Py_ssize_t t, i, j, k, lo, hi, cnt, pos, cur, nxt, vid, fill

    node_score_arr = np.empty(d, dtype=np.float64)
    ctx_proj_arr = np.empty(h, dtype=np.float64)
    cdef double[::1] node_score = node_score_arr
    cdef double[::1] ctx_proj = ctx_proj_arr
    cdef double acc, bias_score, ctx_score, maxl, ssum, u
    cdef double ig, fg, gg, og

    for j in range(d):
        acc = 0.0
        for i in range(p):
            acc += wphi[i, j] * avec[i]
        node_score[j] = acc
    for j in range(h):
        acc = 0.0
        for i in range(p):
            acc += wphi[i, d + j] * avec[i]
        ctx_proj[j] = acc
    bias_score = 0.0
    for i in range(p):
        bias_score += avec[i] * bphi[i]

    visited_arr = np.empty(T, dtype=np.int64)
    chosen_arr = np.empty(T, dtype=np.int64)
    indptr_arr = np.zeros(T + 1, dtype=np.int64)
    nodes_buf = np.empty(T * n, dtype=np.int64)
    probs_buf = np.empty(T * n, dtype=np.float64)
    hs_arr = np.zeros((T + 1, h), dtype=np.float64)
    cs_arr = np.zeros((T + 1, h), dtype=np.float64)
    gates_arr = np.empty((T, 4 * h), dtype=np.float64)
    mem_arr = np.zeros(h, dtype=np.float64)
    scratch = np.empty(n, dtype=np.float64)

    cdef cnp.int64_t[::1] visited = visited_arr
    cdef cnp.int64_t[::1] chosen_pos = chosen_arr
    cdef cnp.int64_t[::1] cand_indptr = indptr_arr
    cdef cnp.int64_t[::1] cand_nodes = nodes_buf
    cdef double[::1] cand_probs = probs_buf
    cdef double[:, ::1] hs = hs_arr
    cdef double[:, ::1] cs = cs_arr
    cdef double[:, ::1] gates = gates_arr
    cdef double[::1] mem = mem_arr
    cdef double[::1] logits = scratch
    cdef double logp_sum = 0.0
    cdef cnp.int64_t[::1] cands

    fill = 0
    cur = start
    for t in range(T):
        lo = out_indptr[cur]
        hi = out_indptr[cur + 1]
        cands = out_indices
        if hi == lo:
            lo = in_indptr[cur]
            hi = in_indptr[cur + 1]
            cands = in_indices
        cnt = hi - lo
        if cnt == 0:
            nxt = <Py_ssize_t>(uniforms[t] * n)
            if nxt > n - 1:
                nxt = n - 1
            cand_indptr[t + 1] = fill
            chosen_pos[t] = -1
        else:
            ctx_score = bias_score
            for j in range(h):
                ctx_score += ctx_proj[j] * hs[t, j]
            maxl = -1e300
            for i in range(cnt):
                logits[i] = node_score[vids[cands[lo + i]]] + ctx_score
                if logits[i] > maxl:
                    maxl = logits[i]
            ssum = 0.0
            for i in range(cnt):
                logits[i] = exp(logits[i] - maxl)
                ssum += logits[i]
            for i in range(cnt):
                logits[i] /= ssum
            if sample:
                u = uniforms[t]
                pos = cnt - 1
                acc = 0.0
                for i in range(cnt):
                    acc += logits[i]
                    if u < acc:
                        pos = i
                        break
            else:
                pos = 0
                for i in range(1, cnt):
                    if logits[i] > logits[pos]:
                        pos = i
            for i in range(cnt):
                cand_nodes[fill + i] = cands[lo + i]
                cand_probs[fill + i] = logits[i]
            fill += cnt
            cand_indptr[t + 1] = fill
            chosen_pos[t] = pos
            logp_sum += log(cand_probs[cand_indptr[t] + pos])
            nxt = cands[lo + pos]
        visited[t] = nxt

        vid = vids[nxt]
        for j in range(4 * h):
            acc = wx[j, vid] + b[j]
            for k in range(h):
                acc += wh[j, k] * hs[t, k]
            gates[t, j] = acc
        for j in range(h):
            ig = _sigmoid(gates[t, j])
            fg = _sigmoid(gates[t, h + j])
            gg = tanh(gates[t, 2 * h + j])
            og = _sigmoid(gates[t, 3 * h + j])
            gates[t, j] = ig
            gates[t, h + j] = fg
            gates[t, 2 * h + j] = gg
            gates[t, 3 * h + j] = og
            cs[t + 1, j] = fg * cs[t, j] + ig * gg
            hs[t + 1, j] = og * tanh(cs[t + 1, j])
            mem[j] = (1.0 - gamma) * mem[j] + gamma * hs[t + 1, j]
        cur = nxt

    return (
        visited_arr,
        indptr_arr,
        nodes_buf[:fill].copy(),
        probs_buf[:fill].copy(),
        chosen_arr,
        hs_arr,
        cs_arr,
        gates_arr,
        mem_arr,
        logp_sum,
    )


def gam_walk_backward(
    cnp.int64_t[::1] vids,
    double[:, ::1] wphi,
    double[::1] bphi,
    double[::1] avec,
    double[:, ::1] wx,
    double[:, ::1] wh,
    double[::1] b,
    cnp.int64_t[::1] visited,
    cnp.int64_t[::1] cand_indptr,
    cnp.int64_t[::1] cand_nodes,
    double[::1] cand_probs,
    cnp.int64_t[::1] chosen_pos,
    double[:, ::1] hs,
    double[:, ::1] cs,
    double[:, ::1] gates,
    double[::1] d_h_final,
    double[::1] d_m_final,
    double pg_coeff,
    double gamma,
):
    cdef Py_ssize_t T = visited.shape[0]
    cdef Py_ssize_t p = wphi.shape[0]
    cdef Py_ssize_t h = wh.shape[1]
    cdef Py_ssize_t d = wphi.shape[1] - h
    cdef Py_ssize_t t, i, j, k, lo, hi, pos, vid

    dwx_arr = np.zeros((4 * h, d), dtype=np.float64)
    dwh_arr = np.zeros((4 * h, h), dtype=np.float64)
    db_arr = np.zeros(4 * h, dtype=np.float64)
    dh_arr = np.array(d_h_final, dtype=np.float64, copy=True)
    dm_arr = np.array(d_m_final, dtype=np.float64, copy=True)
    dc_arr = np.zeros(h, dtype=np.float64)
    dpre_arr = np.empty(4 * h, dtype=np.float64)
    dh_next_arr = np.empty(h, dtype=np.float64)

    cdef double[:, ::1] dwx = dwx_arr
    cdef double[:, ::1] dwh = dwh_arr
    cdef double[::1] db = db_arr
    cdef double[::1] dh = dh_arr
    cdef double[::1] dm = dm_arr
    cdef double[::1] dc = dc_arr
    cdef double[::1] dpre = dpre_arr
    cdef double[::1] dh_next = dh_next_arr
    cdef double ig, fg, gg, og, tc, do_, dct, di, df, dg, acc, s, dlv

    for t in range(T - 1, -1, -1):
        for j in range(h):
            dh[j] += gamma * dm[j]
        for j in range(h):
            ig = gates[t, j]
            fg = gates[t, h + j]
            gg = gates[t, 2 * h + j]
            og = gates[t, 3 * h + j]
            tc = tanh(cs[t + 1, j])
            do_ = dh[j] * tc
            dct = dc[j] + dh[j] * og * (1.0 - tc * tc)
            di = dct * gg
            df = dct * cs[t, j]
            dg = dct * ig
            dc[j] = dct * fg
            dpre[j] = di * ig * (1.0 - ig)
            dpre[h + j] = df * fg * (1.0 - fg)
            dpre[2 * h + j] = dg * (1.0 - gg * gg)
            dpre[3 * h + j] = do_ * og * (1.0 - og)
        vid = vids[visited[t]]
        for j in range(4 * h):
            dwx[j, vid] += dpre[j]
            db[j] += dpre[j]
            for k in range(h):
                dwh[j, k] += dpre[j] * hs[t, k]
        for k in range(h):
            acc = 0.0
            for j in range(4 * h):
                acc += wh[j, k] * dpre[j]
            dh_next[k] = acc
        for k in range(h):
            dh[k] = dh_next[k]
            dm[k] *= 1.0 - gamma

    sc_arr = np.zeros(d, dtype=np.float64)
    ctxw_arr = np.zeros(h, dtype=np.float64)
    cdef double[::1] sc_total = sc_arr
    cdef double[::1] ctx_weighted = ctxw_arr
    cdef double dl_total = 0.0

    for t in range(T):
        pos = chosen_pos[t]
        if pos < 0:
            continue
        lo = cand_indptr[t]
        hi = cand_indptr[t + 1]
        s = 0.0
        for i in range(lo, hi):
            dlv = -pg_coeff * cand_probs[i]
            if i - lo == pos:
                dlv += pg_coeff
            sc_total[vids[cand_nodes[i]]] += dlv
            s += dlv
        for j in range(h):
            ctx_weighted[j] += s * hs[t, j]
        dl_total += s

    dwphi_arr = np.empty((p, d + h), dtype=np.float64)
    dbphi_arr = np.empty(p, dtype=np.float64)
    davec_arr = np.empty(p, dtype=np.float64)
    cdef double[:, ::1] dwphi = dwphi_arr
    cdef double[::1] dbphi = dbphi_arr
    cdef double[::1] davec = davec_arr

    for i in range(p):
        for j in range(d):
            dwphi[i, j] = avec[i] * sc_total[j]
        for j in range(h):
            dwphi[i, d + j] = avec[i] * ctx_weighted[j]
        dbphi[i] = dl_total * avec[i]
        acc = dl_total * bphi[i]
        for j in range(d):
            acc += wphi[i, j] * sc_total[j]
        for j in range(h):
            acc += wphi[i, d + j] * ctx_weighted[j]
        davec[i] = acc

    return dwphi_arr, dbphi_arr, davec_arr, dwx_arr, dwh_arr, db_arr


def gat_edge_forward(
    double[:, ::1] x,
    double[:, :, ::1] w,
    double[:, ::1] a_self,
    double[:, ::1] a_neigh,
    cnp.int64_t[::1] edge_src,
    cnp.int64_t[::1] edge_dst,
    cnp.int64_t[::1] seg_indptr,
    double slope,
):
    cdef Py_ssize_t K = w.shape[0]
    cdef Py_ssize_t fout = w.shape[1]
    cdef Py_ssize_t fin = w.shape[2]
    cdef Py_ssize_t N = x.shape[0]
    cdef Py_ssize_t E = edge_src.shape[0]
    cdef Py_ssize_t k, i, j, e, f, lo, hi

    hp_arr = np.empty((K, N, fout), dtype=np.float64)
    epre_arr = np.empty((K, E), dtype=np.float64)
    alpha_arr = np.empty((K, E), dtype=np.float64)
    agg_arr = np.zeros((K, N, fout), dtype=np.float64)
    ss_arr = np.empty((K, N), dtype=np.float64)
    sn_arr = np.empty((K, N), dtype=np.float64)

    cdef double[:, :, ::1] hp = hp_arr
    cdef double[:, ::1] epre = epre_arr
    cdef double[:, ::1] alpha = alpha_arr
    cdef double[:, :, ::1] agg = agg_arr
    cdef double[:, ::1] s_self = ss_arr
    cdef double[:, ::1] s_neigh = sn_arr
    cdef double acc, val, m, tot

    for k in range(K):
        for i in range(N):
            for f in range(fout):
                acc = 0.0
                for j in range(fin):
                    acc += w[k, f, j] * x[i, j]
                hp[k, i, f] = acc
            acc = 0.0
            val = 0.0
            for f in range(fout):
                acc += hp[k, i, f] * a_self[k, f]
                val += hp[k, i, f] * a_neigh[k, f]
            s_self[k, i] = acc
            s_neigh[k, i] = val
        for e in range(E):
            val = s_self[k, edge_dst[e]] + s_neigh[k, edge_src[e]]
            epre[k, e] = val
        for i in range(N):
            lo = seg_indptr[i]
            hi = seg_indptr[i + 1]
            m = -1e300
            for e in range(lo, hi):
                val = epre[k, e] if epre[k, e] >= 0.0 else slope * epre[k, e]
                alpha[k, e] = val
                if val > m:
                    m = val
            tot = 0.0
            for e in range(lo, hi):
                alpha[k, e] = exp(alpha[k, e] - m)
                tot += alpha[k, e]
            for e in range(lo, hi):
                alpha[k, e] /= tot
                for f in range(fout):
                    agg[k, i, f] += alpha[k, e] * hp[k, edge_src[e], f]

    return hp_arr, epre_arr, alpha_arr, agg_arr


def gat_edge_backward(
    double[:, ::1] x,
    double[:, :, ::1] w,
    double[:, ::1] a_self,
    double[:, ::1] a_neigh,
    cnp.int64_t[::1] edge_src,
    cnp.int64_t[::1] edge_dst,
    cnp.int64_t[::1] seg_indptr,
    double[:, :, ::1] hp,
    double[:, ::1] epre,
    double[:, ::1] alpha,
    double[:, :, ::1] d_agg,
    double slope,
):
    cdef Py_ssize_t K = w.shape[0]
    cdef Py_ssize_t fout = w.shape[1]
    cdef Py_ssize_t fin = w.shape[2]
    cdef Py_ssize_t N = x.shape[0]
    cdef Py_ssize_t E = edge_src.shape[0]
    cdef Py_ssize_t k, i, j, e, f, lo, hi, src, dst

    dx_arr = np.zeros((N, fin), dtype=np.float64)
    dw_arr = np.zeros((K, fout, fin), dtype=np.float64)
    das_arr = np.zeros((K, fout), dtype=np.float64)
    dan_arr = np.zeros((K, fout), dtype=np.float64)
    dhp_arr = np.zeros((N, fout), dtype=np.float64)
    dalpha_arr = np.empty(E, dtype=np.float64)
    dss_arr = np.empty(N, dtype=np.float64)
    dsn_arr = np.empty(N, dtype=np.float64)

    cdef double[:, ::1] dx = dx_arr
    cdef double[:, :, ::1] dw = dw_arr
    cdef double[:, ::1] da_self = das_arr
    cdef double[:, ::1] da_neigh = dan_arr
    cdef double[:, ::1] dhp = dhp_arr
    cdef double[::1] dalpha = dalpha_arr
    cdef double[::1] ds_self = dss_arr
    cdef double[::1] ds_neigh = dsn_arr
    cdef double acc, inner, depre

    for k in range(K):
        for i in range(N):
            for f in range(fout):
                dhp[i, f] = 0.0
            ds_self[i] = 0.0
            ds_neigh[i] = 0.0
        for e in range(E):
            src = edge_src[e]
            dst = edge_dst[e]
            acc = 0.0
            for f in range(fout):
                acc += d_agg[k, dst, f] * hp[k, src, f]
                dhp[src, f] += alpha[k, e] * d_agg[k, dst, f]
            dalpha[e] = acc
        for i in range(N):
            lo = seg_indptr[i]
            hi = seg_indptr[i + 1]
            inner = 0.0
            for e in range(lo, hi):
                inner += alpha[k, e] * dalpha[e]
            for e in range(lo, hi):
                depre = alpha[k, e] * (dalpha[e] - inner)
                if epre[k, e] < 0.0:
                    depre *= slope
                ds_self[i] += depre
                ds_neigh[edge_src[e]] += depre
        for i in range(N):
            for f in range(fout):
                dhp[i, f] += ds_self[i] * a_self[k, f] + ds_neigh[i] * a_neigh[k, f]
                da_self[k, f] += ds_self[i] * hp[k, i, f]
                da_neigh[k, f] += ds_neigh[i] * hp[k, i, f]
        for i in range(N):
            for f in range(fout):
                for j in range(fin):
                    dw[k, f, j] += dhp[i, f] * x[i, j]
                    dx[i, j] += dhp[i, f] * w[k, f, j]

    return dx_arr, dw_arr, das_arr, dan_arr
