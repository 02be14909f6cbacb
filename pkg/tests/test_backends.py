"""The numpy and compiled kernels must agree on seeded inputs."""

import numpy as np
import pytest

from xaidroid.errors import UsageError
from xaidroid.numkernel import backend_name, set_backend

pytest.importorskip("xaidroid.numkernel._kernels_c")

from xaidroid.numkernel import _kernels_py as kpy
from xaidroid.numkernel import _kernels_c as kc


def _random_digraph(rng, n):
    """CSR out/in adjacency with sorted neighbour lists; some sinks allowed."""
    out_lists = []
    for i in range(n):
        deg = int(rng.integers(0, 4))
        nbrs = sorted(set(int(v) for v in rng.integers(0, n, size=deg)) - {i})
        out_lists.append(nbrs)
    in_lists = [[] for _ in range(n)]
    for i, nbrs in enumerate(out_lists):
        for j in nbrs:
            in_lists[j].append(i)
    in_lists = [sorted(l) for l in in_lists]

    def flat(lists):
        indptr = np.zeros(n + 1, dtype=np.int64)
        for i, l in enumerate(lists):
            indptr[i + 1] = indptr[i] + len(l)
        idx = np.array([v for l in lists for v in l], dtype=np.int64)
        return indptr, idx

    out_indptr, out_indices = flat(out_lists)
    in_indptr, in_indices = flat(in_lists)
    vids = rng.integers(0, max(2, n // 2), size=n).astype(np.int64)
    return out_indptr, out_indices, in_indptr, in_indices, vids


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
@pytest.mark.parametrize("sample", [True, False])
def test_gam_walk_agrees_across_backends(seed, sample):
    rng = np.random.default_rng(1000 + seed)
    n, d_extra, h, p, T = 9, 0, 4, 3, 15
    graph = _random_digraph(rng, n)
    d = int(graph[4].max()) + 1
    wphi = 0.5 * rng.standard_normal((p, d + h))
    bphi = 0.5 * rng.standard_normal(p)
    avec = 0.5 * rng.standard_normal(p)
    wx = 0.5 * rng.standard_normal((4 * h, d))
    wh = 0.5 * rng.standard_normal((4 * h, h))
    b = 0.5 * rng.standard_normal(4 * h)
    uniforms = rng.random(T)
    args = (*graph, wphi, bphi, avec, wx, wh, b, 2, uniforms, 0.1, sample)
    ra = kpy.gam_walk(*args)
    rb = kc.gam_walk(*args)
    for i in (0, 1, 2, 4):
        assert np.array_equal(ra[i], rb[i]), f"output {i} diverged"
    for i in (3, 5, 6, 7, 8):
        assert np.allclose(ra[i], rb[i], atol=1e-12)
    assert ra[9] == pytest.approx(rb[9], abs=1e-12)

    d_h = rng.standard_normal(h)
    d_m = rng.standard_normal(h)
    back_args = (
        graph[4], wphi, bphi, avec, wx, wh, b,
        ra[0], ra[1], ra[2], ra[3], ra[4], ra[5], ra[6], ra[7],
        d_h, d_m, -0.8, 0.1,
    )
    ga = kpy.gam_walk_backward(*back_args)
    gb = kc.gam_walk_backward(*back_args)
    for x, y in zip(ga, gb):
        assert np.allclose(x, y, atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gat_kernels_agree_across_backends(seed):
    rng = np.random.default_rng(2000 + seed)
    n, fin, fout, K = 8, 3, 4, 5
    pairs = set((i, i) for i in range(n))
    for _ in range(10):
        i, j = rng.integers(0, n, size=2)
        pairs.add((int(i), int(j)))
        pairs.add((int(j), int(i)))
    ordered = sorted(pairs, key=lambda p: (p[1], p[0]))
    src = np.array([p[0] for p in ordered], dtype=np.int64)
    dst = np.array([p[1] for p in ordered], dtype=np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    for j in dst:
        indptr[j + 1] += 1
    indptr = np.cumsum(indptr).astype(np.int64)

    x = rng.standard_normal((n, fin))
    w = rng.standard_normal((K, fout, fin))
    a_self = rng.standard_normal((K, fout))
    a_neigh = rng.standard_normal((K, fout))
    fa = kpy.gat_edge_forward(x, w, a_self, a_neigh, src, dst, indptr, 0.2)
    fb = kc.gat_edge_forward(x, w, a_self, a_neigh, src, dst, indptr, 0.2)
    for ya, yb in zip(fa, fb):
        assert np.allclose(ya, yb, atol=1e-12)

    d_agg = rng.standard_normal((K, n, fout))
    ba = kpy.gat_edge_backward(
        x, w, a_self, a_neigh, src, dst, indptr, fa[0], fa[1], fa[2], d_agg, 0.2
    )
    bb = kc.gat_edge_backward(
        x, w, a_self, a_neigh, src, dst, indptr, fb[0], fb[1], fb[2], d_agg, 0.2
    )
    for ya, yb in zip(ba, bb):
        assert np.allclose(ya, yb, atol=1e-12)


def test_set_backend_round_trip():
    original = backend_name()
    try:
        prev = set_backend("py")
        assert prev == original
        assert backend_name() == "py"
        set_backend("c")
        assert backend_name() == "c"
    finally:
        set_backend(original)
    with pytest.raises(UsageError):
        set_backend("fortran")
