import numpy as np
import pytest

from oblivgeo import Tracer, trace_equal
from oblivgeo.quadtree import (DuplicatePoints, Quadtree, build_compressed_quadtree,
                               morton_key, normalize_points)
from oblivgeo.oracles import quadtree_oracle

NONE = -1


def build(xs, ys, bits, lanes=1):
    t = Tracer(lanes=lanes)
    qa = build_compressed_quadtree(t.from_values(xs), t.from_values(ys), bits)
    return qa, t


def random_distinct(rng, n, bits):
    cells = rng.choice(4 ** bits, size=n, replace=False)
    ys, xs = np.divmod(cells, 2 ** bits)
    return xs.astype(np.int64), ys.astype(np.int64)


def check_against_oracle(qt: Quadtree, xs, ys, bits, lane=0):
    nodes, parent_map = quadtree_oracle(list(xs), list(ys), bits)
    kd = qt.kind.unload()[lane]
    dp = qt.depth.unload()[lane]
    pf = qt.prefix.unload()[lane]
    pa = qt.parent.unload()[lane]
    pid = qt.point_id.unload()[lane]

    got_boxes = {("box", int(dp[i]), int(pf[i]))
                 for i in range(qt.capacity) if kd[i] == 1}
    assert got_boxes == nodes

    def node_key(i):
        if kd[i] == 2:
            return ("pt", int(pid[i]))
        return ("box", int(dp[i]), int(pf[i]))

    for i in range(qt.capacity):
        if kd[i] == 0:
            continue
        me = node_key(i)
        if pa[i] == NONE:
            assert me not in parent_map
        else:
            assert parent_map[me] == node_key(pa[i]), me

    # child arrays mirror the parent references
    ch = [c.unload()[lane] for c in qt.child]
    kids = {i: [] for i in range(qt.capacity)}
    for i in range(qt.capacity):
        if kd[i] != 0 and pa[i] != NONE:
            kids[pa[i]].append(i)
    for i in range(qt.capacity):
        got = sorted(int(c[i]) for c in ch if c[i] != NONE)
        assert got == sorted(kids[i]), i
        if kd[i] == 1:
            assert len(kids[i]) >= 2   # compression invariant


def test_morton_examples():
    assert morton_key(np.array([0]), np.array([0]), 2).tolist() == [0]
    assert morton_key(np.array([1]), np.array([0]), 1).tolist() == [0b01]
    assert morton_key(np.array([0]), np.array([1]), 1).tolist() == [0b10]


def test_morton_matches_quadrant_dfs():
    # exhaustive b=3 grid: morton order equals recursive quadrant order
    bits = 3
    side = 2 ** bits

    def rec(x0, y0, s):
        if s == 1:
            return [(x0, y0)]
        h = s // 2
        out = []
        for qy in (0, 1):
            for qx in (0, 1):
                out += rec(x0 + qx * h, y0 + qy * h, h)
        return out

    expect = rec(0, 0, side)
    xs, ys = np.meshgrid(np.arange(side), np.arange(side))
    keys = morton_key(xs.ravel(), ys.ravel(), bits)
    got = [(int(x), int(y)) for _, x, y in
           sorted(zip(keys.tolist(), xs.ravel().tolist(), ys.ravel().tolist()))]
    assert got == expect


def test_single_point():
    qt, _ = build([5], [9], 4)
    assert qt.internal_counts().tolist() == [0]
    assert qt.kind.unload()[0].tolist()[:1] == [2]


def test_four_quadrant_points():
    # one point per quadrant of the grid: root with 4 leaf children
    b = 4
    h = 2 ** (b - 1)
    qt, _ = build([1, h + 2, 1, h + 1], [2, 1, h + 1, h + 3], b)
    kd = qt.kind.unload()[0]
    assert (kd == 1).sum() == 1
    root = int(np.argwhere(kd == 1)[0][0])
    assert qt.depth.unload()[0][root] == 0
    ch = [int(c.unload()[0][root]) for c in qt.child]
    assert all(c != NONE and kd[c] == 2 for c in ch)


def test_duplicate_points_rejected():
    with pytest.raises(DuplicatePoints):
        build([3, 3], [4, 4], 5)


@pytest.mark.parametrize("seed,n,bits", [(0, 2, 4), (1, 3, 4), (2, 10, 6),
                                         (3, 33, 8), (4, 100, 10), (5, 257, 16),
                                         (6, 512, 16)])
def test_random_against_recursive_oracle(seed, n, bits):
    rng = np.random.default_rng(seed)
    xs, ys = random_distinct(rng, n, min(bits, 10))
    qt, _ = build(xs, ys, bits)
    check_against_oracle(qt, xs, ys, bits)
    assert qt.internal_counts()[0] <= n - 1


def test_trace_depends_only_on_n_and_bits():
    rng = np.random.default_rng(7)
    traces = []
    for _ in range(2):
        xs, ys = random_distinct(rng, 50, 8)
        _, t = build(xs, ys, 8)
        traces.append(t)
    assert trace_equal(*traces)


def test_lanes_match_individual_builds():
    rng = np.random.default_rng(8)
    xs = np.zeros((3, 40), dtype=np.int64)
    ys = np.zeros((3, 40), dtype=np.int64)
    for lane in range(3):
        xs[lane], ys[lane] = random_distinct(rng, 40, 8)
    qt, _ = build(xs, ys, 8, lanes=3)
    for lane in range(3):
        check_against_oracle(qt, xs[lane], ys[lane], 8, lane=lane)


def test_normalize_points():
    xs, ys = normalize_points([[0.0, 0.0], [1.0, 1.0], [0.25, 0.75]], 8)
    assert xs.min() >= 0 and xs.max() == 255
    with pytest.raises(DuplicatePoints):
        normalize_points([[0.0, 0.0], [1e-9, 0.0], [1.0, 1.0]], 4)


def test_contiguity_of_leaf_ranges():
    # every internal node's leaves form a contiguous Morton range
    rng = np.random.default_rng(9)
    xs, ys = random_distinct(rng, 64, 8)
    qt, _ = build(xs, ys, 8)
    kd = qt.kind.unload()[0]
    pa = qt.parent.unload()[0]

    up = {}
    for i in range(qt.capacity):
        if kd[i] != 0:
            up[i] = int(pa[i])
    for b in range(qt.capacity):
        if kd[b] != 1:
            continue
        leaves = []
        for leaf in range(qt.n):
            j = leaf
            while j != NONE:
                if j == b:
                    leaves.append(leaf)
                    break
                j = up[j]
        assert leaves == list(range(min(leaves), max(leaves) + 1))
