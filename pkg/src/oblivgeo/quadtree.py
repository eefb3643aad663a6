"""Oblivious compressed quadtree construction from Morton-sorted points.

Points are sorted by the bit-interleaving order (y bit above x bit in each
pair, most significant first).  Each boundary between adjacent sorted points
is labeled with the box formed along that transition; the distinct transition
boxes are exactly the internal nodes of the compressed quadtree.  Nearest
shallower transitions on both sides, found by one ANLV computation, give
every box its parent, and two sort joins wire up child adjacency.  The whole
build touches memory in patterns fixed by (n, bits).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tracing import BLANK, TracedArray, Tracer
from .primitives import gather_by_key, next_pow2, oblivious_compact, sort_cols
from .anlv import anlv

NONE = -1
MAX_GRID_BITS = 24


class DuplicatePoints(Exception):
    """Two input points landed on the same grid cell."""


def morton_key(x, y, bits: int):
    """Interleave coordinate bits, y first in each pair, MSB first."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if bits > MAX_GRID_BITS:
        raise ValueError(f"grid bits capped at {MAX_GRID_BITS}")
    if (x < 0).any() or (y < 0).any() or (x >> bits).any() or (y >> bits).any():
        raise ValueError("coordinate out of grid")
    key = np.zeros_like(x)
    for i in range(bits):
        key |= ((x >> i) & 1) << (2 * i)
        key |= ((y >> i) & 1) << (2 * i + 1)
    return key


def _high_bit(x):
    """Floor log2 by branch-free doubling; x must be positive."""
    h = np.zeros_like(x)
    cur = x.copy()
    for shift in (32, 16, 8, 4, 2, 1):
        m = cur >> shift
        take = m != 0
        h += np.where(take, shift, 0)
        cur = np.where(take, m, cur)
    return h


def normalize_points(pts, bits: int):
    """Map real coordinates onto the 2^bits grid by scaling the bounding square.

    Returns integer (x, y) arrays; collisions after rounding raise
    DuplicatePoints (an input error by the grid model).
    """
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("expected an (n, 2) point array")
    lo = pts.min(axis=0)
    span = float(max(pts.max(axis=0)[0] - lo[0], pts.max(axis=0)[1] - lo[1]))
    if span == 0.0:
        span = 1.0
    scale = (2 ** bits - 1) / span
    g = np.floor((pts - lo) * scale + 0.5).astype(np.int64)
    g = np.clip(g, 0, 2 ** bits - 1)
    k = morton_key(g[:, 0], g[:, 1], bits)
    if len(np.unique(k)) != len(k):
        raise DuplicatePoints("points collide on the grid after normalization")
    return g[:, 0], g[:, 1]


@dataclass
class Quadtree:
    """Compressed quadtree over traced node records.

    Slots 0..n-1 are the leaves in Morton order; internal nodes follow,
    padded with unused records up to capacity 2n.  `depth` counts bit-pairs;
    leaves carry depth == bits (a grid cell is a point, radius zero).
    """
    bits: int
    n: int
    kind: TracedArray       # 0 unused, 1 internal box, 2 leaf
    depth: TracedArray
    prefix: TracedArray     # for leaves: the full Morton key
    parent: TracedArray     # node slot index, -1 at the root
    child: list             # four TracedArrays of node slot indices
    point_id: TracedArray   # original point index (leaves)
    point_x: TracedArray
    point_y: TracedArray

    @property
    def capacity(self) -> int:
        return 2 * self.n

    def internal_counts(self) -> np.ndarray:
        return (self.kind.unload() == 1).sum(axis=1)

    def to_records(self, lane: int = 0):
        """Plain per-node dicts (id, depth, prefix, parent, children, point)."""
        kd = self.kind.unload()[lane]
        dp = self.depth.unload()[lane]
        pf = self.prefix.unload()[lane]
        pa = self.parent.unload()[lane]
        ch = [c.unload()[lane] for c in self.child]
        pid = self.point_id.unload()[lane]
        out = []
        for i in range(self.capacity):
            if kd[i] == 0:
                continue
            out.append({
                "id": int(i),
                "depth": int(dp[i]),
                "prefix": format(int(pf[i]), "x"),
                "parent": int(pa[i]),
                "children": [int(c[i]) for c in ch if c[i] != NONE],
                "point": int(pid[i]) if kd[i] == 2 else None,
            })
        return out


def build_compressed_quadtree(xs: TracedArray, ys: TracedArray,
                              bits: int) -> Quadtree:
    """Build the compressed quadtree of distinct grid points, obliviously."""
    tracer = xs.tracer
    n = xs.capacity
    if n == 0:
        raise ValueError("need at least one point")

    keys = morton_key(xs.read_all(), ys.read_all(), bits)
    m = next_pow2(n)
    kcol = tracer.array(m, fill=BLANK)
    pid = tracer.array(m, fill=NONE)
    pxc = tracer.array(m)
    pyc = tracer.array(m)
    r = np.arange(n)
    kcol.write(r, keys)
    pid.write(r, r)
    pxc.write(r, xs.read_all())
    pyc.write(r, ys.read_all())
    sort_cols([kcol, pid, pxc, pyc], key_width=1)

    kv = kcol.read(r)
    if n > 1 and bool((kv[:, 1:] == kv[:, :-1]).any()):
        lane, pos = np.argwhere(kv[:, 1:] == kv[:, :-1])[0]
        raise DuplicatePoints(
            f"duplicate grid point (lane {lane}, morton key {int(kv[lane, pos])})")

    cap = 2 * n
    kind = tracer.array(cap)
    depth = tracer.array(cap)
    prefix = tracer.array(cap)
    parent = tracer.array(cap, fill=NONE)
    child = [tracer.array(cap, fill=NONE) for _ in range(4)]
    point_id = tracer.array(cap, fill=NONE)
    point_x = tracer.array(cap)
    point_y = tracer.array(cap)

    kind.write(r, 2)
    depth.write(r, bits)
    prefix.write(r, kv)
    point_id.write(r, pid.read(r))
    point_x.write(r, pxc.read(r))
    point_y.write(r, pyc.read(r))
    if cap > n:
        kind.write(np.arange(n, cap), 0)

    qt = Quadtree(bits, n, kind, depth, prefix, parent, child,
                  point_id, point_x, point_y)
    if n == 1:
        return qt

    # transition boxes between adjacent sorted points
    nt = n - 1
    xor = kv[:, :-1] ^ kv[:, 1:]
    h = _high_bit(xor)
    tdepth = (2 * bits - 1 - h) >> 1
    tprefix_shift = 2 * (np.int64(bits) - tdepth)
    tprefix = kv[:, :-1] >> tprefix_shift

    # nearest shallower transition on each side; earlier position wins ties
    tval = tracer.array(nt)
    tval.write_all(-(tdepth * np.int64(nt + 1)) - np.arange(nt)[None, :])
    res = anlv(tval)
    left, right = res.left, res.right

    lane = np.arange(tracer.lanes)[:, None]
    ldepth = np.where(left != NONE, tdepth[lane, np.where(left != NONE, left, 0)], NONE)
    rdepth = np.where(right != NONE, tdepth[lane, np.where(right != NONE, right, 0)], NONE)

    # representative = first occurrence of its (depth, prefix) box
    is_rep = (left == NONE) | (ldepth < tdepth)

    # parent box of a representative: the deeper of its shallower neighbors
    take_left = (left != NONE) & ((right == NONE) | (ldepth >= rdepth))
    pboxd = np.where(take_left, ldepth, rdepth)
    psrc = np.where(take_left, left, np.where(right != NONE, right, 0))
    pboxp = tprefix[lane, psrc]
    pboxp = np.where((left == NONE) & (right == NONE), NONE, pboxp)
    pboxd = np.where((left == NONE) & (right == NONE), NONE, pboxd)

    # compact representatives into the internal-node slots n..2n-2
    tflag = tracer.array(nt)
    tflag.write_all(is_rep)
    td = tracer.array(nt)
    td.write_all(tdepth)
    tp = tracer.array(nt)
    tp.write_all(tprefix)
    tpd = tracer.array(nt)
    tpd.write_all(pboxd)
    tpp = tracer.array(nt)
    tpp.write_all(pboxp)
    cd, cp, cpd, cpp = oblivious_compact(tflag, [td, tp, tpd, tpp], nt)

    ints = np.arange(n, n + nt)
    used = cd.read_all() < BLANK
    kind.write(ints, np.where(used, 1, 0))
    depth.write(ints, np.where(used, cd.read_all(), 0))
    prefix.write(ints, np.where(used, cp.read_all(), 0))

    # resolve parent boxes to node slots through a (depth, prefix) join
    def boxkey(d, p):
        return np.where(d == NONE, NONE, p * np.int64(64) + d)

    prov_key = tracer.array(nt)
    prov_key.write_all(np.where(used, boxkey(cd.read_all(), cp.read_all()), BLANK + np.arange(nt)[None, :]))
    prov_val = tracer.array(nt)
    prov_val.write_all(ints[None, :])

    # leaf parents: the deeper of the two adjacent transitions
    lt_d = np.concatenate([np.full((tracer.lanes, 1), NONE), tdepth], axis=1)
    lt_p = np.concatenate([np.zeros((tracer.lanes, 1), np.int64), tprefix], axis=1)
    rt_d = np.concatenate([tdepth, np.full((tracer.lanes, 1), NONE)], axis=1)
    rt_p = np.concatenate([tprefix, np.zeros((tracer.lanes, 1), np.int64)], axis=1)
    leaf_left = lt_d >= rt_d
    lp_d = np.where(leaf_left, lt_d, rt_d)
    lp_p = np.where(leaf_left, lt_p, rt_p)

    req = tracer.array(cap)
    req.write(r, boxkey(lp_d, lp_p))
    int_pkey = np.where(cpd.read_all() < BLANK,
                        boxkey(cpd.read_all(), cpp.read_all()), NONE)
    req.write(np.arange(n, cap),
              np.concatenate([int_pkey,
                              np.full((tracer.lanes, 1), NONE)], axis=1))
    got_parent, = gather_by_key(prov_key, [prov_val], req, missing=NONE)
    alive = kind.read_all() != 0
    parent.write_all(np.where(alive, got_parent, NONE))

    # child adjacency: quadrant of each node inside its parent box
    pd_all, = gather_by_key(
        _ids(tracer, cap), [depth],
        _col(tracer, cap, parent.read_all()), missing=NONE)
    dv = depth.read_all()
    pv = prefix.read_all()
    shift = 2 * (dv - pd_all - 1)
    quad = np.where((parent.read_all() != NONE) & alive,
                    (pv >> np.where(shift >= 0, shift, 0)) & 3, NONE)
    for q in range(4):
        tgt = np.where(quad == q, parent.read_all(), NONE)
        got, = gather_by_key(_col(tracer, cap, tgt),
                             [_ids(tracer, cap)],
                             _ids(tracer, cap), missing=NONE)
        child[q].write_all(got)
    return qt


def _ids(tracer: Tracer, cap: int) -> TracedArray:
    a = tracer.array(cap)
    a.write_all(np.arange(cap))
    return a


def _col(tracer: Tracer, cap: int, values) -> TracedArray:
    a = tracer.array(cap)
    a.write_all(values)
    return a
