"""Euler tours and oblivious tree contraction with pluggable operator algebras.

Contraction rakes odd-numbered leaves (left children first, then right
children) and their parents, composing each removed parent's operator onto
the surviving sibling's edge as a constant-size unary function.  Leaf
numbers halve each phase, the working prefix is compressed in lockstep, and
replaying the rakes in reverse evaluates every internal node.  Leaf
numbering itself comes from an Euler tour plus list ranking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tracing import SeededRng, TracedArray, Tracer
from .primitives import gather_by_key, next_pow2, oblivious_compact, sort_cols

NONE = -1
RAKED_LEAF = -3   # rm_at marker for removed leaves (no reversal work needed)


class TreeShapeError(Exception):
    """Input is not a proper rooted binary tree."""


# ---------------------------------------------------------------------------
# operator algebras

class OperatorAlgebra:
    """Binary-operator family closed under partial application and composition.

    Implementations provide vectorized evaluation, one-argument fixing in
    both positions, and composition of the resulting unary functions, all in
    constant-size working storage per lane.  A unary function is a list of
    `fn_cols` int64 arrays.
    """

    fn_cols = 0
    op_codes = ()

    def identity_fn(self, shape):
        raise NotImplementedError

    def apply(self, op, a, b):
        raise NotImplementedError

    def fix_left(self, op, c):
        """Unary x -> op(c, x)."""
        raise NotImplementedError

    def fix_right(self, op, c):
        """Unary x -> op(x, c)."""
        raise NotImplementedError

    def compose(self, f, g):
        """Unary x -> f(g(x))."""
        raise NotImplementedError

    def eval_fn(self, f, x):
        raise NotImplementedError


class ModAddMulAlgebra(OperatorAlgebra):
    """Addition and multiplication of 64-bit words; functions are affine maps.

    Values live in Z/2^64 on the int64 bit pattern (wraparound is the modular
    reduction).  Op codes: 0 add, 1 multiply.
    """

    fn_cols = 2
    op_codes = (0, 1)

    def identity_fn(self, shape):
        return [np.ones(shape, dtype=np.int64), np.zeros(shape, dtype=np.int64)]

    def apply(self, op, a, b):
        return np.where(op == 0, a + b, a * b)

    def fix_left(self, op, c):
        one = np.ones_like(c)
        zero = np.zeros_like(c)
        return [np.where(op == 0, one, c), np.where(op == 0, c, zero)]

    fix_right = fix_left  # both operators are commutative

    def compose(self, f, g):
        return [f[0] * g[0], f[0] * g[1] + f[1]]

    def eval_fn(self, f, x):
        return f[0] * x + f[1]


class BooleanMonotoneAlgebra(OperatorAlgebra):
    """OR/AND over bits; functions are {identity, const-0, const-1}.

    Op codes: 0 or, 1 and.  Function codes: 0 identity, 1 const-0, 2 const-1.
    """

    fn_cols = 1
    op_codes = (0, 1)

    def identity_fn(self, shape):
        return [np.zeros(shape, dtype=np.int64)]

    def apply(self, op, a, b):
        return np.where(op == 0, a | b, a & b)

    def fix_left(self, op, c):
        return [np.where(op == 0, np.where(c == 1, 2, 0), np.where(c == 1, 0, 1))]

    fix_right = fix_left

    def compose(self, f, g):
        return [np.where(f[0] != 0, f[0], g[0])]

    def eval_fn(self, f, x):
        return np.where(f[0] == 0, x, np.where(f[0] == 1, 0, 1))


# ---------------------------------------------------------------------------
# Euler tour

@dataclass
class EulerTour:
    """Directed tree edges as a successor chain in tour order.

    Edge records are dense (capacity 2(n-1)); `node` is the child endpoint,
    `direction` 0 for parent-to-child, 1 for child-to-parent.  `succ` holds
    chain positions (-1 ends the tour at the last upward edge into the root).
    """
    succ: TracedArray
    node: TracedArray
    direction: TracedArray


def _sc(tracer: Tracer, size: int, values) -> TracedArray:
    a = tracer.array(size)
    a.write_all(values)
    return a


def tree_parents(left: TracedArray, right: TracedArray):
    """Per-node parent and child-side (-1 for the root), by two sort joins."""
    tracer = left.tracer
    n = left.capacity
    ids = _sc(tracer, n, np.arange(n))
    pl, = gather_by_key(left, [ids], ids, missing=NONE)
    pr, = gather_by_key(right, [ids], ids, missing=NONE)
    parent = np.where(pl != NONE, pl, pr)
    side = np.where(pl != NONE, 0, np.where(pr != NONE, 1, NONE))
    return parent, side


def euler_tour(left: TracedArray, right: TracedArray) -> EulerTour:
    """Tour of all directed edges of a rooted tree given by child references.

    Nodes may have zero, one (left), or two children.  Built with O(1)
    oblivious sorts; the result feeds list ranking directly.
    """
    tracer = left.tracer
    n = left.capacity
    if n < 2:
        raise TreeShapeError("tour needs at least one edge")
    parent, side = tree_parents(left, right)
    lv = left.read_all()
    rv = right.read_all()

    ids = _sc(tracer, n, np.arange(n))
    g_right, g_par = gather_by_key(
        ids, [_sc(tracer, n, rv), _sc(tracer, n, parent)],
        _sc(tracer, n, parent), missing=NONE)

    first_child = np.where(lv != NONE, lv, rv)
    next_sib = np.where((side == 0) & (g_right != NONE), g_right, NONE)

    # slot 2v: edge parent->v; slot 2v+1: edge v->parent
    nid = np.arange(n)[None, :]
    down_succ = np.where(first_child != NONE, 2 * first_child, 2 * nid + 1)
    up_succ = np.where(next_sib != NONE, 2 * next_sib,
                       np.where(g_par != NONE, 2 * parent + 1, NONE))

    cap = 2 * n
    succ = tracer.array(cap, fill=NONE)
    node = tracer.array(cap)
    dirn = tracer.array(cap)
    orig = tracer.array(cap)
    valid = tracer.array(cap)
    even = np.arange(0, cap, 2)
    odd = even + 1
    succ.write(even, down_succ)
    succ.write(odd, up_succ)
    node.write(even, np.arange(n))
    node.write(odd, np.arange(n))
    dirn.write(even, 0)
    dirn.write(odd, 1)
    orig.write_all(np.arange(cap))
    has_parent = (parent != NONE).astype(np.int64)
    valid.write(even, has_parent)
    valid.write(odd, has_parent)

    dense = 2 * (n - 1)
    d_succ, d_node, d_dir, d_orig = oblivious_compact(
        valid, [succ, node, dirn, orig], dense)

    # remap stored successors from slot ids to dense positions
    pos = _sc(tracer, dense, np.arange(dense))
    new_succ, = gather_by_key(d_orig, [pos], d_succ, missing=NONE)
    d_succ.write_all(new_succ)
    return EulerTour(d_succ, d_node, d_dir)


def first_visit_order(left: TracedArray, right: TracedArray,
                      rng: SeededRng) -> np.ndarray:
    """Per-node first-visit position in the tour (root gets 0)."""
    from .listrank import list_rank

    tracer = left.tracer
    n = left.capacity
    tour = euler_tour(left, right)
    ranks = list_rank(tour.succ, rng)
    total = 2 * (n - 1)
    pos = total - 1 - ranks     # position of each edge along the tour

    key = _sc(tracer, total,
              tour.node.read_all() * 2 + tour.direction.read_all())
    val = _sc(tracer, total, pos)
    req = _sc(tracer, n, np.arange(n) * 2)   # each node's downward edge
    fv, = gather_by_key(key, [val], req, missing=NONE)
    return np.where(fv == NONE, 0, fv + 1)   # root first, others shifted by 1


# ---------------------------------------------------------------------------
# tree contraction

def tree_contract(leaf: TracedArray, left: TracedArray, right: TracedArray,
                  values: TracedArray, ops: TracedArray,
                  algebra: OperatorAlgebra, rng: SeededRng) -> np.ndarray:
    """Evaluate every node of a proper binary expression tree, obliviously.

    `leaf` flags value nodes; internal nodes carry an op code from the
    algebra; children are given by `left`/`right` (-1 on leaves).  Returns
    per-node values, shape (lanes, n).
    """
    tracer = leaf.tracer
    n = leaf.capacity
    _validate_tree(leaf, left, right, ops, algebra)
    if n == 1:
        return values.unload()

    parent0, side0 = tree_parents(left, right)
    numbering = _leaf_numbers(leaf, left, right, rng)

    m = next_pow2(n)
    F = algebra.fn_cols
    names = (["id", "parent", "side", "left", "right", "isleaf", "leafnum",
              "alive", "val", "op", "known", "rm_at", "rc_cv", "rc_vside",
              "rc_sid", "rc_op"]
             + [f"fn{i}" for i in range(F)] + [f"rc_sfn{i}" for i in range(F)])
    c = {nm: tracer.array(m) for nm in names}
    r = np.arange(n)
    c["id"].write_all(np.arange(m))
    c["parent"].write_all(np.int64(NONE))
    c["parent"].write(r, parent0)
    c["side"].write(r, side0)
    c["left"].write_all(np.int64(NONE))
    c["left"].write(r, left.read_all())
    c["right"].write_all(np.int64(NONE))
    c["right"].write(r, right.read_all())
    c["isleaf"].write(r, leaf.read_all())
    c["leafnum"].write(r, numbering)
    c["alive"].write(r, 1)
    c["val"].write(r, values.read_all())
    c["op"].write(r, ops.read_all())
    c["known"].write(r, leaf.read_all())
    c["rm_at"].write_all(np.int64(-2))
    c["rm_at"].write(r, np.int64(-1))
    c["rc_sid"].write_all(np.int64(NONE))
    ident = algebra.identity_fn((tracer.lanes, n))
    for i in range(F):
        c[f"fn{i}"].write(r, ident[i])

    cols = [c[nm] for nm in names]
    tau = 0
    sizes = []
    S = m
    while S > 1:
        sizes.append(S)
        for target_side in (0, 1):
            tau += 1
            _rake_subphase(tracer, c, S, target_side, tau, algebra)
        pre = np.arange(S)
        c["leafnum"].write(pre, c["leafnum"].read(pre) // 2)
        _sort_prefix_by_alive(tracer, cols, c["alive"], S)
        S //= 2

    for S in reversed(sizes):
        for _ in (0, 1):
            _unrake_subphase(tracer, c, S, tau, algebra)
            tau -= 1

    sort_cols(cols, key_width=1)
    return c["val"].read(np.arange(n))


def _validate_tree(leaf, left, right, ops, algebra):
    lf = leaf.unload() != 0
    lv, rv = left.unload(), right.unload()
    ov = ops.unload()
    if ((lf & ((lv != NONE) | (rv != NONE)))
            | (~lf & ((lv == NONE) | (rv == NONE)))).any():
        raise TreeShapeError("tree is not proper binary")
    if (~lf & ~np.isin(ov, algebra.op_codes)).any():
        raise TreeShapeError("internal operator outside the algebra")


def _leaf_numbers(leaf, left, right, rng):
    """1-based left-to-right leaf numbers from the tour's first-visit order."""
    tracer = leaf.tracer
    n = leaf.capacity
    fv = first_visit_order(left, right, rng)
    m = next_pow2(n)
    key = _sc(tracer, m, np.int64(2 * n + 1))
    isl = tracer.array(m)
    ids = _sc(tracer, m, np.int64(m))
    r = np.arange(n)
    key.write(r, fv)
    isl.write(r, leaf.read_all())
    ids.write(r, r)
    sort_cols([key, ids, isl], key_width=2)
    nums = _sc(tracer, m, np.cumsum(isl.read_all() != 0, axis=1))
    sort_cols([ids, nums], key_width=1)
    return nums.read(r)


def _sort_prefix_by_alive(tracer, cols, alive, s_size):
    """Sort the prefix (dead last, then by id) so live records pack in front."""
    pre = np.arange(s_size)
    key = _sc(tracer, s_size, np.where(alive.read(pre) != 0, 0, 1))
    work = [key]
    for col in cols:
        work.append(_sc(tracer, s_size, col.read(pre)))
    sort_cols(work, key_width=2)   # cols[0] is the id column
    for col, scr in zip(cols, work[1:]):
        col.write(pre, scr.read_all())


def _rake_subphase(tracer, c, S, target_side, tau, algebra):
    F = algebra.fn_cols
    pre = np.arange(S)
    rd = {nm: c[nm].read(pre) for nm in c}
    ids = _sc(tracer, S, rd["id"])
    v_fn = [rd[f"fn{i}"] for i in range(F)]

    # parent fields, then the sibling's current edge function
    pv_names = ["op", "parent", "side", "left", "right"] + [f"fn{i}" for i in range(F)]
    got = gather_by_key(ids, [_sc(tracer, S, rd[nm]) for nm in pv_names],
                        _sc(tracer, S, rd["parent"]), missing=NONE)
    p_op, p_parent, p_side, p_left, p_right = got[:5]
    p_fn = got[5:]

    cand = ((rd["alive"] != 0) & (rd["isleaf"] != 0) & (rd["leafnum"] % 2 == 1)
            & (rd["side"] == target_side) & (rd["parent"] != NONE))
    s_id = np.where(cand, np.where(rd["side"] == 0, p_right, p_left), NONE)

    s_fn = gather_by_key(ids, [_sc(tracer, S, rd[f"fn{i}"]) for i in range(F)],
                         _sc(tracer, S, s_id), missing=0)

    c_v = algebra.eval_fn(v_fn, rd["val"])
    fl = algebra.fix_left(p_op, c_v)
    fr = algebra.fix_right(p_op, c_v)
    partial = [np.where(rd["side"] == 0, a, b) for a, b in zip(fl, fr)]
    new_s_fn = algebra.compose(algebra.compose(p_fn, partial), s_fn)

    # channel to the sibling: new edge function, new parent, new side
    msg = gather_by_key(
        _sc(tracer, S, s_id),
        [_sc(tracer, S, np.where(cand, 1, 0)),
         _sc(tracer, S, p_parent), _sc(tracer, S, p_side)]
        + [_sc(tracer, S, f) for f in new_s_fn],
        ids, missing=0)
    hit = msg[0] != 0
    c["parent"].write(pre, np.where(hit, msg[1], rd["parent"]))
    c["side"].write(pre, np.where(hit, msg[2], rd["side"]))
    for i in range(F):
        c[f"fn{i}"].write(pre, np.where(hit, msg[3 + i], rd[f"fn{i}"]))

    # channel to the parent: die and store what the reversal needs
    pmsg = gather_by_key(
        _sc(tracer, S, np.where(cand, rd["parent"], NONE)),
        [_sc(tracer, S, np.where(cand, 1, 0)), _sc(tracer, S, c_v),
         _sc(tracer, S, rd["side"]), _sc(tracer, S, s_id),
         _sc(tracer, S, p_op)] + [_sc(tracer, S, f) for f in s_fn],
        ids, missing=0)
    phit = pmsg[0] != 0
    upd = lambda nm, new: c[nm].write(pre, np.where(phit, new, c[nm].read(pre)))
    upd("alive", 0)
    upd("rm_at", tau)
    upd("rc_cv", pmsg[1])
    upd("rc_vside", pmsg[2])
    upd("rc_sid", pmsg[3])
    upd("rc_op", pmsg[4])
    for i in range(F):
        upd(f"rc_sfn{i}", pmsg[5 + i])

    # grandparent child-slot updates, one channel per slot (targets unique)
    for slot, col in ((0, "left"), (1, "right")):
        tgt = np.where(cand & (p_side == slot) & (p_parent != NONE),
                       p_parent, NONE)
        gmsg = gather_by_key(
            _sc(tracer, S, tgt),
            [_sc(tracer, S, np.where(tgt != NONE, 1, 0)),
             _sc(tracer, S, s_id)],
            ids, missing=0)
        ghit = gmsg[0] != 0
        cur = c[col].read(pre)
        c[col].write(pre, np.where(ghit, gmsg[1], cur))

    # the raked leaf itself dies
    av = c["alive"].read(pre)
    c["alive"].write(pre, np.where(cand, 0, av))
    rm = c["rm_at"].read(pre)
    c["rm_at"].write(pre, np.where(cand, RAKED_LEAF, rm))


def _unrake_subphase(tracer, c, S, tau, algebra):
    F = algebra.fn_cols
    pre = np.arange(S)
    rd = {nm: c[nm].read(pre) for nm in
          ["id", "val", "known", "rm_at", "rc_cv", "rc_vside", "rc_sid", "rc_op"]
          + [f"rc_sfn{i}" for i in range(F)]}
    tgt = rd["rm_at"] == tau
    req = _sc(tracer, S, np.where(tgt, rd["rc_sid"], NONE))
    got_val, = gather_by_key(_sc(tracer, S, rd["id"]),
                             [_sc(tracer, S, rd["val"])], req, missing=0)
    sfn = [rd[f"rc_sfn{i}"] for i in range(F)]
    s_contrib = algebra.eval_fn(sfn, got_val)
    a_l = algebra.apply(rd["rc_op"], rd["rc_cv"], s_contrib)
    a_r = algebra.apply(rd["rc_op"], s_contrib, rd["rc_cv"])
    newv = np.where(rd["rc_vside"] == 0, a_l, a_r)
    c["val"].write(pre, np.where(tgt, newv, rd["val"]))
    c["known"].write(pre, np.where(tgt, 1, rd["known"]))
