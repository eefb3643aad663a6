"""All nearest larger values, solved obliviously in O(n log^2 n) accesses.

A complete binary tournament is built over the array bottom-up: blocks of
doubling size are kept sorted by value and merged pairwise with a fixed
bitonic merge schedule.  At each merge, the elements of the left block whose
right answer is still open are exactly its positional suffix maxima, and
their answers (when present) are prefix maxima of the right block; both sets
are recognizable inside the value-sorted blocks from index order alone, and
one register scan over the merged block resolves every crossing query.
Answers ride along inside the records, so no write-back routing is needed.

Ties are broken by comparing (value, index) lexicographically, which makes
all values formally distinct without perturbing data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tracing import TracedArray, Tracer
from .primitives import (apply_network, bitonic_merge_layers, next_pow2,
                         reverse_segments, sort_cols)

_NONE = -1


@dataclass
class AnlvResult:
    """Per index: the nearest strictly-larger neighbor on each side (-1: none)."""
    left: np.ndarray    # shape (lanes, n)
    right: np.ndarray

    def single(self):
        return self.left[0], self.right[0]


def order_key_int64(values) -> np.ndarray:
    """Map numeric values to int64 keys preserving order exactly.

    Integers pass through; float64 uses the sign-flip bit trick (NaN rejected).
    """
    arr = np.asarray(values)
    if arr.dtype.kind in "iu":
        return arr.astype(np.int64)
    arr = arr.astype(np.float64)
    if np.isnan(arr).any():
        raise ValueError("NaN values are not ordered")
    bits = arr.view(np.uint64)
    mask = np.where(bits >> np.uint64(63) == 1,
                    np.uint64(0xFFFFFFFFFFFFFFFF), np.uint64(0x8000000000000000))
    return ((bits ^ mask) - np.uint64(1 << 63)).view(np.int64)


def _suffix_acc(x, B, op, init):
    """Per aligned B-block suffix accumulation, exclusive (strictly after)."""
    lanes, m = x.shape
    blocks = x.reshape(lanes, m // B, B)
    acc = op.accumulate(blocks[:, :, ::-1], axis=2)[:, :, ::-1]
    out = np.full_like(blocks, init)
    out[:, :, :-1] = acc[:, :, 1:]
    return out.reshape(lanes, m)


def anlv(a: TracedArray) -> AnlvResult:
    """Solve ANLV for a traced array of int64 values; trace depends on n only."""
    n = a.capacity
    tracer = a.tracer
    if n == 0:
        z = np.full((tracer.lanes, 0), _NONE, dtype=np.int64)
        return AnlvResult(z, z.copy())
    m = next_pow2(n)

    kcls = tracer.array(m)          # 0 = padding (sorts first), 1 = real
    key = tracer.array(m)
    idx = tracer.array(m)
    lans = tracer.array(m, fill=_NONE)
    rans = tracer.array(m, fill=_NONE)

    r = np.arange(n)
    kcls.write(r, 1)
    key.write(r, a.read_all())
    idx.write(r, r)
    if m > n:
        p = np.arange(n, m)
        kcls.write(p, 0)
        key.write(p, 0)
        idx.write(p, p)

    cols = [kcls, key, idx, lans, rans]
    POSINF = m

    B = 1
    while B < m:
        # fold each odd block in so every 2B segment becomes bitonic, merge
        reverse_segments(cols, B, start=B)
        apply_network(cols, bitonic_merge_layers(m, B), key_width=3)
        seg = 2 * B

        ix = idx.read_all()
        la = lans.read_all()
        ra = rans.read_all()
        half = (ix % seg) >= B              # True: element came from right block
        real = kcls.read_all() == 1

        # positional suffix maxima of the left part / prefix maxima of the right
        rmax_l = _suffix_acc(np.where(~half, ix, -1), seg, np.maximum, -1)
        smin_r = _suffix_acc(np.where(half, ix, POSINF), seg, np.minimum, POSINF)
        sm = ~half & (ix > rmax_l) & real
        pm = half & (ix < smin_r) & real

        # nearest flagged element strictly after each sorted position
        pos = np.broadcast_to(np.arange(m)[None, :], ix.shape)
        nxt_pm = _suffix_acc(np.where(pm, pos, POSINF), seg, np.minimum, POSINF)
        nxt_sm = _suffix_acc(np.where(sm, pos, POSINF), seg, np.minimum, POSINF)

        lane = np.arange(ix.shape[0])[:, None]
        sup_r = ix[lane, np.where(nxt_pm < POSINF, nxt_pm, 0)]
        sup_l = ix[lane, np.where(nxt_sm < POSINF, nxt_sm, 0)]
        rans.write_all(np.where(sm & (ra == _NONE) & (nxt_pm < POSINF), sup_r, ra))
        lans.write_all(np.where(pm & (la == _NONE) & (nxt_sm < POSINF), sup_l, la))
        B = seg

    sort_cols([idx, lans, rans], key_width=1)
    out = np.arange(n)
    return AnlvResult(lans.read(out), rans.read(out))


def anlv_values(values, tracer: Tracer | None = None) -> AnlvResult:
    """ANLV over plain numeric values (1-D, or (lanes, n) with a laned tracer)."""
    keys = order_key_int64(values)
    if tracer is None:
        tracer = Tracer(lanes=keys.shape[0] if keys.ndim == 2 else 1)
    return anlv(tracer.from_values(keys))


def merge_via_anlv(c, d, tracer: Tracer | None = None) -> np.ndarray:
    """Merge two sorted sequences through one ANLV call plus O(1) sorts.

    The combined array is the reversal of `c` followed by `d`; each element's
    rank in the merged order falls out of its nearest-larger pointer into the
    opposite part.  Ties place `c` elements first.
    """
    c = np.asarray(c, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    nc, nd = len(c), len(d)
    n = nc + nd
    if n == 0:
        return np.array([])
    if tracer is None:
        tracer = Tracer()
    keys = order_key_int64(np.concatenate([c[::-1], d]))

    # Dense-rank the values (two sorts plus scans), then retie so duplicates
    # inside the reversed c part descend and duplicates inside d ascend: each
    # element's nearest-larger pointer then always crosses into the other part.
    m = next_pow2(n)
    kcol = tracer.array(m, fill=np.int64(1) << np.int64(61))
    pcol = tracer.array(m, fill=m)
    rr = np.arange(n)
    kcol.write(rr, keys)
    pcol.write(rr, rr)
    sort_cols([kcol, pcol], key_width=1)
    kv = kcol.read_all()
    dense = np.cumsum(np.concatenate(
        [np.zeros((kv.shape[0], 1), bool), kv[:, 1:] != kv[:, :-1]], axis=1), axis=1)
    rankcol = tracer.array(m)
    rankcol.write_all(dense)
    sort_cols([pcol, rankcol], key_width=1)
    ranks = rankcol.read(rr)

    t = np.arange(n)[None, :]
    adj = np.where(t < nc, nc - 1 - t, nc + (t - nc))
    arr = tracer.from_values(ranks * np.int64(2 * n) + adj)
    res = anlv(arr)

    right = res.right
    left = res.left
    # c element at combined position t (t < nc) has original index nc-1-t
    d_before_c = np.where(right == _NONE, nd, right - nc)
    rank_c = (nc - 1 - t) + d_before_c
    c_before_d = np.where(left == _NONE, nc, nc - 1 - left)
    rank_d = (t - nc) + c_before_d
    rank = np.where(t < nc, rank_c, rank_d)

    rk = tracer.from_values(rank.astype(np.int64))
    vals = tracer.from_values(np.broadcast_to(keys, rank.shape))
    if n == next_pow2(n):
        sort_cols([rk, vals], key_width=1)
        merged_keys = vals.read_all()
    else:
        m = next_pow2(n)
        rk2 = tracer.array(m, fill=np.int64(1) << np.int64(61))
        v2 = tracer.array(m)
        rr = np.arange(n)
        rk2.write(rr, rk.read_all())
        v2.write(rr, vals.read_all())
        sort_cols([rk2, v2], key_width=1)
        merged_keys = v2.read(rr)

    # invert the order-preserving key map: keys came from float64 values
    u = (merged_keys.astype(np.int64).view(np.uint64) + np.uint64(1 << 63))
    mask = np.where(u >> np.uint64(63) == 1,
                    np.uint64(0x8000000000000000), np.uint64(0xFFFFFFFFFFFFFFFF))
    out = (u ^ mask).view(np.float64)
    return out[0] if out.shape[0] == 1 else out
