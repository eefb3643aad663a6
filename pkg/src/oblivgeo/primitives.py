"""Oblivious building blocks: sorting network, compaction, conditional copy.

The sorting network is bitonic, padded to the next power of two; its
compare-exchange schedule is a pure function of the array capacity.
Compaction routes flagged elements to a prefix through a fixed shift
network in O(n log n) moves.  Both touch cells only through TracedArray,
so their traces are size-determined by construction.
"""

from __future__ import annotations

import numpy as np

from .tracing import BLANK, TracedArray, Tracer


class CompactionOverflow(Exception):
    """Flagged count exceeded the requested output capacity."""


def next_pow2(n: int) -> int:
    m = 1
    while m < n:
        m *= 2
    return m


# ---------------------------------------------------------------------------
# cached compare-exchange schedules

_LAYER_CACHE: dict = {}


def bitonic_sort_layers(m: int):
    """Full bitonic sort schedule for power-of-two m: [(ia, ja, asc), ...]."""
    key = ("sort", m)
    if key not in _LAYER_CACHE:
        layers = []
        i = np.arange(m)
        k = 2
        while k <= m:
            j = k // 2
            while j >= 1:
                ia = i[(i & j) == 0]
                ja = ia + j
                asc = (ia & k) == 0
                layers.append((ia, ja, asc))
                j //= 2
            k *= 2
        _LAYER_CACHE[key] = layers
    return _LAYER_CACHE[key]


def bitonic_merge_layers(m: int, block: int):
    """Merge schedule turning bitonic 2*block segments into sorted ones.

    Applies to the whole m-cell array at once; every aligned 2*block segment
    must hold a bitonic sequence (ascending half then descending half).
    """
    key = ("merge", m, block)
    if key not in _LAYER_CACHE:
        layers = []
        i = np.arange(m)
        j = block
        while j >= 1:
            ia = i[(i & j) == 0]
            ja = ia + j
            asc = np.ones(len(ia), dtype=bool)
            layers.append((ia, ja, asc))
            j //= 2
        _LAYER_CACHE[key] = layers
    return _LAYER_CACHE[key]


# ---------------------------------------------------------------------------
# compare-exchange driver

def _default_gt(ui, uj):
    return ui > uj


def _lex_gt(keys_i, keys_j):
    """Lexicographic 'strictly greater' over parallel key column stacks."""
    gt = None
    eq = None
    for a, b in zip(keys_i, keys_j):
        g = a > b
        if gt is None:
            gt, eq = g, (a == b)
        else:
            gt = gt | (eq & g)
            eq = eq & (a == b)
    return gt


def apply_network(cols: list[TracedArray], layers, key_width: int = 1, less=None):
    """Run a compare-exchange schedule in place over parallel columns.

    The first `key_width` columns form the lexicographic sort key unless a
    custom pairwise comparator `less(u, v) -> bool mask` is given (then only
    the first column is compared and BLANK cells sink to the end).
    """
    for ia, ja, asc in layers:
        ki = [c.read(ia) for c in cols[:key_width]]
        kj = [c.read(ja) for c in cols[:key_width]]
        if less is None:
            gt = _lex_gt(ki, kj)
            lt = _lex_gt(kj, ki)
        else:
            bi = ki[0] >= BLANK
            bj = kj[0] >= BLANK
            gt = (bi & ~bj) | (~bi & ~bj & less(kj[0], ki[0]))
            lt = (bj & ~bi) | (~bi & ~bj & less(ki[0], kj[0]))
        swap = np.where(asc, gt, lt)
        for c, vi, vj in zip(cols, ki, kj):
            c.write(ia, np.where(swap, vj, vi))
            c.write(ja, np.where(swap, vi, vj))
        for c in cols[key_width:]:
            vi = c.read(ia)
            vj = c.read(ja)
            c.write(ia, np.where(swap, vj, vi))
            c.write(ja, np.where(swap, vi, vj))


def sort_cols(cols: list[TracedArray], key_width: int = 1, less=None):
    """Bitonic-sort parallel power-of-two columns in place."""
    m = cols[0].capacity
    if m & (m - 1):
        raise ValueError("sort_cols requires power-of-two capacity")
    if m > 1:
        apply_network(cols, bitonic_sort_layers(m), key_width, less)


def reverse_segments(cols: list[TracedArray], block: int, start: int):
    """Reverse every second aligned `block`-segment beginning at `start`."""
    m = cols[0].capacity
    base = np.arange(start, m, 2 * block)
    idx = (base[:, None] + np.arange(block)[None, :]).ravel()
    rev = (base[:, None] + np.arange(block - 1, -1, -1)[None, :]).ravel()
    for c in cols:
        v = c.read(idx)
        c.write(rev, v)


# ---------------------------------------------------------------------------
# public primitives

def oblivious_sort(a: TracedArray, less=None) -> None:
    """Sort a traced array in place through the bitonic network.

    `less(u, v)` is the comparator blackbox (vectorized over lanes); default
    is ascending numeric order.  BLANK cells always sink to the end.  A
    capacity of zero or one is a no-op with an empty compare trace.
    """
    n = a.capacity
    if n <= 1:
        return
    m = next_pow2(n)
    if m == n:
        apply_network([a], bitonic_sort_layers(m), 1, less)
        return
    work = a.tracer.array(m, fill=0)
    work.write(np.arange(n), a.read_all())
    work.write(np.arange(n, m), np.int64(BLANK))
    apply_network([work], bitonic_sort_layers(m), 1, less)
    a.write_all(work.read(np.arange(n)))


def oblivious_compact(flags: TracedArray, payloads: list[TracedArray],
                      out_capacity: int) -> list[TracedArray]:
    """Stable compaction: flagged payloads first, BLANK padding after.

    Routes every flagged element left to its rank through log2(n) shift
    stages; the move pattern reads and writes the full arrays each stage, so
    the trace depends only on (capacity, out_capacity).  Raises
    CompactionOverflow after the full pass if any lane holds more flagged
    entries than `out_capacity`.
    """
    cap = flags.capacity
    if out_capacity > cap:
        raise ValueError("out_capacity exceeds input capacity")
    tracer = flags.tracer
    f = flags.read_all()
    ranks = np.cumsum(f != 0, axis=1) - 1
    count = (f != 0).sum(axis=1)
    sigma = tracer.array(cap)
    pos = np.arange(cap)[None, :]
    sigma.write_all(np.where(f != 0, pos - ranks, 0))

    work = [tracer.array(cap) for _ in payloads] + [tracer.array(cap), sigma]
    for w, p in zip(work, payloads):
        w.write_all(p.read_all())
    fcol = work[len(payloads)]
    fcol.write_all(f != 0)

    s = 1
    while s < cap:
        fv = fcol.read_all()
        sv = sigma.read_all()
        move = (fv != 0) & ((sv & s) != 0)
        arrive = np.zeros_like(move)
        arrive[:, :cap - s] = move[:, s:]
        for w in work:
            v = w.read_all()
            shifted = np.empty_like(v)
            shifted[:, :cap - s] = v[:, s:]
            shifted[:, cap - s:] = v[:, :s] * 0
            if w is fcol:
                out = np.where(arrive, shifted, np.where(move, 0, v))
            elif w is sigma:
                out = np.where(arrive, shifted - s, v)
            else:
                out = np.where(arrive, shifted, v)
            w.write_all(out)
        s *= 2

    if int(count.max(initial=0)) > out_capacity:
        raise CompactionOverflow(
            f"{int(count.max())} flagged entries exceed capacity {out_capacity}")

    outs = []
    sel = np.arange(out_capacity)
    keep = sel[None, :] < count[:, None]
    for w in work[:len(payloads)]:
        o = tracer.array(out_capacity)
        o.write_all(np.where(keep, w.read(sel), BLANK))
        outs.append(o)
    return outs


def compact_count(flags: TracedArray) -> np.ndarray:
    """Per-lane flagged counts via one full scan (register accumulation)."""
    return (flags.read_all() != 0).sum(axis=1)


def conditional_copy(flag, src: TracedArray, dst: TracedArray,
                     src_start: int = 0, dst_start: int = 0,
                     length: int | None = None) -> None:
    """Copy a region of src over dst iff flag, with a flag-independent trace.

    Both branches read the source cell, read the destination cell, and write
    the destination cell, so trace length is exactly 3 * length either way.
    """
    if length is None:
        length = src.capacity - src_start
    if dst_start + length > dst.capacity or src_start + length > src.capacity:
        raise ValueError("region length mismatch")
    si = np.arange(src_start, src_start + length)
    di = np.arange(dst_start, dst_start + length)
    sv = src.read(si)
    dv = dst.read(di)
    f = np.asarray(flag, dtype=bool)
    if f.ndim == 1:
        f = f[:, None]
    dst.write(di, np.where(f, sv, dv))


# ---------------------------------------------------------------------------
# sort-join helper used by the list/tree machinery

def gather_by_key(provider_key: TracedArray, provider_vals: list[TracedArray],
                  request_key: TracedArray,
                  missing: int = 0) -> list[np.ndarray]:
    """For each request, fetch the provider values whose key matches.

    Oblivious sort-merge join: providers and requests are concatenated,
    sorted by (key, kind), and matched by a forward propagation scan; the
    results are restored to request order by a second sort.  Provider keys
    must be unique; requests with no matching key receive `missing`.
    """
    tracer = provider_key.tracer
    np_, nr = provider_key.capacity, request_key.capacity
    m = next_pow2(np_ + nr)
    key = tracer.array(m, fill=BLANK)
    kind = tracer.array(m)        # 0 = provider, 1 = request
    slot = tracer.array(m)        # original request position
    vals = [tracer.array(m) for _ in provider_vals]

    key.write(np.arange(np_), provider_key.read_all())
    kind.write(np.arange(np_), 0)
    slot.write(np.arange(np_), 0)
    for v, pv in zip(vals, provider_vals):
        v.write(np.arange(np_), pv.read_all())
    r = np.arange(np_, np_ + nr)
    key.write(r, request_key.read_all())
    kind.write(r, 1)
    slot.write(r, np.arange(nr))
    for v in vals:
        v.write(r, missing)

    cols = [key, kind, slot] + vals
    sort_cols(cols, key_width=2)

    kv = key.read_all()
    ki = kind.read_all()
    for v in vals:
        data = v.read_all()
        # propagate provider values forward within equal-key runs
        src = np.where(ki == 0, np.arange(m)[None, :], -1)
        src = np.maximum.accumulate(src, axis=1)
        lanes = np.arange(kv.shape[0])[:, None]
        filled = np.where(src >= 0, data[lanes, np.where(src >= 0, src, 0)], missing)
        same = np.where(src >= 0, kv[lanes, np.where(src >= 0, src, 0)] == kv, False)
        v.write_all(np.where(ki == 1, np.where(same, filled, missing), data))

    # restore request order: requests first by slot, providers sunk to back
    back = kind.read_all() == 0
    order = tracer.array(m)
    order.write_all(np.where(back, BLANK, slot.read_all()))
    sort_cols([order] + vals, key_width=1)
    return [v.read(np.arange(nr)) for v in vals]
