"""Oblivious list ranking: randomized link-out halving plus pointer jumping.

Each halving phase runs a fixed number of coin-flip rounds that link out
every node holding a 0-bit whose predecessor holds a 1-bit, accumulating hop
distances, then compresses live records into half the working prefix.  Once
the prefix is small enough, deterministic pointer jumping finishes, and the
link-outs are replayed in reverse to give every removed node its rank.

All pairing runs through sort-based exchanges on fixed-size prefixes, so the
per-attempt trace is a pure function of (n, seed).  A phase that fails to
halve restarts the whole computation with fresh randomness; the compression
floor keeps that event astronomically rare, and restarts are counted on the
tracer for the audit report.
"""

from __future__ import annotations

import math

import numpy as np

from .tracing import SeededRng, TracedArray, Tracer
from .primitives import gather_by_key, next_pow2, sort_cols

ROUNDS_PER_PHASE = 4      # coin-flip rounds per halving phase
COMPRESS_FLOOR = 64       # never compress below this many slots
MAX_ATTEMPTS = 25

END = -1


class MalformedChain(Exception):
    """Successor references do not encode a single chain."""


def _phase_sizes(m: int, n: int) -> list[int]:
    """Prefix sizes of the halving phases; a pure function of n."""
    if n < 2:
        return []
    thresh = max(COMPRESS_FLOOR, math.ceil(n / math.log2(n)))
    sizes = []
    s = m
    while s > thresh and s >= 2 * COMPRESS_FLOOR:
        sizes.append(s)
        s //= 2
    return sizes


def list_rank(succ: TracedArray, rng: SeededRng, validate: bool = True) -> np.ndarray:
    """Rank every node of a successor chain (hops to the end; end rank 0).

    `succ[i]` is the array index of i's successor, or -1 at the chain end.
    Returns per-lane ranks, shape (lanes, n).  Raises MalformedChain when the
    references do not form one chain over all nodes (checked at the end).
    """
    n = succ.capacity
    tracer = succ.tracer
    if n == 0:
        return np.zeros((tracer.lanes, 0), dtype=np.int64)

    attempts = 0
    while True:
        attempts += 1
        ranks = _attempt(succ, rng, tracer, n)
        if ranks is not None:
            break
        tracer.bump("list_rank_restarts")
        rng = rng.spawn()
        if attempts >= MAX_ATTEMPTS:
            raise RuntimeError("list ranking failed to halve repeatedly")

    if validate:
        r = ranks
        expect = np.arange(n - 1, -1, -1)
        if not np.array_equal(np.sort(r, axis=1), np.sort(expect)[None, :].repeat(r.shape[0], 0)):
            raise MalformedChain("ranks are not a permutation of 0..n-1")
        s = succ.unload()
        lane = np.arange(r.shape[0])[:, None]
        has = s != END
        nxt = np.where(has, s, 0)
        if not bool(np.all(~has | (r == r[lane, nxt] + 1))):
            raise MalformedChain("rank does not decrease along successors")
    return ranks


def _attempt(succ: TracedArray, rng: SeededRng, tracer: Tracer, n: int):
    m = next_pow2(n)
    ids = tracer.array(m)
    nxt = tracer.array(m, fill=END)
    dist = tracer.array(m)
    alive = tracer.array(m)
    rmrd = tracer.array(m, fill=-1)     # round at which the record linked out
    ustore = tracer.array(m, fill=END)  # successor at link-out time

    r = np.arange(n)
    ids.write(r, r)
    nxt.write(r, succ.read_all())
    dist.write(r, 1)
    alive.write(r, 1)
    if m > n:
        p = np.arange(n, m)
        ids.write(p, p)
        alive.write(p, 0)
        rmrd.write(p, -2)

    cols = [ids, nxt, dist, alive, rmrd, ustore]
    sizes = _phase_sizes(m, n)
    round_no = 0

    for s_size in sizes:
        for _ in range(ROUNDS_PER_PHASE):
            round_no += 1
            _link_out_round(tracer, cols, s_size, rng, round_no)
        pre = np.arange(s_size)
        cnt = (alive.read(pre) != 0).sum(axis=1)
        if int(cnt.max(initial=0)) > s_size // 2:
            return None  # halving failed: caller restarts with a fresh seed
        _sort_prefix(cols, s_size, alive, ids)

    # deterministic pointer jumping on the reduced prefix
    s_final = sizes[-1] // 2 if sizes else m
    jumps = max(0, math.ceil(math.log2(s_final))) if s_final > 1 else 0
    pre = np.arange(s_final)
    for _ in range(jumps):
        pid = _scratch(tracer, s_final, ids.read(pre))
        pnxt = _scratch(tracer, s_final, nxt.read(pre))
        pdist = _scratch(tracer, s_final, dist.read(pre))
        got_d, got_s = gather_by_key(pid, [pdist, pnxt], pnxt, missing=END)
        dv = dist.read(pre)
        sv = nxt.read(pre)
        live = (alive.read(pre) != 0) & (sv != END)
        dist.write(pre, np.where(live, dv + got_d, dv))
        nxt.write(pre, np.where(live, got_s, sv))

    # replay link-outs in reverse so removed nodes accumulate final distances
    for s_size in reversed(sizes):
        for _ in range(ROUNDS_PER_PHASE):
            pre = np.arange(s_size)
            sub = [c.read(pre) for c in (ids, dist, rmrd, ustore)]
            pid, pdist, prm, pus = [_scratch(tracer, s_size, v) for v in sub]
            rm = prm.read_all()
            req = _scratch(tracer, s_size, np.where(rm == round_no, pus.read_all(), END))
            (got_d,) = gather_by_key(pid, [pdist], req, missing=0)
            dv = dist.read(pre)
            dist.write(pre, np.where(rm == round_no, dv + got_d, dv))
            av = alive.read(pre)
            alive.write(pre, np.where(rm == round_no, 1, av))
            round_no -= 1

    sort_cols(cols, key_width=1)  # by id
    out = np.arange(n)
    return dist.read(out) - 1


def _scratch(tracer: Tracer, size: int, values) -> TracedArray:
    a = tracer.array(size)
    a.write_all(values)
    return a


def _sort_prefix(cols, s_size, alive, ids):
    """Sort the prefix so live records come first by id; dead sink behind."""
    pre = np.arange(s_size)
    tracer = cols[0].tracer
    kv = np.where(alive.read(pre) != 0, 0, 1)
    key = tracer.array(s_size)
    key.write_all(kv)
    idc = tracer.array(s_size)
    idc.write_all(ids.read(pre))
    work = [key, idc]
    for c in cols:
        sc = tracer.array(s_size)
        sc.write_all(c.read(pre))
        work.append(sc)
    sort_cols(work, key_width=2)
    for c, sc in zip(cols, work[2:]):
        c.write(pre, sc.read_all())


def _link_out_round(tracer, cols, s_size, rng, round_no):
    ids, nxt, dist, alive, rmrd, ustore = cols
    pre = np.arange(s_size)

    bits = rng.bits(s_size * tracer.lanes).reshape(tracer.lanes, s_size)
    bcol = _scratch(tracer, s_size, bits)

    pid = _scratch(tracer, s_size, ids.read(pre))
    pnxt = _scratch(tracer, s_size, nxt.read(pre))

    # each live node posts (bit, id) at its successor's key
    pb, ppred = gather_by_key(pnxt, [bcol, pid], pid, missing=END)
    has_pred = ppred != END

    av = alive.read(pre) != 0
    bv = bcol.read_all()
    removed = av & (bv == 0) & has_pred & (pb == 1)

    # successors report (removed, d, next) back to their predecessors
    rcol = _scratch(tracer, s_size, removed)
    dcol = _scratch(tracer, s_size, dist.read(pre))
    got_rm, got_d, got_nx = gather_by_key(pid, [rcol, dcol, pnxt], pnxt, missing=0)
    follower_gone = (nxt.read(pre) != END) & (got_rm != 0)

    dv = dist.read(pre)
    dist.write(pre, np.where(follower_gone & av, dv + got_d, dv))
    sv = nxt.read(pre)
    new_next = np.where(follower_gone & av, got_nx, sv)
    nxt.write(pre, np.where(removed, END, new_next))

    us = ustore.read(pre)
    ustore.write(pre, np.where(removed, sv, us))
    rm = rmrd.read(pre)
    rmrd.write(pre, np.where(removed, round_no, rm))
    alv = alive.read(pre)
    alive.write(pre, np.where(removed, 0, alv))
