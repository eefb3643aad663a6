"""Non-oblivious brute-force references used by tests and validation.

Everything here may branch on data freely: these functions are correctness
ground truth, run outside the traced memory model, and share no logic with
the oblivious code paths beyond primitive types.
"""

from __future__ import annotations

import numpy as np


# --------------------------------------------------------------------------
# combinatorics

def anlv_oracle(values):
    """Quadratic scan; ties broken by (value, index) lexicographic order."""
    v = list(values)
    n = len(v)
    left = [-1] * n
    right = [-1] * n
    for i in range(n):
        for j in range(i - 1, -1, -1):
            if (v[j], j) > (v[i], i):
                left[i] = j
                break
        for k in range(i + 1, n):
            if (v[k], k) > (v[i], i):
                right[i] = k
                break
    return np.array(left), np.array(right)


def list_rank_oracle(succ):
    """Ranks by direct successor walks; succ uses -1 as the end marker."""
    succ = list(succ)
    n = len(succ)
    ranks = [0] * n
    for i in range(n):
        j, steps = i, 0
        while succ[j] != -1:
            j = succ[j]
            steps += 1
            if steps > n:
                raise ValueError("cycle in successor chain")
        ranks[i] = steps
    return np.array(ranks)


def tree_eval_oracle(kind, left, right, leaf_value, op, apply_op):
    """Recursive evaluation of a proper binary expression tree.

    kind[i]: 0 leaf / 1 internal; apply_op(op_code, a, b) evaluates a node.
    Returns per-node values.
    """
    n = len(kind)
    val = [None] * n
    import sys
    sys.setrecursionlimit(max(10000, 4 * n + 100))

    def ev(i):
        if val[i] is not None:
            return val[i]
        if kind[i] == 0:
            val[i] = leaf_value[i]
        else:
            val[i] = apply_op(op[i], ev(left[i]), ev(right[i]))
        return val[i]

    roots = set(range(n)) - {c for c in list(left) + list(right) if c != -1}
    for r in roots:
        ev(r)
    return val


def dfs_first_visit_oracle(left, right, root):
    """Recursive DFS first-visit order over child references (-1 = none)."""
    order = []

    def walk(u):
        order.append(u)
        for c in (left[u], right[u]):
            if c != -1:
                walk(c)

    import sys
    sys.setrecursionlimit(max(10000, 4 * len(left) + 100))
    walk(root)
    return order


# --------------------------------------------------------------------------
# geometry: hulls

def hull_oracle(points):
    """Upper/lower hulls with per-point vertical edge labels.

    Points are (x, y) integer pairs; ties in x are broken by treating the
    rank in the (x, y, id) order as an infinitesimal x-perturbation, the
    same rule the oblivious code uses.  Collinear boundary points count as
    hull vertices.  Returns a dict with sorted order, upper/lower vertex
    flags and labels; labels are pairs of sorted positions, with -2 marking
    the dummy edge right of the extreme vertex.
    """
    pts = [(int(x), int(y)) for x, y in points]
    n = len(pts)
    order = sorted(range(n), key=lambda i: (pts[i][0], pts[i][1], i))
    xs = [pts[i][0] for i in order]
    ys = [pts[i][1] for i in order]

    def chain_collinear(sign):
        # strict hull first, then reinstate collinear boundary points
        stack = []
        for p in range(n):
            while len(stack) >= 2:
                a, b = stack[-2], stack[-1]
                d0 = (xs[b] - xs[a]) * (sign * (ys[p] - ys[a])) - (xs[p] - xs[a]) * (sign * (ys[b] - ys[a]))
                d1 = (b - a) * (sign * (ys[p] - ys[a])) - (p - a) * (sign * (ys[b] - ys[a]))
                if (d0, d1) >= (0, 0):
                    stack.pop()
                else:
                    break
            stack.append(p)
        verts = stack
        out = []
        for a, b in zip(verts, verts[1:]):
            out.append(a)
            for q in range(a + 1, b):
                d0 = (xs[b] - xs[a]) * (sign * (ys[q] - ys[a])) - (xs[q] - xs[a]) * (sign * (ys[b] - ys[a]))
                d1 = (b - a) * (sign * (ys[q] - ys[a])) - (q - a) * (sign * (ys[b] - ys[a]))
                if (d0, d1) == (0, 0):
                    out.append(q)
        out.append(verts[-1])
        return out

    def labels_for(verts):
        lab = [(-1, -1)] * n
        vi = 0
        for p in range(n):
            if vi + 1 < len(verts) and p >= verts[vi + 1]:
                vi += 1
            if p == verts[-1]:
                lab[p] = (-2, -2)
            elif vi + 1 < len(verts):
                a, b = verts[vi], verts[vi + 1]
                lab[p] = (a, b)
        return lab

    uv = chain_collinear(1)
    lv = chain_collinear(-1)
    return {
        "order": order,
        "upper_vertices": uv,
        "lower_vertices": lv,
        "upper_labels": labels_for(uv),
        "lower_labels": labels_for(lv),
    }


def hull_edge_check(points, vertices_sorted_pos):
    """Independent validity check: every point on or below every hull edge.

    Cubic; used only to validate hull_oracle itself on small instances.
    """
    pts = [(int(x), int(y)) for x, y in points]
    order = sorted(range(len(pts)), key=lambda i: (pts[i][0], pts[i][1], i))
    xs = [pts[i][0] for i in order]
    ys = [pts[i][1] for i in order]
    vs = vertices_sorted_pos
    for a, b in zip(vs, vs[1:]):
        for q in range(len(order)):
            d0 = (xs[b] - xs[a]) * (ys[q] - ys[a]) - (xs[q] - xs[a]) * (ys[b] - ys[a])
            d1 = (b - a) * (ys[q] - ys[a]) - (q - a) * (ys[b] - ys[a])
            if (d0, d1) > (0, 0):
                return False
    return True


def supporting_label_oracle(h1_pts, h2_pts, slope_num, slope_den, tie):
    """Which side's supporting line of a given slope is higher.

    Slope is slope_num/slope_den with slope_den > 0; `tie` breaks exact
    equality (the perturbed world never produces ties, so callers pass the
    epsilon-order decision).  Returns 'L' if the left set's supporting line
    is strictly higher, 'R' if lower, else tie.
    """
    def best_intercept(pts):
        # maximize y*den - x*num  (intercept times den)
        return max(p[1] * slope_den - p[0] * slope_num for p in pts)

    b1 = best_intercept(h1_pts)
    b2 = best_intercept(h2_pts)
    if b1 > b2:
        return "L"
    if b1 < b2:
        return "R"
    return tie


def tangent_oracle(a1_pts, a2_pts):
    """Common upper tangent of two x-separated sets by quadratic search.

    Returns (i, j) indices into a1_pts / a2_pts; among collinear-supporting
    candidates picks the rightmost on the left set and leftmost on the right,
    matching the perturbed-predicate convention.
    """
    best = None
    for i, p in enumerate(a1_pts):
        for j, q in enumerate(a2_pts):
            ok = True
            for r in a1_pts + a2_pts:
                d = (q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1])
                if d > 0:
                    ok = False
                    break
            if ok:
                cand = (i, j)
                if best is None:
                    best = cand
                else:
                    bi, bj = best
                    pb, qb = a1_pts[bi], a2_pts[bj]
                    # prefer rightmost left endpoint, then leftmost right one
                    if (p[0], -q[0]) > (pb[0], -qb[0]):
                        best = cand
    return best


# --------------------------------------------------------------------------
# geometry: quadtrees, neighbors

def quadtree_oracle(xs, ys, bits):
    """Compressed quadtree by recursive subdivision with chain compression.

    Returns a set of internal-node boxes as (depth, prefix) pairs and a dict
    parent map: child box/point -> parent box.  Leaf entries are
    ('pt', point_id); internal boxes are ('box', depth, prefix).
    """
    pts = list(range(len(xs)))

    def key(i):
        k = 0
        for b in range(bits - 1, -1, -1):
            k = (k << 2) | (((ys[i] >> b) & 1) << 1) | ((xs[i] >> b) & 1)
        return k

    keys = {i: key(i) for i in pts}
    if len(set(keys.values())) != len(pts):
        raise ValueError("duplicate grid points")

    nodes = set()
    parent = {}

    def build(group, depth, prefix):
        if len(group) == 1:
            return ("pt", group[0])
        # split at the first level where the group separates
        d = depth
        while True:
            shift = 2 * (bits - d - 1)
            quads = {}
            for i in group:
                quads.setdefault((keys[i] >> shift) & 3, []).append(i)
            if len(quads) > 1:
                me = ("box", d, keys[group[0]] >> (2 * (bits - d)))
                nodes.add(me)
                for q, sub in sorted(quads.items()):
                    child = build(sub, d + 1, 0)
                    parent[child] = me
                return me
            d += 1

    if pts:
        build(sorted(pts, key=lambda i: keys[i]), 0, 0)
    return nodes, parent


def nn_oracle(xs, ys):
    """Quadratic all-nearest-neighbors; squared distance ties -> smaller id."""
    n = len(xs)
    nbr = [-1] * n
    dd = [None] * n
    for i in range(n):
        best = None
        for j in range(n):
            if i == j:
                continue
            d2 = (xs[i] - xs[j]) ** 2 + (ys[i] - ys[j]) ** 2
            if best is None or (d2, j) < best:
                best = (d2, j)
        dd[i], nbr[i] = best[0], best[1]
    return np.array(nbr), np.array(dd)


def closest_pair_oracle(xs, ys):
    n = len(xs)
    best = None
    for i in range(n):
        for j in range(i + 1, n):
            d2 = (xs[i] - xs[j]) ** 2 + (ys[i] - ys[j]) ** 2
            if best is None or (d2, i, j) < best:
                best = (d2, i, j)
    return best


def wspd_checker(xs, ys, bits, pairs, s_num, s_den):
    """Coverage and separation audit for a well-separated pair list.

    `pairs` holds ((depth_a, prefix_a), (depth_b, prefix_b)) box pairs on the
    given grid; leaf boxes use depth == bits so a box is a point cell.
    Returns (covered_fraction, separation_ok, nonpad_count).
    """
    n = len(xs)

    def key(i):
        k = 0
        for b in range(bits - 1, -1, -1):
            k = (k << 2) | (((ys[i] >> b) & 1) << 1) | ((xs[i] >> b) & 1)
        return k

    keys = sorted((key(i), i) for i in range(n))
    kv = [k for k, _ in keys]

    import bisect

    def members(depth, prefix):
        lo = prefix << (2 * (bits - depth))
        hi = (prefix + 1) << (2 * (bits - depth))
        a = bisect.bisect_left(kv, lo)
        b = bisect.bisect_left(kv, hi)
        return [keys[t][1] for t in range(a, b)]

    cover = np.zeros((n, n), dtype=bool)
    sep_ok = True
    for (da, pa), (db, pb) in pairs:
        ma = members(da, pa)
        mb = members(db, pb)
        if not ma or not mb:
            continue
        if not _boxes_well_separated(da, pa, db, pb, bits, ma, mb, s_num, s_den):
            sep_ok = False
        for i in ma:
            for j in mb:
                cover[i, j] = True
                cover[j, i] = True
    np.fill_diagonal(cover, True)
    return cover.all(), sep_ok, len(pairs)


def box_geometry(depth, prefix, bits):
    """Corner, doubled-center and side of a (depth, prefix) box; full-depth
    boxes are point cells with zero radius."""
    x0 = 0
    y0 = 0
    for lvl in range(depth):
        q = (prefix >> (2 * (depth - lvl - 1))) & 3
        half = 1 << (bits - lvl - 1)
        x0 += (q & 1) * half
        y0 += ((q >> 1) & 1) * half
    if depth >= bits:
        return (x0, y0, 2 * x0, 2 * y0, 0)
    side = 1 << (bits - depth)
    return (x0, y0, 2 * x0 + side, 2 * y0 + side, side)


def _boxes_well_separated(da, pa, db, pb, bits, ma, mb, s_num, s_den):
    # dist(centers) >= (s+2) * max(side)/sqrt(2); exact after squaring and
    # clearing the sqrt(2), in doubled coordinates
    _, _, cxa, cya, wa = box_geometry(da, pa, bits)
    _, _, cxb, cyb, wb = box_geometry(db, pb, bits)
    w = max(wa, wb)
    d2 = (cxa - cxb) ** 2 + (cya - cyb) ** 2
    return s_den * s_den * d2 >= 2 * w * w * (s_num + 2 * s_den) ** 2
