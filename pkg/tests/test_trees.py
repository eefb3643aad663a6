import numpy as np
import pytest

from oblivgeo import SeededRng, Tracer, trace_equal
from oblivgeo.trees import (BooleanMonotoneAlgebra, ModAddMulAlgebra,
                            TreeShapeError, euler_tour, first_visit_order,
                            tree_contract)
from oblivgeo.listrank import list_rank
from oblivgeo.oracles import dfs_first_visit_oracle, tree_eval_oracle

MASK = (1 << 64) - 1


def random_proper_tree(n_internal, rng):
    """Proper binary tree with n_internal internal nodes (2k+1 total)."""
    n = 2 * n_internal + 1
    left = [-1] * n
    right = [-1] * n
    nxt = 1
    # grow a random shape: repeatedly pick an open leaf and expand it
    leaves = [0]
    for _ in range(n_internal):
        i = leaves.pop(rng.integers(len(leaves)))
        left[i] = nxt
        right[i] = nxt + 1
        leaves.extend([nxt, nxt + 1])
        nxt += 2
    return left, right


def load_tree(t, left, right, values=None, ops=None):
    n = len(left)
    leaf = [1 if left[i] == -1 else 0 for i in range(n)]
    la = t.from_values(left)
    ra = t.from_values(right)
    lf = t.from_values(leaf)
    va = t.from_values(values if values is not None else [0] * n)
    oa = t.from_values(ops if ops is not None else [0] * n)
    return lf, la, ra, va, oa


def test_euler_tour_single_edge():
    t = Tracer()
    # root 0 with a single left child 1
    _, la, ra, _, _ = load_tree(t, [1, -1], [-1, -1])
    tour = euler_tour(la, ra)
    node = tour.node.unload()[0].tolist()
    dirn = tour.direction.unload()[0].tolist()
    succ = tour.succ.unload()[0].tolist()
    assert sorted(zip(node, dirn)) == [(1, 0), (1, 1)]
    down = node.index(1) if dirn[node.index(1)] == 0 else 1 - node.index(1)
    # the down edge chains into the up edge, which ends the tour
    i_down = [i for i in range(2) if dirn[i] == 0][0]
    i_up = 1 - i_down
    assert succ[i_down] == i_up and succ[i_up] == -1


def test_euler_tour_three_nodes():
    t = Tracer()
    _, la, ra, _, _ = load_tree(t, [1, -1, -1], [2, -1, -1])
    tour = euler_tour(la, ra)
    ranks = list_rank(tour.succ, SeededRng(0))
    assert sorted(ranks[0].tolist()) == [0, 1, 2, 3]


@pytest.mark.parametrize("seed", range(6))
def test_first_visit_matches_dfs_oracle(seed):
    rng = np.random.default_rng(seed)
    left, right = random_proper_tree(int(rng.integers(1, 100)), rng)
    t = Tracer()
    _, la, ra, _, _ = load_tree(t, left, right)
    fv = first_visit_order(la, ra, SeededRng(seed))[0]
    expect = dfs_first_visit_oracle(left, right, 0)
    got_order = list(np.argsort(fv))
    assert got_order == expect


def test_contract_two_leaves_plus():
    t = Tracer()
    lf, la, ra, va, oa = load_tree(t, [1, -1, -1], [2, -1, -1],
                                   values=[0, 2, 3], ops=[0, 0, 0])
    vals = tree_contract(lf, la, ra, va, oa, ModAddMulAlgebra(), SeededRng(0))
    assert vals[0][0] == 5


def test_contract_or_tree_path_to_one():
    # complete tree over 8 leaves, exactly one hot leaf
    rng = np.random.default_rng(0)
    left = [-1] * 15
    right = [-1] * 15
    for i in range(7):
        left[i] = 2 * i + 1
        right[i] = 2 * i + 2
    values = [0] * 15
    hot = 9
    values[hot] = 1
    t = Tracer()
    lf, la, ra, va, oa = load_tree(t, left, right, values, [0] * 15)
    vals = tree_contract(lf, la, ra, va, oa, BooleanMonotoneAlgebra(), SeededRng(1))
    got = vals[0]
    # ancestors of the hot leaf evaluate 1, every other internal node 0
    anc = {hot}
    j = hot
    while j:
        j = (j - 1) // 2
        anc.add(j)
    for i in range(15):
        expect = 1 if i in anc and left[i] != -1 else (1 if i == hot else 0)
        if left[i] != -1 or i == hot:
            assert got[i] == expect, i


def test_contract_left_path_sum():
    # left-leaning path: (((1+1)+1)+...); root value = leaf count
    k = 33  # leaves
    n = 2 * k - 1
    left = [-1] * n
    right = [-1] * n
    cur = 0
    for i in range(k - 1):
        left[cur] = cur + 1
        right[cur] = n - 1 - i
        cur = cur + 1
    t = Tracer()
    lf, la, ra, va, oa = load_tree(t, left, right, [1] * n, [0] * n)
    vals = tree_contract(lf, la, ra, va, oa, ModAddMulAlgebra(), SeededRng(7))
    assert vals[0][0] == k


def apply_mod(op, a, b):
    return (a + b) & MASK if op == 0 else (a * b) & MASK


@pytest.mark.parametrize("seed,nint", [(0, 1), (1, 2), (2, 7), (3, 31),
                                       (4, 64), (5, 127), (6, 100)])
def test_contract_random_addmul_vs_oracle(seed, nint):
    rng = np.random.default_rng(seed)
    left, right = random_proper_tree(nint, rng)
    n = len(left)
    kind = [0 if left[i] == -1 else 1 for i in range(n)]
    values = [int(v) for v in rng.integers(0, 2**63, size=n)]
    ops = [int(v) for v in rng.integers(0, 2, size=n)]
    t = Tracer()
    lf, la, ra, va, oa = load_tree(t, left, right, values, ops)
    vals = tree_contract(lf, la, ra, va, oa, ModAddMulAlgebra(), SeededRng(seed))
    got = vals[0].view(np.uint64)
    expect = tree_eval_oracle(kind, left, right, values, ops, apply_mod)
    for i in range(n):
        want = values[i] if kind[i] == 0 else expect[i]
        assert int(got[i]) == want & MASK, f"node {i}"


@pytest.mark.parametrize("seed", range(4))
def test_contract_random_boolean_vs_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    left, right = random_proper_tree(int(rng.integers(1, 80)), rng)
    n = len(left)
    kind = [0 if left[i] == -1 else 1 for i in range(n)]
    values = [int(v) for v in rng.integers(0, 2, size=n)]
    ops = [int(v) for v in rng.integers(0, 2, size=n)]
    t = Tracer()
    lf, la, ra, va, oa = load_tree(t, left, right, values, ops)
    vals = tree_contract(lf, la, ra, va, oa, BooleanMonotoneAlgebra(), SeededRng(seed))
    expect = tree_eval_oracle(kind, left, right, values, ops,
                              lambda op, a, b: (a | b) if op == 0 else (a & b))
    for i in range(n):
        want = values[i] if kind[i] == 0 else expect[i]
        assert vals[0][i] == want


def test_contract_trace_same_shape_inputs():
    rng = np.random.default_rng(42)
    left, right = random_proper_tree(40, rng)
    n = len(left)
    traces = []
    for round_ in range(2):
        values = rng.integers(0, 2**62, size=n).tolist()
        ops = rng.integers(0, 2, size=n).tolist()
        t = Tracer()
        lf, la, ra, va, oa = load_tree(t, left, right, values, ops)
        tree_contract(lf, la, ra, va, oa, ModAddMulAlgebra(), SeededRng(9))
        traces.append(t)
    assert trace_equal(*traces)


def test_contract_trace_same_n_different_shape():
    # obliviousness must hold across different tree shapes of equal size
    traces = []
    for seed in (1, 2):
        rng = np.random.default_rng(seed)
        left, right = random_proper_tree(33, rng)
        t = Tracer()
        lf, la, ra, va, oa = load_tree(t, left, right,
                                       rng.integers(0, 100, size=len(left)).tolist(),
                                       [0] * len(left))
        tree_contract(lf, la, ra, va, oa, ModAddMulAlgebra(), SeededRng(3))
        traces.append(t)
    assert trace_equal(*traces)


def test_improper_tree_rejected():
    t = Tracer()
    lf = t.from_values([0, 1, 1])
    la = t.from_values([1, -1, -1])
    ra = t.from_values([-1, -1, -1])   # internal with one child
    va = t.from_values([0, 1, 2])
    oa = t.from_values([0, 0, 0])
    with pytest.raises(TreeShapeError):
        tree_contract(lf, la, ra, va, oa, ModAddMulAlgebra(), SeededRng(0))
