import itertools

import numpy as np
from hypothesis import given, settings, strategies as st

from oblivgeo import Tracer, anlv, anlv_values, merge_via_anlv, trace_equal
from oblivgeo.oracles import anlv_oracle


def run_anlv(values):
    res = anlv_values(values)
    return res.left[0], res.right[0]


def test_spec_example():
    left, right = run_anlv([3, 1, 4, 1.5, 5])
    assert left[1] == 0 and right[1] == 2
    assert right[4] == -1


def test_strictly_increasing():
    left, right = run_anlv([1, 2, 3, 4, 5])
    assert left.tolist() == [-1] * 5
    assert right.tolist() == [1, 2, 3, 4, -1]


def test_single_element():
    left, right = run_anlv([42])
    assert left.tolist() == [-1] and right.tolist() == [-1]


def test_ties_break_by_index():
    # equal values: the later index counts as larger
    left, right = run_anlv([5, 5, 5])
    el, er = anlv_oracle([5, 5, 5])
    assert left.tolist() == el.tolist()
    assert right.tolist() == er.tolist()


def test_exhaustive_small_against_oracle():
    for n in range(1, 8):
        for perm in itertools.permutations(range(n)):
            left, right = run_anlv(list(perm))
            el, er = anlv_oracle(list(perm))
            assert left.tolist() == el.tolist(), perm
            assert right.tolist() == er.tolist(), perm


def test_random_against_oracle():
    rng = np.random.default_rng(1)
    for n in [2, 3, 9, 33, 100, 257, 512]:
        vals = rng.integers(-10**9, 10**9, size=n)
        left, right = run_anlv(vals)
        el, er = anlv_oracle(vals)
        assert left.tolist() == el.tolist()
        assert right.tolist() == er.tolist()


@given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=70))
@settings(max_examples=120, deadline=None)
def test_anlv_property(vals):
    left, right = run_anlv(vals)
    el, er = anlv_oracle(vals)
    assert left.tolist() == el.tolist()
    assert right.tolist() == er.tolist()


def test_trace_depends_only_on_n():
    traces = []
    rng = np.random.default_rng(2)
    for _ in range(2):
        t = Tracer()
        anlv(t.from_values(rng.integers(0, 10**6, size=37)))
        traces.append(t)
    assert trace_equal(*traces)


def test_lanes_consistent_with_single():
    rng = np.random.default_rng(3)
    data = rng.integers(0, 1000, size=(5, 64))
    t = Tracer(lanes=5)
    res = anlv(t.from_values(data))
    for lane in range(5):
        el, er = anlv_oracle(data[lane])
        assert res.left[lane].tolist() == el.tolist()
        assert res.right[lane].tolist() == er.tolist()


def test_merge_trivial():
    assert merge_via_anlv([1, 3], [2, 4]).tolist() == [1, 2, 3, 4]
    assert merge_via_anlv([], [5]).tolist() == [5]
    assert merge_via_anlv([5], []).tolist() == [5]


def test_merge_random_against_oracle():
    rng = np.random.default_rng(4)
    for nc, nd in [(6, 6), (100, 150), (31, 1), (1, 64)]:
        c = np.sort(rng.uniform(-100, 100, size=nc))
        d = np.sort(rng.uniform(-100, 100, size=nd))
        out = merge_via_anlv(c, d)
        expect = np.sort(np.concatenate([c, d]))
        assert np.array_equal(out, expect)


def test_merge_exhaustive_small_sizes():
    rng = np.random.default_rng(5)
    for nc in range(7):
        for nd in range(7):
            if nc + nd == 0:
                continue
            c = np.sort(rng.uniform(0, 1, size=nc))
            d = np.sort(rng.uniform(0, 1, size=nd))
            out = merge_via_anlv(c, d)
            assert np.array_equal(out, np.sort(np.concatenate([c, d])))


def test_merge_with_duplicates():
    out = merge_via_anlv([1, 2, 2, 3], [2, 2, 4])
    assert out.tolist() == [1, 2, 2, 2, 2, 3, 4]
