import numpy as np
import pytest

from oblivgeo import SeededRng, Tracer, trace_equal
from oblivgeo.listrank import MalformedChain, list_rank
from oblivgeo.oracles import list_rank_oracle


def chain_from_order(order):
    """succ array for a chain visiting `order` left to right."""
    succ = [-1] * len(order)
    for a, b in zip(order, order[1:]):
        succ[a] = b
    return succ


def run(succ, seed=0, lanes_data=None):
    t = Tracer() if lanes_data is None else Tracer(lanes=lanes_data.shape[0])
    arr = t.from_values(lanes_data if lanes_data is not None else succ)
    ranks = list_rank(arr, SeededRng(seed))
    return ranks, t


def test_single_node():
    ranks, _ = run([-1])
    assert ranks.tolist() == [[0]]


def test_three_chain():
    ranks, _ = run(chain_from_order([0, 1, 2]))
    assert ranks.tolist() == [[2, 1, 0]]


def test_reversed_chain():
    ranks, _ = run(chain_from_order([2, 1, 0]))
    assert ranks.tolist() == [[0, 1, 2]]


@pytest.mark.parametrize("n,seed", [(2, 0), (5, 1), (17, 2), (64, 3), (100, 4),
                                    (257, 5), (512, 6)])
def test_random_chains_match_walk_oracle(n, seed):
    rng = np.random.default_rng(seed)
    order = rng.permutation(n).tolist()
    succ = chain_from_order(order)
    ranks, _ = run(succ, seed=seed)
    assert ranks[0].tolist() == list_rank_oracle(succ).tolist()


def test_many_seeds_one_chain():
    rng = np.random.default_rng(9)
    order = rng.permutation(130).tolist()
    succ = chain_from_order(order)
    expect = list_rank_oracle(succ).tolist()
    for seed in range(8):
        ranks, _ = run(succ, seed=seed)
        assert ranks[0].tolist() == expect


def test_trace_function_of_n_and_seed():
    rng = np.random.default_rng(11)
    traces = []
    for _ in range(2):
        order = rng.permutation(100).tolist()
        _, t = run(chain_from_order(order), seed=123)
        traces.append(t)
    assert trace_equal(*traces)


def test_different_seed_changes_nothing_about_answers():
    order = np.random.default_rng(13).permutation(70).tolist()
    succ = chain_from_order(order)
    r1, _ = run(succ, seed=1)
    r2, _ = run(succ, seed=2)
    assert r1.tolist() == r2.tolist()


def test_malformed_chain_detected():
    with pytest.raises(MalformedChain):
        run([1, 0, -1])  # 2-cycle plus isolated end


def test_lanes():
    rng = np.random.default_rng(17)
    n = 48
    data = np.array([chain_from_order(rng.permutation(n).tolist()) for _ in range(4)])
    ranks, _ = run(None, seed=5, lanes_data=data)
    for lane in range(4):
        assert ranks[lane].tolist() == list_rank_oracle(data[lane]).tolist()
