import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import adjacency_lists, edges_to_adjacency, has_walk, \
    random_small_graph
from taskembed.proximity import (global_proximity, normalize, power_stack,
                                 spectral_radius)


def test_single_edge_identity():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.array_equal(normalize(a), a)


def test_star_center_weight():
    # center node 0 with two leaves: B(0, leaf) = 1/sqrt(2*1)
    a = edges_to_adjacency(3, [(0, 1), (0, 2)])
    b = normalize(a)
    assert b[0, 1] == pytest.approx(1.0 / np.sqrt(2.0))
    assert b[1, 2] == 0.0


def test_isolated_node_zero_row():
    a = edges_to_adjacency(3, [(0, 1)])
    b = normalize(a)
    assert np.all(b[2] == 0.0)
    assert np.all(b[:, 2] == 0.0)


def test_asymmetric_rejected():
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError, match="symmetric"):
        normalize(a)


def test_identity_powers():
    stack = power_stack(np.eye(4), 3)
    for p in stack.powers:
        assert np.array_equal(p, np.eye(4))


def test_two_cycle_oscillates():
    b = np.array([[0.0, 1.0], [1.0, 0.0]])
    stack = power_stack(b, 3)
    assert np.array_equal(stack.power(2), np.eye(2))
    assert np.array_equal(stack.power(3), b)


def test_power_associativity(rng):
    a = rng.random((12, 12))
    a = ((a + a.T) > 1.0).astype(float)
    np.fill_diagonal(a, 0.0)
    stack = power_stack(normalize(a), 4)
    assert np.max(np.abs(stack.power(4) - stack.power(2) @ stack.power(2))) \
        < 1e-12


def test_order_validation():
    with pytest.raises(ValueError):
        power_stack(np.eye(2), 0)
    stack = power_stack(np.eye(2), 2)
    with pytest.raises(ValueError):
        stack.power(3)


def test_global_proximity_is_top_power():
    b = normalize(edges_to_adjacency(4, [(0, 1), (1, 2), (2, 3)]))
    assert np.array_equal(global_proximity(power_stack(b, 1)), b)
    p2 = global_proximity(power_stack(b, 2))
    # 2-hop pairs on the path become positive
    assert p2[0, 2] > 0.0 and p2[1, 3] > 0.0


def test_disconnected_blocks_stay_zero():
    a = edges_to_adjacency(4, [(0, 1), (2, 3)])
    stack = power_stack(normalize(a), 5)
    for p in stack.powers:
        assert np.all(p[:2, 2:] == 0.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_power_stack_invariants(seed):
    rng = np.random.default_rng(seed)
    n, edges = random_small_graph(rng)
    b = normalize(edges_to_adjacency(n, edges))
    stack = power_stack(b, 4)
    for p in stack.powers:
        assert np.max(np.abs(p - p.T)) < 1e-12
        assert np.all(p >= 0.0)
    assert spectral_radius(b) <= 1.0 + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_walk_support_equivalence(seed, order):
    rng = np.random.default_rng(seed)
    n, edges = random_small_graph(rng)
    stack = power_stack(normalize(edges_to_adjacency(n, edges)), order)
    adj = adjacency_lists(n, edges)
    p = stack.power(order)
    for i in range(n):
        for j in range(n):
            assert (p[i, j] > 0.0) == has_walk(adj, i, j, order)
