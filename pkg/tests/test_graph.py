import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from softgeo.channel import ChannelModel
from softgeo.geometry import Annulus, Disk, fixed_nodes, sample_binomial, sample_poisson, visible
from softgeo.graph import (
    GraphSample,
    count_isolated,
    exact_connection_prob,
    exact_no_isolated_prob,
    graph_stats,
    is_connected,
    pair_uniform,
    probe_degree,
    sample_graph,
    trial_seed,
)

ONE = ChannelModel(1.0)
P = math.exp(-1)


def _triangle(side=1.0):
    return fixed_nodes([[0, 0], [side, 0], [side / 2, side * math.sqrt(3) / 2]])


def test_huge_beta_gives_no_edges():
    nodes = sample_binomial(Disk(1), 100, 1)
    assert len(sample_graph(nodes, Disk(1), ChannelModel(1e9), 0).edges) == 0


def test_coincident_nodes_always_connect():
    nodes = fixed_nodes([[0.3, 0.3], [0.3, 0.3]])
    for s in range(50):
        assert len(sample_graph(nodes, Disk(1), ONE, s).edges) == 1


def test_pair_frequency_at_r0():
    nodes = fixed_nodes([[0, 0], [1, 0]])
    n = 100_000
    hits = sum(len(sample_graph(nodes, Disk(2), ONE, trial_seed(9, t)).edges) for t in range(n))
    assert abs(hits / n - P) < 3 * math.sqrt(P * (1 - P) / n)


def test_obstacle_blocks_edges():
    nodes = fixed_nodes([[2, 0], [-2, 0], [0, 2]])
    ann = Annulus(1, 4)
    for s in range(200):
        edges = {tuple(e) for e in sample_graph(nodes, ann, ChannelModel(1e-9), s).edges}
        assert (0, 1) not in edges
        assert edges == {(0, 2), (1, 2)}


def test_is_connected_conventions():
    assert is_connected(GraphSample(0, np.zeros((0, 2), dtype=int), 0))
    assert is_connected(GraphSample(1, np.zeros((0, 2), dtype=int), 0))
    assert not is_connected(GraphSample(2, np.zeros((0, 2), dtype=int), 0))
    assert is_connected(GraphSample(3, np.array([[0, 1], [1, 2]]), 0))


def test_count_isolated():
    k5 = np.array([(i, j) for i in range(5) for j in range(i + 1, 5)])
    assert count_isolated(GraphSample(5, k5, 0)) == 0
    assert count_isolated(GraphSample(5, np.zeros((0, 2), dtype=int), 0)) == 5
    assert count_isolated(GraphSample(3, np.array([[0, 1], [1, 2]]), 0)) == 0


def test_exact_probabilities():
    assert exact_connection_prob(fixed_nodes([[0, 0]]), Disk(1), ONE) == 1.0
    two = fixed_nodes([[0, 0], [1, 0]])
    assert exact_connection_prob(two, Disk(2), ONE) == pytest.approx(P)
    assert exact_no_isolated_prob(two, Disk(2), ONE) == pytest.approx(P)
    assert exact_no_isolated_prob(fixed_nodes([[0, 0]]), Disk(1), ONE) == 0.0
    tri = _triangle()
    # inclusion-exclusion by hand: at least two of the three edges
    assert exact_connection_prob(tri, Disk(2), ONE) == pytest.approx(P**3 + 3 * P**2 * (1 - P))
    assert exact_no_isolated_prob(tri, Disk(2), ONE) >= exact_connection_prob(tri, Disk(2), ONE)
    with pytest.raises(ValueError):
        exact_connection_prob(sample_binomial(Disk(1), 6, 0), Disk(1), ONE)


def test_exact_respects_obstacle():
    nodes = fixed_nodes([[2, 0], [-2, 0]])
    assert exact_connection_prob(nodes, Annulus(1, 4), ONE) == 0.0


def test_csv_roundtrip():
    g = sample_graph(sample_poisson(Disk(3), 2.0, 5), Disk(3), ONE, 5)
    back = GraphSample.from_csv(g.to_csv(), g.node_count)
    assert np.array_equal(back.edges, g.edges)


def test_probe_degree_bounds():
    nodes = sample_poisson(Disk(5), 1.0, 3)
    deg = probe_degree(nodes, [0.0, 0.0], Disk(5), ChannelModel(1e-9), 3)
    assert deg == len(nodes)
    assert probe_degree(fixed_nodes(np.zeros((0, 2))), [0.0, 0.0], Disk(5), ONE, 3) == 0


@given(st.integers(0, 2**63), st.floats(0.2, 3.0))
def test_stats_match_graph(seed, rho):
    dom = Annulus(1.0, 4.0)
    nodes = sample_poisson(dom, rho, seed)
    g = sample_graph(nodes, dom, ONE, seed)
    assert graph_stats(nodes, dom, ONE, seed) == (is_connected(g), count_isolated(g))
    # every realised edge has line of sight and is a valid pair
    for i, j in g.edges:
        assert i < j < g.node_count
        assert visible(dom, nodes.positions[i], nodes.positions[j])


@given(st.integers(0, 2**64 - 1), st.integers(0, 10**6), st.integers(0, 10**6))
def test_pair_uniform_in_unit_interval(seed, i, j):
    u = pair_uniform(seed, i, j)
    assert 0.0 < u < 1.0
    assert u == pair_uniform(seed, i, j)


def test_edges_do_not_depend_on_node_order():
    dom = Disk(4)
    nodes = sample_poisson(dom, 2.0, 8)
    g = sample_graph(nodes, dom, ONE, 8)
    # the decision for pair (i, j) depends only on (seed, i, j) and the geometry
    for i, j in g.edges:
        d = np.linalg.norm(nodes.positions[i] - nodes.positions[j])
        assert pair_uniform(8, i, j) < math.exp(-d * d)
