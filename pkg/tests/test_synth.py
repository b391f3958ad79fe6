import numpy as np
import pytest

from oracles import adjacency_lists
from taskembed.cascades import (Cascade, activation_pairs, load_cascades,
                                restrict_edges, save_cascades)
from taskembed.hetgraph import user_adjacency
from taskembed.synth import (SynthConfig, attach_retweets, generate_graph,
                             simulate_cascades)


def test_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(p_in=0.1, p_out=0.2)
    with pytest.raises(ValueError):
        SynthConfig(activation=1.5)
    with pytest.raises(ValueError):
        SynthConfig(n_users=3, blocks=5)


def test_two_disjoint_cliques():
    cfg = SynthConfig(n_users=10, blocks=2, p_in=1.0, p_out=0.0,
                      posts_per_user=0.0, topics=2, seed=0)
    g, blocks = generate_graph(cfg)
    a = user_adjacency(g)
    same = blocks[:, None] == blocks[None, :]
    np.fill_diagonal(same, False)
    assert np.all(a[same] == 1.0)
    assert np.all(a[~same] == 0.0)


def test_intra_edge_fraction_concentrates():
    cfg = SynthConfig(n_users=200, blocks=4, p_in=0.3, p_out=0.02,
                      posts_per_user=0.0, topics=2, seed=21)
    g, blocks = generate_graph(cfg)
    a = user_adjacency(g)
    same = blocks[:, None] == blocks[None, :]
    np.fill_diagonal(same, False)
    n_intra_pairs = same.sum() / 2
    intra = a[same].sum() / 2
    sigma = np.sqrt(n_intra_pairs * cfg.p_in * (1 - cfg.p_in))
    assert abs(intra - n_intra_pairs * cfg.p_in) <= 3 * sigma


def test_same_seed_identical_bundle():
    cfg = SynthConfig(n_users=40, blocks=2, seed=17, topics=4, cascades=3)
    g1, t1 = generate_graph(cfg)
    g2, t2 = generate_graph(cfg)
    assert g1 == g2
    assert np.array_equal(t1, t2)
    assert simulate_cascades(g1, cfg) == simulate_cascades(g2, cfg)


def test_attributes_correlate_with_blocks():
    cfg = SynthConfig(n_users=60, blocks=3, seed=5, topics=6,
                      posts_per_user=3.0, attr_noise=0.0)
    g, blocks = generate_graph(cfg)
    # noise-free: all hometowns of one block fall in the block's slice
    homes = {}
    for i, u in enumerate(g.users):
        homes.setdefault(int(blocks[i]), set()).add(g.user_attrs[u].hometown)
    assert all(len(h) <= 10 for h in homes.values())
    assert homes[0].isdisjoint(homes[1])


def test_cascade_q_zero_single_seed():
    cfg = SynthConfig(n_users=30, blocks=2, p_in=0.5, p_out=0.1,
                      activation=0.0, cascades=5, topics=5, seed=1,
                      posts_per_user=0.0)
    g, _ = generate_graph(cfg)
    for c in simulate_cascades(g, cfg):
        assert len(c.users) == 1
        assert not c.edges


def test_cascade_q_one_floods_component():
    cfg = SynthConfig(n_users=25, blocks=1, p_in=0.25, p_out=0.0,
                      activation=1.0, cascades=4, topics=4, seed=3,
                      posts_per_user=0.0)
    g, _ = generate_graph(cfg)
    adj = adjacency_lists(g.n_users,
                          [(g.index[a], g.index[b])
                           for a, b in g.links_of_kind("friend")])
    for c in simulate_cascades(g, cfg):
        seed_row = g.index[sorted(c.users)[0]]
        component = {seed_row}
        frontier = [seed_row]
        while frontier:
            nxt = [v for u in frontier for v in adj[u] if v not in component]
            component.update(nxt)
            frontier = nxt
        # flood fill from any member reaches exactly the activated set
        assert {g.index[u] for u in c.users} == component


def test_cascade_edges_form_tree():
    cfg = SynthConfig(n_users=80, blocks=4, activation=0.3, cascades=10,
                      topics=10, seed=9, posts_per_user=0.0)
    g, _ = generate_graph(cfg)
    for c in simulate_cascades(g, cfg):
        # every non-seed member was activated by exactly one edge
        assert len(c.edges) == len(c.users) - 1


def test_mean_cascade_size_monotone_in_q():
    sizes = []
    for q in (0.05, 0.1, 0.2):
        cfg = SynthConfig(n_users=60, blocks=2, p_in=0.3, p_out=0.05,
                          activation=q, cascades=1000, topics=1000, seed=13,
                          posts_per_user=0.0)
        g, _ = generate_graph(cfg)
        cas = simulate_cascades(g, cfg)
        sizes.append(np.mean([len(c.users) for c in cas]))
    assert sizes[0] < sizes[1] < sizes[2]


def test_cascades_more_than_topics_rejected():
    cfg = SynthConfig(n_users=10, blocks=2, cascades=4, topics=2, seed=0,
                      posts_per_user=0.0)
    g, _ = generate_graph(cfg)
    # generate_graph widens the topic list to cover the cascades
    assert len(g.topics) == 4
    assert len(simulate_cascades(g, cfg)) == 4


def test_attach_retweets_matches_activation_pairs():
    cfg = SynthConfig(n_users=40, blocks=2, activation=0.3, cascades=5,
                      topics=5, seed=23, posts_per_user=0.5)
    g, _ = generate_graph(cfg)
    cas = simulate_cascades(g, cfg)
    g2 = attach_retweets(g, cas)
    got = {(a, b) for a, b in g2.links_of_kind("retweet")}
    assert got == activation_pairs(cas)


def test_cascade_validation():
    with pytest.raises(ValueError, match="leaves the activated set"):
        Cascade("t", frozenset({"a"}), frozenset({("a", "b")}))
    with pytest.raises(ValueError, match="self activation"):
        Cascade("t", frozenset({"a"}), frozenset({("a", "a")}))


def test_cascade_roundtrip(tmp_path):
    cas = (
        Cascade("t0", frozenset({"a", "b", "c"}), frozenset({("a", "b")})),
        Cascade("t1", frozenset({"b"}), frozenset()),
    )
    path = save_cascades(cas, tmp_path / "cascades.json")
    assert load_cascades(path) == cas


def test_restrict_edges():
    cas = (Cascade("t0", frozenset({"a", "b", "c"}),
                   frozenset({("a", "b"), ("b", "c")})),)
    out = restrict_edges(cas, {("b", "a")})
    assert out[0].edges == frozenset({("a", "b")})
    assert out[0].users == cas[0].users
