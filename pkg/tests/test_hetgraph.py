import numpy as np
import pytest

from taskembed.hetgraph import (GraphFormatError, full_adjacency, load_graph,
                                make_graph, save_bundle, user_adjacency,
                                without_links)
from taskembed.synth import SynthConfig, generate_graph


def write_bundle(tmp_path, nodes="", links="", user_attrs="{}",
                 post_attrs="{}", topics="[]"):
    (tmp_path / "nodes.tsv").write_text(nodes)
    (tmp_path / "links.tsv").write_text(links)
    (tmp_path / "user_attrs.json").write_text(user_attrs)
    (tmp_path / "post_attrs.json").write_text(post_attrs)
    (tmp_path / "topics.json").write_text(topics)
    return tmp_path


def test_minimal_bundle(tmp_path):
    write_bundle(tmp_path, nodes="u1\tuser\nu2\tuser\n",
                 links="u1\tu2\tfriend\n")
    g = load_graph(tmp_path)
    assert g.n_users == 2
    assert g.links == (("u1", "u2", "friend"),)


def test_dangling_endpoint_reports_line(tmp_path):
    write_bundle(tmp_path, nodes="u1\tuser\n", links="u1\tu99\tfriend\n")
    with pytest.raises(GraphFormatError, match=r"links\.tsv:1.*u99"):
        load_graph(tmp_path)


def test_duplicate_node_id(tmp_path):
    write_bundle(tmp_path, nodes="u1\tuser\nu1\tuser\n")
    with pytest.raises(GraphFormatError, match=r"nodes\.tsv:2.*duplicate"):
        load_graph(tmp_path)


def test_malformed_record(tmp_path):
    write_bundle(tmp_path, nodes="u1\tuser\nbroken-line\n")
    with pytest.raises(GraphFormatError, match=r"nodes\.tsv:2"):
        load_graph(tmp_path)


def test_missing_file(tmp_path):
    write_bundle(tmp_path, nodes="u1\tuser\n")
    (tmp_path / "links.tsv").unlink()
    with pytest.raises(GraphFormatError, match="missing bundle file"):
        load_graph(tmp_path)


def test_kind_constraints(tmp_path):
    write_bundle(tmp_path, nodes="u1\tuser\np1\tpost\n",
                 links="u1\tp1\tfriend\n")
    with pytest.raises(GraphFormatError, match="two users"):
        load_graph(tmp_path)
    write_bundle(tmp_path, nodes="u1\tuser\np1\tpost\n",
                 links="p1\tu1\twrite\n")
    with pytest.raises(GraphFormatError, match="user to post"):
        load_graph(tmp_path)
    write_bundle(tmp_path, nodes="u1\tuser\np1\tpost\n",
                 links="u1\tu1\tfriend\n")
    with pytest.raises(GraphFormatError, match="self-loop"):
        load_graph(tmp_path)


def test_node_ordering_users_then_posts(hand_graph):
    assert hand_graph.node_ids == ("u1", "u2", "p1", "p2", "p3")
    assert hand_graph.index["p1"] == 2


def test_friend_links_canonicalized():
    g = make_graph([("ub", "user"), ("ua", "user")],
                   [("ub", "ua", "friend")])
    assert g.links == (("ua", "ub", "friend"),)


def test_roundtrip_synth_bundle(tmp_path):
    g, _ = generate_graph(SynthConfig(n_users=200, blocks=4, seed=3,
                                      topics=5, posts_per_user=1.5))
    save_bundle(g, tmp_path / "b")
    g2 = load_graph(tmp_path / "b")
    assert g2 == g
    # save -> load -> save is byte-stable
    save_bundle(g2, tmp_path / "b2")
    for name in ("nodes.tsv", "links.tsv", "user_attrs.json",
                 "post_attrs.json", "topics.json"):
        assert (tmp_path / "b" / name).read_bytes() == \
            (tmp_path / "b2" / name).read_bytes()


def test_full_adjacency_hand_graph(hand_graph):
    a = full_adjacency(hand_graph)
    # order u1,u2,p1,p2,p3; friend+retweet collapse to one u1-u2 entry
    expect = np.array([
        [0, 1, 1, 1, 0],
        [1, 0, 0, 0, 1],
        [1, 0, 0, 0, 0],
        [1, 0, 0, 0, 0],
        [0, 1, 0, 0, 0],
    ], dtype=float)
    assert np.array_equal(a, expect)


def test_full_adjacency_empty_links():
    g = make_graph([("u1", "user"), ("p1", "post")], [])
    assert np.array_equal(full_adjacency(g), np.zeros((2, 2)))


def test_user_adjacency_triangle():
    nodes = [(f"u{i}", "user") for i in range(3)]
    links = [("u0", "u1", "friend"), ("u1", "u2", "friend"),
             ("u0", "u2", "friend")]
    a = user_adjacency(make_graph(nodes, links))
    assert np.array_equal(a, np.ones((3, 3)) - np.eye(3))


def test_user_adjacency_excludes_retweets(hand_graph):
    # friend and retweet both connect u1-u2; A_u only counts the friendship
    a = user_adjacency(hand_graph)
    assert a[0, 1] == 1.0
    g2 = without_links(hand_graph, ("friend",))
    assert np.array_equal(user_adjacency(g2), np.zeros((2, 2)))


def test_user_adjacency_matches_full_block():
    nodes = [(f"u{i}", "user") for i in range(4)] + [("p0", "post")]
    links = [("u0", "u1", "friend"), ("u2", "u3", "friend"),
             ("u0", "p0", "write")]
    g = make_graph(nodes, links)
    assert np.array_equal(user_adjacency(g), full_adjacency(g)[:4, :4])


def test_adjacency_symmetric_zero_diagonal(hand_graph):
    for a in (full_adjacency(hand_graph), user_adjacency(hand_graph)):
        assert np.array_equal(a, a.T)
        assert np.all(np.diag(a) == 0)


def test_sbm_intra_block_density():
    cfg = SynthConfig(n_users=200, blocks=4, p_in=0.3, p_out=0.02, seed=11,
                      posts_per_user=0.5, topics=3)
    g, blocks = generate_graph(cfg)
    a = user_adjacency(g)
    same = blocks[:, None] == blocks[None, :]
    np.fill_diagonal(same, False)
    n_intra_pairs = same.sum() / 2
    intra_edges = a[same].sum() / 2
    # binomial concentration: within 3 sigma of n*p
    sigma = np.sqrt(n_intra_pairs * cfg.p_in * (1 - cfg.p_in))
    assert abs(intra_edges - n_intra_pairs * cfg.p_in) <= 3 * sigma


def test_checkins_union_attr_and_locate(hand_graph):
    assert hand_graph.checkins_of("p1") == ("locA", "locB")
    assert hand_graph.checkins_of("p2") == ()
