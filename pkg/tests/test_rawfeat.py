import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as npst

from taskembed.hetgraph import PostAttrs, UserAttrs, make_graph
from taskembed.rawfeat import (build_vocab, node_features, post_features,
                               tfidf, user_features)
from taskembed.synth import SynthConfig, generate_graph


def test_vocab_sorted():
    g = make_graph([("p1", "post")], [],
                   post_attrs={"p1": PostAttrs(words=("b", "a"))})
    schema = build_vocab(g)
    assert schema.word_vocab == ("a", "b")


def test_vocab_no_checkins_width_zero():
    g = make_graph([("p1", "post")], [],
                   post_attrs={"p1": PostAttrs(words=("x",))})
    schema = build_vocab(g)
    assert schema.post_block("checkin").width == 0


def test_vocab_distinct_token_count():
    g, _ = generate_graph(SynthConfig(n_users=40, blocks=2, seed=5,
                                      vocab=30, topics=4))
    schema = build_vocab(g)
    tokens = {w for rec in g.post_attrs.values() for w in rec.words}
    assert len(schema.word_vocab) == len(tokens)


def test_schema_offsets_contiguous(hand_graph):
    schema = build_vocab(hand_graph)
    for blocks in (schema.user_blocks, schema.post_blocks):
        offset = 0
        for b in blocks:
            assert b.offset == offset
            offset += b.width


def test_user_feature_one_hots(hand_graph):
    schema = build_vocab(hand_graph)
    x = user_features(hand_graph, schema)
    # hometown vocab is [locA, locB]; u2 lives at the 2nd entry
    home = schema.user_block("hometown")
    assert x[1, home.offset + 1] == 1.0
    assert x[1, home.offset] == 0.0
    age = schema.user_block("age")
    assert x[0, age.offset] == 25.0
    assert x[1, age.offset] == 30.0


def test_user_missing_attrs_zero_blocks():
    g = make_graph([("u1", "user"), ("u2", "user")], [],
                   user_attrs={"u1": UserAttrs(name=("a",), age=7)})
    x = user_features(g, build_vocab(g))
    assert np.all(x[1] == 0.0)


def test_user_features_hand_matrix():
    g = make_graph(
        [("u1", "user"), ("u2", "user"), ("u3", "user"), ("u4", "user"),
         ("u5", "user")], [],
        user_attrs={
            "u1": UserAttrs(name=("ann",), gender="f", age=20, hometown="x"),
            "u2": UserAttrs(name=("bob", "ann"), gender="m", age=40),
            "u3": UserAttrs(gender="f"),
            "u4": UserAttrs(hometown="y"),
            "u5": UserAttrs(),
        })
    x = user_features(g, build_vocab(g))
    # blocks: name [ann, bob], gender [f, m], age, hometown [x, y]
    expect = np.array([
        [1, 0, 1, 0, 20, 1, 0],
        [1, 1, 0, 1, 40, 0, 0],
        [0, 0, 1, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 1],
        [0, 0, 0, 0, 0, 0, 0],
    ], dtype=float)
    assert np.array_equal(x, expect)


def test_post_temporal_one_hot(hand_graph):
    schema = build_vocab(hand_graph)
    x = post_features(hand_graph, schema)
    t = schema.post_block("temporal")
    assert x[0, t.offset] == 1.0            # p1 at hour 0 -> first slot
    assert x[0, t.offset:t.offset + 24].sum() == 1.0
    assert x[2, t.offset + 23] == 1.0


def test_post_topic_copied(hand_graph):
    schema = build_vocab(hand_graph)
    x = post_features(hand_graph, schema)
    b = schema.post_block("topic")
    assert np.allclose(x[1, b.offset:b.offset + 2], [0.1, 0.9])


def test_word_in_every_post_idf_one():
    # word in all N docs: idf = log((1+N)/(1+N)) + 1 = 1, so tfidf = tf
    counts = np.array([[1.0], [2.0], [3.0]])
    out = tfidf(counts)
    assert np.allclose(out, counts)


def test_tfidf_single_rare_word():
    # 3 docs, word occurs twice in one: 2 * (log(4/2) + 1)
    counts = np.zeros((3, 2))
    counts[0, 0] = 2.0
    counts[:, 1] = 1.0
    out = tfidf(counts)
    assert out[0, 0] == pytest.approx(2.0 * (math.log(2.0) + 1.0))
    assert out[0, 0] == pytest.approx(3.3862943611198906)


def test_tfidf_all_zero():
    assert np.array_equal(tfidf(np.zeros((3, 4))), np.zeros((3, 4)))


def test_tfidf_single_document():
    counts = np.array([[3.0, 0.0, 1.0]])
    assert np.allclose(tfidf(counts), counts)


def test_tfidf_hand_matrix():
    counts = np.array([
        [2, 0, 1],
        [0, 1, 1],
        [1, 0, 1],
        [0, 0, 1],
    ], dtype=float)
    n = 4
    df = [2, 1, 4]
    expect = counts * [math.log((1 + n) / (1 + d)) + 1 for d in df]
    assert np.allclose(tfidf(counts), expect)


@settings(max_examples=100)
@given(npst.arrays(np.float64, (5, 7),
                   elements=st.integers(0, 9).map(float)))
def test_tfidf_support_preserved(counts):
    out = tfidf(counts)
    assert np.array_equal(out != 0, counts != 0)


def test_extraction_deterministic(hand_graph):
    schema = build_vocab(hand_graph)
    a = post_features(hand_graph, schema)
    b = post_features(hand_graph, schema)
    assert np.array_equal(a, b)
    assert np.array_equal(user_features(hand_graph, schema),
                          user_features(hand_graph, schema))


def test_temporal_row_sums(hand_graph):
    g = make_graph([("p1", "post"), ("p2", "post")], [],
                   post_attrs={"p1": PostAttrs(hour=4)})
    schema = build_vocab(g)
    x = post_features(g, schema)
    t = schema.post_block("temporal")
    sums = x[:, t.offset:t.offset + 24].sum(axis=1)
    assert set(sums) <= {0.0, 1.0}


def test_node_features_padding(hand_graph):
    schema = build_vocab(hand_graph)
    x = node_features(hand_graph, schema)
    assert x.shape == (5, schema.combined_width)
    uw = schema.user_width
    assert np.all(x[:2, uw:] == 0.0)   # user rows: post segment zeroed
    assert np.all(x[2:, :uw] == 0.0)   # post rows: user segment zeroed
    assert np.array_equal(x[:2, :uw], user_features(hand_graph, schema))
    assert np.array_equal(x[2:, uw:], post_features(hand_graph, schema))
