import numpy as np
import pytest

from taskembed.hetgraph import PostAttrs, UserAttrs, make_graph


@pytest.fixture
def hand_graph():
    """5-node graph used across modules: 2 users, 3 posts, every link kind.

    u1 -friend- u2, u1 -retweet- u2, u1 writes p1/p2, u2 writes p3,
    p1 locates at locB.
    """
    nodes = [("u1", "user"), ("u2", "user"),
             ("p1", "post"), ("p2", "post"), ("p3", "post")]
    links = [
        ("u1", "u2", "friend"),
        ("u2", "u1", "retweet"),
        ("u1", "p1", "write"),
        ("u1", "p2", "write"),
        ("u2", "p3", "write"),
        ("p1", "locB", "locate"),
    ]
    user_attrs = {
        "u1": UserAttrs(name=("ada", "b"), gender="female", age=25,
                        hometown="locA"),
        "u2": UserAttrs(name=("cy",), gender="male", age=30, hometown="locB"),
    }
    post_attrs = {
        "p1": PostAttrs(words=("hello", "graph"), checkin="locA", hour=0,
                        topics=(0.5, 0.0)),
        "p2": PostAttrs(words=("hello", "hello", "world"), hour=13,
                        topics=(0.1, 0.9)),
        "p3": PostAttrs(words=("world",), checkin="locB", hour=23,
                        topics=(0.0, 1.0)),
    }
    return make_graph(nodes, links, user_attrs, post_attrs, ("t0", "t1"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
