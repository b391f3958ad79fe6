"""Synthetic desk-scale data: planted-partition heterogeneous graphs with
block-correlated attributes, and independent-cascade simulations.

Friend links follow a stochastic block model. Each user emits posts
whose words, topics, hours, and check-ins are drawn from block-specific
distributions mixed with uniform noise, so attributes are informative
about the planted communities but not deterministic. Cascades run the
independent cascade process over friend links; activation edges double
as retweet links for the supervised diffusion protocol.

Everything is a pure function of the config seed.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .cascades import Cascade, CascadeSet
from .hetgraph import HetGraph, PostAttrs, UserAttrs, make_graph


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 200
    blocks: int = 4
    p_in: float = 0.3
    p_out: float = 0.02
    posts_per_user: float = 3.0
    vocab: int = 150
    topics: int = 20
    cascades: int = 0
    activation: float = 0.1
    attr_noise: float = 0.2
    locations: int = 30
    names: int = 40
    checkin_prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_out < self.p_in <= 1.0:
            raise ValueError("need 0 <= p_out < p_in <= 1")
        if not 0.0 <= self.activation <= 1.0:
            raise ValueError("activation probability must lie in [0, 1]")
        if not 1 <= self.blocks <= self.n_users:
            raise ValueError("blocks must lie in [1, n_users]")
        if not 0.0 <= self.attr_noise <= 1.0:
            raise ValueError("attr_noise must lie in [0, 1]")

    @classmethod
    def from_mapping(cls, data: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


def block_of(cfg: SynthConfig, user_row: int) -> int:
    return user_row * cfg.blocks // cfg.n_users


def generate_graph(cfg: SynthConfig) -> tuple[HetGraph, np.ndarray]:
    """Planted-partition graph plus ground-truth block labels (aligned
    with the canonical user ordering)."""
    root = np.random.SeedSequence(cfg.seed)
    rng_edges, rng_users, rng_posts = \
        (np.random.default_rng(s) for s in root.spawn(3))

    uw = len(str(cfg.n_users - 1))
    users = [f"u{i:0{uw}d}" for i in range(cfg.n_users)]
    blocks = np.array([block_of(cfg, i) for i in range(cfg.n_users)])

    n_topics = max(cfg.topics, cfg.cascades)
    tw = len(str(max(n_topics - 1, 1)))
    topics = tuple(f"t{i:0{tw}d}" for i in range(n_topics))
    lw = len(str(max(cfg.locations - 1, 1)))
    locations = [f"loc{i:0{lw}d}" for i in range(cfg.locations)]
    words = [f"w{i:03d}" for i in range(cfg.vocab)]
    names = [f"name{i:02d}" for i in range(cfg.names)]

    nodes = [(u, "user") for u in users]
    links: list[tuple[str, str, str]] = []

    iu, ju = np.triu_indices(cfg.n_users, k=1)
    prob = np.where(blocks[iu] == blocks[ju], cfg.p_in, cfg.p_out)
    hit = rng_edges.random(len(prob)) < prob
    for a, b in zip(iu[hit], ju[hit]):
        links.append((users[a], users[b], "friend"))

    user_attrs: dict[str, UserAttrs] = {}
    for i, uid in enumerate(users):
        b = int(blocks[i])
        # one home location per block and block-sliced name pools keep
        # the profile metrically informative about the planted partition
        home_pool = [locations[(b * max(len(locations) // cfg.blocks, 1))
                               % len(locations)]]
        name_pool = _block_slice(names, cfg.blocks, b)
        user_attrs[uid] = UserAttrs(
            name=(_block_pick(rng_users, names, name_pool, cfg.attr_noise),
                  _block_pick(rng_users, names, name_pool, cfg.attr_noise)),
            gender=str(rng_users.choice(["female", "male"])),
            age=int(22 + 6 * (b % 5) + rng_users.integers(-3, 4)),
            hometown=_block_pick(rng_users, locations, home_pool,
                                 cfg.attr_noise),
        )

    post_attrs: dict[str, PostAttrs] = {}
    posts: list[str] = []
    post_counts = rng_posts.poisson(cfg.posts_per_user, size=cfg.n_users)
    pw = len(str(max(int(post_counts.sum()), 1)))
    serial = 0
    for i, uid in enumerate(users):
        b = int(blocks[i])
        block_words = _block_slice(words, cfg.blocks, b)
        block_locs = _block_slice(locations, cfg.blocks, b)
        hour_base = (6 * b) % 24
        for _ in range(post_counts[i]):
            pid = f"p{serial:0{pw}d}"
            serial += 1
            posts.append(pid)
            nodes.append((pid, "post"))
            links.append((uid, pid, "write"))

            n_words = int(rng_posts.integers(4, 11))
            toks = tuple(
                _block_pick(rng_posts, words, block_words, cfg.attr_noise)
                for _ in range(n_words))
            if rng_posts.random() < cfg.attr_noise:
                hour = int(rng_posts.integers(0, 24))
            else:
                hour = (hour_base + int(rng_posts.integers(0, 6))) % 24
            checkin = None
            if rng_posts.random() < cfg.checkin_prob:
                checkin = _block_pick(rng_posts, locations, block_locs,
                                      cfg.attr_noise)
                links.append((pid, checkin, "locate"))
            conf = rng_posts.uniform(0.0, 0.2, size=n_topics)
            preferred = np.arange(n_topics) % cfg.blocks == b
            if rng_posts.random() < cfg.attr_noise:
                conf[rng_posts.integers(n_topics)] += 0.7
            else:
                conf[preferred] += 0.7
            post_attrs[pid] = PostAttrs(
                words=toks, checkin=checkin, hour=hour,
                topics=tuple(np.clip(conf, 0.0, 1.0)))

    g = make_graph(nodes, links, user_attrs, post_attrs, topics)
    return g, blocks


def _block_slice(items: list[str], blocks: int, b: int) -> list[str]:
    per = max(len(items) // blocks, 1)
    lo = (b * per) % len(items)
    return items[lo:lo + per] or items[:per]


def _block_pick(rng: np.random.Generator, all_items: list[str],
                block_items: list[str], noise: float) -> str:
    pool = all_items if rng.random() < noise else block_items
    return str(pool[rng.integers(len(pool))])


# ---------------------------------------------------------------------------
# Independent cascade simulation
# ---------------------------------------------------------------------------

def simulate_cascades(g: HetGraph, cfg: SynthConfig) -> CascadeSet:
    """One cascade per topic for the first ``cfg.cascades`` topics.

    A uniformly chosen seed user starts each cascade; every newly
    activated user tries each not-yet-active friend once with the
    activation probability. Each user activates at most once, so the
    activation edges form a tree rooted at the seed.
    """
    if cfg.cascades > len(g.topics):
        raise ValueError("more cascades than topics")
    neighbors: dict[str, list[str]] = {u: [] for u in g.users}
    for a, b in g.links_of_kind("friend"):
        neighbors[a].append(b)
        neighbors[b].append(a)
    for u in neighbors:
        neighbors[u].sort()

    sub_seeds = np.random.SeedSequence(cfg.seed).spawn(3 + cfg.cascades)[3:]
    out = []
    for t in range(cfg.cascades):
        rng = np.random.default_rng(sub_seeds[t])
        seed_user = g.users[rng.integers(g.n_users)]
        active = {seed_user}
        frontier = [seed_user]
        edges = []
        while frontier:
            nxt = []
            for u in frontier:
                for v in neighbors[u]:
                    if v not in active and rng.random() < cfg.activation:
                        active.add(v)
                        nxt.append(v)
                        edges.append((u, v))
            frontier = nxt
        out.append(Cascade(g.topics[t], frozenset(active), frozenset(edges)))
    return tuple(out)


def attach_retweets(g: HetGraph, cascades: CascadeSet) -> HetGraph:
    """New graph with every activation edge added as a retweet link."""
    nodes = [(u, "user") for u in g.users] + [(p, "post") for p in g.posts]
    links = list(g.links)
    seen = set(g.links)
    for c in cascades:
        for a, b in sorted(c.edges):
            link = (a, b, "retweet")
            if link not in seen:
                links.append(link)
                seen.add(link)
    return make_graph(nodes, links, dict(g.user_attrs), dict(g.post_attrs),
                      g.topics)
