"""Raw attribute feature vectors for user and post nodes.

User vector blocks: name bag, gender bag, age scalar, hometown bag.
Post vector blocks: check-in TF-IDF, 24-hour one-hot, word TF-IDF, topic
confidences. Bag blocks are binary; age is the raw integer (min-max
scaling happens at training time, not here). All extraction is
deterministic: vocabularies are sorted lexicographically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hetgraph import HetGraph

HOURS = 24


@dataclass(frozen=True)
class Block:
    name: str
    offset: int
    width: int


@dataclass(frozen=True)
class FeatureSchema:
    """Block layout plus the vocabularies that define bag widths."""

    user_blocks: tuple[Block, ...]
    post_blocks: tuple[Block, ...]
    name_vocab: tuple[str, ...]
    gender_vocab: tuple[str, ...]
    hometown_vocab: tuple[str, ...]
    location_vocab: tuple[str, ...]
    word_vocab: tuple[str, ...]
    n_topics: int

    @property
    def user_width(self) -> int:
        return sum(b.width for b in self.user_blocks)

    @property
    def post_width(self) -> int:
        return sum(b.width for b in self.post_blocks)

    @property
    def combined_width(self) -> int:
        return self.user_width + self.post_width

    def user_block(self, name: str) -> Block:
        return _find(self.user_blocks, name)

    def post_block(self, name: str) -> Block:
        return _find(self.post_blocks, name)

    def to_json(self) -> dict:
        return {
            "user_blocks": [[b.name, b.offset, b.width] for b in self.user_blocks],
            "post_blocks": [[b.name, b.offset, b.width] for b in self.post_blocks],
            "name_vocab": list(self.name_vocab),
            "gender_vocab": list(self.gender_vocab),
            "hometown_vocab": list(self.hometown_vocab),
            "location_vocab": list(self.location_vocab),
            "word_vocab": list(self.word_vocab),
            "n_topics": self.n_topics,
        }


def _find(blocks: tuple[Block, ...], name: str) -> Block:
    for b in blocks:
        if b.name == name:
            return b
    raise KeyError(name)


def _layout(widths: list[tuple[str, int]]) -> tuple[Block, ...]:
    blocks, offset = [], 0
    for name, width in widths:
        blocks.append(Block(name, offset, width))
        offset += width
    return tuple(blocks)


def build_vocab(g: HetGraph) -> FeatureSchema:
    """Derive the feature schema from a graph's attribute values."""
    names = sorted({tok for rec in g.user_attrs.values() for tok in rec.name})
    genders = sorted({rec.gender for rec in g.user_attrs.values()
                      if rec.gender is not None})
    hometowns = sorted({rec.hometown for rec in g.user_attrs.values()
                        if rec.hometown is not None})
    locations = sorted({loc for pid in g.posts for loc in g.checkins_of(pid)})
    words = sorted({w for rec in g.post_attrs.values() for w in rec.words})

    user_blocks = _layout([
        ("name", len(names)),
        ("gender", len(genders)),
        ("age", 1),
        ("hometown", len(hometowns)),
    ])
    post_blocks = _layout([
        ("checkin", len(locations)),
        ("temporal", HOURS),
        ("word", len(words)),
        ("topic", len(g.topics)),
    ])
    return FeatureSchema(user_blocks, post_blocks, tuple(names),
                         tuple(genders), tuple(hometowns), tuple(locations),
                         tuple(words), len(g.topics))


def tfidf(counts: np.ndarray) -> np.ndarray:
    """Smoothed TF-IDF: tf * (log((1+N)/(1+df)) + 1), rows are documents.

    The smoothing keeps idf strictly positive, so the nonzero support of
    the count matrix is preserved exactly.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 2:
        raise ValueError("counts must be a 2-d matrix")
    n_docs = counts.shape[0]
    df = np.count_nonzero(counts > 0, axis=0)
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    return counts * idf


def user_features(g: HetGraph, schema: FeatureSchema) -> np.ndarray:
    """Per-user raw vectors; missing attributes leave their block zero."""
    x = np.zeros((g.n_users, schema.user_width))
    name_ix = {t: i for i, t in enumerate(schema.name_vocab)}
    gender_ix = {t: i for i, t in enumerate(schema.gender_vocab)}
    home_ix = {t: i for i, t in enumerate(schema.hometown_vocab)}
    b_name = schema.user_block("name")
    b_gender = schema.user_block("gender")
    b_age = schema.user_block("age")
    b_home = schema.user_block("hometown")
    for row, uid in enumerate(g.users):
        rec = g.user_attrs.get(uid)
        if rec is None:
            continue
        for tok in rec.name:
            x[row, b_name.offset + name_ix[tok]] = 1.0
        if rec.gender is not None:
            x[row, b_gender.offset + gender_ix[rec.gender]] = 1.0
        if rec.age is not None:
            x[row, b_age.offset] = float(rec.age)
        if rec.hometown is not None:
            x[row, b_home.offset + home_ix[rec.hometown]] = 1.0
    return x


def post_features(g: HetGraph, schema: FeatureSchema) -> np.ndarray:
    """Per-post raw vectors: TF-IDF check-ins and words, one-hot hour,
    topic confidences copied through."""
    x = np.zeros((g.n_posts, schema.post_width))
    loc_ix = {t: i for i, t in enumerate(schema.location_vocab)}
    word_ix = {t: i for i, t in enumerate(schema.word_vocab)}
    b_checkin = schema.post_block("checkin")
    b_temporal = schema.post_block("temporal")
    b_word = schema.post_block("word")
    b_topic = schema.post_block("topic")

    checkin_counts = np.zeros((g.n_posts, len(schema.location_vocab)))
    word_counts = np.zeros((g.n_posts, len(schema.word_vocab)))
    for row, pid in enumerate(g.posts):
        for loc in g.checkins_of(pid):
            checkin_counts[row, loc_ix[loc]] += 1.0
        rec = g.post_attrs.get(pid)
        if rec is None:
            continue
        for w in rec.words:
            word_counts[row, word_ix[w]] += 1.0
        if rec.hour is not None:
            x[row, b_temporal.offset + rec.hour] = 1.0
        if rec.topics:
            x[row, b_topic.offset:b_topic.offset + len(rec.topics)] = rec.topics

    if checkin_counts.size:
        x[:, b_checkin.offset:b_checkin.offset + b_checkin.width] = \
            tfidf(checkin_counts)
    if word_counts.size:
        x[:, b_word.offset:b_word.offset + b_word.width] = tfidf(word_counts)
    return x


def node_features(g: HetGraph, schema: FeatureSchema) -> np.ndarray:
    """Combined (|V| x (user_width + post_width)) matrix for the shared
    autoencoder: user rows carry user blocks with the post segment zeroed,
    post rows the reverse. Row order matches the graph node ordering."""
    out = np.zeros((g.n_nodes, schema.combined_width))
    uw = schema.user_width
    out[:g.n_users, :uw] = user_features(g, schema)
    out[g.n_users:, uw:] = post_features(g, schema)
    return out
