"""Heterogeneous social graph: typed nodes, typed links, per-node attributes.

A graph lives on disk as a *bundle* directory:

    nodes.tsv        id <TAB> kind            kind in {user, post}
    links.tsv        src <TAB> dst <TAB> kind kind in {friend, retweet, write, locate}
    user_attrs.json  {user-id: {name, gender, age, hometown}}
    post_attrs.json  {post-id: {words, checkin, hour, topics}}
    topics.json      [topic-id, ...]

Node ordering is fixed for a run: users first (ascending id), then posts
(ascending id), so user rows form a contiguous prefix of every matrix.
Graphs are immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

NODE_KINDS = ("user", "post")
LINK_KINDS = ("friend", "retweet", "write", "locate")

# Undirected user-user kinds, canonicalized to src < dst on load.
_SYMMETRIC_KINDS = ("friend", "retweet")


class GraphFormatError(ValueError):
    """Malformed or inconsistent graph bundle."""

    def __init__(self, message: str, path: str | Path | None = None,
                 line: int | None = None):
        self.path = str(path) if path is not None else None
        self.line = line
        where = ""
        if self.path is not None:
            where = f"{self.path}:{line}: " if line is not None else f"{self.path}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class UserAttrs:
    """Profile record of a user node. Missing fields encode as zero blocks."""

    name: tuple[str, ...] = ()
    gender: str | None = None
    age: int | None = None
    hometown: str | None = None


@dataclass(frozen=True)
class PostAttrs:
    """Content record of a post node.

    ``topics`` holds ingested confidence scores over the bundle's topic
    list; it is never computed here. ``checkin`` is a location id, which
    is an attribute value, not a graph node.
    """

    words: tuple[str, ...] = ()
    checkin: str | None = None
    hour: int | None = None
    topics: tuple[float, ...] = ()


@dataclass(frozen=True)
class HetGraph:
    """Validated heterogeneous graph with the canonical node ordering."""

    users: tuple[str, ...]
    posts: tuple[str, ...]
    links: tuple[tuple[str, str, str], ...]
    user_attrs: dict[str, UserAttrs]
    post_attrs: dict[str, PostAttrs]
    topics: tuple[str, ...]
    index: dict[str, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        order = {nid: i for i, nid in enumerate(self.users + self.posts)}
        object.__setattr__(self, "index", order)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_posts(self) -> int:
        return len(self.posts)

    @property
    def n_nodes(self) -> int:
        return len(self.users) + len(self.posts)

    @property
    def node_ids(self) -> tuple[str, ...]:
        return self.users + self.posts

    def links_of_kind(self, kind: str) -> list[tuple[str, str]]:
        return [(s, d) for s, d, k in self.links if k == kind]

    def checkins_of(self, post_id: str) -> tuple[str, ...]:
        """Effective check-in locations: attribute value plus locate records."""
        locs = []
        attrs = self.post_attrs.get(post_id)
        if attrs is not None and attrs.checkin is not None:
            locs.append(attrs.checkin)
        for src, dst, kind in self.links:
            if kind == "locate" and src == post_id and dst not in locs:
                locs.append(dst)
        return tuple(locs)


def make_graph(nodes: list[tuple[str, str]],
               links: list[tuple[str, str, str]],
               user_attrs: dict[str, UserAttrs] | None = None,
               post_attrs: dict[str, PostAttrs] | None = None,
               topics: tuple[str, ...] = ()) -> HetGraph:
    """Canonicalize and validate raw parts into a HetGraph.

    Friend and retweet links are stored undirected (src < dst) with
    duplicates collapsed; self-loops and kind-incompatible endpoints are
    rejected.
    """
    seen: dict[str, str] = {}
    for nid, kind in nodes:
        if nid in seen:
            raise GraphFormatError(f"duplicate node id {nid!r}")
        if kind not in NODE_KINDS:
            raise GraphFormatError(f"unknown node kind {kind!r} for {nid!r}")
        seen[nid] = kind
    users = tuple(sorted(n for n, k in nodes if k == "user"))
    posts = tuple(sorted(n for n, k in nodes if k == "post"))

    canon: list[tuple[str, str, str]] = []
    for src, dst, kind in links:
        canon.append(_validate_link(src, dst, kind, seen))
    # drop exact duplicates, keep first-seen order
    links_out = tuple(dict.fromkeys(canon))

    user_attrs = dict(user_attrs or {})
    post_attrs = dict(post_attrs or {})
    for uid in user_attrs:
        if seen.get(uid) != "user":
            raise GraphFormatError(f"attribute record for unknown user {uid!r}")
    for pid in post_attrs:
        if seen.get(pid) != "post":
            raise GraphFormatError(f"attribute record for unknown post {pid!r}")
    for uid, rec in user_attrs.items():
        if rec.age is not None and rec.age < 0:
            raise GraphFormatError(f"negative age for user {uid!r}")
    for pid, rec in post_attrs.items():
        if rec.hour is not None and not 0 <= rec.hour <= 23:
            raise GraphFormatError(f"hour out of range for post {pid!r}")
        if rec.topics and len(rec.topics) != len(topics):
            raise GraphFormatError(
                f"topic vector of post {pid!r} has length {len(rec.topics)}, "
                f"expected {len(topics)}")
    return HetGraph(users, posts, links_out, user_attrs, post_attrs,
                    tuple(topics))


def _validate_link(src: str, dst: str, kind: str,
                   node_kinds: dict[str, str],
                   path: str | Path | None = None,
                   line: int | None = None) -> tuple[str, str, str]:
    if kind not in LINK_KINDS:
        raise GraphFormatError(f"unknown link kind {kind!r}", path, line)
    if src not in node_kinds:
        raise GraphFormatError(f"dangling endpoint {src!r}", path, line)
    if kind in _SYMMETRIC_KINDS:
        if dst not in node_kinds:
            raise GraphFormatError(f"dangling endpoint {dst!r}", path, line)
        if node_kinds[src] != "user" or node_kinds[dst] != "user":
            raise GraphFormatError(
                f"{kind} link must connect two users: {src!r}-{dst!r}", path, line)
        if src == dst:
            raise GraphFormatError(f"self-loop on {src!r}", path, line)
        return (min(src, dst), max(src, dst), kind)
    if kind == "write":
        if dst not in node_kinds:
            raise GraphFormatError(f"dangling endpoint {dst!r}", path, line)
        if node_kinds[src] != "user" or node_kinds[dst] != "post":
            raise GraphFormatError(
                f"write link must connect user to post: {src!r}-{dst!r}", path, line)
        return (src, dst, kind)
    # locate: src is a post, dst is a location id (attribute, not a node)
    if node_kinds[src] != "post":
        raise GraphFormatError(
            f"locate link source must be a post: {src!r}", path, line)
    return (src, dst, kind)


# ---------------------------------------------------------------------------
# Bundle IO
# ---------------------------------------------------------------------------

def load_graph(path: str | Path) -> HetGraph:
    """Load and validate a graph bundle directory."""
    root = Path(path)
    if not root.is_dir():
        raise GraphFormatError("graph bundle directory not found", root)
    for name in ("nodes.tsv", "links.tsv", "user_attrs.json",
                 "post_attrs.json", "topics.json"):
        if not (root / name).is_file():
            raise GraphFormatError("missing bundle file", root / name)

    nodes: list[tuple[str, str]] = []
    node_kinds: dict[str, str] = {}
    nodes_path = root / "nodes.tsv"
    for lineno, raw in enumerate(_read_lines(nodes_path), start=1):
        parts = raw.split("\t")
        if len(parts) != 2:
            raise GraphFormatError("expected 2 tab-separated fields",
                                   nodes_path, lineno)
        nid, kind = parts
        if not nid:
            raise GraphFormatError("empty node id", nodes_path, lineno)
        if kind not in NODE_KINDS:
            raise GraphFormatError(f"unknown node kind {kind!r}",
                                   nodes_path, lineno)
        if nid in node_kinds:
            raise GraphFormatError(f"duplicate node id {nid!r}",
                                   nodes_path, lineno)
        node_kinds[nid] = kind
        nodes.append((nid, kind))

    links: list[tuple[str, str, str]] = []
    links_path = root / "links.tsv"
    for lineno, raw in enumerate(_read_lines(links_path), start=1):
        parts = raw.split("\t")
        if len(parts) != 3:
            raise GraphFormatError("expected 3 tab-separated fields",
                                   links_path, lineno)
        src, dst, kind = parts
        links.append(_validate_link(src, dst, kind, node_kinds,
                                    links_path, lineno))

    topics = tuple(_load_json(root / "topics.json", list))
    user_attrs = _parse_user_attrs(root / "user_attrs.json", node_kinds)
    post_attrs = _parse_post_attrs(root / "post_attrs.json", node_kinds,
                                   len(topics))
    return make_graph(nodes, links, user_attrs, post_attrs, topics)


def save_bundle(g: HetGraph, path: str | Path) -> Path:
    """Write a graph as a bundle directory; returns the directory path."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "nodes.tsv", "w", encoding="utf-8") as fh:
        for uid in g.users:
            fh.write(f"{uid}\tuser\n")
        for pid in g.posts:
            fh.write(f"{pid}\tpost\n")
    with open(root / "links.tsv", "w", encoding="utf-8") as fh:
        for src, dst, kind in g.links:
            fh.write(f"{src}\t{dst}\t{kind}\n")
    ua = {uid: _user_attrs_json(rec) for uid, rec in sorted(g.user_attrs.items())}
    pa = {pid: _post_attrs_json(rec) for pid, rec in sorted(g.post_attrs.items())}
    (root / "user_attrs.json").write_text(json.dumps(ua, indent=1),
                                          encoding="utf-8")
    (root / "post_attrs.json").write_text(json.dumps(pa, indent=1),
                                          encoding="utf-8")
    (root / "topics.json").write_text(json.dumps(list(g.topics)),
                                      encoding="utf-8")
    return root


def _read_lines(path: Path) -> list[str]:
    text = path.read_text(encoding="utf-8")
    return [ln for ln in text.split("\n") if ln != ""]


def _load_json(path: Path, expected_type: type):
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"invalid JSON: {exc}", path) from exc
    if not isinstance(data, expected_type):
        raise GraphFormatError(
            f"expected top-level {expected_type.__name__}", path)
    return data


def _parse_user_attrs(path: Path, node_kinds: dict[str, str]) -> dict[str, UserAttrs]:
    out: dict[str, UserAttrs] = {}
    for uid, rec in _load_json(path, dict).items():
        if node_kinds.get(uid) != "user":
            raise GraphFormatError(f"attribute record for unknown user {uid!r}", path)
        if not isinstance(rec, dict):
            raise GraphFormatError(f"malformed record for {uid!r}", path)
        age = rec.get("age")
        if age is not None and (not isinstance(age, int) or age < 0):
            raise GraphFormatError(f"bad age for user {uid!r}: {age!r}", path)
        out[uid] = UserAttrs(
            name=tuple(rec.get("name", ())),
            gender=rec.get("gender"),
            age=age,
            hometown=rec.get("hometown"),
        )
    return out


def _parse_post_attrs(path: Path, node_kinds: dict[str, str],
                      n_topics: int) -> dict[str, PostAttrs]:
    out: dict[str, PostAttrs] = {}
    for pid, rec in _load_json(path, dict).items():
        if node_kinds.get(pid) != "post":
            raise GraphFormatError(f"attribute record for unknown post {pid!r}", path)
        if not isinstance(rec, dict):
            raise GraphFormatError(f"malformed record for {pid!r}", path)
        hour = rec.get("hour")
        if hour is not None and (not isinstance(hour, int) or not 0 <= hour <= 23):
            raise GraphFormatError(f"bad hour for post {pid!r}: {hour!r}", path)
        topics = rec.get("topics")
        if topics is None:
            topics = [0.0] * n_topics
        if len(topics) != n_topics:
            raise GraphFormatError(
                f"topic vector of post {pid!r} has length {len(topics)}, "
                f"expected {n_topics}", path)
        out[pid] = PostAttrs(
            words=tuple(rec.get("words", ())),
            checkin=rec.get("checkin"),
            hour=hour,
            topics=tuple(float(t) for t in topics),
        )
    return out


def _user_attrs_json(rec: UserAttrs) -> dict:
    out: dict = {}
    if rec.name:
        out["name"] = list(rec.name)
    if rec.gender is not None:
        out["gender"] = rec.gender
    if rec.age is not None:
        out["age"] = rec.age
    if rec.hometown is not None:
        out["hometown"] = rec.hometown
    return out


def _post_attrs_json(rec: PostAttrs) -> dict:
    out: dict = {}
    if rec.words:
        out["words"] = list(rec.words)
    if rec.checkin is not None:
        out["checkin"] = rec.checkin
    if rec.hour is not None:
        out["hour"] = rec.hour
    if rec.topics:
        out["topics"] = list(rec.topics)
    return out


def without_links(g: HetGraph, kinds: tuple[str, ...]) -> HetGraph:
    """Copy of the graph with every link of the given kinds removed."""
    nodes = [(u, "user") for u in g.users] + [(p, "post") for p in g.posts]
    links = [lk for lk in g.links if lk[2] not in kinds]
    return make_graph(nodes, links, dict(g.user_attrs), dict(g.post_attrs),
                      g.topics)


# ---------------------------------------------------------------------------
# Adjacency construction
# ---------------------------------------------------------------------------

def full_adjacency(g: HetGraph) -> np.ndarray:
    """Binary symmetric adjacency over all nodes, all link kinds equal.

    Locate records carry check-in attributes, not edges, so they do not
    contribute. The diagonal is zero.
    """
    n = g.n_nodes
    a = np.zeros((n, n))
    for src, dst, kind in g.links:
        if kind == "locate":
            continue
        i, j = g.index[src], g.index[dst]
        a[i, j] = 1.0
        a[j, i] = 1.0
    return a


def user_adjacency(g: HetGraph) -> np.ndarray:
    """Binary symmetric user-user adjacency built from friend links only.

    Retweet links are excluded: they serve as diffusion labels downstream
    and would leak them into the social structure.
    """
    n = g.n_users
    a = np.zeros((n, n))
    for src, dst in g.links_of_kind("friend"):
        i, j = g.index[src], g.index[dst]
        a[i, j] = 1.0
        a[j, i] = 1.0
    return a
