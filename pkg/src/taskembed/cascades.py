"""Per-topic infected networks: activated user sets and activation edges.

Activation edges need not exist in the social graph; they record who
activated whom for one topic. Edges are canonical (min, max) pairs and
their endpoints must lie inside the activated set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class Cascade:
    topic: str
    users: frozenset[str]
    edges: frozenset[tuple[str, str]]

    def __post_init__(self):
        canon = frozenset((min(a, b), max(a, b)) for a, b in self.edges)
        object.__setattr__(self, "edges", canon)
        for a, b in canon:
            if a == b:
                raise ValueError(f"self activation edge on {a!r}")
            if a not in self.users or b not in self.users:
                raise ValueError(
                    f"activation edge ({a!r}, {b!r}) leaves the activated set")


CascadeSet = tuple[Cascade, ...]


def activation_pairs(cascades: CascadeSet) -> set[tuple[str, str]]:
    """Union of all activation edges, canonical order."""
    out: set[tuple[str, str]] = set()
    for c in cascades:
        out |= c.edges
    return out


def restrict_edges(cascades: CascadeSet,
                   keep: set[tuple[str, str]]) -> CascadeSet:
    """Drop activation edges outside ``keep`` (canonical pairs); the
    activated sets stay as they are. Used to hold test links out of
    training."""
    canon = {(min(a, b), max(a, b)) for a, b in keep}
    return tuple(Cascade(c.topic, c.users, c.edges & canon) for c in cascades)


def save_cascades(cascades: CascadeSet, path: str | Path) -> Path:
    path = Path(path)
    payload = {
        c.topic: {
            "users": sorted(c.users),
            "edges": [list(e) for e in sorted(c.edges)],
        }
        for c in cascades
    }
    path.write_text(json.dumps(payload, indent=1), encoding="utf-8")
    return path


def load_cascades(path: str | Path) -> CascadeSet:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    out = []
    for topic, rec in data.items():
        out.append(Cascade(topic, frozenset(rec["users"]),
                           frozenset(tuple(e) for e in rec["edges"])))
    return tuple(out)
