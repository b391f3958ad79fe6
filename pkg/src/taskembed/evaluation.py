"""Downstream task execution and evaluation metrics.

Community side: k-means++ extraction from user embeddings, then
normalized cut, NDBI, silhouette, density, and size entropy. NDBI and
silhouette run on distances derived from the global proximity matrix
(d = 1 - P / max offdiagonal P); density and cut run on the user
adjacency; entropy only on the community sizes.

Diffusion side: pair scoring through the connection probability, AUC
with ties counted half, Precision@K with stable tie order, 10-fold CV
splitting, and positive-sample down-sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .losses import connection_prob

KMEANS_MAX_ITER = 300


# ---------------------------------------------------------------------------
# Community extraction
# ---------------------------------------------------------------------------

def kmeans(x: np.ndarray, k: int, seed: int = 0,
           max_iter: int = KMEANS_MAX_ITER) -> np.ndarray:
    """k-means++ seeded Lloyd iterations to an assignment fixpoint.

    Ties go to the lowest centroid index; an emptied cluster is reseeded
    with the point farthest from its current centroid.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    centroids = _plusplus_init(x, k, rng)

    labels = np.full(n, -1)
    for _ in range(max_iter):
        d2 = _sq_dists(x, centroids)
        new_labels = np.argmin(d2, axis=1)
        point_d2 = d2[np.arange(n), new_labels]
        while True:
            counts = np.bincount(new_labels, minlength=k)
            empty = np.flatnonzero(counts == 0)
            if len(empty) == 0:
                break
            # reseed with the farthest point, but never drain a
            # cluster down to zero members in the process
            stealable = counts[new_labels] > 1
            cand = np.where(stealable, point_d2, -np.inf)
            far = int(np.argmax(cand))
            c = int(empty[0])
            centroids[c] = x[far]
            new_labels[far] = c
            point_d2[far] = 0.0
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            centroids[c] = x[labels == c].mean(axis=0)
    return labels


def _plusplus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]))
    centroids[0] = x[rng.integers(n)]
    closest = _sq_dists(x, centroids[:1])[:, 0]
    for c in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = rng.choice(n, p=closest / total)
        else:
            idx = rng.integers(n)
        centroids[c] = x[idx]
        closest = np.minimum(closest, _sq_dists(x, centroids[c:c + 1])[:, 0])
    return centroids


def _sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - centers[None, :, :]
    return np.sum(diff * diff, axis=2)


def kmeans_sse(x: np.ndarray, labels: np.ndarray) -> float:
    """Within-cluster sum of squared errors of an assignment."""
    x = np.asarray(x, dtype=float)
    total = 0.0
    for c in np.unique(labels):
        pts = x[labels == c]
        total += float(np.sum((pts - pts.mean(axis=0)) ** 2))
    return total


# ---------------------------------------------------------------------------
# Community quality metrics
# ---------------------------------------------------------------------------

def ncut(labels: np.ndarray, a_u: np.ndarray) -> float:
    """0.5 * sum_j cut(U_j, rest) / volume(U_j); zero-volume communities
    contribute 0."""
    labels = np.asarray(labels)
    a_u = np.asarray(a_u, dtype=float)
    total = 0.0
    for c in np.unique(labels):
        inside = labels == c
        volume = float(a_u[inside].sum())
        if volume == 0.0:
            continue
        cut = float(a_u[np.ix_(inside, ~inside)].sum())
        total += cut / volume
    return 0.5 * total


def proximity_distance(p: np.ndarray) -> np.ndarray:
    """d(i,j) = 1 - P(i,j) / max offdiagonal P; zero diagonal.

    An all-zero off-diagonal P degenerates to unit distances everywhere.
    """
    p = np.asarray(p, dtype=float)
    off = ~np.eye(p.shape[0], dtype=bool)
    top = float(p[off].max()) if p.shape[0] > 1 else 0.0
    if top <= 0.0:
        d = np.ones_like(p)
    else:
        d = 1.0 - p / top
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def _community_dispersions(labels, dist):
    ids = np.unique(labels)
    intra = np.zeros(len(ids))
    for a, c in enumerate(ids):
        inside = np.flatnonzero(labels == c)
        if len(inside) > 1:
            block = dist[np.ix_(inside, inside)]
            intra[a] = block.sum() / (len(inside) * (len(inside) - 1))
    return ids, intra


def ndbi(labels: np.ndarray, p: np.ndarray) -> float:
    """Normalized Davies-Bouldin score in (0, 1], higher is better.

    Similarity of communities a, b is (intra_a + intra_b) / (2 inter_ab)
    with intra the mean within-community distance and inter the mean
    cross-community distance; NDBI = 1 / (1 + mean_a max_b similarity).
    """
    labels = np.asarray(labels)
    ids = np.unique(labels)
    if len(ids) < 2:
        raise ValueError("ndbi needs at least two communities")
    dist = proximity_distance(p)
    ids, intra = _community_dispersions(labels, dist)
    k = len(ids)
    worst = np.zeros(k)
    for a in range(k):
        in_a = labels == ids[a]
        for b in range(a + 1, k):
            in_b = labels == ids[b]
            inter = float(dist[np.ix_(in_a, in_b)].mean())
            if inter > 0.0:
                r = (intra[a] + intra[b]) / (2.0 * inter)
            else:
                r = 0.0 if intra[a] + intra[b] == 0.0 else np.inf
            worst[a] = max(worst[a], r)
            worst[b] = max(worst[b], r)
    dbi = float(np.mean(worst))
    return 0.0 if np.isinf(dbi) else 1.0 / (1.0 + dbi)


def silhouette(labels: np.ndarray, p: np.ndarray) -> float:
    """Mean silhouette over users on proximity-derived distances;
    members of singleton communities score 0."""
    labels = np.asarray(labels)
    ids = np.unique(labels)
    if len(ids) < 2:
        raise ValueError("silhouette needs at least two communities")
    dist = proximity_distance(p)
    n = len(labels)
    scores = np.zeros(n)
    members = {c: np.flatnonzero(labels == c) for c in ids}
    for i in range(n):
        own = members[labels[i]]
        if len(own) == 1:
            continue
        a = dist[i, own].sum() / (len(own) - 1)
        b = min(float(dist[i, members[c]].mean()) for c in ids if c != labels[i])
        top = max(a, b)
        scores[i] = 0.0 if top == 0.0 else (b - a) / top
    return float(scores.mean())


def density(labels: np.ndarray, a_u: np.ndarray) -> float:
    """Fraction of edges that stay inside a community; 0 when there are
    no edges at all."""
    labels = np.asarray(labels)
    a_u = np.asarray(a_u, dtype=float)
    total = float(a_u.sum()) / 2.0
    if total == 0.0:
        return 0.0
    intra = 0.0
    for c in np.unique(labels):
        inside = labels == c
        intra += float(a_u[np.ix_(inside, inside)].sum()) / 2.0
    return intra / total


def entropy(labels: np.ndarray) -> float:
    """Shannon entropy (nats) of the community size distribution."""
    labels = np.asarray(labels)
    _, counts = np.unique(labels, return_counts=True)
    frac = counts / counts.sum()
    return float(-np.sum(frac * np.log(frac)))


def adjusted_rand_index(labels_a: np.ndarray, labels_b: np.ndarray) -> float:
    """ARI between two assignments of the same items."""
    labels_a = np.asarray(labels_a)
    labels_b = np.asarray(labels_b)
    if labels_a.shape != labels_b.shape:
        raise ValueError("assignments must cover the same items")
    ids_a, inv_a = np.unique(labels_a, return_inverse=True)
    ids_b, inv_b = np.unique(labels_b, return_inverse=True)
    table = np.zeros((len(ids_a), len(ids_b)))
    np.add.at(table, (inv_a, inv_b), 1.0)

    def comb2(v):
        return np.sum(v * (v - 1.0) / 2.0)

    n = len(labels_a)
    sum_cells = comb2(table)
    sum_rows = comb2(table.sum(axis=1))
    sum_cols = comb2(table.sum(axis=0))
    expected = sum_rows * sum_cols / comb2(np.array([n]))
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def community_metrics(labels: np.ndarray, a_u: np.ndarray,
                      p_users: np.ndarray) -> dict[str, float]:
    """All four reported community metrics plus the normalized cut."""
    return {
        "ndbi": ndbi(labels, p_users),
        "silhouette": silhouette(labels, p_users),
        "density": density(labels, a_u),
        "entropy": entropy(labels),
        "ncut": ncut(labels, a_u),
    }


# ---------------------------------------------------------------------------
# Diffusion-link scoring and ranking metrics
# ---------------------------------------------------------------------------

def score_pairs(z_u: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """Connection probability per (row-index) user pair."""
    z_u = np.asarray(z_u, dtype=float)
    pairs = np.asarray(pairs, dtype=int)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("pairs must be an (n, 2) index array")
    if pairs.size and (pairs.min() < 0 or pairs.max() >= z_u.shape[0]):
        raise ValueError("pair index out of range")
    dots = np.sum(z_u[pairs[:, 0]] * z_u[pairs[:, 1]], axis=1)
    return 1.0 / (1.0 + np.exp(-dots))


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUC; tied scores count half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc needs both classes present")
    ranks = rankdata(scores)
    rank_sum = float(ranks[labels].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def precision_at_k(scores: np.ndarray, labels: np.ndarray,
                   k: int = 100) -> float:
    """Fraction of positives among the k best-scored items.

    Ties resolve by input position (stable sort), so callers keep a
    deterministic pair order. With fewer than k items the cutoff shrinks
    to the list length.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    if k < 1:
        raise ValueError("k must be positive")
    order = np.argsort(-scores, kind="stable")
    top = order[:min(k, len(scores))]
    return float(labels[top].mean()) if len(top) else 0.0


# ---------------------------------------------------------------------------
# Cross-validation harness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LabeledPairSet:
    """User pairs (row indices) with diffusion-link labels and fold ids."""

    pairs: np.ndarray   # (n, 2) int
    labels: np.ndarray  # (n,) bool
    folds: np.ndarray   # (n,) int in [0, n_folds)

    def fold_split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """Boolean (train, test) masks for one held-out fold."""
        test = self.folds == fold
        return ~test, test


def cv_split(n_items: int, folds: int = 10, seed: int = 0) -> np.ndarray:
    """Seeded fold assignment: disjoint, exhaustive, balanced within 1."""
    if folds < 2 or folds > max(n_items, 1):
        raise ValueError(f"fold count {folds} infeasible for {n_items} items")
    rng = np.random.default_rng(seed)
    out = np.empty(n_items, dtype=int)
    out[rng.permutation(n_items)] = np.arange(n_items) % folds
    return out


def sample_positives(pair_set: LabeledPairSet, train_mask: np.ndarray,
                     ratio: float, seed: int = 0) -> np.ndarray:
    """Keep floor(ratio * n) of the train-fold positives, all negatives.

    Returns a reduced boolean train mask; ratio must lie in (0, 1].
    """
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must lie in (0, 1], got {ratio}")
    train_mask = np.asarray(train_mask, dtype=bool)
    pos = np.flatnonzero(train_mask & pair_set.labels)
    keep_n = int(np.floor(ratio * len(pos)))
    rng = np.random.default_rng(seed)
    kept = rng.choice(pos, size=keep_n, replace=False)
    out = train_mask.copy()
    out[pos] = False
    out[kept] = True
    return out


def make_labeled_pairs(positives: list[tuple[int, int]], n_users: int,
                       neg_ratio: float = 10.0, folds: int = 10,
                       seed: int = 0) -> LabeledPairSet:
    """Label retweet-link pairs positive and sample disjoint negatives
    uniformly from the remaining user pairs at ``neg_ratio`` : 1.

    Enumerating every absent link is infeasible beyond toy sizes, so the
    negative class is a uniform sample.
    """
    rng = np.random.default_rng(seed)
    pos_canon = {(min(a, b), max(a, b)) for a, b in positives}
    pos_arr = np.array(sorted(pos_canon), dtype=int).reshape(-1, 2)
    n_pos = len(pos_arr)
    if n_pos == 0:
        raise ValueError("no positive pairs")
    max_pairs = n_users * (n_users - 1) // 2
    n_neg = min(int(round(neg_ratio * n_pos)), max_pairs - n_pos)
    negs: set[tuple[int, int]] = set()
    while len(negs) < n_neg:
        a, b = rng.integers(0, n_users, size=2)
        if a == b:
            continue
        pair = (min(a, b), max(a, b))
        if pair not in pos_canon:
            negs.add(pair)
    neg_arr = np.array(sorted(negs), dtype=int).reshape(-1, 2)
    pairs = np.vstack([pos_arr, neg_arr])
    labels = np.zeros(len(pairs), dtype=bool)
    labels[:n_pos] = True
    folds_arr = np.empty(len(pairs), dtype=int)
    folds_arr[:n_pos] = cv_split(n_pos, folds, seed)
    folds_arr[n_pos:] = cv_split(len(neg_arr), folds, seed + 1)
    return LabeledPairSet(pairs, labels, folds_arr)
