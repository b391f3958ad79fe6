"""End-to-end pipelines tying ingestion, training, and evaluation
together. The CLI, the experiment scripts, and the acceptance suite all
run through these, so a protocol change lands in one place.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import evaluation, trainer
from .cascades import CascadeSet, restrict_edges
from .evaluation import LabeledPairSet
from .hetgraph import HetGraph, full_adjacency, user_adjacency, without_links
from .proximity import ProximityStack, global_proximity, normalize, power_stack
from .rawfeat import build_vocab, node_features
from .trainer import TrainConfig, TrainResult


def prepare_inputs(g: HetGraph, order: int) -> tuple[np.ndarray, ProximityStack]:
    """Combined raw feature matrix and proximity stack for one graph."""
    x_raw = node_features(g, build_vocab(g))
    stack = power_stack(normalize(full_adjacency(g)), order)
    return x_raw, stack


# ---------------------------------------------------------------------------
# Community detection pipeline
# ---------------------------------------------------------------------------

@dataclass
class CommunityRun:
    result: TrainResult
    labels: np.ndarray
    metrics: dict[str, float]


def community_run(g: HetGraph, cfg: TrainConfig,
                  inputs: tuple[np.ndarray, ProximityStack] | None = None,
                  kmeans_seed: int | None = None) -> CommunityRun:
    """Embed, cluster the user rows with k = embedding width, and score
    the assignment with all community metrics."""
    x_raw, stack = inputs if inputs is not None else prepare_inputs(g, cfg.order)
    result = trainer.train(g, x_raw, stack, None, cfg)
    seed = cfg.seed if kmeans_seed is None else kmeans_seed
    labels = evaluation.kmeans(result.z_users, cfg.embed_dim, seed=seed)
    nu = g.n_users
    metrics = evaluation.community_metrics(
        labels, user_adjacency(g), global_proximity(stack)[:nu, :nu])
    return CommunityRun(result, labels, metrics)


# ---------------------------------------------------------------------------
# Information diffusion pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiffusionProtocol:
    """Supervised link-ranking protocol: 10-fold CV over the positive
    retweet links with a sampled negative class, optional positive
    down-sampling, scoring held-out pairs by connection probability."""

    folds: int = 10
    eval_folds: int = 10      # how many of the folds actually run
    neg_ratio: float = 10.0
    sample_ratio: float = 1.0
    seed: int = 0


@dataclass
class DiffusionRun:
    fold_rows: list[dict] = field(default_factory=list)

    def mean(self, key: str) -> float:
        return float(np.mean([r[key] for r in self.fold_rows]))


def diffusion_pair_set(g: HetGraph, protocol: DiffusionProtocol) -> LabeledPairSet:
    """Labeled pair set whose positives are the graph's retweet links."""
    index = {u: i for i, u in enumerate(g.users)}
    positives = [(index[a], index[b]) for a, b in g.links_of_kind("retweet")]
    return evaluation.make_labeled_pairs(
        positives, g.n_users, protocol.neg_ratio, protocol.folds,
        protocol.seed)


def diffusion_run(g: HetGraph, cascades: CascadeSet, cfg: TrainConfig,
                  protocol: DiffusionProtocol) -> DiffusionRun:
    """Per-fold training and held-out AUC / Precision@100.

    The embedding never sees retweet links: they are stripped from the
    graph before adjacency construction, and the cascade activation
    edges are restricted to the (possibly down-sampled) train-fold
    positives, so held-out links stay out of the model entirely.
    """
    g_embed = without_links(g, ("retweet",))
    pair_set = diffusion_pair_set(g, protocol)
    inputs = prepare_inputs(g_embed, cfg.order)
    run = DiffusionRun()
    for fold in range(min(protocol.eval_folds, protocol.folds)):
        run.fold_rows.append(_one_fold(g_embed, cascades, cfg, protocol,
                                       pair_set, inputs, fold))
    return run


def _one_fold(g_embed: HetGraph, cascades: CascadeSet, cfg: TrainConfig,
              protocol: DiffusionProtocol, pair_set: LabeledPairSet,
              inputs, fold: int) -> dict:
    train_mask, test_mask = pair_set.fold_split(fold)
    train_mask = evaluation.sample_positives(
        pair_set, train_mask, protocol.sample_ratio, protocol.seed + fold)
    kept = train_mask & pair_set.labels
    kept_ids = {(g_embed.users[a], g_embed.users[b])
                for a, b in pair_set.pairs[kept]}
    result = trainer.train(g_embed, inputs[0], inputs[1],
                           restrict_edges(cascades, kept_ids), cfg)
    scores = evaluation.score_pairs(result.z_users, pair_set.pairs[test_mask])
    labels = pair_set.labels[test_mask]
    return {
        "fold": fold,
        "sample_ratio": protocol.sample_ratio,
        "auc": evaluation.auc(scores, labels),
        "p_at_100": evaluation.precision_at_k(scores, labels, 100),
        "n_test_pos": int(labels.sum()),
        "n_test": int(test_mask.sum()),
    }
