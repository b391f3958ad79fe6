"""Minibatch SGD over the joint objective, with task plug-in and grid
search over the embedding/task balance.

Batch gradients are unbiased estimators of the full joint gradient:
per-node reconstruction terms are rescaled by nodes/batch, pairwise
terms (proximity, cut trace, diffusion) are computed over within-batch
pairs and rescaled by total-pairs/batch-pairs, and the deterministic
regularizer enters exactly. With batch size = |V| every step therefore
uses the exact gradient.

Determinism: the model initializes from ``seed``; epoch shuffling draws
from an independent generator seeded with ``seed + 1``; batches are the
consecutive chunks of the shuffled order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import losses, neuralnet
from .cascades import CascadeSet
from .hetgraph import HetGraph, user_adjacency
from .losses import DiffusionWeights
from .neuralnet import Autoencoder
from .proximity import ProximityStack

TASKS = ("none", "community", "diffusion")

# Reference widths of the two hidden encoder layers; shrunk
# proportionally when the input is narrower than the first width.
REFERENCE_HIDDEN = (256, 128)


@dataclass(frozen=True)
class TrainConfig:
    """All training hyperparameters. Defaults follow the reported
    experiment settings; desk-scale runs usually shrink gamma, beta and
    the epoch budget."""

    task: str = "none"
    hidden: tuple[int, ...] = REFERENCE_HIDDEN
    embed_dim: int = 64          # d; doubles as the community count k
    order: int = 3               # proximity order cap
    alpha: float = 1.0
    beta: float = 1000.0
    theta: float = 0.1
    gamma: float = 1000.0
    eta: float = 10.0
    delta: float = -1.0
    tau: float = 0.0             # 0 means "use embed_dim"
    c: float = 0.5
    lr: float = 0.001
    epochs: int = 500
    batch_size: int = 64
    seed: int = 0
    tol: float = 1e-6
    patience: int = 5

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if not 0.0 <= self.c <= 1.0:
            raise ValueError("c must lie in [0, 1]")
        if self.lr <= 0.0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 0 or self.batch_size < 1 or self.order < 1:
            raise ValueError("bad epoch/batch/order setting")

    @property
    def tau_value(self) -> float:
        return self.tau if self.tau > 0.0 else float(self.embed_dim)

    def diffusion_weights(self) -> DiffusionWeights:
        return DiffusionWeights(self.eta, self.delta, self.tau_value)

    def schedule(self, input_dim: int) -> tuple[int, ...]:
        """Layer sizes [m0, hidden..., d]; hidden widths shrink
        proportionally when the input is narrower than the reference."""
        scale = min(1.0, input_dim / REFERENCE_HIDDEN[0])
        hid = [max(self.embed_dim, int(round(h * scale))) for h in self.hidden]
        return (input_dim, *hid, self.embed_dim)

    @classmethod
    def from_mapping(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {k: v for k, v in data.items() if k in known}
        if "hidden" in kwargs:
            kwargs["hidden"] = tuple(int(h) for h in kwargs["hidden"])
        return cls(**kwargs)


@dataclass
class TrainResult:
    model: Autoencoder
    z: np.ndarray                  # final full-graph embeddings
    history: list[dict] = field(default_factory=list)
    cfg: TrainConfig | None = None
    n_users: int = 0

    @property
    def z_users(self) -> np.ndarray:
        return self.z[:self.n_users]


def scale_minmax(x: np.ndarray) -> np.ndarray:
    """Per-column min-max scaling to [0, 1]; constant columns go to 0.

    Sigmoid decoding cannot reproduce values outside (0, 1), so raw
    features (ages, TF-IDF weights) are squashed before training.
    """
    x = np.asarray(x, dtype=float)
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    safe = np.where(span > 0.0, span, 1.0)
    out = (x - lo) / safe
    out[:, span == 0.0] = 0.0
    return out


def epoch_batches(n: int, batch_size: int,
                  rng: np.random.Generator) -> list[np.ndarray]:
    """Shuffled node order cut into consecutive chunks."""
    perm = rng.permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]


def _pair_scale(n: int, b: int) -> float:
    # inclusion probability of a pair in a uniform size-b subset
    return (n * (n - 1)) / (b * (b - 1))


class _Objective:
    """Precomputed constants of one training problem."""

    def __init__(self, g: HetGraph, x_scaled: np.ndarray,
                 stack: ProximityStack, cascades: CascadeSet | None,
                 cfg: TrainConfig):
        self.cfg = cfg
        self.x = x_scaled
        self.mask = neuralnet.mask_vector(x_scaled, cfg.gamma)
        self.n = x_scaled.shape[0]
        self.n_users = g.n_users
        self.powers = [np.asarray(p) for p in stack.powers]
        off = ~np.eye(self.n, dtype=bool)
        self.prox_nnz = [max(int(np.count_nonzero(p[off])), 1)
                         for p in self.powers]
        self.a_u = user_adjacency(g) if cfg.task == "community" else None
        self.w_pos = self.w_neg = None
        if cfg.task == "diffusion":
            if cascades is None:
                raise ValueError("diffusion task requires cascades")
            user_index = {u: i for i, u in enumerate(g.users)}
            self.w_pos, self.w_neg = losses.cascade_weight_matrices(
                cascades, user_index, cfg.diffusion_weights())

    # ---- full-graph evaluation -------------------------------------

    def evaluate(self, model: Autoencoder) -> dict:
        cfg = self.cfg
        z = neuralnet.encode(model, self.x)
        xhat = neuralnet.decode(model, z)
        l_a = neuralnet.masked_loss(self.x, xhat, self.mask)
        l_n = losses.stacked_proximity_losses(z, self.powers, self.prox_nnz)
        l_reg = losses.regularization(model)
        l_e = losses.embedding_objective(l_a, l_n, l_reg, cfg.alpha, cfg.theta)
        l_t = self.task_loss(z)
        row = {"l_a": l_a, "l_reg": l_reg, "l_t": l_t,
               "joint": losses.joint_objective(cfg.c, l_e, l_t)}
        for m, val in enumerate(l_n, start=1):
            row[f"l_{m}"] = val
        return row

    def task_loss(self, z: np.ndarray) -> float:
        cfg = self.cfg
        z_u = z[:self.n_users]
        if cfg.task == "community":
            return losses.community_loss(z_u, self.a_u, cfg.beta)
        if cfg.task == "diffusion":
            return losses.diffusion_loss_from_weights(
                z_u, self.w_pos, self.w_neg, cfg.tau_value)
        return 0.0

    # ---- minibatch gradient ----------------------------------------

    def batch_gradients(self, model: Autoencoder,
                        idx: np.ndarray) -> neuralnet.Gradients:
        cfg = self.cfg
        b = len(idx)
        x_b = self.x[idx]
        activations = neuralnet.forward_activations(model, x_b)
        z_b = activations[0][-1]
        d_z = np.zeros_like(z_b)

        if cfg.c > 0.0 and cfg.alpha != 0.0 and b >= 2:
            scale = _pair_scale(self.n, b)
            subs = [p[np.ix_(idx, idx)] for p in self.powers]
            coeffs = [cfg.c * cfg.alpha * scale / nnz
                      for nnz in self.prox_nnz]
            d_z += losses.stacked_proximity_grad(z_b, subs, coeffs)

        if cfg.task != "none" and cfg.c < 1.0:
            upos = np.flatnonzero(idx < self.n_users)
            if len(upos) >= 2:
                bu = idx[upos]
                z_bu = z_b[upos]
                scale_u = _pair_scale(self.n_users, len(bu))
                d_z[upos] += (1.0 - cfg.c) * self._task_grad(
                    z_bu, bu, scale_u)

        grads = neuralnet.backward(model, x_b, self.mask[idx],
                                   d_z=d_z,
                                   recon_scale=cfg.c * self.n / b,
                                   activations=activations)
        if cfg.c > 0.0 and cfg.theta != 0.0:
            coeff = 2.0 * cfg.c * cfg.theta
            for gw, w in zip(grads.enc_w, model.enc_w):
                gw += coeff * w
            for gw, w in zip(grads.dec_w, model.dec_w):
                gw += coeff * w
        return grads

    def _task_grad(self, z_bu: np.ndarray, bu: np.ndarray,
                   scale_u: float) -> np.ndarray:
        cfg = self.cfg
        if cfg.task == "community":
            a_sub = self.a_u[np.ix_(bu, bu)]
            trace = losses.laplacian_apply(a_sub, z_bu) * scale_u
            # row-count-corrected gram estimate of the orthonormal penalty
            s = self.n_users / len(bu)
            gram = s * (z_bu.T @ z_bu) - np.eye(z_bu.shape[1])
            orth = 4.0 * cfg.beta * s * (z_bu @ gram)
            return trace + orth
        d2 = losses.squared_distances(z_bu)
        g = self.w_pos[np.ix_(bu, bu)] + \
            self.w_neg[np.ix_(bu, bu)] * (d2 < cfg.tau_value)
        np.fill_diagonal(g, 0.0)
        pair_grad = 2.0 * (g.sum(axis=1)[:, None] * z_bu - g @ z_bu)
        return pair_grad * scale_u


def train(g: HetGraph, x_raw: np.ndarray, stack: ProximityStack,
          cascades: CascadeSet | None, cfg: TrainConfig) -> TrainResult:
    """Train the collective autoencoder on one graph.

    ``x_raw`` is the combined raw node-feature matrix in graph node
    order; it is min-max scaled internally. Training stops once the
    relative joint-loss change stays below ``tol`` for ``patience``
    consecutive epochs, or at the epoch budget. Raises RuntimeError with
    the epoch index if the objective turns non-finite.
    """
    x = scale_minmax(x_raw)
    if x.shape[0] != g.n_nodes:
        raise ValueError("feature rows must match graph nodes")
    obj = _Objective(g, x, stack, cascades, cfg)
    model = neuralnet.init_model(cfg.schedule(x.shape[1]), cfg.seed)
    shuffle_rng = np.random.default_rng(cfg.seed + 1)

    history = [dict(epoch=0, **obj.evaluate(model))]
    streak = 0
    for epoch in range(1, cfg.epochs + 1):
        try:
            for idx in epoch_batches(obj.n, cfg.batch_size, shuffle_rng):
                grads = obj.batch_gradients(model, idx)
                neuralnet.sgd_step(model, grads, cfg.lr)
            row = dict(epoch=epoch, **obj.evaluate(model))
        except FloatingPointError as exc:
            raise RuntimeError(
                f"training diverged at epoch {epoch}: {exc}") from exc
        history.append(row)
        if not np.isfinite(row["joint"]):
            raise RuntimeError(f"training diverged at epoch {epoch}")
        prev = history[-2]["joint"]
        rel = abs(row["joint"] - prev) / max(abs(prev), 1e-12)
        streak = streak + 1 if rel < cfg.tol else 0
        if streak >= cfg.patience:
            break

    z = neuralnet.encode(model, x)
    return TrainResult(model, z, history, cfg, g.n_users)


def grid_search_c(g: HetGraph, x_raw: np.ndarray, stack: ProximityStack,
                  cascades: CascadeSet | None, cfg: TrainConfig,
                  candidates, metric_fn) -> tuple[float, dict[float, float]]:
    """Train once per candidate c and return (best c, score per c).

    The best candidate maximizes ``metric_fn(result)``; ties go to the
    smaller c.
    """
    cand = sorted(float(c) for c in candidates)
    if not cand:
        raise ValueError("no candidate values for c")
    scores: dict[float, float] = {}
    best_c, best_score = None, -np.inf
    for c in cand:
        result = train(g, x_raw, stack, cascades, replace(cfg, c=c))
        score = float(metric_fn(result))
        scores[c] = score
        if score > best_score:
            best_c, best_score = c, score
    return best_c, scores
