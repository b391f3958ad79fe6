"""Objective terms beyond reconstruction, and their gradients w.r.t. the
embedding matrix Z (rows = nodes, sigmoid outputs in (0,1)).

Terms:
  * proximity constraint: cross-entropy between the n-th order proximity
    weights and the pairwise connection probabilities sigma(z_i . z_j)
  * Frobenius regularizer over all encoder and decoder weight matrices
  * collective embedding objective combining the three
  * community task: normalized-cut trace form plus a soft orthonormality
    penalty on the user rows
  * diffusion task: four-case weighted squared distances over user pairs,
    driven by per-topic infected networks
  * joint objective: convex combination of embedding and task losses

For the community task the user rows of Z are read as community
confidence scores, so the embedding width equals the community count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cascades import Cascade, CascadeSet
from .neuralnet import Autoencoder


# ---------------------------------------------------------------------------
# Connection probability and proximity constraint
# ---------------------------------------------------------------------------

def connection_prob(z_i: np.ndarray, z_j: np.ndarray) -> float:
    """sigma(z_i . z_j): probability that the node pair is connected."""
    z_i = np.asarray(z_i, dtype=float)
    z_j = np.asarray(z_j, dtype=float)
    if z_i.shape != z_j.shape:
        raise ValueError("embedding dimensions differ")
    return float(1.0 / (1.0 + np.exp(-float(z_i @ z_j))))


def _log_sigmoid(t: np.ndarray) -> np.ndarray:
    # log sigma(t) = min(t, 0) - log1p(exp(-|t|)), stable for all t
    return np.minimum(t, 0.0) - np.log1p(np.exp(-np.abs(t)))


def proximity_loss(z: np.ndarray, b_n: np.ndarray,
                   normalize: bool = False) -> float:
    """Cross-entropy form of the proximity constraint:
    -sum_{i != j} B_n(i,j) log sigma(z_i . z_j).

    With ``normalize`` the sum is divided by the number of nonzero
    off-diagonal entries of B_n, making the term scale-free across graph
    sizes; the raw sum is the default.
    """
    z = np.asarray(z, dtype=float)
    b_n = np.asarray(b_n, dtype=float)
    if b_n.shape != (z.shape[0], z.shape[0]):
        raise ValueError("proximity matrix does not match Z rows")
    logp = _log_sigmoid(z @ z.T)
    off = ~np.eye(z.shape[0], dtype=bool)
    total = -float(np.sum(b_n[off] * logp[off]))
    if normalize:
        nnz = int(np.count_nonzero(b_n[off]))
        return total / nnz if nnz else 0.0
    return total


def proximity_grad(z: np.ndarray, b_n: np.ndarray,
                   normalize: bool = False) -> np.ndarray:
    """d proximity_loss / dZ."""
    z = np.asarray(z, dtype=float)
    b_n = np.asarray(b_n, dtype=float)
    p = 1.0 / (1.0 + np.exp(-(z @ z.T)))
    w = (b_n + b_n.T) * (1.0 - p)
    np.fill_diagonal(w, 0.0)
    grad = -(w @ z)
    if normalize:
        off = ~np.eye(z.shape[0], dtype=bool)
        nnz = int(np.count_nonzero(b_n[off]))
        return grad / nnz if nnz else np.zeros_like(grad)
    return grad


def stacked_proximity_losses(z: np.ndarray, powers, nnzs) -> list[float]:
    """Normalized proximity losses for every order, sharing one pairwise
    log-probability computation."""
    z = np.asarray(z, dtype=float)
    logp = _log_sigmoid(z @ z.T)
    np.fill_diagonal(logp, 0.0)
    out = []
    for b_n, nnz in zip(powers, nnzs):
        total = -float(np.sum(b_n * logp))
        out.append(total / nnz if nnz else 0.0)
    return out


def stacked_proximity_grad(z: np.ndarray, powers, coeffs) -> np.ndarray:
    """Weighted sum of proximity gradients over several orders, sharing
    one connection-probability computation."""
    z = np.asarray(z, dtype=float)
    p = 1.0 / (1.0 + np.exp(-(z @ z.T)))
    w = np.zeros_like(p)
    for b_n, coeff in zip(powers, coeffs):
        w += coeff * (b_n + b_n.T)
    w *= 1.0 - p
    np.fill_diagonal(w, 0.0)
    return -(w @ z)


# ---------------------------------------------------------------------------
# Regularizer and collective embedding objective
# ---------------------------------------------------------------------------

def regularization(model: Autoencoder) -> float:
    """Sum of squared Frobenius norms over every encoder and decoder
    weight matrix; biases excluded."""
    return float(sum(np.sum(w * w) for w in model.enc_w + model.dec_w))


def embedding_objective(recon: float, prox_losses, reg: float,
                        alpha=1.0, theta: float = 0.1) -> float:
    """recon + sum_n alpha_n * L_n + theta * reg.

    ``alpha`` may be a scalar (shared across orders) or one weight per
    proximity order.
    """
    prox_losses = list(prox_losses)
    alphas = np.broadcast_to(np.asarray(alpha, dtype=float),
                             (len(prox_losses),))
    return float(recon + float(alphas @ np.asarray(prox_losses, dtype=float))
                 + theta * reg)


def joint_objective(c: float, l_e: float, l_t: float) -> float:
    """Convex combination c * L_e + (1 - c) * L_t, c in [0, 1]."""
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"c must lie in [0, 1], got {c}")
    return float(c * l_e + (1.0 - c) * l_t)


# ---------------------------------------------------------------------------
# Community detection task
# ---------------------------------------------------------------------------

def community_loss(z_u: np.ndarray, a_u: np.ndarray, beta: float) -> float:
    """0.5 Tr(Z^T L Z) + beta ||Z^T Z - I||_F^2 with L the Laplacian of
    the user adjacency. The trace term is the relaxed normalized cut; the
    penalty is the soft orthonormality relaxation."""
    z_u = np.asarray(z_u, dtype=float)
    a_u = np.asarray(a_u, dtype=float)
    if a_u.shape != (z_u.shape[0], z_u.shape[0]):
        raise ValueError("adjacency does not match Z rows")
    lap_z = laplacian_apply(a_u, z_u)
    trace_term = 0.5 * float(np.sum(z_u * lap_z))
    gram = z_u.T @ z_u - np.eye(z_u.shape[1])
    return trace_term + float(beta) * float(np.sum(gram * gram))


def community_grad(z_u: np.ndarray, a_u: np.ndarray, beta: float) -> np.ndarray:
    z_u = np.asarray(z_u, dtype=float)
    a_u = np.asarray(a_u, dtype=float)
    gram = z_u.T @ z_u - np.eye(z_u.shape[1])
    return laplacian_apply(a_u, z_u) + 4.0 * float(beta) * (z_u @ gram)


def laplacian_apply(a: np.ndarray, z: np.ndarray) -> np.ndarray:
    deg = a.sum(axis=1)
    return deg[:, None] * z - a @ z


# ---------------------------------------------------------------------------
# Information diffusion task
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiffusionWeights:
    """Four-case pair weights: eta for an activation edge, 1 for
    co-activated without an edge, delta for exactly one activated, 0 for
    neither. ``tau`` caps the squared distance on delta pairs so the
    negative term stays bounded."""

    eta: float = 10.0
    delta: float = -1.0
    tau: float = 1.0

    def __post_init__(self):
        if not self.eta > 1.0:
            raise ValueError("eta must exceed 1")
        if not self.delta < 0.0:
            raise ValueError("delta must be negative")
        if not self.tau > 0.0:
            raise ValueError("tau must be positive")


def diffusion_weight(cascade: Cascade, u_j: str, u_k: str,
                     weights: DiffusionWeights) -> float:
    """Pair weight for one topic's infected network."""
    j_in = u_j in cascade.users
    k_in = u_k in cascade.users
    if j_in and k_in:
        edge = (min(u_j, u_k), max(u_j, u_k))
        return weights.eta if edge in cascade.edges else 1.0
    if j_in or k_in:
        return weights.delta
    return 0.0


def cascade_weight_matrices(cascades: CascadeSet, user_index: dict[str, int],
                            weights: DiffusionWeights
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Aggregate pair weights over all topics into two symmetric matrices:
    nonnegative weights (eta and 1 cases) and negative weights (delta
    case), zero diagonal. The split matters because only the negative
    part is distance-capped."""
    n = len(user_index)
    w_pos = np.zeros((n, n))
    w_neg = np.zeros((n, n))
    for cascade in cascades:
        member = np.zeros(n, dtype=bool)
        idx = [user_index[u] for u in cascade.users if u in user_index]
        member[idx] = True
        both = np.outer(member, member)
        one = np.logical_xor(member[:, None], member[None, :])
        w_pos += np.where(both, 1.0, 0.0)
        w_neg += np.where(one, weights.delta, 0.0)
        for a, b in cascade.edges:
            if a in user_index and b in user_index:
                i, j = user_index[a], user_index[b]
                w_pos[i, j] += weights.eta - 1.0
                w_pos[j, i] += weights.eta - 1.0
    np.fill_diagonal(w_pos, 0.0)
    np.fill_diagonal(w_neg, 0.0)
    return w_pos, w_neg


def squared_distances(z: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances between rows, clipped at 0."""
    sq = np.sum(z * z, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (z @ z.T)
    return np.maximum(d2, 0.0)


def diffusion_loss(z_u: np.ndarray, cascades: CascadeSet,
                   weights: DiffusionWeights,
                   user_index: dict[str, int]) -> float:
    """Sum over topics and unordered user pairs of the four-case weighted
    squared embedding distance; delta pairs use min(distance^2, tau)."""
    w_pos, w_neg = cascade_weight_matrices(cascades, user_index, weights)
    return diffusion_loss_from_weights(z_u, w_pos, w_neg, weights.tau)


def diffusion_loss_from_weights(z_u: np.ndarray, w_pos: np.ndarray,
                                w_neg: np.ndarray, tau: float) -> float:
    z_u = np.asarray(z_u, dtype=float)
    d2 = squared_distances(z_u)
    upper = np.triu_indices(z_u.shape[0], k=1)
    pos = float(np.sum(w_pos[upper] * d2[upper]))
    neg = float(np.sum(w_neg[upper] * np.minimum(d2[upper], tau)))
    return pos + neg


def diffusion_grad_from_weights(z_u: np.ndarray, w_pos: np.ndarray,
                                w_neg: np.ndarray, tau: float) -> np.ndarray:
    """d diffusion_loss / dZ_u; the cap contributes no gradient at or
    beyond tau."""
    z_u = np.asarray(z_u, dtype=float)
    d2 = squared_distances(z_u)
    g = w_pos + w_neg * (d2 < tau)
    np.fill_diagonal(g, 0.0)
    return 2.0 * (g.sum(axis=1)[:, None] * z_u - g @ z_u)
