"""Dense sigmoid autoencoder: forward passes, masked reconstruction loss,
exact backpropagation, SGD updates, and finite-difference gradient checks.

One parameter set is shared by user and post nodes; their raw vectors are
padded into a common input layout upstream. The activation is the
logistic sigmoid at every layer, including the output, so inputs must be
scaled to [0,1] to be representable.

Written against plain numpy on purpose: training needs exact,
deterministic gradients that the finite-difference harness can certify.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

CHECKPOINT_VERSION = 1


def sigmoid(t: np.ndarray) -> np.ndarray:
    """Logistic function, overflow-safe for any finite input."""
    return expit(t)


@dataclass
class Autoencoder:
    """Mirror-symmetric encoder/decoder with untied parameters.

    ``sizes`` is the layer-size schedule [m_0, m_1, ..., m_o, d]:
    enc_w[j] maps sizes[j] -> sizes[j+1]; dec_w[j] maps sizes[j+1] ->
    sizes[j], so dec_w[0] produces the reconstruction.
    """

    sizes: tuple[int, ...]
    enc_w: list[np.ndarray]
    enc_b: list[np.ndarray]
    dec_w: list[np.ndarray]
    dec_b: list[np.ndarray]

    @property
    def input_dim(self) -> int:
        return self.sizes[0]

    @property
    def embed_dim(self) -> int:
        return self.sizes[-1]

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.enc_w + self.dec_w) + \
            sum(b.size for b in self.enc_b + self.dec_b)

    def param_arrays(self) -> list[np.ndarray]:
        """All parameter arrays, in the fixed traversal order used by
        gradients, updates, and checkpoints."""
        return list(self.enc_w) + list(self.enc_b) + \
            list(self.dec_w) + list(self.dec_b)


@dataclass
class Gradients:
    """Parameter gradients with the same shapes as the model."""

    enc_w: list[np.ndarray]
    enc_b: list[np.ndarray]
    dec_w: list[np.ndarray]
    dec_b: list[np.ndarray]

    def arrays(self) -> list[np.ndarray]:
        return list(self.enc_w) + list(self.enc_b) + \
            list(self.dec_w) + list(self.dec_b)


# The logistic sigmoid has slope 1/4 at the origin; plain Glorot limits
# assume unit gain and let per-node variation collapse by ~4x per layer,
# which measurably flattens deep encoders. Scaling the limit by the
# inverse gain keeps signal variance roughly layer-stable.
SIGMOID_GAIN = 4.0


def init_model(sizes, seed: int) -> Autoencoder:
    """Seeded sigmoid-corrected Glorot-uniform weights, zero biases.

    Draw order is fixed (encoder layers bottom-up, then decoder layers
    bottom-up) so a seed pins the whole initialization bit-for-bit.
    """
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ValueError(f"bad layer schedule {sizes}")
    rng = np.random.default_rng(seed)
    enc_w, enc_b, dec_w, dec_b = [], [], [], []
    for j in range(len(sizes) - 1):
        fan_in, fan_out = sizes[j], sizes[j + 1]
        limit = SIGMOID_GAIN * np.sqrt(6.0 / (fan_in + fan_out))
        enc_w.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        enc_b.append(np.zeros(fan_out))
    for j in range(len(sizes) - 1):
        fan_in, fan_out = sizes[j + 1], sizes[j]
        limit = SIGMOID_GAIN * np.sqrt(6.0 / (fan_in + fan_out))
        dec_w.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        dec_b.append(np.zeros(fan_out))
    return Autoencoder(sizes, enc_w, enc_b, dec_w, dec_b)


def zero_gradients(model: Autoencoder) -> Gradients:
    return Gradients(
        [np.zeros_like(w) for w in model.enc_w],
        [np.zeros_like(b) for b in model.enc_b],
        [np.zeros_like(w) for w in model.dec_w],
        [np.zeros_like(b) for b in model.dec_b],
    )


def _as_batch(x: np.ndarray, width: int, what: str) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != width:
        raise ValueError(f"{what} must have width {width}, got shape {x.shape}")
    return x, single


def encode(model: Autoencoder, x: np.ndarray) -> np.ndarray:
    """sigma-chain through the encoder; accepts one vector or a batch."""
    a, single = _as_batch(x, model.input_dim, "input")
    for w, b in zip(model.enc_w, model.enc_b):
        a = sigmoid(a @ w.T + b)
    return a[0] if single else a


def decode(model: Autoencoder, z: np.ndarray) -> np.ndarray:
    """Mirrored sigma-chain back to the reconstruction space."""
    h, single = _as_batch(z, model.embed_dim, "embedding")
    for w, b in zip(reversed(model.dec_w), reversed(model.dec_b)):
        h = sigmoid(h @ w.T + b)
    return h[0] if single else h


def reconstruct(model: Autoencoder, x: np.ndarray) -> np.ndarray:
    return decode(model, encode(model, x))


def mask_vector(x: np.ndarray, gamma: float) -> np.ndarray:
    """Per-feature weights: gamma on nonzero entries, 1 elsewhere.

    The sparse zero background would otherwise let an all-zero decoding
    come out nearly free; gamma > 1 forces the support to be preserved.
    """
    return np.where(np.asarray(x) != 0, float(gamma), 1.0)


def masked_loss(x: np.ndarray, xhat: np.ndarray, mask: np.ndarray) -> float:
    """Sum over samples and features of ((x - xhat) * mask)^2."""
    x, xhat, mask = (np.asarray(v, dtype=float) for v in (x, xhat, mask))
    if x.shape != xhat.shape or x.shape != mask.shape:
        raise ValueError("x, xhat, mask must share a shape")
    diff = (x - xhat) * mask
    return float(np.sum(diff * diff))


def forward_activations(model: Autoencoder, x: np.ndarray):
    """Forward pass keeping every activation; aborts on non-finite values.

    Returns (encoder activations [x, y1, ..., z], decoder activations
    [z, yhat_o, ..., xhat]); reusable by ``backward`` to avoid a second
    forward pass.
    """
    acts = [x]
    a = x
    for j, (w, b) in enumerate(zip(model.enc_w, model.enc_b)):
        a = sigmoid(a @ w.T + b)
        if not np.all(np.isfinite(a)):
            raise FloatingPointError(f"non-finite activation at encoder layer {j}")
        acts.append(a)
    hidden = [a]  # decoder activations, top (z) first
    h = a
    for j in range(len(model.dec_w) - 1, -1, -1):
        h = sigmoid(h @ model.dec_w[j].T + model.dec_b[j])
        if not np.all(np.isfinite(h)):
            raise FloatingPointError(f"non-finite activation at decoder layer {j}")
        hidden.append(h)
    return acts, hidden


def backward(model: Autoencoder, x: np.ndarray, mask: np.ndarray,
             d_z: np.ndarray | None = None,
             recon_scale: float = 1.0,
             activations=None) -> Gradients:
    """Exact gradients of recon_scale * masked_loss plus any upstream
    embedding-level loss (given by its per-sample gradients d_z), summed
    over the batch. ``activations`` may carry a forward pass already
    computed via forward_activations."""
    x, _ = _as_batch(x, model.input_dim, "input")
    mask, _ = _as_batch(mask, model.input_dim, "mask")
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    acts, hidden = activations if activations is not None \
        else forward_activations(model, x)
    z = acts[-1]
    xhat = hidden[-1]
    grads = zero_gradients(model)
    n_dec = len(model.dec_w)

    # decoder: hidden[k] is the activation after (n_dec - k) decoding steps,
    # i.e. hidden[0] = z and hidden[n_dec] = xhat = sigmoid of dec layer 0
    d_out = recon_scale * 2.0 * (xhat - x) * mask * mask
    upstream = d_out
    for k in range(n_dec, 0, -1):
        j = n_dec - k          # decoder layer index producing hidden[k]
        out_act = hidden[k]
        in_act = hidden[k - 1]
        delta = upstream * out_act * (1.0 - out_act)
        grads.dec_w[j] += delta.T @ in_act
        grads.dec_b[j] += delta.sum(axis=0)
        upstream = delta @ model.dec_w[j]

    # at the embedding: decoder backprop plus any task/proximity gradient
    d_z_total = upstream
    if d_z is not None:
        d_z_arr, _ = _as_batch(d_z, model.embed_dim, "d_z")
        if d_z_arr.shape[0] != x.shape[0]:
            raise ValueError("d_z batch size mismatch")
        d_z_total = d_z_total + d_z_arr

    upstream = d_z_total
    for j in range(len(model.enc_w) - 1, -1, -1):
        out_act = acts[j + 1]
        in_act = acts[j]
        delta = upstream * out_act * (1.0 - out_act)
        grads.enc_w[j] += delta.T @ in_act
        grads.enc_b[j] += delta.sum(axis=0)
        upstream = delta @ model.enc_w[j]
    return grads


def sgd_step(model: Autoencoder, grads: Gradients, lr: float) -> Autoencoder:
    """In-place theta <- theta - lr * grad; returns the same model."""
    for p, g in zip(model.param_arrays(), grads.arrays()):
        p -= lr * g
    return model


def grad_check(model: Autoencoder, x: np.ndarray, mask: np.ndarray,
               eps: float = 1e-5, embed_loss=None,
               recon_scale: float = 1.0) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``embed_loss``: optional callable Z -> (value, dL/dZ) for an
    embedding-level term evaluated on top of the reconstruction loss.
    Intended for small nets (<= ~1e4 parameters).
    """
    x, _ = _as_batch(x, model.input_dim, "input")
    mask, _ = _as_batch(mask, model.input_dim, "mask")

    def total_loss() -> float:
        z = encode(model, x)
        loss = recon_scale * masked_loss(x, decode(model, z), mask)
        if embed_loss is not None:
            loss += float(embed_loss(z)[0])
        return loss

    d_z = None
    if embed_loss is not None:
        d_z = embed_loss(encode(model, x))[1]
    analytic = backward(model, x, mask, d_z=d_z, recon_scale=recon_scale)

    worst = 0.0
    for param, grad in zip(model.param_arrays(), analytic.arrays()):
        flat_p = param.reshape(-1)
        flat_g = grad.reshape(-1)
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + eps
            up = total_loss()
            flat_p[i] = orig - eps
            down = total_loss()
            flat_p[i] = orig
            numeric = (up - down) / (2.0 * eps)
            err = abs(flat_g[i] - numeric) / max(1.0, abs(flat_g[i]) + abs(numeric))
            worst = max(worst, err)
    return worst


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_model(model: Autoencoder, path: str | Path,
               meta: dict | None = None) -> Path:
    """Versioned .npz checkpoint: layer schedule, metadata, parameter arrays."""
    path = Path(path)
    header = {"version": CHECKPOINT_VERSION, "sizes": list(model.sizes)}
    header.update(meta or {})
    arrays = {"meta": np.array(json.dumps(header))}
    for j, w in enumerate(model.enc_w):
        arrays[f"enc_w{j}"] = w
        arrays[f"enc_b{j}"] = model.enc_b[j]
    for j, w in enumerate(model.dec_w):
        arrays[f"dec_w{j}"] = w
        arrays[f"dec_b{j}"] = model.dec_b[j]
    np.savez(path, **arrays)
    return path


def load_model(path: str | Path) -> tuple[Autoencoder, dict]:
    """Load a checkpoint; returns (model, metadata)."""
    with np.load(Path(path), allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        sizes = tuple(meta["sizes"])
        n = len(sizes) - 1
        enc_w = [data[f"enc_w{j}"] for j in range(n)]
        enc_b = [data[f"enc_b{j}"] for j in range(n)]
        dec_w = [data[f"dec_w{j}"] for j in range(n)]
        dec_b = [data[f"dec_b{j}"] for j in range(n)]
    return Autoencoder(sizes, enc_w, enc_b, dec_w, dec_b), meta
