"""Diffusive proximity: the symmetrically normalized adjacency and its powers.

The normalized matrix B = D^{-1/2} A D^{-1/2} carries first-order
proximity; its m-th power carries m-hop proximity, interpolating from
local to global structure as the order grows. Convergence of the powers
is not guaranteed (bipartite structures oscillate), so the stack is
capped at a configurable order and the top power serves as the global
proximity matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

DEFAULT_ORDER = 3


@dataclass(frozen=True)
class ProximityStack:
    """B stored sparse, dense powers [B_1, ..., B_order]."""

    b: sp.csr_matrix
    powers: tuple[np.ndarray, ...]
    order: int

    def power(self, m: int) -> np.ndarray:
        """m-th order proximity matrix, 1-indexed."""
        if not 1 <= m <= self.order:
            raise ValueError(f"order {m} outside [1, {self.order}]")
        return self.powers[m - 1]


def normalize(a: np.ndarray) -> np.ndarray:
    """B(i,j) = A(i,j) / sqrt(d_i d_j); zero-degree rows stay all-zero.

    Rejects asymmetric input. The result is symmetric, nonnegative, and
    has spectral radius at most 1.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("adjacency must be square")
    if not np.array_equal(a, a.T):
        raise ValueError("adjacency must be symmetric")
    if np.any(a < 0):
        raise ValueError("adjacency must be nonnegative")
    d = a.sum(axis=1)
    inv_sqrt = np.zeros_like(d)
    nz = d > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(d[nz])
    return a * inv_sqrt[:, None] * inv_sqrt[None, :]


def power_stack(b: np.ndarray, order: int = DEFAULT_ORDER) -> ProximityStack:
    """Exact dense powers B_1 .. B_order of the normalized matrix."""
    if order < 1:
        raise ValueError("order must be >= 1")
    b = np.asarray(b, dtype=float)
    powers = [b]
    for _ in range(order - 1):
        powers.append(powers[-1] @ b)
    return ProximityStack(sp.csr_matrix(b), tuple(powers), order)


def global_proximity(stack: ProximityStack) -> np.ndarray:
    """Top-order power of the stack."""
    return stack.powers[-1]


def spectral_radius(b: np.ndarray, iters: int = 200, seed: int = 0) -> float:
    """Largest |eigenvalue| estimate by power iteration on a symmetric matrix."""
    b = np.asarray(b, dtype=float)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(b.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = b @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        lam = float(v @ (b @ v))
    return abs(lam)
