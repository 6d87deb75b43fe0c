"""From-scratch 2-D PCA and exact-gradient t-SNE for separability checks.

Both methods emit an :class:`Embedding2D` whose diagnostics carry either the
explained-variance ratios (PCA) or the KL-divergence trace (t-SNE).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import PerplexityInfeasible

_EPS = 1e-12


@dataclass
class Embedding2D:
    points: np.ndarray  # n x 2
    labels: np.ndarray | None
    method: str  # {"pca", "tsne"}
    diagnostics: dict = field(default_factory=dict)


@dataclass
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 100
    momentum_switch_iter: int = 250
    momentum_start: float = 0.5
    momentum_final: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.perplexity <= 1:
            raise ValueError("perplexity must exceed 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


def pca_2d(matrix, labels=None) -> Embedding2D:
    """Project onto the top-2 eigenvectors of the sample covariance.

    Eigenvalues sorted descending; sign convention: the largest-magnitude
    component of each eigenvector is positive. A rank-<2 covariance yields a
    zero second column plus a warning instead of an error.
    """
    X = np.asarray(matrix, float)
    n, d = X.shape
    if n < 3 or d < 2:
        raise ValueError("need at least 3 rows and 2 columns")
    Xc = X - X.mean(axis=0)
    cov = (Xc.T @ Xc) / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.maximum(eigvals[order], 0.0)
    eigvecs = eigvecs[:, order]

    rank = int(np.sum(eigvals > _EPS * max(eigvals[0], 1.0)))
    components = eigvecs[:, :2].copy()
    for k in range(2):
        pivot = np.argmax(np.abs(components[:, k]))
        if components[pivot, k] < 0:
            components[:, k] = -components[:, k]
    points = Xc @ components
    if rank < 2:
        warnings.warn(f"covariance rank {rank} < 2: second embedding column is zero")
        points[:, 1] = 0.0
        components[:, 1] = 0.0

    total = eigvals.sum()
    ratios = (eigvals[:2] / total).tolist() if total > 0 else [0.0, 0.0]
    return Embedding2D(
        points=points,
        labels=None if labels is None else np.asarray(labels),
        method="pca",
        diagnostics={
            "explained_variance": eigvals[:2].tolist(),
            "explained_variance_ratio": ratios,
            "components": components.T.tolist(),
            "rank": rank,
        },
    )


def _conditional_probabilities(sq_dists: np.ndarray, perplexity: float, tol: float = 1e-6):
    """Per-row bisection on the Gaussian bandwidth to match the target
    perplexity (entropy in nats = log(perplexity)). Returns (P_conditional,
    achieved perplexity per row)."""
    n = sq_dists.shape[0]
    target_entropy = np.log(perplexity)
    P = np.zeros((n, n))
    achieved = np.zeros(n)
    for i in range(n):
        beta, beta_lo, beta_hi = 1.0, 0.0, np.inf
        d = np.delete(sq_dists[i], i)
        for _ in range(100):
            w = np.exp(-(d - d.min()) * beta)
            sw = w.sum()
            p = w / sw
            entropy = -np.sum(p * np.log(np.maximum(p, _EPS)))
            if abs(entropy - target_entropy) < tol:
                break
            if entropy > target_entropy:
                beta_lo = beta
                beta = beta * 2 if beta_hi == np.inf else 0.5 * (beta + beta_hi)
            else:
                beta_hi = beta
                beta = 0.5 * (beta + beta_lo)
        row = np.zeros(n)
        row[np.arange(n) != i] = p
        P[i] = row
        achieved[i] = np.exp(entropy)
    return P, achieved


def tsne_kl(P: np.ndarray, Y: np.ndarray) -> float:
    Q, _ = _q_matrix(Y)
    mask = P > 0
    return float(np.sum(P[mask] * np.log(P[mask] / np.maximum(Q[mask], _EPS))))


def _q_matrix(Y: np.ndarray):
    sq = (
        np.sum(Y * Y, axis=1)[:, None]
        + np.sum(Y * Y, axis=1)[None, :]
        - 2.0 * (Y @ Y.T)
    )
    num = 1.0 / (1.0 + np.maximum(sq, 0.0))
    np.fill_diagonal(num, 0.0)
    Q = num / max(num.sum(), _EPS)
    return Q, num


def tsne_gradient(P: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Exact O(n^2) KL gradient: 4 * sum_j (p_ij - q_ij) (1+|y_i-y_j|^2)^-1 (y_i-y_j)."""
    Q, num = _q_matrix(Y)
    W = (P - Q) * num
    return 4.0 * (np.diag(W.sum(axis=1)) - W) @ Y


def tsne_2d(matrix, config: TsneConfig = None, labels=None) -> Embedding2D:
    """Exact t-SNE to 2 dimensions with early exaggeration and momentum.

    The KL trace (against the un-exaggerated P) is recorded every iteration.
    For very small inputs (n < 9) the perplexity is clamped instead of
    raising; otherwise perplexity >= n/3 raises
    :class:`PerplexityInfeasible`.
    """
    if config is None:
        config = TsneConfig()
    X = np.asarray(matrix, float)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 points")
    perplexity = config.perplexity
    if n >= 9:
        if perplexity >= n / 3:
            raise PerplexityInfeasible(perplexity, n)
    else:
        perplexity = max(1.0 + 1e-9, min(perplexity, (n - 1.0)))

    sq = (
        np.sum(X * X, axis=1)[:, None]
        + np.sum(X * X, axis=1)[None, :]
        - 2.0 * (X @ X.T)
    )
    np.maximum(sq, 0.0, out=sq)
    P_cond, achieved = _conditional_probabilities(sq, perplexity)
    P = (P_cond + P_cond.T) / (2.0 * n)
    P = np.maximum(P, 0.0)

    rng = np.random.default_rng(config.seed)
    Y = rng.normal(0.0, 1e-4, size=(n, 2))
    velocity = np.zeros_like(Y)
    kl_trace = []
    for it in range(config.iterations):
        P_eff = P * config.early_exaggeration if it < config.exaggeration_iters else P
        grad = tsne_gradient(P_eff, Y)
        momentum = (
            config.momentum_start
            if it < config.momentum_switch_iter
            else config.momentum_final
        )
        velocity = momentum * velocity - config.learning_rate * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)
        kl_trace.append(tsne_kl(P, Y))

    return Embedding2D(
        points=Y,
        labels=None if labels is None else np.asarray(labels),
        method="tsne",
        diagnostics={
            "kl_trace": kl_trace,
            "perplexity_target": perplexity,
            "perplexity_achieved": achieved.tolist(),
        },
    )


def save_embedding(embedding: Embedding2D, path) -> None:
    """CSV with columns x, y, label (label blank when absent)."""
    with open(path, "w") as fh:
        fh.write("x,y,label\n")
        for i, (x, y) in enumerate(embedding.points):
            label = "" if embedding.labels is None else int(embedding.labels[i])
            fh.write(f"{x:.9f},{y:.9f},{label}\n")
