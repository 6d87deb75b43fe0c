"""From-scratch kernel support-vector machinery.

Two solvers share the kernel code:

* a soft-margin binary classifier trained by SMO-style pairwise dual
  coordinate ascent (the detector wired into the occupancy pipeline), and
* an epsilon-insensitive support-vector regressor whose dual is minimized by
  exact pairwise line search on the difference coefficients.

Decision function: f(x) = sum_i coef_i * K(x_i, x) + bias.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, SingleClass


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"  # {"linear", "rbf"}
    gamma: float | None = None  # rbf only; None -> 1/(d*var(X)) at fit time

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel: {self.kind}")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")

    def resolve_gamma(self, X: np.ndarray) -> float:
        if self.kind == "linear":
            return 0.0
        if self.gamma is not None:
            return self.gamma
        var = float(np.asarray(X, float).var())
        d = X.shape[1]
        return 1.0 / (d * var) if var > 0 else 1.0 / d


def kernel_matrix(spec: KernelSpec, A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    if spec.kind == "linear":
        return A @ B.T
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass
class SvmModel:
    support_vectors: np.ndarray
    dual_coeffs: np.ndarray  # alpha_i * y_i
    bias: float
    kernel: KernelSpec
    gamma: float
    C: float
    converged: bool = True
    seed: int | None = None
    n_features: int = 0

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        if X.shape[0] == 0:
            return np.empty(0)
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(self.n_features, X.shape[1])
        K = kernel_matrix(self.kernel, X, self.support_vectors, self.gamma)
        return K @ self.dual_coeffs + self.bias

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "model_type": "svc",
            "kernel": {"kind": self.kernel.kind, "gamma": self.gamma},
            "C": self.C,
            "support_vectors": self.support_vectors.tolist(),
            "dual_coeffs": self.dual_coeffs.tolist(),
            "bias": self.bias,
            "converged": self.converged,
            "seed": self.seed,
            "n_features": self.n_features,
        }

    @classmethod
    def from_json(cls, d: dict) -> "SvmModel":
        spec = KernelSpec(kind=d["kernel"]["kind"], gamma=d["kernel"]["gamma"] or None)
        return cls(
            support_vectors=np.array(d["support_vectors"], float),
            dual_coeffs=np.array(d["dual_coeffs"], float),
            bias=float(d["bias"]),
            kernel=spec,
            gamma=float(d["kernel"]["gamma"]),
            C=float(d["C"]),
            converged=bool(d["converged"]),
            seed=d["seed"],
            n_features=int(d["n_features"]),
        )


@dataclass
class SvrModel:
    support_vectors: np.ndarray
    dual_coeffs: np.ndarray  # beta_i = alpha_i - alpha_i^*
    bias: float
    kernel: KernelSpec
    gamma: float
    C: float
    epsilon: float
    converged: bool = True
    n_features: int = 0

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        if X.shape[0] == 0:
            return np.empty(0)
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(self.n_features, X.shape[1])
        K = kernel_matrix(self.kernel, X, self.support_vectors, self.gamma)
        return K @ self.dual_coeffs + self.bias


def epsilon_insensitive_loss(residuals, epsilon: float) -> np.ndarray:
    """Per-point tube loss: |r| - eps where |r| >= eps, else 0."""
    return np.maximum(0.0, np.abs(np.asarray(residuals, float)) - epsilon)


def train_svc(
    features,
    labels,
    C: float = 1.0,
    kernel: KernelSpec = KernelSpec(),
    tol: float = 1e-3,
    max_passes: int = 200,
    seed: int = 0,
) -> SvmModel:
    """Train a soft-margin kernel classifier by SMO-style pairwise updates.

    Labels are {0,1}; internally mapped to {-1,+1}. Converged means a full
    sweep found no KKT violation beyond ``tol``; if ``max_passes`` sweeps are
    exhausted first the best-so-far model is returned with
    ``converged=False``.
    """
    X = np.asarray(features, float)
    y01 = np.asarray(labels)
    if C <= 0 or tol <= 0:
        raise ValueError("C and tol must be positive")
    classes = np.unique(y01)
    if len(classes) < 2:
        raise SingleClass()
    if len(classes) > 2:
        raise ValueError("binary classification only")
    y = np.where(y01 == classes[1], 1.0, -1.0)

    n = len(y)
    gamma = kernel.resolve_gamma(X)
    K = kernel_matrix(kernel, X, X, gamma)
    alpha = np.zeros(n)
    b = 0.0
    # E[i] = f(x_i) - y_i, maintained incrementally
    E = -y.copy()
    rng = np.random.default_rng(seed)

    converged = False
    for _ in range(max_passes):
        num_changed = 0
        for i in range(n):
            yEi = y[i] * E[i]
            if not ((yEi < -tol and alpha[i] < C) or (yEi > tol and alpha[i] > 0)):
                continue
            # second-choice heuristic: maximize |E_i - E_j|, random fallbacks
            j = int(np.argmax(np.abs(E[i] - E)))
            candidates = [j] if j != i else []
            candidates += [int(k) for k in rng.permutation(n)[:10] if k != i]
            for j in candidates:
                changed, b = _smo_pair_step(K, y, alpha, E, i, j, C, b)
                if changed:
                    num_changed += 1
                    break
        if num_changed == 0:
            converged = True
            break

    sv = alpha > 1e-10
    return SvmModel(
        support_vectors=X[sv].copy(),
        dual_coeffs=(alpha * y)[sv],
        bias=b,
        kernel=kernel,
        gamma=gamma,
        C=C,
        converged=converged,
        seed=seed,
        n_features=X.shape[1],
    )


def _smo_pair_step(K, y, alpha, E, i, j, C, b):
    """Analytic optimization of the (i, j) pair. Returns (changed, bias)."""
    if i == j:
        return False, b
    ai_old, aj_old = alpha[i], alpha[j]
    if y[i] != y[j]:
        L = max(0.0, aj_old - ai_old)
        H = min(C, C + aj_old - ai_old)
    else:
        L = max(0.0, ai_old + aj_old - C)
        H = min(C, ai_old + aj_old)
    if H - L < 1e-12:
        return False, b
    eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
    if eta <= 1e-12:
        return False, b
    aj = aj_old + y[j] * (E[i] - E[j]) / eta
    aj = min(H, max(L, aj))
    if abs(aj - aj_old) < 1e-7 * (aj + aj_old + 1e-7):
        return False, b
    ai = ai_old + y[i] * y[j] * (aj_old - aj)

    b1 = b - E[i] - y[i] * (ai - ai_old) * K[i, i] - y[j] * (aj - aj_old) * K[i, j]
    b2 = b - E[j] - y[i] * (ai - ai_old) * K[i, j] - y[j] * (aj - aj_old) * K[j, j]
    if 0 < ai < C:
        b_new = b1
    elif 0 < aj < C:
        b_new = b2
    else:
        b_new = 0.5 * (b1 + b2)

    E += (
        y[i] * (ai - ai_old) * K[i]
        + y[j] * (aj - aj_old) * K[j]
        + (b_new - b)
    )
    alpha[i], alpha[j] = ai, aj
    return True, b_new


def kkt_residual(model: SvmModel, features, labels) -> float:
    """Max KKT violation of the trained classifier over the training set."""
    X = np.asarray(features, float)
    y01 = np.asarray(labels)
    classes = np.unique(y01)
    y = np.where(y01 == classes[-1], 1.0, -1.0) if len(classes) > 1 else np.ones(len(y01))
    m = y * model.decision_function(X)
    # recover alpha_i for training rows: rows matching a support vector carry it
    K = kernel_matrix(model.kernel, X, model.support_vectors, model.gamma)
    alpha = np.zeros(len(X))
    used = np.zeros(len(model.support_vectors), bool)
    for r in range(len(X)):
        for s in range(len(model.support_vectors)):
            if not used[s] and np.allclose(X[r], model.support_vectors[s]):
                alpha[r] = abs(model.dual_coeffs[s])
                used[s] = True
                break
    lower = np.where(alpha < model.C - 1e-9, np.maximum(0.0, 1.0 - m), 0.0)
    upper = np.where(alpha > 1e-9, np.maximum(0.0, m - 1.0), 0.0)
    return float(np.maximum(lower, upper).max(initial=0.0))


def predict(model, features) -> np.ndarray:
    """Classifier: 1 where f(x) >= 0 (ties toward class 1), else 0.
    Regressor: real-valued f(x)."""
    if isinstance(model, SvrModel):
        return model.predict(features)
    X = np.asarray(features, float)
    if X.size == 0:
        return np.empty(0, int)
    f = model.decision_function(np.atleast_2d(X))
    return (f >= 0).astype(int)


def svr_dual_objective(K: np.ndarray, y: np.ndarray, beta: np.ndarray, epsilon: float) -> float:
    """Minimized SVR dual: 0.5 b'Kb + eps*sum|b| - y'b (beta = alpha - alpha*)."""
    beta = np.asarray(beta, float)
    return float(0.5 * beta @ K @ beta + epsilon * np.abs(beta).sum() - y @ beta)


def _svr_pair_objective(eta, g, eps, bi, bj, t):
    return 0.5 * eta * t * t + g * t + eps * (abs(bi + t) + abs(bj - t))


def train_svr(
    features,
    targets,
    C: float = 1.0,
    epsilon: float = 0.1,
    kernel: KernelSpec = KernelSpec(kind="linear"),
    tol: float = 1e-8,
    max_sweeps: int = 2000,
) -> SvrModel:
    """Epsilon-insensitive SVR trained by exact pairwise descent on the dual.

    Each (i, j) move preserves sum(beta) = 0 and minimizes the piecewise
    quadratic 1-D restriction exactly, so the dual objective is non-increasing
    across sweeps.
    """
    X = np.asarray(features, float)
    y = np.asarray(targets, float)
    if C <= 0 or epsilon < 0:
        raise ValueError("need C > 0 and epsilon >= 0")
    n = len(y)
    gamma = kernel.resolve_gamma(X)
    K = kernel_matrix(kernel, X, X, gamma)
    beta = np.zeros(n)
    Kb = np.zeros(n)  # K @ beta cache

    converged = False
    for _ in range(max_sweeps):
        best_gain = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                gain = _svr_pair_update(K, Kb, y, beta, i, j, C, epsilon)
                best_gain = max(best_gain, gain)
        if best_gain < tol:
            converged = True
            break

    b = _svr_bias(K, y, beta, C, epsilon)
    sv = np.abs(beta) > 1e-12
    model = SvrModel(
        support_vectors=X[sv].copy(),
        dual_coeffs=beta[sv],
        bias=b,
        kernel=kernel,
        gamma=gamma,
        C=C,
        epsilon=epsilon,
        converged=converged,
        n_features=X.shape[1],
    )
    model.train_beta = beta  # full-length coefficients, kept for diagnostics
    return model


def _svr_pair_update(K, Kb, y, beta, i, j, C, eps) -> float:
    """Exact minimization along beta_i += t, beta_j -= t. Returns the gain."""
    bi, bj = beta[i], beta[j]
    L = max(-C - bi, bj - C)
    H = min(C - bi, bj + C)
    if H - L < 1e-15:
        return 0.0
    eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
    g = Kb[i] - Kb[j] - (y[i] - y[j])

    candidates = {L, H}
    for bp in (-bi, bj):
        if L < bp < H:
            candidates.add(bp)
    if eta > 1e-15:
        # interior optimum of each smooth segment
        for si in (-1.0, 1.0):
            for sj in (-1.0, 1.0):
                t = -(g + eps * (si - sj)) / eta
                if L <= t <= H and np.sign(bi + t) * si >= 0 and np.sign(bj - t) * sj >= 0:
                    candidates.add(t)

    t_best, phi_best = 0.0, 0.0
    for t in candidates:
        phi = _svr_pair_objective(eta, g, eps, bi, bj, t) - eps * (abs(bi) + abs(bj))
        if phi < phi_best - 0.0:
            t_best, phi_best = t, phi
    if t_best == 0.0 or phi_best >= 0.0:
        return 0.0
    beta[i] += t_best
    beta[j] -= t_best
    Kb += t_best * (K[i] - K[j])
    return -phi_best


def _svr_bias(K, y, beta, C, eps) -> float:
    Kb = K @ beta
    free_pos = (beta > 1e-8) & (beta < C - 1e-8)
    free_neg = (beta < -1e-8) & (beta > -C + 1e-8)
    estimates = []
    estimates += list(y[free_pos] - eps - Kb[free_pos])
    estimates += list(y[free_neg] + eps - Kb[free_neg])
    if estimates:
        return float(np.mean(estimates))
    # no free vectors: bias lies in an interval bounded by the KKT conditions
    lo, hi = -np.inf, np.inf
    for idx in range(len(y)):
        r = y[idx] - Kb[idx]
        if beta[idx] >= C - 1e-8:  # below-tube error active: b <= r - eps
            hi = min(hi, r - eps)
        elif beta[idx] <= -C + 1e-8:  # above-tube error active: b >= r + eps
            lo = max(lo, r + eps)
        else:  # beta = 0: point inside the tube, r - eps <= b <= r + eps
            lo = max(lo, r - eps)
            hi = min(hi, r + eps)
    if np.isfinite(lo) and np.isfinite(hi):
        return float(0.5 * (lo + hi))
    return float(np.mean(y - Kb))
