"""Fully-connected autoencoder with reconstruction-error occupancy scoring.

The network is trained by plain gradient descent (full batch by default) to
minimize the mean squared reconstruction error e = ||x - xhat||^2 over the
rows of one class. A threshold tau, calibrated on validation data, turns the
error into a decision: rows reconstructing worse than tau are assigned to the
other class.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonFiniteLoss, SingleClass, UncalibratedModel


@dataclass
class AeConfig:
    layer_sizes: list  # symmetric hourglass, first == last == d
    activation: str = "tanh"  # hidden layers; output is identity
    learning_rate: float = 0.01
    batch_size: int = 0  # 0 -> full batch
    epochs: int = 500
    seed: int = 0
    weight_init_scale: float = 0.1

    def __post_init__(self):
        sizes = self.layer_sizes
        if len(sizes) < 3 or sizes[0] != sizes[-1]:
            raise ValueError("layer_sizes must start and end with the input dimension")
        if sizes != sizes[::-1]:
            raise ValueError("encoder must mirror decoder (symmetric hourglass)")
        if self.activation not in ("tanh", "relu"):
            raise ValueError(f"unknown activation: {self.activation}")

    @classmethod
    def default_for(cls, d: int, **kw) -> "AeConfig":
        return cls(layer_sizes=[d, 16, 4, 16, d], **kw)


def _act(z, kind):
    return np.tanh(z) if kind == "tanh" else np.maximum(z, 0.0)


def _act_grad(z, kind):
    if kind == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    return (z > 0).astype(float)


@dataclass
class AutoencoderModel:
    weights: list  # per layer, shape (n_in, n_out)
    biases: list  # per layer, shape (n_out,)
    activation: str
    loss_trace: list = field(default_factory=list)
    threshold: float | None = None
    train_class: int = 1
    seed: int = 0

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[0]

    def forward(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(self.n_features, X.shape[1])
        h = X
        last = len(self.weights) - 1
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            h = z if k == last else _act(z, self.activation)
        return h

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "model_type": "autoencoder",
            "layer_sizes": [self.weights[0].shape[0]]
            + [W.shape[1] for W in self.weights],
            "activation": self.activation,
            "weights": [W.ravel().tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "threshold": self.threshold,
            "train_class": self.train_class,
            "seed": self.seed,
            "loss_trace": list(self.loss_trace),
        }

    @classmethod
    def from_json(cls, d: dict) -> "AutoencoderModel":
        sizes = d["layer_sizes"]
        weights = [
            np.array(w, float).reshape(sizes[k], sizes[k + 1])
            for k, w in enumerate(d["weights"])
        ]
        biases = [np.array(b, float) for b in d["biases"]]
        return cls(
            weights=weights,
            biases=biases,
            activation=d["activation"],
            loss_trace=list(d["loss_trace"]),
            threshold=d["threshold"],
            train_class=int(d["train_class"]),
            seed=int(d["seed"]),
        )


def _init_params(config: AeConfig):
    rng = np.random.default_rng(config.seed)
    sizes = config.layer_sizes
    weights = [
        rng.normal(0.0, config.weight_init_scale, size=(sizes[k], sizes[k + 1]))
        for k in range(len(sizes) - 1)
    ]
    biases = [np.zeros(sizes[k + 1]) for k in range(len(sizes) - 1)]
    return weights, biases


def _forward_pass(weights, biases, activation, X):
    """Returns (pre-activations z per layer, post-activations h per layer)."""
    zs, hs = [], [X]
    last = len(weights) - 1
    h = X
    for k, (W, b) in enumerate(zip(weights, biases)):
        z = h @ W + b
        zs.append(z)
        h = z if k == last else _act(z, activation)
        hs.append(h)
    return zs, hs


def loss_and_gradients(weights, biases, activation, X):
    """Mean reconstruction error over rows of X and its parameter gradients."""
    n = X.shape[0]
    zs, hs = _forward_pass(weights, biases, activation, X)
    xhat = hs[-1]
    diff = xhat - X
    loss = float(np.sum(diff * diff) / n)

    grads_W = [None] * len(weights)
    grads_b = [None] * len(weights)
    delta = 2.0 * diff / n  # d(loss)/d(output), identity output layer
    for k in range(len(weights) - 1, -1, -1):
        grads_W[k] = hs[k].T @ delta
        grads_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ weights[k].T) * _act_grad(zs[k - 1], activation)
    return loss, grads_W, grads_b


def train_ae(features, config: AeConfig) -> AutoencoderModel:
    """Gradient-descent training on standardized rows of one class.

    Deterministic for a fixed seed. Raises :class:`NonFiniteLoss` (with the
    epoch index) if the loss diverges.
    """
    X = np.asarray(features, float)
    if X.shape[1] != config.layer_sizes[0]:
        raise DimensionMismatch(config.layer_sizes[0], X.shape[1])
    batch = config.batch_size if config.batch_size > 0 else len(X)
    if len(X) < batch:
        raise ValueError("fewer rows than batch_size")

    weights, biases = _init_params(config)
    rng = np.random.default_rng(config.seed + 1)
    trace = []
    for epoch in range(config.epochs):
        if batch >= len(X):
            loss, gW, gb = loss_and_gradients(weights, biases, config.activation, X)
            if not np.isfinite(loss):
                raise NonFiniteLoss(epoch)
            for k in range(len(weights)):
                weights[k] -= config.learning_rate * gW[k]
                biases[k] -= config.learning_rate * gb[k]
            trace.append(loss)
        else:
            order = rng.permutation(len(X))
            epoch_loss = 0.0
            for start in range(0, len(X) - batch + 1, batch):
                idx = order[start : start + batch]
                loss, gW, gb = loss_and_gradients(weights, biases, config.activation, X[idx])
                if not np.isfinite(loss):
                    raise NonFiniteLoss(epoch)
                epoch_loss += loss * len(idx)
                for k in range(len(weights)):
                    weights[k] -= config.learning_rate * gW[k]
                    biases[k] -= config.learning_rate * gb[k]
            trace.append(epoch_loss / (len(X) - len(X) % batch))

    return AutoencoderModel(
        weights=weights,
        biases=biases,
        activation=config.activation,
        loss_trace=trace,
        seed=config.seed,
    )


def reconstruction_error(model: AutoencoderModel, x) -> np.ndarray | float:
    """Squared Euclidean distance between input and reconstruction.

    Accepts a single vector (returns a float) or a matrix (returns a vector).
    """
    x = np.asarray(x, float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    diff = model.forward(X) - X
    e = np.sum(diff * diff, axis=1)
    return float(e[0]) if single else e


def sweep_threshold(errors, labels, train_class):
    """Pick tau from the observed error values maximizing F1 of
    "error > tau => not train_class"; ties resolve to the smallest tau.

    Returns (tau, f1). The candidate set is the sorted unique error values.
    """
    errors = np.asarray(errors, float)
    labels = np.asarray(labels)
    other = [c for c in np.unique(labels) if c != train_class]
    if not other or train_class not in labels:
        raise SingleClass()

    order = np.argsort(errors, kind="stable")
    sorted_err = errors[order]
    is_train = (labels[order] == train_class).astype(int)
    # last index of each unique error value in the sorted order
    uniq, last_idx = np.unique(sorted_err[::-1], return_index=True)
    last_idx = len(sorted_err) - 1 - last_idx
    cum_tp = np.cumsum(is_train)
    cum_fp = np.cumsum(1 - is_train)
    n_train = int(is_train.sum())
    tp = cum_tp[last_idx]  # predicted train_class: error <= tau
    fp = cum_fp[last_idx]
    fn = n_train - tp
    denom = 2 * tp + fp + fn
    f1 = np.where(denom > 0, 2 * tp / np.maximum(denom, 1), 0.0)
    best = int(np.argmax(f1 > f1.max() - 1e-12))  # smallest tau among ties
    return float(uniq[best]), float(f1[best])


def calibrate_threshold(model: AutoencoderModel, features, labels) -> float:
    """Calibrate tau on validation rows; stores it on the model and returns it."""
    errors = reconstruction_error(model, np.atleast_2d(np.asarray(features, float)))
    tau, _ = sweep_threshold(errors, labels, model.train_class)
    model.threshold = tau
    return tau


def predict_ae(model: AutoencoderModel, features) -> np.ndarray:
    """Label = train_class iff reconstruction error <= tau (boundary inclusive)."""
    if model.threshold is None:
        raise UncalibratedModel()
    X = np.atleast_2d(np.asarray(features, float))
    errors = reconstruction_error(model, X)
    other = 1 - model.train_class
    return np.where(errors <= model.threshold, model.train_class, other)
