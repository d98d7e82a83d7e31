"""
Forward pass, bounded margin loss and hand-derived reverse pass for the
linear model and the projected leaky-ReLU MLP.

Hidden layers compute h = proj(leaky(W h_prev + b)) with proj(v) = v / max(1, ‖v‖),
so every hidden activation stays in the unit ball. The loss is the multiclass
hinge sum (1/|Y|) Σ_{y'≠y} max(0, 1 − α(s_y − s_y')) clamped to 1.

Subgradient conventions (deterministic):
- a hinge at exactly 1 − α·margin = 0 counts as inactive
- a clamped loss (raw >= 1) has zero gradient
- a projection with ‖v‖ <= 1 uses the identity Jacobian
- leaky-ReLU at exactly 0 uses the negative-side slope
"""

import math

import numpy as np

from src import config
from src.models.shape import ModelError, ModelParams, ModelShape

__all__ = [
    "predict",
    "hidden_activations",
    "margin_loss",
    "example_losses",
    "empirical_risk",
    "loss_gradient",
    "weighted_loss_gradient",
    "mean_loss_gradient",
    "loss_lipschitz_const",
    "init_linear",
    "init_mlp",
    "init_params",
    "frobenius_norms",
    "project_frobenius",
]


def _as_batch(features: np.ndarray, shape: ModelShape) -> tuple[np.ndarray, bool]:
    X = np.asarray(features, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != shape.input_dim:
        raise ModelError(f"features must have {shape.input_dim} columns, got shape {X.shape}")
    return X, single


def _forward(params: ModelParams, X: np.ndarray) -> tuple[np.ndarray, list[tuple]]:
    """Scores plus the per-layer cache (input, pre-activation, activation, norm)."""
    layers = params.unpack()
    shape = params.shape
    cache = []
    h = X
    for weight, bias in layers[:-1]:
        z = h @ weight.T + bias
        a = np.where(z > 0.0, z, shape.leaky_slope * z)
        norms = np.sqrt(np.einsum("ij,ij->i", a, a))
        out = a / np.maximum(1.0, norms)[:, None]
        cache.append((h, z, norms, out))
        h = out
    weight, bias = layers[-1]
    scores = h @ weight.T + bias
    cache.append((h, None, None, None))
    return scores, cache


def predict(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """
    Class scores for one feature vector (shape (|Y|,)) or a batch (shape (B, |Y|)).

    Raises:
        ModelError: If the feature dimension does not match the model
    """
    X, single = _as_batch(features, params.shape)
    scores, _ = _forward(params, X)
    return scores[0] if single else scores


def hidden_activations(params: ModelParams, features: np.ndarray) -> list[np.ndarray]:
    """Outputs of every hidden layer for a batch (empty for linear models)."""
    X, _ = _as_batch(features, params.shape)
    _, cache = _forward(params, X)
    return [entry[3] for entry in cache[:-1]]


def _margin_terms(
    scores: np.ndarray, labels: np.ndarray, alpha: float
) -> tuple[np.ndarray, np.ndarray]:
    """Clamped losses (B,) and the hinge values (B, |Y|) with the true class zeroed."""
    B, class_count = scores.shape
    labels = np.asarray(labels)
    if labels.shape != (B,):
        raise ModelError(f"labels must have shape ({B},), got {labels.shape}")
    if np.any(labels < 0) or np.any(labels >= class_count):
        raise ModelError(f"labels must lie in [0, {class_count})")
    rows = np.arange(B)
    margins = scores[rows, labels][:, None] - scores
    hinges = np.maximum(0.0, 1.0 - alpha * margins)
    hinges[rows, labels] = 0.0
    raw = hinges.sum(axis=1) / class_count
    return np.minimum(1.0, raw), hinges


def margin_loss(scores: np.ndarray, y: int, alpha: float) -> float:
    """
    Clamped multiclass hinge loss of one score vector.

    Raises:
        ModelError: If the label is out of range
    """
    s = np.asarray(scores, dtype=np.float64)[None, :]
    losses, _ = _margin_terms(s, np.array([y]), alpha)
    return float(losses[0])


def example_losses(
    params: ModelParams, features: np.ndarray, labels: np.ndarray, alpha: float | None = None
) -> np.ndarray:
    """Per-example losses in [0, 1] for a batch."""
    X, _ = _as_batch(features, params.shape)
    a = params.shape.margin_scale if alpha is None else alpha
    scores, _ = _forward(params, X)
    losses, _ = _margin_terms(scores, np.atleast_1d(labels), a)
    return losses


def empirical_risk(
    params: ModelParams, features: np.ndarray, labels: np.ndarray, alpha: float | None = None
) -> float:
    """
    Mean margin loss over a labelled sample.

    Raises:
        ModelError: If the sample is empty
    """
    if len(np.atleast_1d(labels)) == 0:
        raise ModelError("empirical risk of an empty dataset is undefined")
    return float(np.mean(example_losses(params, features, labels, alpha)))


def weighted_loss_gradient(
    params: ModelParams,
    features: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    alpha: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Σ_i weights_i ∇_θ ℓ(θ, z_i) together with the per-example losses.

    Batch means use weights 1/B; the Rademacher surrogate uses ε_i/B.
    """
    shape = params.shape
    X, _ = _as_batch(features, shape)
    labels = np.atleast_1d(labels)
    a = shape.margin_scale if alpha is None else alpha
    scores, cache = _forward(params, X)
    losses, hinges = _margin_terms(scores, labels, a)

    raw = hinges.sum(axis=1) / shape.class_count
    active = (hinges > 0.0) & (raw < 1.0)[:, None]
    coef = (a / shape.class_count) * np.asarray(weights, dtype=np.float64)[:, None]
    grad_scores = coef * active
    rows = np.arange(X.shape[0])
    grad_scores[rows, labels] = -grad_scores.sum(axis=1)

    layers = params.unpack()
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(layers)  # type: ignore[list-item]

    h_prev = cache[-1][0]
    weight_out, _ = layers[-1]
    grads[-1] = (grad_scores.T @ h_prev, grad_scores.sum(axis=0))
    upstream = grad_scores @ weight_out

    for index in range(len(layers) - 2, -1, -1):
        h_in, z, norms, out = cache[index]
        outside = norms > 1.0
        if np.any(outside):
            radial = np.einsum("ij,ij->i", out, upstream)
            projected = (upstream - out * radial[:, None]) / np.maximum(norms, 1.0)[:, None]
            upstream = np.where(outside[:, None], projected, upstream)
        grad_z = upstream * np.where(z > 0.0, 1.0, shape.leaky_slope)
        weight, _ = layers[index]
        grads[index] = (grad_z.T @ h_in, grad_z.sum(axis=0))
        upstream = grad_z @ weight

    return ModelParams.pack(shape, grads).theta.copy(), losses


def mean_loss_gradient(
    params: ModelParams, features: np.ndarray, labels: np.ndarray, alpha: float | None = None
) -> tuple[np.ndarray, float]:
    """Gradient and value of the batch empirical risk."""
    labels = np.atleast_1d(labels)
    weights = np.full(labels.shape[0], 1.0 / labels.shape[0])
    grad, losses = weighted_loss_gradient(params, features, labels, weights, alpha)
    return grad, float(losses.mean())


def loss_gradient(
    params: ModelParams, x: np.ndarray, y: int, alpha: float | None = None
) -> np.ndarray:
    """Reverse-mode gradient of margin_loss∘predict for one example."""
    grad, _ = weighted_loss_gradient(
        params, np.asarray(x)[None, :], np.array([y]), np.ones(1), alpha
    )
    return grad


def loss_lipschitz_const(shape: ModelShape) -> float:
    """Lipschitz constant of θ ↦ ℓ(h_θ, z): √2·α (linear) or α·√(2(K+2)) (mlp)."""
    if shape.kind == "linear":
        return math.sqrt(2.0) * shape.margin_scale
    return shape.margin_scale * math.sqrt(2.0 * (shape.depth + 2))


def init_linear(shape: ModelShape) -> ModelParams:
    """All-zero weights and biases."""
    if shape.kind != "linear":
        raise ModelError("init_linear requires a linear shape")
    return ModelParams(shape, np.zeros(shape.param_count))


def init_mlp(shape: ModelShape, seed: int) -> ModelParams:
    """
    Truncated Gaussian weights, zero biases except the first layer's.

    Every matrix entry is N(0, 0.04²) clipped to [−0.08, 0.08]; every entry of
    b_1 is 0.1 and the remaining biases are zero.
    """
    if shape.kind != "mlp":
        raise ModelError("init_mlp requires an mlp shape")
    rng = np.random.default_rng(seed)
    layers = []
    for index, (rows, cols) in enumerate(shape.layer_shapes()):
        weight = np.clip(
            rng.normal(0.0, config.INIT_STD, size=(rows, cols)), -config.INIT_CLIP, config.INIT_CLIP
        )
        bias = np.full(rows, config.FIRST_BIAS) if index == 0 else np.zeros(rows)
        layers.append((weight, bias))
    return ModelParams.pack(shape, layers)


def init_params(shape: ModelShape, seed: int = config.RANDOM_SEED) -> ModelParams:
    """Architecture-appropriate initial parameters."""
    return init_linear(shape) if shape.kind == "linear" else init_mlp(shape, seed)


def frobenius_norms(params: ModelParams) -> list[float]:
    """Frobenius norm of each layer's weight matrix, biases excluded, in layer order."""
    return [float(np.linalg.norm(weight)) for weight, _ in params.unpack()]


def project_frobenius(params: ModelParams) -> ModelParams:
    """Rescale every weight matrix of an MLP to Frobenius norm <= 1."""
    if params.shape.kind != "mlp":
        return params
    layers = []
    for weight, bias in params.unpack():
        layers.append((weight / max(1.0, float(np.linalg.norm(weight))), bias))
    return ModelParams.pack(params.shape, layers)
