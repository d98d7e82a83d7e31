"""
Model shape descriptors and the flat parameter vector.

A predictor is described by a ``ModelShape`` and its weights live in one flat
float64 vector ``theta``. Layout of ``theta``:

- linear: W (|Y| x n, row-major), then b (|Y|)
- mlp:    W_1 (N x n), b_1 (N), then W_i (N x N), b_i (N) for i = 2..K,
          then W_out (|Y| x N), b_out (|Y|)
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np

from src import config

__all__ = ["ModelError", "ModelKind", "ModelShape", "ModelParams"]

ModelKind = Literal["linear", "mlp"]


class ModelError(ValueError):
    """Malformed model shape or parameter vector."""

    pass


@dataclass(frozen=True)
class ModelShape:
    """Architecture of a linear model or a projected leaky-ReLU MLP."""

    kind: ModelKind
    input_dim: int
    class_count: int
    margin_scale: float
    hidden_width: int = config.HIDDEN_WIDTH
    depth: int = config.DEPTH
    leaky_slope: float = config.LEAKY_SLOPE

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "mlp"):
            raise ModelError(f"kind must be 'linear' or 'mlp', got {self.kind!r}")
        if self.input_dim < 1:
            raise ModelError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.class_count < 2:
            raise ModelError(f"class_count must be >= 2, got {self.class_count}")
        if not self.margin_scale > 0:
            raise ModelError(f"margin_scale must be > 0, got {self.margin_scale}")
        if self.kind == "mlp":
            if self.hidden_width < 1:
                raise ModelError(f"hidden_width must be >= 1, got {self.hidden_width}")
            if self.depth < 1:
                raise ModelError(f"depth must be >= 1, got {self.depth}")
            if not 0.0 < self.leaky_slope < 1.0:
                raise ModelError(f"leaky_slope must be in (0, 1), got {self.leaky_slope}")

    @classmethod
    def linear(cls, input_dim: int, class_count: int, margin_scale: float | None = None):
        alpha = config.ALPHA_LINEAR if margin_scale is None else margin_scale
        return cls("linear", input_dim, class_count, alpha)

    @classmethod
    def mlp(
        cls,
        input_dim: int,
        class_count: int,
        margin_scale: float | None = None,
        hidden_width: int = config.HIDDEN_WIDTH,
        depth: int = config.DEPTH,
        leaky_slope: float = config.LEAKY_SLOPE,
    ):
        alpha = config.ALPHA_MLP if margin_scale is None else margin_scale
        return cls("mlp", input_dim, class_count, alpha, hidden_width, depth, leaky_slope)

    def layer_shapes(self) -> list[tuple[int, int]]:
        """(rows, cols) of every weight matrix, input side first."""
        if self.kind == "linear":
            return [(self.class_count, self.input_dim)]
        shapes = [(self.hidden_width, self.input_dim)]
        shapes += [(self.hidden_width, self.hidden_width)] * (self.depth - 1)
        shapes.append((self.class_count, self.hidden_width))
        return shapes

    @property
    def param_count(self) -> int:
        return sum(rows * cols + rows for rows, cols in self.layer_shapes())

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "input_dim": self.input_dim,
            "class_count": self.class_count,
            "margin_scale": self.margin_scale,
            "hidden_width": self.hidden_width,
            "depth": self.depth,
            "leaky_slope": self.leaky_slope,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ModelShape":
        return cls(
            kind=payload["kind"],
            input_dim=int(payload["input_dim"]),
            class_count=int(payload["class_count"]),
            margin_scale=float(payload["margin_scale"]),
            hidden_width=int(payload.get("hidden_width", config.HIDDEN_WIDTH)),
            depth=int(payload.get("depth", config.DEPTH)),
            leaky_slope=float(payload.get("leaky_slope", config.LEAKY_SLOPE)),
        )


@dataclass(frozen=True, eq=False)
class ModelParams:
    """A flat parameter vector bound to its shape."""

    shape: ModelShape
    theta: np.ndarray

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=np.float64)
        if theta.ndim != 1 or theta.shape[0] != self.shape.param_count:
            raise ModelError(
                f"theta must have {self.shape.param_count} entries, got shape {theta.shape}"
            )
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    def unpack(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Split theta into (W, b) pairs, input side first. Returned arrays are views."""
        layers = []
        offset = 0
        for rows, cols in self.shape.layer_shapes():
            weight = self.theta[offset : offset + rows * cols].reshape(rows, cols)
            offset += rows * cols
            bias = self.theta[offset : offset + rows]
            offset += rows
            layers.append((weight, bias))
        return layers

    @classmethod
    def pack(cls, shape: ModelShape, layers: list[tuple[np.ndarray, np.ndarray]]):
        """Inverse of ``unpack``."""
        expected = shape.layer_shapes()
        if len(layers) != len(expected):
            raise ModelError(f"expected {len(expected)} layers, got {len(layers)}")
        pieces = []
        for (weight, bias), (rows, cols) in zip(layers, expected):
            if np.shape(weight) != (rows, cols) or np.shape(bias) != (rows,):
                raise ModelError(
                    f"layer shape mismatch: expected W {(rows, cols)}, b ({rows},), "
                    f"got W {np.shape(weight)}, b {np.shape(bias)}"
                )
            pieces.append(np.asarray(weight, dtype=np.float64).ravel())
            pieces.append(np.asarray(bias, dtype=np.float64))
        return cls(shape, np.concatenate(pieces))

    def with_theta(self, theta: np.ndarray) -> "ModelParams":
        return ModelParams(self.shape, theta)
