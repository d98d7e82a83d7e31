"""
Shared test utilities to eliminate code duplication across test files.

This module provides synthetic datasets, random measure pairs, a small MLP
shape and a central finite-difference helper used by several test files.
"""

from collections.abc import Callable

import numpy as np

from src.data_loader import Dataset, synth_gaussian_blobs
from src.measures import GaussianMeasure
from src.models import ModelShape

__all__ = [
    "make_blobs",
    "small_mlp_shape",
    "random_gaussian_pair",
    "smooth_point",
    "central_difference",
    "relative_error",
]


def make_blobs(m: int = 200, n: int = 5, class_count: int = 2, seed: int = 0) -> Dataset:
    """
    Well-separated synthetic blobs inside the unit ball.

    Args:
        m: Number of rows
        n: Number of features
        class_count: Number of classes
        seed: Sample seed (class directions are fixed by center_seed=0)

    Returns:
        Dataset
    """
    return synth_gaussian_blobs(m, n, class_count, 0.8, seed=seed, center_seed=0, noise=0.1)


def small_mlp_shape(n: int = 5, class_count: int = 3, width: int = 8, depth: int = 2) -> ModelShape:
    """Reduced-width MLP for gradient and Lipschitz tests."""
    return ModelShape.mlp(n, class_count, margin_scale=2.0, hidden_width=width, depth=depth)


def random_gaussian_pair(
    rng: np.random.Generator, d: int = 1
) -> tuple[GaussianMeasure, GaussianMeasure]:
    """Two isotropic Gaussians with means in [−2, 2] and stds in [0.3, 2]."""
    first = GaussianMeasure(rng.uniform(-2.0, 2.0, d), rng.uniform(0.3, 2.0))
    second = GaussianMeasure(rng.uniform(-2.0, 2.0, d), rng.uniform(0.3, 2.0))
    return first, second


def smooth_point(rng: np.random.Generator, d: int, scale: float = 0.1) -> np.ndarray:
    """Random parameter vector; small weights keep every hinge away from its kink."""
    return scale * rng.standard_normal(d)


def central_difference(
    f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-6
) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    grad = np.zeros_like(x)
    for i in range(x.shape[0]):
        step = np.zeros_like(x)
        step[i] = h
        grad[i] = (f(x + step) - f(x - step)) / (2.0 * h)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """‖a − b‖ / max(‖a‖, ‖b‖, 1e-8)."""
    scale = max(float(np.linalg.norm(a)), float(np.linalg.norm(b)), 1e-8)
    return float(np.linalg.norm(a - b)) / scale
