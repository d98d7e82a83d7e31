"""
Heavy-tailed posteriors: the multivariate-Student certificate and the
α-stable dimension factor.
"""

import math
from typing import NamedTuple

import numpy as np

from src.bounds.gaps import BoundError
from src.utils.validation import validate_delta, validate_sample_size

__all__ = [
    "FFactor",
    "mc_f_factor",
    "student_bound",
    "heavy_tail_factor",
    "stable_index_to_dof",
]

MIN_F_SAMPLES = 1000


class FFactor(NamedTuple):
    value: float
    stderr: float


def mc_f_factor(p: float, d: int, n_samples: int, seed: int) -> FFactor:
    """
    Monte-Carlo estimate of f(p, d) = √d·E|√(p/u) − 1| with u ~ χ²_p.

    The √d factor multiplies a d-free mean, so estimates for different d with
    the same seed scale exactly by √d.

    Raises:
        BoundError: If p <= 1, d < 1 or n_samples < 1000
    """
    if not p > 1.0:
        raise BoundError(f"degrees of freedom p must be > 1, got {p}")
    try:
        validate_sample_size(d, "d")
        validate_sample_size(n_samples, "n_samples", minimum=MIN_F_SAMPLES)
    except ValueError as e:
        raise BoundError(str(e))

    rng = np.random.default_rng(seed)
    u = rng.chisquare(p, size=n_samples)
    draws = np.abs(np.sqrt(p / u) - 1.0)
    scale = math.sqrt(d)
    mean = float(draws.mean())
    stderr = float(draws.std(ddof=1) / math.sqrt(n_samples))
    return FFactor(scale * mean, scale * stderr)


def student_bound(
    lip: float, sigma: float, f_pd: float, mean_dist_sq: float, m: int, delta: float
) -> float:
    """
    Gap bound for a multivariate Student posterior coupled to a Gaussian prior.

    √(L·σ·f(p,d) + ‖μ−μ₀‖²/(2σm) + ln(4√m/δ)/(2m)). The divergence term keeps
    σ (not σ²) in its denominator.
    """
    if not sigma > 0.0:
        raise BoundError(f"sigma must be > 0, got {sigma}")
    if min(lip, f_pd, mean_dist_sq) < 0.0:
        raise BoundError("lip, f_pd and mean_dist_sq must be non-negative")
    try:
        validate_sample_size(m)
        validate_delta(delta)
    except ValueError as e:
        raise BoundError(str(e))
    return math.sqrt(
        lip * sigma * f_pd
        + mean_dist_sq / (2.0 * sigma * m)
        + math.log(4.0 * math.sqrt(m) / delta) / (2.0 * m)
    )


def heavy_tail_factor(alpha: float, d: int) -> float:
    """
    d·ln d·(2−α)·ln(1/(2−α)) for a stability index 1 < α <= 2; zero at α = 2.

    Raises:
        BoundError: If α is outside (1, 2] or d < 2
    """
    if not 1.0 < alpha <= 2.0:
        raise BoundError(f"alpha must lie in (1, 2], got {alpha}")
    if d < 2:
        raise BoundError(f"d must be >= 2, got {d}")
    gap = 2.0 - alpha
    if gap == 0.0:
        return 0.0
    return d * math.log(d) * gap * math.log(1.0 / gap)


def stable_index_to_dof(alpha: float) -> float:
    """Student degrees of freedom p = α/(2−α) matching a stability index α in (1, 2)."""
    if not 1.0 < alpha < 2.0:
        raise BoundError(f"alpha must lie in (1, 2), got {alpha}")
    return alpha / (2.0 - alpha)
