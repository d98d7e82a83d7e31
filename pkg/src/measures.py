"""
Probability measures over parameter space.

Posteriors, priors and interpolation measures are either a Dirac mass on a
parameter vector or an isotropic Gaussian N(mean, std² I_d). This module holds
the two measure types and every closed-form divergence or transport quantity
the certificates consume.

All functions are pure and safe to call from several threads.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import norm

__all__ = [
    "MeasureError",
    "GaussianMeasure",
    "DiracMeasure",
    "PosteriorMeasure",
    "kl_gaussian",
    "reverse_kl",
    "squared_hellinger",
    "tv_upper",
    "chi_mean",
    "w1_dirac_to_gaussian",
    "w2_gaussian",
]


class MeasureError(ValueError):
    """Invalid measure or incompatible pair of measures."""

    pass


def _as_vector(values: np.ndarray, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise MeasureError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise MeasureError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GaussianMeasure:
    """Isotropic Gaussian with covariance std² I_d."""

    mean: np.ndarray
    std: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", _as_vector(self.mean, "mean"))
        std = float(self.std)
        if not math.isfinite(std) or std <= 0.0:
            raise MeasureError(f"std must be positive and finite, got {self.std}")
        object.__setattr__(self, "std", std)

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    @property
    def variance(self) -> float:
        return self.std * self.std

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Draw parameter vectors; shape (d,) or (size, d)."""
        shape = (self.dim,) if size is None else (size, self.dim)
        return self.mean + self.std * rng.standard_normal(shape)


@dataclass(frozen=True, eq=False)
class DiracMeasure:
    """Point mass on a parameter vector."""

    point: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "point", _as_vector(self.point, "point"))

    @property
    def dim(self) -> int:
        return int(self.point.shape[0])

    @property
    def mean(self) -> np.ndarray:
        return self.point

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        if size is None:
            return self.point.copy()
        return np.tile(self.point, (size, 1))


PosteriorMeasure = DiracMeasure | GaussianMeasure


def _check_pair(a: np.ndarray, b: np.ndarray) -> int:
    if a.shape[0] != b.shape[0]:
        raise MeasureError(f"Dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return int(a.shape[0])


def _sq_dist(a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    return float(diff @ diff)


def kl_gaussian(q: GaussianMeasure, p: GaussianMeasure) -> float:
    """
    KL(q ‖ p) between isotropic Gaussians.

    ½[ d·σ_q²/σ_p² − d + ‖μ_q−μ_p‖²/σ_p² + d·ln(σ_p²/σ_q²) ]

    Raises:
        MeasureError: On dimension mismatch
    """
    d = _check_pair(q.mean, p.mean)
    ratio = q.variance / p.variance
    value = 0.5 * (
        d * ratio - d + _sq_dist(q.mean, p.mean) / p.variance - d * math.log(ratio)
    )
    return max(value, 0.0)


def reverse_kl(q: GaussianMeasure, p: GaussianMeasure) -> float:
    """KL(p ‖ q); the divergence consumed by the reverse-KL certificate."""
    return kl_gaussian(p, q)


def squared_hellinger(q: GaussianMeasure, p: GaussianMeasure) -> float:
    """
    One minus the Bhattacharyya coefficient of two isotropic Gaussians.

    Lies in [0, 1] and is symmetric in its arguments.
    """
    d = _check_pair(q.mean, p.mean)
    var_sum = q.variance + p.variance
    exponent = (
        0.25 * d * (math.log(q.variance) + math.log(p.variance))
        - 0.5 * d * math.log(0.5 * var_sum)
        - _sq_dist(q.mean, p.mean) / (4.0 * var_sum)
    )
    # exponent <= 0 by AM-GM; expm1 keeps precision near q == p
    return min(1.0, max(0.0, -math.expm1(min(exponent, 0.0))))


def tv_upper(q: GaussianMeasure, p: GaussianMeasure) -> float:
    """
    Upper bound on the total-variation distance between two Gaussians.

    Equal stds give the exact value 2Φ(‖Δμ‖/(2σ)) − 1; otherwise Pinsker,
    min(1, √(KL(q‖p)/2)).
    """
    _check_pair(q.mean, p.mean)
    if q.std == p.std:
        shift = math.sqrt(_sq_dist(q.mean, p.mean)) / (2.0 * q.std)
        # 2Φ(x) − 1 = Φ(x) − Φ(−x), written via the survival function for large x
        return float(min(1.0, max(0.0, 1.0 - 2.0 * norm.sf(shift))))
    return min(1.0, math.sqrt(kl_gaussian(q, p) / 2.0))


def chi_mean(d: int) -> float:
    """E‖ξ‖ for ξ ~ N(0, I_d): √2·Γ((d+1)/2)/Γ(d/2), through log-gamma."""
    if d < 1:
        raise MeasureError(f"dimension must be >= 1, got {d}")
    return math.sqrt(2.0) * math.exp(gammaln((d + 1) / 2.0) - gammaln(d / 2.0))


def w1_dirac_to_gaussian(rho: DiracMeasure, eta: GaussianMeasure) -> float:
    """
    Upper bound on W₁(δ_w, η): ‖w − μ_η‖ + σ_η·E‖ξ‖.

    Raises:
        MeasureError: On dimension mismatch
    """
    d = _check_pair(rho.point, eta.mean)
    return math.sqrt(_sq_dist(rho.point, eta.mean)) + eta.std * chi_mean(d)


def w2_gaussian(rho: GaussianMeasure, eta: GaussianMeasure) -> float:
    """
    W₂ between isotropic Gaussians, √(‖Δμ‖² + d(σ_ρ − σ_η)²); upper bounds W₁.

    Raises:
        MeasureError: On dimension mismatch
    """
    d = _check_pair(rho.mean, eta.mean)
    return math.sqrt(_sq_dist(rho.mean, eta.mean) + d * (rho.std - eta.std) ** 2)


if __name__ == "__main__":
    print("\n" + "=" * 60)
    print("Testing closed-form divergences")
    print("=" * 60)

    try:
        q = GaussianMeasure(np.zeros(2), 0.5)
        p = GaussianMeasure(np.array([1.0, 0.0]), 1.0)
        print(f"KL(q‖p)           = {kl_gaussian(q, p):.6f}")
        print(f"reverse KL        = {reverse_kl(q, p):.6f}")
        print(f"squared Hellinger = {squared_hellinger(q, p):.6f}")
        print(f"TV upper bound    = {tv_upper(q, p):.6f}")
        print(f"W2                = {w2_gaussian(q, p):.6f}")
        print(f"W1(δ_0, p)        = {w1_dirac_to_gaussian(DiracMeasure(np.zeros(2)), p):.6f}")
        print("\n✓ Measures verified!")
    except Exception as e:
        print(f"\n✗ Error: {e}")
        import traceback

        traceback.print_exc()
        exit(1)
