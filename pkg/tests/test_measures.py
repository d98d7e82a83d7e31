"""
Tests for closed-form divergences and transport bounds between measures.
"""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import norm

from src.measures import (
    DiracMeasure,
    GaussianMeasure,
    MeasureError,
    chi_mean,
    kl_gaussian,
    reverse_kl,
    squared_hellinger,
    tv_upper,
    w1_dirac_to_gaussian,
    w2_gaussian,
)
from tests.utils import random_gaussian_pair


def _quad_kl_1d(q_mean: float, q_std: float, p_mean: float, p_std: float) -> float:
    def integrand(x: float) -> float:
        return norm.pdf(x, q_mean, q_std) * (
            norm.logpdf(x, q_mean, q_std) - norm.logpdf(x, p_mean, p_std)
        )

    low, high = q_mean - 12 * q_std, q_mean + 12 * q_std
    return integrate.quad(integrand, low, high, epsabs=1e-12, epsrel=1e-12, limit=200)[0]


def _quad_bhattacharyya_1d(q_mean: float, q_std: float, p_mean: float, p_std: float) -> float:
    def integrand(x: float) -> float:
        return math.sqrt(norm.pdf(x, q_mean, q_std) * norm.pdf(x, p_mean, p_std))

    low = min(q_mean - 12 * q_std, p_mean - 12 * p_std)
    high = max(q_mean + 12 * q_std, p_mean + 12 * p_std)
    return integrate.quad(integrand, low, high, epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def test_kl_identity_and_simple_values() -> None:
    """KL of a measure with itself is zero; equal-std unit case reduces to ‖Δμ‖²/2."""
    q = GaussianMeasure(np.array([0.3, -1.2]), 0.7)
    assert kl_gaussian(q, q) == pytest.approx(0.0, abs=1e-15)

    a = GaussianMeasure(np.array([0.0]), 1.0)
    b = GaussianMeasure(np.array([2.0]), 1.0)
    assert kl_gaussian(a, b) == pytest.approx(2.0, abs=1e-12)
    assert reverse_kl(a, b) == pytest.approx(2.0, abs=1e-12)
    print("✓ KL identity and simple value test passed")


def test_kl_matches_quadrature_product_form() -> None:
    """d=2 KL equals the sum of two 1-D quadratures."""
    q = GaussianMeasure(np.array([0.0, 0.0]), 0.5)
    p = GaussianMeasure(np.array([1.0, 0.0]), 1.0)
    oracle = _quad_kl_1d(0.0, 0.5, 1.0, 1.0) + _quad_kl_1d(0.0, 0.5, 0.0, 1.0)
    assert kl_gaussian(q, p) == pytest.approx(oracle, abs=1e-8)
    print("✓ KL quadrature (d=2) test passed")


def test_divergence_oracle_suite() -> None:
    """KL and squared Hellinger agree with 1-D quadrature on 50 random pairs."""
    rng = np.random.default_rng(7)
    for _ in range(50):
        q, p = random_gaussian_pair(rng)
        qm, pm = float(q.mean[0]), float(p.mean[0])

        kl_oracle = _quad_kl_1d(qm, q.std, pm, p.std)
        assert kl_gaussian(q, p) == pytest.approx(kl_oracle, abs=1e-6)
        assert kl_gaussian(q, p) >= 0.0

        h2_oracle = 1.0 - _quad_bhattacharyya_1d(qm, q.std, pm, p.std)
        h2 = squared_hellinger(q, p)
        assert h2 == pytest.approx(h2_oracle, abs=1e-6)
        assert 0.0 <= h2 <= 1.0
        assert h2 == squared_hellinger(p, q)

        assert reverse_kl(q, p) == kl_gaussian(p, q)
    print("✓ Divergence oracle suite passed (50 pairs)")


def test_hellinger_specific_pair_and_limit() -> None:
    """d=1, (0;1) vs (1;2) matches quadrature; far-apart means approach 1."""
    q = GaussianMeasure(np.array([0.0]), 1.0)
    p = GaussianMeasure(np.array([1.0]), 2.0)
    oracle = 1.0 - _quad_bhattacharyya_1d(0.0, 1.0, 1.0, 2.0)
    assert squared_hellinger(q, p) == pytest.approx(oracle, abs=1e-8)

    far = GaussianMeasure(np.array([1e3]), 1.0)
    assert squared_hellinger(q, far) == pytest.approx(1.0, abs=1e-12)
    assert squared_hellinger(q, q) == 0.0
    print("✓ Hellinger pair and limit test passed")


def test_tv_equal_std_matches_monte_carlo() -> None:
    """Exact equal-std TV agrees with a 10⁶-sample density-difference estimate."""
    q = GaussianMeasure(np.array([0.0]), 1.0)
    p = GaussianMeasure(np.array([1.0]), 1.0)
    rng = np.random.default_rng(0)
    x = rng.normal(0.0, 1.0, size=1_000_000)
    ratio = np.exp(norm.logpdf(x, 1.0, 1.0) - norm.logpdf(x, 0.0, 1.0))
    mc_tv = float(np.mean(np.maximum(0.0, 1.0 - ratio)))

    assert tv_upper(q, p) == pytest.approx(2.0 * norm.cdf(0.5) - 1.0, abs=1e-12)
    assert tv_upper(q, p) == pytest.approx(mc_tv, abs=2e-3)
    assert tv_upper(q, p) == tv_upper(p, q)
    print(f"✓ TV Monte-Carlo test passed (exact {tv_upper(q, p):.5f}, MC {mc_tv:.5f})")


def test_tv_bounds() -> None:
    """TV is 0 on identical measures, tends to 1 for far means, and Pinsker stays <= 1."""
    q = GaussianMeasure(np.array([0.0, 0.0]), 1.0)
    assert tv_upper(q, q) == 0.0
    assert tv_upper(q, GaussianMeasure(np.array([50.0, 0.0]), 1.0)) == pytest.approx(1.0)

    wide = GaussianMeasure(np.array([40.0, 0.0]), 3.0)
    value = tv_upper(q, wide)
    assert value == 1.0
    narrow = GaussianMeasure(np.array([0.1, 0.0]), 1.1)
    assert tv_upper(q, narrow) == pytest.approx(math.sqrt(kl_gaussian(q, narrow) / 2.0))
    print("✓ TV bound test passed")


def test_w1_dirac_half_normal_and_monte_carlo() -> None:
    """Coincident means give σ·E‖ξ‖: √(2/π) for d=1, MC agreement for d=600."""
    point = DiracMeasure(np.array([0.0]))
    eta = GaussianMeasure(np.array([0.0]), 1.0)
    assert w1_dirac_to_gaussian(point, eta) == pytest.approx(math.sqrt(2.0 / math.pi), abs=1e-12)

    d = 600
    eta = GaussianMeasure(np.zeros(d), 0.04)
    rng = np.random.default_rng(1)
    norms = [
        np.linalg.norm(0.04 * rng.standard_normal((10_000, d)), axis=1) for _ in range(10)
    ]
    mc = float(np.concatenate(norms).mean())
    assert w1_dirac_to_gaussian(DiracMeasure(np.zeros(d)), eta) == pytest.approx(mc, rel=1e-2)
    print("✓ W1 Dirac-to-Gaussian test passed")


def test_w1_dirac_upper_bounds_transport_cost() -> None:
    """‖w − μ‖ + σ·E‖ξ‖ dominates the exact cost E‖X − w‖ for X ~ η."""
    rng = np.random.default_rng(2)
    for _ in range(5):
        w = rng.normal(size=3)
        eta = GaussianMeasure(rng.normal(size=3), rng.uniform(0.1, 1.0))
        samples = eta.sample(rng, 200_000)
        exact = float(np.linalg.norm(samples - w, axis=1).mean())
        assert w1_dirac_to_gaussian(DiracMeasure(w), eta) >= exact - 1e-2
    print("✓ W1 upper-bound test passed")


def test_w2_gaussian_values() -> None:
    """W2 closed form: zero on equal measures, ‖Δμ‖ with equal std, and the coupling cost."""
    rho = GaussianMeasure(np.array([0.0, 0.0]), 1.0)
    assert w2_gaussian(rho, rho) == 0.0
    shifted = GaussianMeasure(np.array([3.0, 4.0]), 1.0)
    assert w2_gaussian(rho, shifted) == pytest.approx(5.0)

    eta = GaussianMeasure(np.array([3.0, 0.0]), 2.0)
    rng = np.random.default_rng(3)
    z = rng.standard_normal((1_000_000, 2))
    cost = np.sum((rho.mean + rho.std * z - (eta.mean + eta.std * z)) ** 2, axis=1).mean()
    assert w2_gaussian(rho, eta) == pytest.approx(math.sqrt(11.0), abs=1e-12)
    assert w2_gaussian(rho, eta) == pytest.approx(math.sqrt(cost), abs=5e-3)
    print("✓ W2 Gaussian test passed")


def test_chi_mean_large_dimension() -> None:
    """Log-gamma evaluation stays finite and close to √d for large d."""
    value = chi_mean(1_000_000)
    assert math.isfinite(value)
    assert value == pytest.approx(math.sqrt(1_000_000 - 0.5), rel=1e-6)
    print("✓ chi mean test passed")


def test_measure_validation_errors() -> None:
    """Non-positive std, non-finite means and dimension mismatches raise MeasureError."""
    with pytest.raises(MeasureError):
        GaussianMeasure(np.zeros(2), 0.0)
    with pytest.raises(MeasureError):
        GaussianMeasure(np.array([np.nan]), 1.0)
    with pytest.raises(MeasureError):
        DiracMeasure(np.array([np.inf]))
    with pytest.raises(MeasureError):
        kl_gaussian(GaussianMeasure(np.zeros(2), 1.0), GaussianMeasure(np.zeros(3), 1.0))
    with pytest.raises(MeasureError):
        w1_dirac_to_gaussian(DiracMeasure(np.zeros(2)), GaussianMeasure(np.zeros(3), 1.0))
    print("✓ Measure validation test passed")
