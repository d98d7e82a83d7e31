"""
Closed-form generalisation-gap evaluators for every bound family.

Each evaluator takes its ingredient scalars (divergences, transport terms,
Lipschitz constants, sample size, confidence) and returns the right-hand side
of its certificate. ``log_surcharge`` is added to every ln(1/δ) occurrence;
data-dependent priors, prior-variance grids and λ grids are all expressed
through it.
"""

import math

from scipy.optimize import brentq

from src.utils.validation import validate_delta, validate_nonnegative, validate_sample_size

__all__ = [
    "BoundError",
    "mcallester_gap",
    "kl_wass_gap",
    "reverse_kl_gap",
    "hellinger_gap",
    "tv_gap",
    "catoni_gap",
    "supermartingale_gap",
    "catoni_fast_rate",
    "binary_kl",
    "kl_inverse_upper",
    "kl_inverse_bound",
]


class BoundError(ValueError):
    """Invalid ingredient passed to a bound evaluator."""

    pass


def _check(m: int, delta: float, log_surcharge: float, **ingredients: float) -> float:
    """Validate common arguments and return ln(1/δ) + surcharge."""
    try:
        validate_sample_size(m)
        validate_delta(delta)
        validate_nonnegative(log_surcharge, "log_surcharge")
        for name, value in ingredients.items():
            validate_nonnegative(value, name)
    except ValueError as e:
        raise BoundError(str(e))
    return math.log(1.0 / delta) + log_surcharge


def mcallester_gap(kl: float, m: int, delta: float, log_surcharge: float = 0.0) -> float:
    """√((KL + ln(2√m/δ)) / (2m))."""
    log_term = _check(m, delta, log_surcharge, kl=kl)
    return math.sqrt((kl + math.log(2.0 * math.sqrt(m)) + log_term) / (2.0 * m))


def kl_wass_gap(
    lip: float, w1: float, kl: float, m: int, delta: float, log_surcharge: float = 0.0
) -> float:
    """
    KL-Wasserstein interpolation gap √(L·W₁(ρ,η) + (KL(η‖P) + ln(4√m/δ)) / (2m)).

    ``lip`` is the Lipschitz constant of the squared gap.
    """
    log_term = _check(m, delta, log_surcharge, lip=lip, w1=w1, kl=kl)
    return math.sqrt(lip * w1 + (kl + math.log(4.0 * math.sqrt(m)) + log_term) / (2.0 * m))


def reverse_kl_gap(
    w_gamma: float, rkl: float, m: int, delta: float, log_surcharge: float = 0.0
) -> float:
    """2·W_Γ + 2·KL(P‖η) + √(1/m) + ln(1 + 1/m)·√(2m·ln(1/δ))."""
    log_term = _check(m, delta, log_surcharge, w_gamma=w_gamma, rkl=rkl)
    deviation = math.log1p(1.0 / m) * math.sqrt(2.0 * m * log_term)
    return 2.0 * w_gamma + 2.0 * rkl + math.sqrt(1.0 / m) + deviation


def hellinger_gap(
    w_gamma: float, h2: float, m: int, delta: float, log_surcharge: float = 0.0
) -> float:
    """2·W_Γ + 2·H²(η,P) + √(1/m) + (2/(m+1))·√(2m·ln(1/δ))."""
    log_term = _check(m, delta, log_surcharge, w_gamma=w_gamma, h2=h2)
    deviation = 2.0 / (m + 1.0) * math.sqrt(2.0 * m * log_term)
    return 2.0 * w_gamma + 2.0 * h2 + math.sqrt(1.0 / m) + deviation


def tv_gap(w_gamma: float, tv: float, m: int, delta: float, log_surcharge: float = 0.0) -> float:
    """W_Γ + TV(η,P) + √(1/(4m)) + √(ln(1/δ)/(2m))."""
    log_term = _check(m, delta, log_surcharge, w_gamma=w_gamma, tv=tv)
    if tv > 1.0:
        raise BoundError(f"tv must be <= 1, got {tv}")
    return w_gamma + tv + math.sqrt(1.0 / (4.0 * m)) + math.sqrt(log_term / (2.0 * m))


def _check_lambda(lam: float, upper: float | None = None) -> None:
    if not lam > 0.0 or (upper is not None and not lam < upper):
        bounds = "(0, inf)" if upper is None else f"(0, {upper:g})"
        raise BoundError(f"lambda must lie in {bounds}, got {lam}")


def catoni_gap(
    lip: float,
    w1: float,
    kl: float,
    lam: float,
    m: int,
    delta: float,
    log_surcharge: float = 0.0,
) -> float:
    """2·L·W₁ + (KL + ln(2/δ)) / λ + λ / (2m)."""
    _check_lambda(lam)
    log_term = _check(m, delta, log_surcharge, lip=lip, w1=w1, kl=kl)
    return 2.0 * lip * w1 + (kl + math.log(2.0) + log_term) / lam + lam / (2.0 * m)


def supermartingale_gap(
    lip: float,
    w1: float,
    kl: float,
    lam: float,
    m: int,
    delta: float,
    second_moment: float = 1.0,
    log_surcharge: float = 0.0,
    divergence_scale: float = 1.0,
) -> float:
    """
    (2+λ)·L·W₁ + (KL + ln(2/δ)) / (s·λ) + (λ/2)·E[ℓ²].

    With the default ``divergence_scale`` s = 1 the divergence term is divided
    by λ exactly as the bound is usually stated; passing s = m gives the
    m·λ normalisation that the supermartingale argument actually yields.
    ``second_moment`` must be a sound upper bound on E[ℓ²]; 1 is always valid.
    """
    _check_lambda(lam)
    log_term = _check(
        m, delta, log_surcharge, lip=lip, w1=w1, kl=kl, second_moment=second_moment
    )
    if second_moment > 1.0:
        raise BoundError(f"second_moment must lie in [0, 1], got {second_moment}")
    if divergence_scale < 1.0:
        raise BoundError(f"divergence_scale must be >= 1, got {divergence_scale}")
    return (
        (2.0 + lam) * lip * w1
        + (kl + math.log(2.0) + log_term) / (divergence_scale * lam)
        + 0.5 * lam * second_moment
    )


def catoni_fast_rate(
    emp_risk: float,
    lip: float,
    w1: float,
    kl: float,
    lam: float,
    m: int,
    delta: float,
    log_surcharge: float = 0.0,
) -> float:
    """
    Population-risk bound (1/(1−λ/2))·(R̂ + (2+λ)·L·W₁ + (KL + ln(2/δ))/(λm)).

    Unlike the other evaluators this bounds the risk itself, not the gap.
    """
    _check_lambda(lam, upper=2.0)
    log_term = _check(m, delta, log_surcharge, emp_risk=emp_risk, lip=lip, w1=w1, kl=kl)
    inner = emp_risk + (2.0 + lam) * lip * w1 + (kl + math.log(2.0) + log_term) / (lam * m)
    return inner / (1.0 - lam / 2.0)


def binary_kl(q: float, p: float) -> float:
    """kl(q‖p) between Bernoulli(q) and Bernoulli(p)."""
    value = 0.0
    if q > 0.0:
        value += q * math.log(q / p)
    if q < 1.0:
        value += (1.0 - q) * math.log((1.0 - q) / (1.0 - p))
    return value


def kl_inverse_upper(q: float, budget: float) -> float:
    """sup{p ∈ [q, 1] : kl(q‖p) <= budget}, by bracketing root search."""
    if not 0.0 <= q <= 1.0:
        raise BoundError(f"q must lie in [0, 1], got {q}")
    if budget <= 0.0:
        return q
    if q >= 1.0:
        return 1.0
    upper = 1.0 - 1e-15
    if binary_kl(q, upper) <= budget:
        return 1.0
    return float(brentq(lambda p: binary_kl(q, p) - budget, q, upper, xtol=1e-14))


def kl_inverse_bound(
    emp_risk: float, kl: float, m: int, delta: float, log_surcharge: float = 0.0
) -> float:
    """Population-risk bound kl⁻¹(R̂, (KL + ln(2√m/δ)) / m)."""
    log_term = _check(m, delta, log_surcharge, emp_risk=emp_risk, kl=kl)
    budget = (kl + math.log(2.0 * math.sqrt(m)) + log_term) / m
    return kl_inverse_upper(min(emp_risk, 1.0), budget)
