"""
Confidence budgets: δ ledgers and union-bound penalties.

A certificate may rely on up to three random events: the PAC-Bayes bound
itself, the Lipschitz-constant estimate and the Monte-Carlo estimate of the
posterior's empirical risk. The ledger splits the global δ across them and
always sums to δ.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import Literal

from src import config
from src.bounds.gaps import BoundError
from src.utils.validation import validate_delta

__all__ = [
    "LedgerEntry",
    "DeltaLedger",
    "compose_delta_budget",
    "prior_variance_grid_value",
    "prior_variance_penalty",
    "data_dependent_prior_penalty",
    "lambda_grid_penalty",
]

Purpose = Literal["bound", "lipschitz", "hoeffding"]


@dataclass(frozen=True)
class LedgerEntry:
    purpose: Purpose
    share: float


@dataclass(frozen=True)
class DeltaLedger:
    delta: float
    entries: tuple[LedgerEntry, ...]

    def share(self, purpose: Purpose) -> float:
        for entry in self.entries:
            if entry.purpose == purpose:
                return entry.share
        raise KeyError(f"ledger has no '{purpose}' entry")

    def has(self, purpose: Purpose) -> bool:
        return any(entry.purpose == purpose for entry in self.entries)

    def total(self) -> float:
        return math.fsum(entry.share for entry in self.entries)

    def to_list(self) -> list[dict]:
        return [{"purpose": e.purpose, "share": e.share} for e in self.entries]


def _split(delta: float, purposes: tuple[Purpose, ...]) -> DeltaLedger:
    """Equal shares; the last one absorbs rounding so the total is δ."""
    equal = delta / len(purposes)
    shares = [equal] * (len(purposes) - 1)
    shares.append(delta - math.fsum(shares))
    return DeltaLedger(delta, tuple(LedgerEntry(p, s) for p, s in zip(purposes, shares)))


def compose_delta_budget(
    delta: float,
    posterior_kind: Literal["dirac", "gaussian"],
    uses_wasserstein: bool,
    uses_mc: bool,
) -> DeltaLedger:
    """
    Split δ across the events a certificate depends on.

    - Dirac posterior with a Wasserstein term: bound δ/2, lipschitz δ/2
    - Gaussian posterior, η = ρ (no Wasserstein), Monte-Carlo risk: bound δ/2, hoeffding δ/2
    - Gaussian posterior with a Wasserstein term and Monte-Carlo risk: three δ/3 shares
    - Gaussian posterior, Wasserstein term, exact risk: bound δ/2, lipschitz δ/2
    - Gaussian posterior, neither: bound δ

    Raises:
        BoundError: For a Dirac posterior without a Wasserstein term (its KL to
            a Gaussian prior is infinite) or with a Monte-Carlo risk estimate
            (its risk is exact), or for an unknown posterior kind
    """
    try:
        validate_delta(delta)
    except ValueError as e:
        raise BoundError(str(e))

    if posterior_kind == "dirac":
        if not uses_wasserstein:
            raise BoundError("a Dirac posterior needs a Wasserstein term: KL to P is infinite")
        if uses_mc:
            raise BoundError("a Dirac posterior has an exact empirical risk; no Monte-Carlo event")
        return _split(delta, ("bound", "lipschitz"))
    if posterior_kind != "gaussian":
        raise BoundError(f"unknown posterior kind '{posterior_kind}'")

    purposes: tuple[Purpose, ...] = ("bound",)
    if uses_wasserstein:
        purposes += ("lipschitz",)
    if uses_mc:
        purposes += ("hoeffding",)
    return _split(delta, purposes)


def prior_variance_grid_value(
    j: int, c: float = config.PRIOR_VARIANCE_C, b: float = config.PRIOR_VARIANCE_B
) -> float:
    """σ_j² = c·exp(−j/b)."""
    return c * math.exp(-j / b)


def _grid_penalty(j: int, delta: float) -> float:
    # ln(b·ln(c/σ_j²)) == ln(j) on the grid
    return 2.0 * math.log(j) + math.log(math.pi**2 / (6.0 * delta))


def prior_variance_penalty(
    sigma_p_sq: float,
    c: float = config.PRIOR_VARIANCE_C,
    b: float = config.PRIOR_VARIANCE_B,
    delta: float = config.DEFAULT_DELTA,
    bound_fn: Callable[[float, float], float] | None = None,
) -> tuple[float, float]:
    """
    Snap a learned prior variance to the grid c·exp(−j/b), j >= 1.

    The returned penalty 2·ln(b·ln(c/σ_j²)) + ln(π²/(6δ)) replaces ln(1/δ) in
    the certificate. Both neighbouring grid points give valid certificates;
    with ``bound_fn(grid_sigma_sq, penalty) -> final bound`` the smaller one is
    chosen, otherwise the nearer one in log scale.

    Returns:
        (grid_sigma_sq, penalty)

    Raises:
        BoundError: If sigma_p_sq is not in (0, c) or delta not in (0, 1)
    """
    try:
        validate_delta(delta)
    except ValueError as e:
        raise BoundError(str(e))
    if not 0.0 < sigma_p_sq < c:
        raise BoundError(f"prior variance must lie in (0, {c}), got {sigma_p_sq}")

    position = b * math.log(c / sigma_p_sq)
    nearest = round(position)
    if abs(position - nearest) < 1e-9:
        candidates = [max(1, nearest)]
    else:
        candidates = sorted({max(1, math.floor(position)), max(1, math.ceil(position))})

    options = [(prior_variance_grid_value(j, c, b), _grid_penalty(j, delta)) for j in candidates]
    if len(options) == 1:
        return options[0]
    if bound_fn is not None:
        return min(options, key=lambda option: bound_fn(*option))
    return min(options, key=lambda option: abs(math.log(option[0] / sigma_p_sq)))


def data_dependent_prior_penalty(t_epochs: int, delta: float = config.DEFAULT_DELTA) -> float:
    """Surcharge ln T turning every ln(1/δ) into ln(T/δ)."""
    if t_epochs < 1:
        raise BoundError(f"T_epochs must be >= 1, got {t_epochs}")
    return math.log(t_epochs)


def lambda_grid_penalty(grid_size: int) -> float:
    """Surcharge ln|grid| for picking λ from a fixed grid after seeing the data."""
    if grid_size < 1:
        raise BoundError(f"grid size must be >= 1, got {grid_size}")
    return math.log(grid_size)
