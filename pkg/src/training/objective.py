"""
The bound-minimisation objective and its hand-derived gradient.

The trained quantity is the certificate itself,

    E_ρ R̂(h) + √(L₂·W(ρ, η) + (KL(η‖P) + ln(4√m/δ) + s) / (2m)),

with η on the path between posterior and prior:
w_η = λw + (1−λ)w_P and, for a Gaussian posterior, σ_η² = λσ² + (1−λ)σ_P².
For a Dirac posterior σ_η is free and stored in ``log_sigma``.

All trainable scalars live in one flat vector
[theta..., log_sigma, lambda_logit, log_sigma_prior].
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, NamedTuple

import numpy as np
from scipy.special import expit, logit

from src import config
from src.bounds.budget import DeltaLedger, compose_delta_budget
from src.bounds.certificate import BoundFamily
from src.lipschitz import LipschitzEstimate, lipschitz_for_squared_gap
from src.measures import GaussianMeasure, chi_mean
from src.models import ModelParams, ModelShape, mean_loss_gradient
from src.utils.validation import (
    validate_delta,
    validate_nonnegative,
    validate_positive,
    validate_sample_size,
)

__all__ = [
    "TrainingError",
    "Interpolation",
    "TrainableState",
    "TrainConfig",
    "ObjectiveSetup",
    "ObjectiveValue",
    "training_ledger",
    "lambda_value",
    "prior_from_state",
    "eta_from_state",
    "prepare_objective",
    "objective_and_grad",
]

Interpolation = Literal["learned", "kl-only", "wasserstein-only"]
PosteriorKind = Literal["dirac", "gaussian"]

LAMBDA_PINS: dict[str, float] = {"kl-only": 1.0, "wasserstein-only": 0.0}
TRAINABLE_FAMILIES = (BoundFamily.KL_WASSERSTEIN, BoundFamily.MCALLESTER)


class TrainingError(RuntimeError):
    """Training diverged or cannot proceed."""

    pass


@dataclass(frozen=True, eq=False)
class TrainableState:
    """Model parameters plus the three unconstrained scalars."""

    theta: np.ndarray
    log_sigma: float
    lambda_logit: float
    log_sigma_prior: float

    @property
    def sigma(self) -> float:
        return math.exp(self.log_sigma)

    @property
    def sigma_prior(self) -> float:
        return math.exp(self.log_sigma_prior)

    def to_vector(self) -> np.ndarray:
        tail = [self.log_sigma, self.lambda_logit, self.log_sigma_prior]
        return np.concatenate([self.theta, np.array(tail)])

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "TrainableState":
        vector = np.asarray(vector, dtype=np.float64)
        return cls(vector[:-3].copy(), float(vector[-3]), float(vector[-2]), float(vector[-1]))

    @classmethod
    def initial(
        cls, theta: np.ndarray, sigma_init: float, lambda_init: float, prior_std: float
    ) -> "TrainableState":
        return cls(
            np.array(theta, dtype=np.float64),
            math.log(sigma_init),
            float(logit(lambda_init)),
            math.log(prior_std),
        )

    def with_theta(self, theta: np.ndarray) -> "TrainableState":
        return TrainableState(theta, self.log_sigma, self.lambda_logit, self.log_sigma_prior)


@dataclass(frozen=True, eq=False)
class TrainConfig:
    """
    Run-level training settings; defaults follow ``src.config``.

    ``prior`` None means the data-free prior N(init_params(shape, seed), PRIOR_STD_INIT²).
    ``lipschitz`` None means it is estimated on the training data before training.
    ``alpha`` None keeps the model shape's margin scale.
    """

    posterior_kind: PosteriorKind = "dirac"
    objective: BoundFamily = BoundFamily.KL_WASSERSTEIN
    alpha: float | None = None
    delta: float = config.DEFAULT_DELTA
    batch_size: int = config.BATCH_SIZE
    min_iterations: int = config.MIN_ITERATIONS
    cocob_param: float = config.COCOB_ALPHA
    seed: int = config.RANDOM_SEED
    lambda_init: float = config.LAMBDA_INIT
    sigma_init: float = config.POSTERIOR_STD_INIT
    prior: GaussianMeasure | None = None
    lipschitz: LipschitzEstimate | None = None
    interpolation: Interpolation = "learned"
    learn_prior_variance: bool = True
    enforce_frobenius: bool = False
    log_surcharge: float = 0.0
    mc_samples: int = config.MC_RISK_SAMPLES
    trajectory_every: int = config.TRAJECTORY_EVERY
    checkpoint_every: int = 0
    checkpoint_dir: Path | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "objective", BoundFamily(self.objective))
        if self.posterior_kind not in ("dirac", "gaussian"):
            raise ValueError(
                f"posterior_kind must be 'dirac' or 'gaussian', got {self.posterior_kind!r}"
            )
        if self.objective not in TRAINABLE_FAMILIES:
            raise ValueError(
                f"objective '{self.objective.value}' is not trainable; train with kl-wass "
                "and certify other families afterwards"
            )
        if self.interpolation not in ("learned", "kl-only", "wasserstein-only"):
            raise ValueError(f"unknown interpolation mode {self.interpolation!r}")
        validate_delta(self.delta)
        validate_sample_size(self.batch_size, "batch_size")
        validate_sample_size(self.min_iterations, "min_iterations")
        validate_positive(self.cocob_param, "cocob_param")
        validate_positive(self.sigma_init, "sigma_init")
        validate_nonnegative(self.log_surcharge, "log_surcharge")
        validate_sample_size(self.mc_samples, "mc_samples")
        validate_sample_size(self.trajectory_every, "trajectory_every")
        if self.checkpoint_every < 0:
            raise ValueError(f"checkpoint_every must be >= 0, got {self.checkpoint_every}")
        if not 0.0 < self.lambda_init < 1.0:
            raise ValueError(f"lambda_init must lie in (0, 1), got {self.lambda_init}")
        if self.posterior_kind == "dirac" and (
            self.interpolation == "kl-only" or self.objective is BoundFamily.MCALLESTER
        ):
            raise ValueError(
                "a Dirac posterior has infinite KL to a Gaussian prior; it needs λ < 1"
            )

    @property
    def uses_wasserstein(self) -> bool:
        if self.posterior_kind == "dirac":
            return True
        return self.interpolation != "kl-only" and self.objective is BoundFamily.KL_WASSERSTEIN

    @property
    def lambda_pin(self) -> float | None:
        if self.objective is BoundFamily.MCALLESTER:
            return 1.0
        return LAMBDA_PINS.get(self.interpolation)


def training_ledger(cfg: TrainConfig) -> DeltaLedger:
    """The δ ledger shared by the training objective and the final certificate."""
    gaussian = cfg.posterior_kind == "gaussian"
    return compose_delta_budget(
        cfg.delta, cfg.posterior_kind, cfg.uses_wasserstein, uses_mc=gaussian
    )


def lambda_value(state: TrainableState, cfg: TrainConfig) -> float:
    """λ ∈ [0, 1]: the pinned value or the sigmoid of the logit."""
    pin = cfg.lambda_pin
    return pin if pin is not None else float(expit(state.lambda_logit))


def prior_from_state(
    state: TrainableState, prior: GaussianMeasure, cfg: TrainConfig
) -> GaussianMeasure:
    if not cfg.learn_prior_variance:
        return prior
    return GaussianMeasure(prior.mean, state.sigma_prior)


def _ties_eta_to_prior(cfg: TrainConfig) -> bool:
    # Dirac with λ pinned to 0 uses η = P exactly
    return cfg.posterior_kind == "dirac" and cfg.lambda_pin == 0.0


def eta_from_state(
    state: TrainableState, prior: GaussianMeasure, cfg: TrainConfig
) -> GaussianMeasure:
    """
    Interpolation measure of the current state.

    Gaussian posterior: mean λw + (1−λ)w_P, variance λσ² + (1−λ)σ_P².
    Dirac posterior: same mean, variance exp(2·log_sigma).
    """
    lam = lambda_value(state, cfg)
    mean = lam * state.theta + (1.0 - lam) * prior.mean
    if cfg.posterior_kind == "gaussian":
        variance = lam * state.sigma**2 + (1.0 - lam) * prior.variance
    elif _ties_eta_to_prior(cfg):
        variance = prior.variance
    else:
        variance = state.sigma**2
    return GaussianMeasure(mean, math.sqrt(variance))


@dataclass(frozen=True, eq=False)
class ObjectiveSetup:
    """Quantities fixed for a whole training run."""

    cfg: TrainConfig
    shape: ModelShape
    prior: GaussianMeasure
    m: int
    lip_sq: float
    log_term: float

    @property
    def delta_bound(self) -> float:
        return training_ledger(self.cfg).share("bound")


class ObjectiveValue(NamedTuple):
    value: float
    grad: np.ndarray
    risk_term: float
    gap_term: float


def prepare_objective(
    cfg: TrainConfig,
    shape: ModelShape,
    prior: GaussianMeasure,
    m: int,
    lipschitz: LipschitzEstimate | None,
) -> ObjectiveSetup:
    """
    Freeze the constants of the objective: Lipschitz factor and log term.

    The log term is ln(4√m/δ_bound) + s for kl-wass and ln(2√m/δ_bound) + s
    for mcallester, where δ_bound is the ledger's bound share.

    Raises:
        TrainingError: If a Wasserstein term is needed but no estimate is given
    """
    validate_sample_size(m)
    delta_bound = training_ledger(cfg).share("bound")
    if cfg.uses_wasserstein:
        if lipschitz is None:
            raise TrainingError("the objective has a Wasserstein term but no Lipschitz estimate")
        lip_sq = lipschitz_for_squared_gap(lipschitz)
    else:
        lip_sq = 0.0
    factor = 2.0 if cfg.objective is BoundFamily.MCALLESTER else 4.0
    log_term = math.log(factor * math.sqrt(m) / delta_bound) + cfg.log_surcharge
    return ObjectiveSetup(cfg, shape, prior, m, lip_sq, log_term)


def objective_and_grad(
    state: TrainableState,
    features: np.ndarray,
    labels: np.ndarray,
    setup: ObjectiveSetup,
    noise: np.ndarray | None = None,
) -> ObjectiveValue:
    """
    Batch objective and its gradient over every trainable scalar.

    A Gaussian posterior's risk is evaluated at the single reparametrised draw
    theta + σ·noise; ``noise`` must then be a standard normal vector of the
    parameter dimension. The Lipschitz factor is a constant.

    Raises:
        TrainingError: If the objective is not finite
    """
    cfg = setup.cfg
    theta = state.theta
    d = theta.shape[0]
    gaussian = cfg.posterior_kind == "gaussian"
    sigma = state.sigma

    if gaussian:
        if noise is None or np.shape(noise) != (d,):
            raise ValueError(f"a Gaussian posterior needs a noise vector of length {d}")
        sample = ModelParams(setup.shape, theta + sigma * noise)
        g, risk = mean_loss_gradient(sample, features, labels)
        grad_theta = g.copy()
        grad_log_sigma = sigma * float(g @ noise)
    else:
        g, risk = mean_loss_gradient(ModelParams(setup.shape, theta), features, labels)
        grad_theta = g.copy()
        grad_log_sigma = 0.0

    pin = cfg.lambda_pin
    lam = pin if pin is not None else float(expit(state.lambda_logit))
    dlam_dlogit = 0.0 if pin is not None else lam * (1.0 - lam)

    if cfg.learn_prior_variance:
        p = state.sigma_prior**2
        dp_db = 2.0 * p
    else:
        p = setup.prior.variance
        dp_db = 0.0

    # η variance v and its partials
    if gaussian:
        v = lam * sigma**2 + (1.0 - lam) * p
        dv_da, dv_db, dv_dlam = 2.0 * lam * sigma**2, (1.0 - lam) * dp_db, sigma**2 - p
    elif _ties_eta_to_prior(cfg):
        v, dv_da, dv_db, dv_dlam = p, 0.0, dp_db, 0.0
    else:
        v, dv_da, dv_db, dv_dlam = sigma**2, 2.0 * sigma**2, 0.0, 0.0

    offset = theta - setup.prior.mean
    dist_sq = float(offset @ offset)
    ratio = v / p
    kl = max(0.0, 0.5 * (d * ratio - d + lam**2 * dist_sq / p - d * math.log(ratio)))
    dkl_dv = 0.5 * d * (1.0 / p - 1.0 / v)
    dkl_dp = 0.5 * (d / p - d * v / p**2 - lam**2 * dist_sq / p**2)
    dkl_dlam = lam * dist_sq / p
    dkl_dtheta = (lam**2 / p) * offset

    eta_std = math.sqrt(v)
    dw_dtheta = np.zeros(d)
    dw_dlam = dw_da = dw_dv = 0.0
    if gaussian:
        wass = math.sqrt((1.0 - lam) ** 2 * dist_sq + d * (sigma - eta_std) ** 2)
        if wass > 0.0:
            dw_dtheta = (1.0 - lam) ** 2 * offset / wass
            dw_dlam = -(1.0 - lam) * dist_sq / wass
            dw_da = d * (sigma - eta_std) * sigma / wass
            dw_dv = -d * (sigma - eta_std) / (2.0 * eta_std * wass)
    else:
        dist = math.sqrt(dist_sq)
        chi = chi_mean(d)
        wass = (1.0 - lam) * dist + eta_std * chi
        if dist > 0.0:
            dw_dtheta = (1.0 - lam) * offset / dist
        dw_dlam = -dist
        dw_dv = chi / (2.0 * eta_std)

    two_m = 2.0 * setup.m
    lip_sq = setup.lip_sq
    inner = lip_sq * wass + (kl + setup.log_term) / two_m
    gap = math.sqrt(inner) if inner > 0.0 else 0.0
    value = risk + gap
    if not math.isfinite(value):
        raise TrainingError(
            f"non-finite objective (risk {risk}, KL {kl}, W {wass}); training diverged"
        )

    scale = 0.5 / gap if gap > 0.0 else 0.0
    dinner_dv = lip_sq * dw_dv + dkl_dv / two_m
    grad_theta += scale * (lip_sq * dw_dtheta + dkl_dtheta / two_m)
    grad_log_sigma += scale * (lip_sq * dw_da + dinner_dv * dv_da)
    grad_lam = scale * (lip_sq * dw_dlam + dkl_dlam / two_m + dinner_dv * dv_dlam)
    grad_log_prior = scale * (dinner_dv * dv_db + dkl_dp * dp_db / two_m)

    grad = np.concatenate(
        [grad_theta, np.array([grad_log_sigma, grad_lam * dlam_dlogit, grad_log_prior])]
    )
    return ObjectiveValue(value, grad, risk, gap)
