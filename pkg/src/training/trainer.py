"""
Bound-minimisation training loop and ERM training of data-dependent priors.

Both loops use COCOB-Backprop on shuffled mini-batches and run whole epochs.
Progress goes to stdout; the machine-readable trajectory is returned and can
be written with ``src.utils.write_trajectory_log``.
"""

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from src import config
from src.bounds.certificate import BoundReport, certify
from src.data_loader import Dataset, split_prior
from src.lipschitz import LipschitzEstimate, estimate_lipschitz
from src.measures import DiracMeasure, GaussianMeasure, PosteriorMeasure
from src.models import (
    ModelParams,
    ModelShape,
    empirical_risk,
    init_params,
    mean_loss_gradient,
    project_frobenius,
    save_checkpoint,
)
from src.optimizer import CocobOptimizer, OptimizationError
from src.training.objective import (
    TrainableState,
    TrainConfig,
    TrainingError,
    eta_from_state,
    lambda_value,
    objective_and_grad,
    prepare_objective,
    prior_from_state,
    training_ledger,
)

__all__ = [
    "TrainResult",
    "ErmPrior",
    "default_prior",
    "train",
    "train_erm_prior",
    "save_training_checkpoint",
]


@dataclass
class TrainResult:
    """Trained posterior, its η and prior, and the certificate computed on the training set."""

    posterior: PosteriorMeasure
    eta: GaussianMeasure
    prior: GaussianMeasure
    report: BoundReport
    state: TrainableState
    shape: ModelShape
    lipschitz: LipschitzEstimate | None
    iterations: int
    lam: float
    trajectory: list[dict[str, float]] = field(default_factory=list)


class ErmPrior(NamedTuple):
    prior_mean: np.ndarray
    t_epochs: int
    prior_split: Dataset
    cert_split: Dataset
    epoch_risks: tuple[float, ...]


def default_prior(shape: ModelShape, seed: int = config.RANDOM_SEED) -> GaussianMeasure:
    """Data-free prior centred on the architecture's initialisation."""
    return GaussianMeasure(init_params(shape, seed).theta, config.PRIOR_STD_INIT)


def _batches(m: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(m)
    for start in range(0, m, batch_size):
        yield order[start : start + batch_size]


def _project(state: TrainableState, shape: ModelShape) -> TrainableState:
    projected = project_frobenius(ModelParams(shape, state.theta))
    return state.with_theta(projected.theta.copy())


def _posterior(state: TrainableState, cfg: TrainConfig) -> PosteriorMeasure:
    if cfg.posterior_kind == "gaussian":
        return GaussianMeasure(state.theta, state.sigma)
    return DiracMeasure(state.theta)


def train(
    data: Dataset,
    shape: ModelShape,
    cfg: TrainConfig,
    verbose: bool = True,
    lipschitz_iters: int = config.LIPSCHITZ_ITERATIONS,
    lipschitz_restarts: int = config.LIPSCHITZ_RESTARTS,
    provenance: dict | None = None,
) -> TrainResult:
    """
    Minimise the certificate on ``data`` and certify the result.

    Runs epochs of shuffled batches and stops at the first epoch boundary at
    or after ``cfg.min_iterations``. With ``enforce_frobenius`` the MLP weight
    matrices of the iterate are projected to Frobenius norm <= 1 after every
    step; the optimiser keeps its unprojected wealth.

    Args:
        data: Training sample (also the certification sample)
        shape: Model architecture
        cfg: Training configuration
        verbose: Print progress
        lipschitz_iters: Ascent iterations if the Lipschitz constant is estimated here
        lipschitz_restarts: Ascent restarts if the Lipschitz constant is estimated here
        provenance: Seeds and hashes copied into the report

    Returns:
        TrainResult

    Raises:
        TrainingError: If the objective diverges or the Lipschitz estimate has
            the wrong δ share
    """
    if cfg.alpha is not None:
        shape = replace(shape, margin_scale=cfg.alpha)
    if shape.input_dim != data.n_features or shape.class_count < data.class_count:
        raise TrainingError(
            f"model expects {shape.input_dim} features / {shape.class_count} classes, "
            f"data has {data.n_features} / {data.class_count}"
        )
    prior = cfg.prior if cfg.prior is not None else default_prior(shape, cfg.seed)
    if prior.dim != shape.param_count:
        raise TrainingError(f"prior has dimension {prior.dim}, model has {shape.param_count}")
    ledger = training_ledger(cfg)

    if verbose:
        print("\n" + "=" * 60)
        print(f"Bound minimisation: {cfg.objective.value}, {cfg.posterior_kind} posterior")
        print("=" * 60)
        print(f"m = {data.m}, d = {shape.param_count}, δ = {cfg.delta}")
        print(f"λ mode: {cfg.interpolation}")
        print(f"δ ledger: {ledger.to_list()}")

    lipschitz = cfg.lipschitz
    if cfg.uses_wasserstein:
        if lipschitz is None:
            lipschitz = estimate_lipschitz(
                data,
                shape,
                ledger.share("lipschitz"),
                seed=cfg.seed,
                iters=lipschitz_iters,
                restarts=lipschitz_restarts,
                batch=cfg.batch_size,
                verbose=verbose,
            )
        elif not math.isclose(lipschitz.delta, ledger.share("lipschitz"), rel_tol=1e-12):
            raise TrainingError(
                f"Lipschitz estimate uses δ = {lipschitz.delta:.6g}, "
                f"the ledger reserves {ledger.share('lipschitz'):.6g}"
            )

    setup = prepare_objective(cfg, shape, prior, data.m, lipschitz)
    state = TrainableState.initial(prior.mean, cfg.sigma_init, cfg.lambda_init, prior.std)
    optimizer = CocobOptimizer(state.to_vector(), alpha=cfg.cocob_param)
    rng = np.random.default_rng(cfg.seed)
    gaussian = cfg.posterior_kind == "gaussian"
    project = cfg.enforce_frobenius and shape.kind == "mlp"

    trajectory: list[dict[str, float]] = []
    iteration = 0
    epoch = 0
    while iteration < cfg.min_iterations:
        epoch += 1
        for rows in _batches(data.m, cfg.batch_size, rng):
            noise = rng.standard_normal(shape.param_count) if gaussian else None
            step = objective_and_grad(state, data.features[rows], data.labels[rows], setup, noise)
            try:
                vector = optimizer.step(step.grad)
            except OptimizationError as e:
                raise TrainingError(f"iteration {iteration + 1}: {e}")
            state = TrainableState.from_vector(vector)
            if project:
                state = _project(state, shape)
            iteration += 1

            if iteration % cfg.trajectory_every == 0:
                trajectory.append(
                    {
                        "iteration": iteration,
                        "objective": step.value,
                        "risk_term": step.risk_term,
                        "gap_term": step.gap_term,
                    }
                )
                if verbose and iteration % (cfg.trajectory_every * 10) == 0:
                    print(
                        f"  iter {iteration:6d}  objective {step.value:.5f}"
                        f"  gap {step.gap_term:.5f}"
                    )
            every = cfg.checkpoint_every
            if every and cfg.checkpoint_dir and iteration % every == 0:
                path = Path(cfg.checkpoint_dir) / f"iter_{iteration:07d}.pbfg"
                _checkpoint(path, state, shape, prior, cfg)

    if verbose:
        print(f"✓ Finished {iteration} iterations ({epoch} epochs)")

    posterior = _posterior(state, cfg)
    trained_prior = prior_from_state(state, prior, cfg)

    def eta_for(p: GaussianMeasure) -> GaussianMeasure:
        return eta_from_state(state, p, cfg)

    report = certify(
        cfg.objective,
        posterior,
        trained_prior,
        shape,
        data,
        eta=eta_for if cfg.uses_wasserstein else None,
        lipschitz=lipschitz if cfg.uses_wasserstein else None,
        delta=cfg.delta,
        mc_samples=cfg.mc_samples,
        seed=cfg.seed,
        log_surcharge=cfg.log_surcharge,
        snap_prior_variance=cfg.learn_prior_variance,
        frobenius_enforced=project,
        notes=[f"trained for {iteration} iterations, λ = {lambda_value(state, cfg):.6g}"],
        provenance=provenance,
    )
    final_prior = GaussianMeasure(prior.mean, report.terms["prior_std"])
    if verbose:
        print(f"✓ Certified bound ({report.family.value}): {report.value:.6f}")

    return TrainResult(
        posterior=posterior,
        eta=eta_for(final_prior),
        prior=final_prior,
        report=report,
        state=state,
        shape=shape,
        lipschitz=lipschitz,
        iterations=iteration,
        lam=lambda_value(state, cfg),
        trajectory=trajectory,
    )


def _checkpoint(
    path: Path, state: TrainableState, shape: ModelShape, prior: GaussianMeasure, cfg: TrainConfig
) -> None:
    prior_now = prior_from_state(state, prior, cfg)
    eta = eta_from_state(state, prior_now, cfg)
    save_checkpoint(
        path,
        ModelParams(shape, state.theta),
        extra_arrays={"prior_mean": prior_now.mean, "eta_mean": eta.mean},
        meta={
            "posterior_kind": cfg.posterior_kind,
            "sigma": state.sigma if cfg.posterior_kind == "gaussian" else None,
            "prior_std": prior_now.std,
            "eta_std": eta.std,
            "lambda": lambda_value(state, cfg),
            "interpolation": cfg.interpolation,
        },
    )


def save_training_checkpoint(path: Path, result: TrainResult, meta: dict | None = None) -> Path:
    """
    Store a trained posterior with its prior and η.

    ``meta`` gains posterior_kind, sigma, prior_std, eta_std and lambda.
    """
    posterior = result.posterior
    gaussian = isinstance(posterior, GaussianMeasure)
    document = dict(meta or {})
    document.update(
        {
            "posterior_kind": "gaussian" if gaussian else "dirac",
            "sigma": posterior.std if gaussian else None,
            "prior_std": result.prior.std,
            "eta_std": result.eta.std,
            "lambda": result.lam,
        }
    )
    return save_checkpoint(
        path,
        ModelParams(result.shape, result.posterior.mean),
        extra_arrays={"prior_mean": result.prior.mean, "eta_mean": result.eta.mean},
        meta=document,
    )


def train_erm_prior(
    full_train: Dataset,
    prior_split_fraction: float,
    cfg: TrainConfig,
    shape: ModelShape,
    max_epochs: int = config.ERM_PRIOR_MAX_EPOCHS,
    verbose: bool = True,
) -> ErmPrior:
    """
    Learn a prior mean by ERM on a held-out part of the training set.

    The prior split S′ trains the predictor with COCOB for ``max_epochs``
    epochs; after each epoch the predictor is scored by its empirical risk on
    the certification split S \\ S′ and the best one is kept. Selecting among
    T = max_epochs checkpoints costs ln T in the certificate.

    Raises:
        TrainingError: If either split would be empty
    """
    try:
        prior_split, cert_split = split_prior(full_train, prior_split_fraction, cfg.seed)
    except ValueError as e:
        raise TrainingError(f"cannot build a prior split: {e}")
    if max_epochs < 1:
        raise TrainingError(f"max_epochs must be >= 1, got {max_epochs}")

    if verbose:
        print("\n" + "=" * 60)
        print("Training a data-dependent prior (ERM with early stopping)")
        print("=" * 60)
        print(f"Prior split: {prior_split.m} rows, certification split: {cert_split.m} rows")

    theta = init_params(shape, cfg.seed).theta.copy()
    optimizer = CocobOptimizer(theta, alpha=cfg.cocob_param)
    rng = np.random.default_rng(cfg.seed)
    best_theta = theta.copy()
    best_risk = math.inf
    risks = []
    for epoch in range(1, max_epochs + 1):
        for rows in _batches(prior_split.m, cfg.batch_size, rng):
            grad, _ = mean_loss_gradient(
                ModelParams(shape, theta), prior_split.features[rows], prior_split.labels[rows]
            )
            theta = optimizer.step(grad)
        risk = empirical_risk(ModelParams(shape, theta), cert_split.features, cert_split.labels)
        risks.append(risk)
        if risk < best_risk:
            best_risk = risk
            best_theta = theta.copy()
        if verbose:
            print(f"  epoch {epoch:3d}  certification-split risk {risk:.5f}")

    if verbose:
        print(f"✓ Best prior risk {best_risk:.5f}; surcharge ln T = {math.log(max_epochs):.4f}")
    return ErmPrior(best_theta, max_epochs, prior_split, cert_split, tuple(risks))
