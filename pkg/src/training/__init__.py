"""
Bound-minimisation training.

This package contains:
- The certificate-shaped objective with its hand-derived gradient
- The COCOB-Backprop training loop with certification at the end
- ERM training of data-dependent priors
"""

from src.training.objective import (
    TrainableState,
    TrainConfig,
    TrainingError,
    eta_from_state,
    lambda_value,
    objective_and_grad,
    prepare_objective,
    training_ledger,
)
from src.training.trainer import (
    ErmPrior,
    TrainResult,
    default_prior,
    save_training_checkpoint,
    train,
    train_erm_prior,
)

__all__ = [
    "ErmPrior",
    "TrainResult",
    "TrainableState",
    "TrainConfig",
    "TrainingError",
    "default_prior",
    "eta_from_state",
    "lambda_value",
    "objective_and_grad",
    "prepare_objective",
    "save_training_checkpoint",
    "train",
    "train_erm_prior",
    "training_ledger",
]
