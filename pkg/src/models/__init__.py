"""
Predictors for bound-minimisation training.

This package contains:
- Shape descriptors and the flat parameter vector (linear model, projected MLP)
- Forward pass, clamped margin loss and the hand-derived reverse pass
- The versioned binary checkpoint container
"""

from src.models.checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from src.models.network import (
    empirical_risk,
    example_losses,
    init_linear,
    init_mlp,
    init_params,
    loss_gradient,
    loss_lipschitz_const,
    margin_loss,
    mean_loss_gradient,
    predict,
    project_frobenius,
    weighted_loss_gradient,
)
from src.models.shape import ModelError, ModelParams, ModelShape

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "ModelError",
    "ModelParams",
    "ModelShape",
    "empirical_risk",
    "example_losses",
    "init_linear",
    "init_mlp",
    "init_params",
    "load_checkpoint",
    "loss_gradient",
    "loss_lipschitz_const",
    "margin_loss",
    "mean_loss_gradient",
    "predict",
    "project_frobenius",
    "save_checkpoint",
]
