"""
COCOB-Backprop: the parameter-free coin-betting optimiser.

Every coordinate bets a fraction of its wealth (initial scale plus accumulated
reward) on the sign of the negative gradient. There is no learning rate; the
single hyperparameter ``alpha`` caps the betting fraction early on.
"""

from dataclasses import dataclass

import numpy as np

from src import config

__all__ = ["OptimizationError", "CocobState", "cocob_step", "CocobOptimizer"]


class OptimizationError(RuntimeError):
    """Non-finite gradient or objective during optimisation."""

    pass


@dataclass
class CocobState:
    """
    Per-coordinate accumulators of COCOB-Backprop.

    Attributes:
        initial: Starting point w₁
        max_scale: Largest |g| seen so far (starts at eps)
        abs_sum: Σ|g|
        neg_sum: Σ(−g)
        reward: Accumulated winnings, never negative
        bet: Current offset from the starting point
        alpha: Betting-fraction cap
    """

    initial: np.ndarray
    max_scale: np.ndarray
    abs_sum: np.ndarray
    neg_sum: np.ndarray
    reward: np.ndarray
    bet: np.ndarray
    alpha: float = config.COCOB_ALPHA

    @classmethod
    def create(
        cls, initial: np.ndarray, alpha: float = config.COCOB_ALPHA, eps: float = config.COCOB_EPS
    ) -> "CocobState":
        start = np.array(initial, dtype=np.float64)
        zeros = np.zeros_like(start)
        return cls(
            initial=start,
            max_scale=np.full_like(start, eps),
            abs_sum=zeros.copy(),
            neg_sum=zeros.copy(),
            reward=zeros.copy(),
            bet=zeros.copy(),
            alpha=alpha,
        )


def cocob_step(state: CocobState, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """
    One COCOB-Backprop update; mutates ``state`` and returns the new parameters.

    ``params`` is only checked for shape: the iterate is always rebuilt as
    initial + bet.

    Raises:
        OptimizationError: If the gradient has non-finite entries or the wrong shape
    """
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != state.initial.shape or np.shape(params) != state.initial.shape:
        raise OptimizationError(
            f"shape mismatch: state {state.initial.shape}, params {np.shape(params)}, "
            f"grad {grad.shape}"
        )
    if not np.all(np.isfinite(grad)):
        raise OptimizationError("non-finite gradient passed to COCOB step")

    neg_grad = -grad
    abs_grad = np.abs(grad)
    np.maximum(state.max_scale, abs_grad, out=state.max_scale)
    state.abs_sum += abs_grad
    state.neg_sum += neg_grad

    state.reward = np.maximum(state.reward + state.bet * neg_grad, 0.0)
    denominator = state.max_scale * np.maximum(
        state.abs_sum + state.max_scale, state.alpha * state.max_scale
    )
    state.bet = state.neg_sum / denominator * (state.max_scale + state.reward)
    return state.initial + state.bet


class CocobOptimizer:
    """Stateful wrapper holding the current iterate."""

    def __init__(self, initial: np.ndarray, alpha: float = config.COCOB_ALPHA):
        self.state = CocobState.create(initial, alpha=alpha)
        self.params = self.state.initial.copy()
        self.steps = 0

    def step(self, grad: np.ndarray) -> np.ndarray:
        self.params = cocob_step(self.state, self.params, grad)
        self.steps += 1
        return self.params
