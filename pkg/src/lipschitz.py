"""
High-probability Lipschitz constant of the generalisation gap.

The gap h ↦ |R(h) − R̂_S(h)| is Lipschitz in the parameters with constant

    L(m, δ) = 2·𝕽̂ + 3·L_ℓ·√(2 ln(4/δ)/m),

where L_ℓ is the loss's Lipschitz constant and 𝕽̂ is the empirical
Rademacher surrogate

    sup_{w ≠ w'} (1/m) Σ_i ε_i (ℓ(w', z_i) − ℓ(w, z_i)) / ‖w − w'‖.

The supremum is approached by coin-betting ascent on mini-batches with
full-sample scoring of checkpoints; the reported value is the best
full-sample score found, i.e. an empirical lower estimate of the supremum.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from src import config
from src.data_loader import Dataset
from src.models import ModelParams, ModelShape, example_losses, init_params
from src.models.network import loss_lipschitz_const, weighted_loss_gradient
from src.optimizer import CocobOptimizer
from src.utils.validation import validate_delta, validate_sample_size

__all__ = [
    "LipschitzError",
    "RademacherSigns",
    "LipschitzEstimate",
    "SurrogateResult",
    "sample_rademacher",
    "surrogate_ratio",
    "maximize_surrogate",
    "brute_force_surrogate",
    "lipschitz_constant",
    "lipschitz_for_squared_gap",
    "estimate_lipschitz",
]


class LipschitzError(ValueError):
    """Invalid input to the Lipschitz surrogate search."""

    pass


@dataclass(frozen=True, eq=False)
class RademacherSigns:
    eps: np.ndarray
    seed: int

    @property
    def m(self) -> int:
        return int(self.eps.shape[0])


@dataclass(frozen=True)
class LipschitzEstimate:
    """Surrogate value and the assembled constant L(m, δ)."""

    surrogate: float
    loss_lip: float
    m: int
    delta: float
    value: float
    trace: tuple[tuple[int, float], ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "surrogate": self.surrogate,
            "loss_lip": self.loss_lip,
            "m": self.m,
            "delta": self.delta,
            "value": self.value,
            "trace": [[int(it), float(val)] for it, val in self.trace],
            "notes": [
                "surrogate is the best full-sample score found by ascent, "
                "an empirical estimate of the supremum"
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "LipschitzEstimate":
        return lipschitz_constant(
            float(payload["surrogate"]),
            float(payload["loss_lip"]),
            int(payload["m"]),
            float(payload["delta"]),
            trace=tuple((int(it), float(val)) for it, val in payload.get("trace", [])),
        )


class SurrogateResult(NamedTuple):
    value: float
    trace: tuple[tuple[int, float], ...]


def sample_rademacher(m: int, seed: int) -> RademacherSigns:
    """
    m i.i.d. uniform ±1 signs, deterministic per seed.

    Raises:
        LipschitzError: If m < 1
    """
    if m < 1:
        raise LipschitzError(f"m must be >= 1, got {m}")
    rng = np.random.default_rng(seed)
    eps = rng.integers(0, 2, size=m).astype(np.float64) * 2.0 - 1.0
    eps.setflags(write=False)
    return RademacherSigns(eps, seed)


def surrogate_ratio(
    losses_w: np.ndarray, losses_w2: np.ndarray, eps: np.ndarray, distance: float
) -> float:
    """(1/m) Σ ε_i (ℓ(w', z_i) − ℓ(w, z_i)) / ‖w − w'‖ from precomputed losses."""
    return float(np.mean(eps * (losses_w2 - losses_w)) / distance)


def _check_signs(data: Dataset, eps: RademacherSigns) -> None:
    if eps.m != data.m:
        raise LipschitzError(f"sign vector has {eps.m} entries but dataset has {data.m} rows")


def brute_force_surrogate(
    candidates: list[ModelParams], data: Dataset, eps: RademacherSigns
) -> float:
    """
    Exact maximum of the surrogate ratio over ordered pairs of distinct candidates.

    Raises:
        LipschitzError: If fewer than two distinct candidates are given
    """
    _check_signs(data, eps)
    return _enumerate_pairs(candidates, data, eps)[0].value


def _enumerate_pairs(
    candidates: list[ModelParams], data: Dataset, eps: RademacherSigns
) -> tuple[SurrogateResult, list[tuple[np.ndarray, np.ndarray]]]:
    """Enumeration result and the ordered pairs sorted by descending score."""
    distinct: list[ModelParams] = []
    for cand in candidates:
        if not any(np.array_equal(cand.theta, seen.theta) for seen in distinct):
            distinct.append(cand)
    if len(distinct) < 2:
        raise LipschitzError("at least two distinct candidate parameter vectors are required")

    losses = [example_losses(c, data.features, data.labels) for c in distinct]
    best = 0.0
    trace = []
    scored: list[tuple[float, int, int]] = []
    for i, first in enumerate(distinct):
        for j, second in enumerate(distinct):
            if i == j:
                continue
            distance = float(np.linalg.norm(first.theta - second.theta))
            score = surrogate_ratio(losses[i], losses[j], eps.eps, distance)
            best = max(best, score)
            scored.append((score, i, j))
            trace.append((len(scored), best))
    scored.sort(key=lambda item: -item[0])
    pairs = [(distinct[i].theta, distinct[j].theta) for _, i, j in scored]
    return SurrogateResult(best, tuple(trace)), pairs


def _full_score(
    shape: ModelShape, w: np.ndarray, w2: np.ndarray, data: Dataset, eps: np.ndarray
) -> float:
    """|F(w, w')| on the full sample, i.e. the better of the two orderings."""
    distance = float(np.linalg.norm(w - w2))
    if distance < config.LIPSCHITZ_MIN_DISTANCE:
        return 0.0
    first = example_losses(ModelParams(shape, w), data.features, data.labels)
    second = example_losses(ModelParams(shape, w2), data.features, data.labels)
    return abs(surrogate_ratio(first, second, eps, distance))


def _ascent_gradient(
    shape: ModelShape,
    w: np.ndarray,
    w2: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    signs: np.ndarray,
) -> np.ndarray:
    """Gradient of the batch surrogate with respect to the stacked vector [w, w']."""
    weights = signs / signs.shape[0]
    grad_w, losses_w = weighted_loss_gradient(ModelParams(shape, w), features, labels, weights)
    grad_w2, losses_w2 = weighted_loss_gradient(ModelParams(shape, w2), features, labels, weights)
    diff = w2 - w
    distance = float(np.linalg.norm(diff))
    numerator = float(np.sum(weights * (losses_w2 - losses_w)))
    radial = numerator * diff / distance**3
    d_w2 = grad_w2 / distance - radial
    d_w = -grad_w / distance + radial
    return np.concatenate([d_w, d_w2])


def _initial_pair(
    shape: ModelShape, rng: np.random.Generator, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Two independent init draws, each perturbed by N(0, 0.04²) noise."""
    first = init_params(shape, seed).theta
    second = init_params(shape, seed + 1).theta
    scale = config.LIPSCHITZ_INIT_PERTURBATION
    first = first + scale * rng.standard_normal(first.shape[0])
    second = second + scale * rng.standard_normal(second.shape[0])
    return first, second


def maximize_surrogate(
    data: Dataset,
    eps: RademacherSigns,
    shape: ModelShape,
    cocob_alpha: float = config.COCOB_ALPHA,
    iters: int = config.LIPSCHITZ_ITERATIONS,
    batch: int = config.BATCH_SIZE,
    seed: int = config.RANDOM_SEED,
    restarts: int = config.LIPSCHITZ_RESTARTS,
    candidates: list[ModelParams] | None = None,
    checkpoint_every: int = config.LIPSCHITZ_CHECKPOINT_EVERY,
) -> SurrogateResult:
    """
    Best full-sample surrogate value found by mini-batch coin-betting ascent.

    With ``candidates`` every ordered pair is scored first, and the restarts
    start from the highest-scoring pairs instead of random draws, so the
    result is never below the finite-set maximum.

    Args:
        data: Sample S
        eps: Rademacher signs, one per row of S
        shape: Model architecture
        cocob_alpha: COCOB betting-fraction parameter
        iters: Ascent iterations per restart
        batch: Mini-batch size
        seed: Seed for initial points, perturbations and batch order
        restarts: Independent ascent runs
        candidates: Optional finite set of starting points
        checkpoint_every: Iterations between full-sample scorings

    Returns:
        SurrogateResult(value >= 0, trace of (iteration, best value so far))

    Raises:
        LipschitzError: On sign/data size mismatch, fewer than two distinct
            candidates or non-positive iteration counts
    """
    _check_signs(data, eps)
    validate_sample_size(iters, "iters")
    validate_sample_size(batch, "batch")
    validate_sample_size(restarts, "restarts")

    rng = np.random.default_rng(seed)
    d = shape.param_count
    best = 0.0
    trace: list[tuple[int, float]] = []
    starts: list[tuple[np.ndarray, np.ndarray]] = []
    if candidates is not None:
        enumerated, starts = _enumerate_pairs(candidates, data, eps)
        best = enumerated.value
        trace.append((0, best))
    step = 0
    batch = min(batch, data.m)

    for restart in range(restarts):
        if starts:
            w, w2 = (theta.copy() for theta in starts[restart % len(starts)])
        else:
            w, w2 = _initial_pair(shape, rng, seed + 2 * restart)
        optimizer = CocobOptimizer(np.concatenate([w, w2]), alpha=cocob_alpha)
        best = max(best, _full_score(shape, w, w2, data, eps.eps))
        order = rng.permutation(data.m)
        cursor = 0
        for it in range(1, iters + 1):
            if cursor + batch > data.m:
                order = rng.permutation(data.m)
                cursor = 0
            rows = order[cursor : cursor + batch]
            cursor += batch

            if np.linalg.norm(w - w2) < config.LIPSCHITZ_MIN_DISTANCE:
                w2 = w2 + config.LIPSCHITZ_INIT_PERTURBATION * rng.standard_normal(d)
                optimizer = CocobOptimizer(np.concatenate([w, w2]), alpha=cocob_alpha)

            grad = _ascent_gradient(
                shape, w, w2, data.features[rows], data.labels[rows], eps.eps[rows]
            )
            stacked = optimizer.step(-grad)
            w, w2 = stacked[:d], stacked[d:]
            step += 1

            if it % checkpoint_every == 0 or it == iters:
                best = max(best, _full_score(shape, w, w2, data, eps.eps))
                trace.append((step, best))

    return SurrogateResult(best, tuple(trace))


def lipschitz_constant(
    surrogate: float,
    loss_lip: float,
    m: int,
    delta: float,
    trace: tuple[tuple[int, float], ...] = (),
) -> LipschitzEstimate:
    """
    Assemble L(m, δ) = 2·surrogate + 3·loss_lip·√(2 ln(4/δ)/m).

    Raises:
        LipschitzError: If delta is outside (0, 1), surrogate < 0 or m < 1
    """
    try:
        validate_delta(delta)
        validate_sample_size(m)
    except ValueError as e:
        raise LipschitzError(str(e))
    if surrogate < 0.0:
        raise LipschitzError(f"surrogate must be >= 0, got {surrogate}")
    value = 2.0 * surrogate + 3.0 * loss_lip * math.sqrt(2.0 * math.log(4.0 / delta) / m)
    return LipschitzEstimate(float(surrogate), float(loss_lip), int(m), float(delta), value, trace)


def lipschitz_for_squared_gap(est: LipschitzEstimate, gap_bound: float = 1.0) -> float:
    """
    Lipschitz constant of the squared gap: 2·gap_bound·L(m, δ).

    Raises:
        LipschitzError: If gap_bound is outside (0, 1]
    """
    if not 0.0 < gap_bound <= 1.0:
        raise LipschitzError(f"gap_bound must be in (0, 1], got {gap_bound}")
    return 2.0 * gap_bound * est.value


def estimate_lipschitz(
    data: Dataset,
    shape: ModelShape,
    delta: float,
    seed: int = config.RANDOM_SEED,
    iters: int = config.LIPSCHITZ_ITERATIONS,
    restarts: int = config.LIPSCHITZ_RESTARTS,
    batch: int = config.BATCH_SIZE,
    candidates: list[ModelParams] | None = None,
    verbose: bool = True,
) -> LipschitzEstimate:
    """
    Full pipeline: draw signs, maximise the surrogate, assemble L(m, δ).

    ``delta`` is the confidence share reserved for the Lipschitz event.
    """
    if verbose:
        print("\n" + "=" * 60)
        print("Estimating the Lipschitz constant of the generalisation gap")
        print("=" * 60)
        print(f"m = {data.m}, δ share = {delta:.4g}, restarts = {restarts}, iters = {iters}")

    eps = sample_rademacher(data.m, seed)
    result = maximize_surrogate(
        data,
        eps,
        shape,
        iters=iters,
        batch=batch,
        seed=seed,
        restarts=restarts,
        candidates=candidates,
    )
    estimate = lipschitz_constant(
        result.value, loss_lipschitz_const(shape), data.m, delta, trace=result.trace
    )
    if verbose:
        print(f"✓ Surrogate: {estimate.surrogate:.6f}")
        print(f"✓ L(m, δ): {estimate.value:.6f}")
    return estimate
