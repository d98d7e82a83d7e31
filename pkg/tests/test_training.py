"""
Tests for the bound-minimisation objective, the training loop and ERM priors.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from src.bounds import kl_wass_gap, mcallester_gap
from src.data_loader import synth_gaussian_blobs
from src.lipschitz import lipschitz_constant, lipschitz_for_squared_gap
from src.measures import DiracMeasure, GaussianMeasure, kl_gaussian, w1_dirac_to_gaussian
from src.models import ModelParams, ModelShape, empirical_risk, load_checkpoint
from src.models.network import frobenius_norms
from src.training import (
    TrainableState,
    TrainConfig,
    TrainingError,
    eta_from_state,
    lambda_value,
    objective_and_grad,
    prepare_objective,
    save_training_checkpoint,
    train,
    train_erm_prior,
    training_ledger,
)
from src.training.objective import prior_from_state
from tests.utils import central_difference, make_blobs, relative_error, smooth_point


def _lipschitz_for(cfg: TrainConfig, m: int, surrogate: float = 0.01, loss_lip: float = 2.0):
    return lipschitz_constant(surrogate, loss_lip, m, training_ledger(cfg).share("lipschitz"))


def _setup(cfg: TrainConfig, shape: ModelShape, prior: GaussianMeasure, m: int):
    lip = _lipschitz_for(cfg, m) if cfg.uses_wasserstein else None
    return prepare_objective(cfg, shape, prior, m, lip)


def _random_state(rng: np.random.Generator, d: int) -> TrainableState:
    return TrainableState(
        smooth_point(rng, d, scale=0.3),
        math.log(0.2),
        float(rng.normal()),
        math.log(0.3),
    )


def test_eta_from_state_examples() -> None:
    """λ=0.5 halves the way to the prior mean; λ=0 and λ=1 hit the endpoints."""
    prior = GaussianMeasure(np.zeros(2), 0.5)
    state = TrainableState(np.array([2.0, 0.0]), math.log(0.1), 0.0, math.log(0.5))

    dirac = TrainConfig(posterior_kind="dirac", learn_prior_variance=False)
    eta = eta_from_state(state, prior, dirac)
    np.testing.assert_allclose(eta.mean, [1.0, 0.0])
    assert eta.std == pytest.approx(0.1)

    gaussian = TrainConfig(posterior_kind="gaussian", learn_prior_variance=False)
    eta = eta_from_state(state, prior, gaussian)
    assert eta.variance == pytest.approx(0.5 * 0.01 + 0.5 * 0.25)

    kl_only = replace(gaussian, interpolation="kl-only")
    eta = eta_from_state(state, prior, kl_only)
    np.testing.assert_allclose(eta.mean, state.theta)
    assert eta.std == pytest.approx(state.sigma)

    wass_only = replace(gaussian, interpolation="wasserstein-only")
    eta = eta_from_state(state, prior, wass_only)
    np.testing.assert_allclose(eta.mean, prior.mean)
    assert eta.std == pytest.approx(prior.std)

    tied = replace(dirac, interpolation="wasserstein-only")
    assert eta_from_state(state, prior, tied).std == pytest.approx(prior.std)
    print("✓ η-from-state test passed")


def test_train_config_validation() -> None:
    with pytest.raises(ValueError):
        TrainConfig(posterior_kind="dirac", interpolation="kl-only")
    with pytest.raises(ValueError):
        TrainConfig(posterior_kind="dirac", objective="mcallester")
    with pytest.raises(ValueError):
        TrainConfig(objective="catoni")
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(lambda_init=1.0)
    assert TrainConfig(posterior_kind="gaussian", objective="mcallester").lambda_pin == 1.0
    assert not TrainConfig(posterior_kind="gaussian", interpolation="kl-only").uses_wasserstein
    print("✓ TrainConfig validation test passed")


@pytest.mark.parametrize(
    "kind, interpolation, learn_prior",
    [
        ("dirac", "learned", True),
        ("dirac", "learned", False),
        ("dirac", "wasserstein-only", True),
        ("gaussian", "learned", True),
        ("gaussian", "learned", False),
        ("gaussian", "kl-only", True),
        ("gaussian", "wasserstein-only", True),
    ],
)
def test_objective_gradient_matches_finite_differences(kind, interpolation, learn_prior) -> None:
    """Gradient over θ, log σ, λ-logit and log σ_P agrees with central differences."""
    data = make_blobs(m=40)
    shape = ModelShape.linear(data.n_features, 2, margin_scale=2.0)
    cfg = TrainConfig(
        posterior_kind=kind, interpolation=interpolation, learn_prior_variance=learn_prior
    )
    prior = GaussianMeasure(np.zeros(shape.param_count), 0.3)
    setup = _setup(cfg, shape, prior, data.m)
    rng = np.random.default_rng(21)

    for _ in range(3):
        state = _random_state(rng, shape.param_count)
        noise = rng.standard_normal(shape.param_count) if kind == "gaussian" else None

        def value(vector: np.ndarray) -> float:
            current = TrainableState.from_vector(vector)
            return objective_and_grad(current, data.features, data.labels, setup, noise).value

        analytic = objective_and_grad(state, data.features, data.labels, setup, noise).grad
        numeric = central_difference(value, state.to_vector(), h=1e-5)
        assert relative_error(analytic, numeric) < 1e-4
    print(f"✓ Objective gradient test passed ({kind}, {interpolation}, {learn_prior})")


def test_objective_equals_certificate_formula() -> None:
    """Dirac value = R̂ + kl_wass_gap(2L, W₁(δ_w, η), KL(η‖P), m, δ_bound)."""
    data = make_blobs(m=60)
    shape = ModelShape.linear(data.n_features, 2, margin_scale=2.0)
    cfg = TrainConfig(posterior_kind="dirac", log_surcharge=0.7)
    prior = GaussianMeasure(np.zeros(shape.param_count), 0.3)
    lip = _lipschitz_for(cfg, data.m)
    setup = prepare_objective(cfg, shape, prior, data.m, lip)
    state = _random_state(np.random.default_rng(2), shape.param_count)

    result = objective_and_grad(state, data.features, data.labels, setup)
    learned_prior = prior_from_state(state, prior, cfg)
    eta = eta_from_state(state, learned_prior, cfg)
    risk = empirical_risk(ModelParams(shape, state.theta), data.features, data.labels)
    gap = kl_wass_gap(
        lipschitz_for_squared_gap(lip),
        w1_dirac_to_gaussian(DiracMeasure(state.theta), eta),
        kl_gaussian(eta, learned_prior),
        data.m,
        training_ledger(cfg).share("bound"),
        0.7,
    )
    assert result.risk_term == pytest.approx(risk, abs=1e-12)
    assert result.gap_term == pytest.approx(gap, rel=1e-10)
    assert result.value == pytest.approx(risk + gap, rel=1e-10)
    print("✓ Objective / certificate agreement test passed")


def test_mcallester_objective_uses_its_own_constant() -> None:
    data = make_blobs(m=60)
    shape = ModelShape.linear(data.n_features, 2, margin_scale=2.0)
    cfg = TrainConfig(posterior_kind="gaussian", objective="mcallester", learn_prior_variance=False)
    prior = GaussianMeasure(np.zeros(shape.param_count), 0.3)
    setup = prepare_objective(cfg, shape, prior, data.m, None)
    state = _random_state(np.random.default_rng(3), shape.param_count)
    noise = np.random.default_rng(4).standard_normal(shape.param_count)

    result = objective_and_grad(state, data.features, data.labels, setup, noise)
    posterior = GaussianMeasure(state.theta, state.sigma)
    expected = mcallester_gap(
        kl_gaussian(posterior, prior), data.m, training_ledger(cfg).share("bound")
    )
    assert result.gap_term == pytest.approx(expected, rel=1e-10)
    assert result.grad[-2] == 0.0
    print("✓ McAllester objective test passed")


def test_zero_model_risk_term_is_one_half() -> None:
    data = make_blobs(m=40)
    shape = ModelShape.linear(data.n_features, 2)
    cfg = TrainConfig(posterior_kind="dirac")
    prior = GaussianMeasure(np.zeros(shape.param_count), 0.1)
    setup = _setup(cfg, shape, prior, data.m)
    state = TrainableState.initial(np.zeros(shape.param_count), 0.01, 0.5, 0.1)
    result = objective_and_grad(state, data.features, data.labels, setup)
    assert result.risk_term == 0.5
    assert result.gap_term > 0.0
    print("✓ Zero-model risk term test passed")


def test_gaussian_objective_needs_noise() -> None:
    data = make_blobs(m=20)
    shape = ModelShape.linear(data.n_features, 2)
    cfg = TrainConfig(posterior_kind="gaussian")
    prior = GaussianMeasure(np.zeros(shape.param_count), 0.1)
    setup = _setup(cfg, shape, prior, data.m)
    state = TrainableState.initial(np.zeros(shape.param_count), 0.01, 0.5, 0.1)
    with pytest.raises(ValueError):
        objective_and_grad(state, data.features, data.labels, setup)
    with pytest.raises(TrainingError):
        prepare_objective(cfg, shape, prior, data.m, None)
    print("✓ Noise requirement test passed")


def _short_config(kind: str = "dirac", **overrides) -> TrainConfig:
    base = TrainConfig(
        posterior_kind=kind,
        batch_size=32,
        min_iterations=30,
        mc_samples=20,
        trajectory_every=5,
        seed=3,
    )
    return replace(base, **overrides)


def test_short_training_run_is_certified_and_deterministic(tmp_path) -> None:
    data = make_blobs(m=200)
    shape = ModelShape.linear(data.n_features, 2, margin_scale=5.0)
    cfg = _short_config()
    cfg = replace(cfg, lipschitz=_lipschitz_for(cfg, data.m, loss_lip=5.0 * math.sqrt(2.0)))

    result = train(data, shape, cfg, verbose=False)
    # 200 rows in batches of 32 is 7 iterations per epoch; the loop finishes the epoch
    assert result.iterations == 35
    assert len(result.trajectory) == 7
    assert result.trajectory[-1]["iteration"] == 35
    report = result.report
    assert report.recompute() == pytest.approx(report.value, abs=1e-12)
    assert report.value >= report.terms["risk_term"]
    assert [e.purpose for e in report.delta_ledger.entries] == ["bound", "lipschitz"]
    assert 0.0 < result.lam < 1.0
    assert isinstance(result.posterior, DiracMeasure)

    again = train(data, shape, cfg, verbose=False)
    assert again.report.value == report.value
    np.testing.assert_array_equal(again.posterior.mean, result.posterior.mean)

    path = save_training_checkpoint(tmp_path / "run.pbfg", result, meta={"dataset": "blobs"})
    stored = load_checkpoint(path)
    np.testing.assert_array_equal(stored.params.theta, result.posterior.mean)
    np.testing.assert_array_equal(stored.arrays["eta_mean"], result.eta.mean)
    assert stored.meta["posterior_kind"] == "dirac"
    assert stored.meta["prior_std"] == pytest.approx(result.prior.std)
    assert stored.meta["dataset"] == "blobs"
    print(f"✓ Short training run passed (bound {report.value:.4f})")


def test_short_training_improves_on_initial_objective() -> None:
    data = make_blobs(m=200)
    shape = ModelShape.linear(data.n_features, 2, margin_scale=5.0)
    cfg = _short_config(min_iterations=100, learn_prior_variance=False)
    cfg = replace(cfg, lipschitz=_lipschitz_for(cfg, data.m, loss_lip=5.0 * math.sqrt(2.0)))
    result = train(data, shape, cfg, verbose=False)
    first, last = result.trajectory[0]["objective"], result.trajectory[-1]["objective"]
    assert last < first
    print(f"✓ Training progress test passed ({first:.4f} → {last:.4f})")


def test_gaussian_kl_only_certificate() -> None:
    """η = ρ: no Wasserstein event in the ledger, λ pinned to 1."""
    data = make_blobs(m=200)
    shape = ModelShape.linear(data.n_features, 2, margin_scale=5.0)
    cfg = _short_config("gaussian", interpolation="kl-only")
    result = train(data, shape, cfg, verbose=False)

    report = result.report
    assert result.lam == 1.0
    assert result.lipschitz is None
    assert [e.purpose for e in report.delta_ledger.entries] == ["bound", "hoeffding"]
    assert report.terms["wasserstein"] == 0.0
    assert report.terms["kl"] == pytest.approx(kl_gaussian(result.posterior, result.prior))
    assert report.recompute() == pytest.approx(report.value, abs=1e-12)
    print("✓ Gaussian KL-only certificate test passed")


def test_lipschitz_share_mismatch_is_rejected() -> None:
    data = make_blobs(m=100)
    shape = ModelShape.linear(data.n_features, 2)
    cfg = _short_config(lipschitz=lipschitz_constant(0.01, 1.0, data.m, 0.05))
    with pytest.raises(TrainingError):
        train(data, shape, cfg, verbose=False)
    print("✓ Lipschitz share mismatch test passed")


def test_frobenius_projection_during_training() -> None:
    data = make_blobs(m=64)
    shape = ModelShape.mlp(data.n_features, 2, margin_scale=2.0, hidden_width=8, depth=1)
    cfg = _short_config(enforce_frobenius=True, min_iterations=10, batch_size=16)
    cfg = replace(cfg, lipschitz=_lipschitz_for(cfg, data.m))
    result = train(data, shape, cfg, verbose=False)
    norms = frobenius_norms(ModelParams(shape, result.posterior.mean))
    assert max(norms) <= 1.0 + 1e-12
    assert any("Frobenius-norm hypothesis enforced" in note for note in result.report.notes)
    print("✓ Frobenius projection training test passed")


def test_erm_prior_splits_are_disjoint() -> None:
    data = make_blobs(m=200)
    shape = ModelShape.linear(data.n_features, 2, margin_scale=5.0)
    cfg = _short_config()
    erm = train_erm_prior(data, 0.25, cfg, shape, max_epochs=4, verbose=False)

    assert erm.prior_split.m == 50
    assert erm.cert_split.m == 150
    assert set(erm.prior_split.indices).isdisjoint(set(erm.cert_split.indices))
    assert erm.t_epochs == 4
    assert len(erm.epoch_risks) == 4
    assert erm.prior_mean.shape == (shape.param_count,)
    cert = erm.cert_split
    best = empirical_risk(ModelParams(shape, erm.prior_mean), cert.features, cert.labels)
    assert best == pytest.approx(min(erm.epoch_risks))

    with pytest.raises(TrainingError):
        train_erm_prior(data, 0.001, cfg, shape, max_epochs=2, verbose=False)
    print("✓ ERM prior split test passed")


@pytest.mark.slow
def test_certificate_validity_simulation() -> None:
    """The certified bound exceeds fresh-sample risk in at least 19 of 20 runs."""
    valid = 0
    for seed in range(20):
        data = synth_gaussian_blobs(500, 10, 2, 0.8, seed=seed, center_seed=0, noise=0.3)
        fresh = synth_gaussian_blobs(
            100_000, 10, 2, 0.8, seed=10_000 + seed, center_seed=0, noise=0.3
        )
        shape = ModelShape.linear(10, 2)
        cfg = TrainConfig(
            posterior_kind="dirac", batch_size=64, min_iterations=200, seed=seed, mc_samples=10
        )
        result = train(data, shape, cfg, verbose=False, lipschitz_iters=50, lipschitz_restarts=1)
        params = ModelParams(shape, result.posterior.mean)
        test_risk = empirical_risk(params, fresh.features, fresh.labels)
        assert math.isfinite(result.report.value)
        valid += int(result.report.value >= test_risk)
    assert valid >= 19
    print(f"✓ Validity simulation passed ({valid}/20)")


def test_lambda_value_respects_pins() -> None:
    state = TrainableState(np.zeros(3), 0.0, 10.0, 0.0)
    kl_only = TrainConfig(posterior_kind="gaussian", interpolation="kl-only")
    assert lambda_value(state, kl_only) == 1.0
    assert lambda_value(state, TrainConfig(interpolation="wasserstein-only")) == 0.0
    assert lambda_value(state, TrainConfig()) == pytest.approx(1.0 / (1.0 + math.exp(-10.0)))
    print("✓ λ pin test passed")
