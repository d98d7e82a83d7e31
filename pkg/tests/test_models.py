"""
Tests for model shapes, the margin loss, its hand-derived gradient and checkpoints.
"""

import math

import numpy as np
import pytest

from src.models import (
    CheckpointError,
    ModelError,
    ModelParams,
    ModelShape,
    empirical_risk,
    init_params,
    load_checkpoint,
    loss_gradient,
    loss_lipschitz_const,
    margin_loss,
    mean_loss_gradient,
    predict,
    project_frobenius,
    save_checkpoint,
)
from src.models.network import frobenius_norms, hidden_activations
from tests.utils import (
    central_difference,
    make_blobs,
    relative_error,
    small_mlp_shape,
    smooth_point,
)


def test_param_count_and_unpack_layout() -> None:
    """Flat vector sizes follow the documented layout for both architectures."""
    linear = ModelShape.linear(4, 3)
    assert linear.param_count == 3 * 4 + 3

    mlp = ModelShape.mlp(4, 3, hidden_width=6, depth=2)
    assert mlp.param_count == (6 * 4 + 6) + (6 * 6 + 6) + (3 * 6 + 3)

    theta = np.arange(mlp.param_count, dtype=float)
    layers = ModelParams(mlp, theta).unpack()
    assert [w.shape for w, _ in layers] == [(6, 4), (6, 6), (3, 6)]
    assert layers[0][0][0, 0] == 0.0
    assert layers[0][1][0] == 24.0
    np.testing.assert_array_equal(ModelParams.pack(mlp, layers).theta, theta)
    print("✓ Parameter layout test passed")


def test_shape_validation() -> None:
    """Malformed shapes and parameter vectors raise ModelError."""
    with pytest.raises(ModelError):
        ModelShape.linear(4, 1)
    with pytest.raises(ModelError):
        ModelShape("conv", 4, 2, 1.0)  # type: ignore[arg-type]
    with pytest.raises(ModelError):
        ModelShape.mlp(4, 2, leaky_slope=1.5)
    with pytest.raises(ModelError):
        ModelParams(ModelShape.linear(4, 2), np.zeros(3))
    print("✓ Shape validation test passed")


def test_shape_dict_round_trip() -> None:
    shape = small_mlp_shape()
    assert ModelShape.from_dict(shape.to_dict()) == shape
    print("✓ Shape dict test passed")


def test_zero_linear_binary_risk_is_one_half() -> None:
    """All-zero scores give one active hinge of value 1, divided by |Y| = 2."""
    data = make_blobs(m=50)
    params = init_params(ModelShape.linear(data.n_features, 2))
    assert empirical_risk(params, data.features, data.labels) == pytest.approx(0.5)
    print("✓ Zero-weight risk test passed")


def test_margin_loss_values() -> None:
    """Hinge sum is clamped to 1 and vanishes for a large correct margin."""
    assert margin_loss(np.array([1.0, 0.0, 0.0]), 0, alpha=2.0) == 0.0
    # margins 0.2 and 0.4 with α=2: hinges 0.6 and 0.2, sum/|Y| = 0.8/3
    assert margin_loss(np.array([0.4, 0.2, 0.0]), 0, alpha=2.0) == pytest.approx(0.8 / 3.0)
    assert margin_loss(np.array([0.0, 5.0, 5.0]), 0, alpha=2.0) == 1.0
    with pytest.raises(ModelError):
        margin_loss(np.array([0.0, 1.0]), 2, alpha=1.0)
    print("✓ Margin loss test passed")


def test_mlp_hidden_activations_stay_in_unit_ball() -> None:
    shape = small_mlp_shape(width=16)
    rng = np.random.default_rng(4)
    params = ModelParams(shape, 3.0 * rng.standard_normal(shape.param_count))
    X = make_blobs(m=40).features
    for activation in hidden_activations(params, X):
        assert np.all(np.linalg.norm(activation, axis=1) <= 1.0 + 1e-12)
    print("✓ Hidden projection test passed")


@pytest.mark.parametrize("scale", [0.1, 1.0])
def test_loss_gradient_matches_finite_differences(scale: float) -> None:
    """Reverse pass agrees with central differences away from kinks."""
    shape = small_mlp_shape(n=5, class_count=3)
    data = make_blobs(m=20, n=5, class_count=3)
    rng = np.random.default_rng(11)
    theta = smooth_point(rng, shape.param_count, scale=scale)

    for i in range(3):
        x, y = data.features[i], int(data.labels[i])
        analytic = loss_gradient(ModelParams(shape, theta), x, y)
        numeric = central_difference(
            lambda t: margin_loss(predict(ModelParams(shape, t), x), y, shape.margin_scale),
            theta,
        )
        assert relative_error(analytic, numeric) < 1e-5
    print(f"✓ Loss gradient test passed (scale={scale})")


def test_linear_gradient_matches_finite_differences() -> None:
    shape = ModelShape.linear(5, 2, margin_scale=2.0)
    data = make_blobs(m=30)
    theta = smooth_point(np.random.default_rng(5), shape.param_count)

    analytic, value = mean_loss_gradient(ModelParams(shape, theta), data.features, data.labels)
    numeric = central_difference(
        lambda t: empirical_risk(ModelParams(shape, t), data.features, data.labels), theta
    )
    expected = empirical_risk(ModelParams(shape, theta), data.features, data.labels)
    assert value == pytest.approx(expected)
    assert relative_error(analytic, numeric) < 1e-5
    print("✓ Linear batch gradient test passed")


def test_loss_lipschitz_constants() -> None:
    """√2·α for linear models and α·√(2(K+2)) for MLPs."""
    assert loss_lipschitz_const(ModelShape.linear(10, 2)) == pytest.approx(35.355, abs=1e-3)
    assert loss_lipschitz_const(ModelShape.mlp(10, 2, depth=1)) == pytest.approx(612.37, abs=1e-2)
    assert loss_lipschitz_const(ModelShape.mlp(10, 2, margin_scale=1.0, depth=3)) == pytest.approx(
        math.sqrt(10.0)
    )
    print("✓ Lipschitz constant test passed")


def test_project_frobenius() -> None:
    """Every MLP weight matrix ends with Frobenius norm <= 1; biases are untouched."""
    shape = small_mlp_shape()
    rng = np.random.default_rng(6)
    params = ModelParams(shape, 2.0 * rng.standard_normal(shape.param_count))
    projected = project_frobenius(params)
    assert all(norm <= 1.0 + 1e-12 for norm in frobenius_norms(projected))
    for (_, bias_a), (_, bias_b) in zip(params.unpack(), projected.unpack()):
        np.testing.assert_array_equal(bias_a, bias_b)

    linear = init_params(ModelShape.linear(3, 2))
    assert project_frobenius(linear) is linear
    print("✓ Frobenius projection test passed")


def test_checkpoint_round_trip(tmp_path) -> None:
    shape = small_mlp_shape()
    params = init_params(shape, seed=3)
    path = save_checkpoint(
        tmp_path / "model.pbfg",
        params,
        extra_arrays={"prior_mean": np.ones(shape.param_count)},
        meta={"posterior_kind": "gaussian", "sigma": 0.01},
    )
    loaded = load_checkpoint(path)
    assert loaded.shape == shape
    np.testing.assert_array_equal(loaded.params.theta, params.theta)
    np.testing.assert_array_equal(loaded.arrays["prior_mean"], np.ones(shape.param_count))
    assert loaded.meta["sigma"] == 0.01
    print("✓ Checkpoint round-trip test passed")


def test_checkpoint_errors(tmp_path) -> None:
    """Missing, foreign, truncated and over-long files raise CheckpointError."""
    shape = ModelShape.linear(3, 2)
    params = init_params(shape)
    good = save_checkpoint(tmp_path / "good.pbfg", params)
    blob = good.read_bytes()

    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "missing.pbfg")

    foreign = tmp_path / "foreign.pbfg"
    foreign.write_bytes(b"XXXX" + blob[4:])
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(foreign)

    future = tmp_path / "future.pbfg"
    future.write_bytes(blob[:4] + (99).to_bytes(4, "little") + blob[8:])
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(future)

    truncated = tmp_path / "truncated.pbfg"
    truncated.write_bytes(blob[:-8])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(truncated)

    trailing = tmp_path / "trailing.pbfg"
    trailing.write_bytes(blob + b"\x00")
    with pytest.raises(CheckpointError, match="Trailing"):
        load_checkpoint(trailing)

    with pytest.raises(CheckpointError):
        save_checkpoint(tmp_path / "bad.pbfg", params, extra_arrays={"theta": np.zeros(8)})
    print("✓ Checkpoint error test passed")
