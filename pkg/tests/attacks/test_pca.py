import numpy as np
import pytest

from scipy.linalg import eigh

from robust_amc.attacks import gradient_matrix, pca_attack, principal_direction
from robust_amc.errors import DegenerateGradientError, ShapeError
from robust_amc.models import batch_loss, init_model, mlp_small
from robust_amc.signals import LabeledDataset


def _dataset(x: np.ndarray, y: np.ndarray) -> LabeledDataset:
    return LabeledDataset(x, y, np.zeros(len(y), dtype=np.int64), ("a", "b", "c"))


def test_rank_one_gradients_recover_direction(rng):
    v = rng.normal(size=16)
    v /= np.linalg.norm(v)
    g = np.outer(rng.choice([-2.0, -0.5, 1.0, 3.0], size=12), v)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    assert abs(principal_direction(g) @ v) == pytest.approx(1.0, abs=1e-12)


def test_power_iteration_matches_dense_eigensolver(rng):
    u = rng.normal(size=16)
    u /= np.linalg.norm(u)
    g = rng.normal(size=(40, 1)) * u + 0.1 * rng.normal(size=(40, 16))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    _, vecs = eigh(g.T @ g)
    oracle = vecs[:, -1]
    v = principal_direction(g, seed=3)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
    assert abs(v @ oracle) >= 1 - 1e-8


def test_all_zero_gradients_are_degenerate():
    with pytest.raises(DegenerateGradientError):
        principal_direction(np.zeros((5, 16)))

    params = init_model(mlp_small(3, input_length=16), seed=0)
    theta = params.theta.copy()
    slot = next(s for s in params.layout if s.name == "dense0.w")
    theta[slot.offset : slot.stop] = 0.0
    ds = _dataset(np.ones((4, 2, 16)), np.array([0, 1, 2, 0]))
    with pytest.raises(DegenerateGradientError):
        gradient_matrix(params.with_theta(theta), ds)


def test_pca_delta_is_universal_with_exact_norm(smooth_model, batch):
    x, y = batch
    ds = _dataset(x, y)
    delta = pca_attack(smooth_model, ds, 0.3)
    assert delta.shape == (2, 16)
    assert np.linalg.norm(delta) == pytest.approx(0.3, rel=1e-12)


def test_pca_sign_maximises_mean_loss(smooth_model, batch):
    x, y = batch
    ds = _dataset(x, y)
    delta = pca_attack(smooth_model, ds, 0.5)
    plus = batch_loss(smooth_model, x + delta, y).mean()
    minus = batch_loss(smooth_model, x - delta, y).mean()
    assert plus >= minus


def test_pca_needs_two_frames(smooth_model, batch):
    x, y = batch
    with pytest.raises(ShapeError):
        pca_attack(smooth_model, _dataset(x[:1], y[:1]), 0.1)
