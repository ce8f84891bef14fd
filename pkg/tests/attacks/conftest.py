import dataclasses

import numpy as np
import pytest

from robust_amc.models import ModelParams, init_model, mlp_small, predict_batch


@pytest.fixture
def smooth_model() -> ModelParams:
    arch = dataclasses.replace(mlp_small(3, input_length=16), activation="tanh")
    return init_model(arch, seed=7, model_id="smooth")


@pytest.fixture
def batch(smooth_model, rng) -> tuple[np.ndarray, np.ndarray]:
    """Random frames labelled with the model's own predictions."""
    x = rng.normal(size=(40, 2, 16))
    return x, predict_batch(smooth_model, x)
