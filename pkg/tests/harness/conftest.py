import pytest

from robust_amc.harness import AdaptRule
from robust_amc.models import ModelParams, TrainConfig, init_model, mlp_small
from robust_amc.tasks import TaskLibrary
from tests._toys import toy_library as _toy_library

@pytest.fixture
def rule() -> AdaptRule:
    return AdaptRule(lr=0.05, steps=2, scratch_train=TrainConfig(lr=1e-2, batch_size=8, epochs=2))


@pytest.fixture(scope="module")
def toy_library() -> TaskLibrary:
    return _toy_library()


@pytest.fixture(scope="module")
def checkpoints() -> dict[str, ModelParams]:
    arch = mlp_small(2, input_length=8)
    return {
        "maml": init_model(arch, seed=0, model_id="meta-maml"),
        "transfer_clean": init_model(arch, seed=1, model_id="transfer_clean"),
        "scratch": init_model(arch, seed=2, model_id="scratch"),
    }
