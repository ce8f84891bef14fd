import pytest

from robust_amc.models import TrainConfig
from robust_amc.signals import LabeledDataset
from robust_amc.tasks import SubstituteZoo, ZooSpec, train_substitutes
from tests._toys import blobs

FAST = TrainConfig(lr=1e-2, batch_size=16, epochs=15)


@pytest.fixture(scope="module")
def clean_ds() -> LabeledDataset:
    return blobs(n_per_class=30)


@pytest.fixture(scope="module")
def zoo_spec() -> ZooSpec:
    return ZooSpec.cycle(3, archs=("mlp_small", "cnn1d_lite"), train=FAST)


@pytest.fixture(scope="module")
def zoo(clean_ds, zoo_spec) -> SubstituteZoo:
    return train_substitutes(clean_ds, zoo_spec)
