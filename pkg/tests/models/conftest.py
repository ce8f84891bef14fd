import pytest

from robust_amc.signals import LabeledDataset
from tests._toys import blobs


@pytest.fixture
def blob_ds() -> LabeledDataset:
    return blobs()
