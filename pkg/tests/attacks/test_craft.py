import numpy as np
import pytest

from pydantic import ValidationError

from robust_amc.attacks import (
    AttackMethod,
    AttackSpec,
    Perturbation,
    PerturbationCache,
    craft,
    perturbation_from_bytes,
    perturbation_to_bytes,
    psr_db,
)
from robust_amc.errors import DatasetFormatError, ShapeError
from robust_amc.signals import LabeledDataset


@pytest.fixture
def ds(batch) -> LabeledDataset:
    x, y = batch
    return LabeledDataset(x, y, np.zeros(len(y), dtype=np.int64), ("a", "b", "c"))


def test_spec_defaults():
    spec = AttackSpec(method="pgd", eps=0.2, steps=4)
    assert spec.norm == "inf"
    assert spec.p == np.inf
    assert spec.alpha == pytest.approx(0.05)
    assert spec.name == "pgd-linf-e0.2"
    assert AttackSpec(method="cw_l2").norm == "2"
    assert AttackSpec(method="fgsm", eps=0.3, steps=9).alpha == 0.3
    assert AttackSpec(method="mim", psr_db=-10).name == "mim-linf-e0.1-psr-10"
    assert AttackSpec(method="pca", label="pca-A").name == "pca-A"


@pytest.mark.parametrize(
    "kwargs",
    [
        {"method": "pgd", "eps": 0.0},
        {"method": "pgd", "steps": 0},
        {"method": "mim", "momentum": -1.0},
        {"method": "cw_l2", "c": -0.5},
        {"method": "cw_l2", "norm": "inf"},
        {"method": "pca", "norm": "inf"},
        {"method": "deepfool"},
    ],
)
def test_spec_validation(kwargs):
    with pytest.raises(ValidationError):
        AttackSpec(**kwargs)


@pytest.mark.parametrize("method", list(AttackMethod))
def test_craft_respects_budget(smooth_model, ds, method):
    spec = AttackSpec(method=method, eps=0.15, steps=5, c=5.0, cw_lr=0.05)
    pert = craft(spec, smooth_model, ds)
    assert pert.substitute_id == "smooth"
    assert pert.universal == (method is AttackMethod.PCA)
    assert np.all(pert.norms <= pert.epsilon * (1 + 1e-9))
    assert pert.apply_to(ds).labels.tolist() == ds.labels.tolist()


def test_craft_is_deterministic(smooth_model, ds):
    spec = AttackSpec(method="pca", eps=0.2, seed=4)
    assert craft(spec, smooth_model, ds) == craft(spec, smooth_model, ds)


def test_psr_override_rescales_budget(smooth_model, ds):
    spec = AttackSpec(method="fgsm", eps=0.05, psr_db=-15.0)
    pert = craft(spec, smooth_model, ds)
    assert psr_db(pert.delta, ds) == pytest.approx(-15.0, abs=1e-9)
    assert np.all(pert.norms <= pert.epsilon * (1 + 1e-9))
    assert pert.epsilon != spec.eps


def test_perturbation_shape_checks(ds):
    spec = AttackSpec(method="fgsm")
    with pytest.raises(ShapeError):
        Perturbation(np.zeros((3, 16)), spec, 0.1)
    pert = Perturbation(np.zeros((5, 2, 16)), spec, 0.1)
    with pytest.raises(ShapeError):
        pert.apply(ds.frames)


def test_amcp_round_trip_stays_in_budget(smooth_model, ds):
    pert = craft(AttackSpec(method="pgd", eps=0.1, steps=3), smooth_model, ds)
    loaded, meta = perturbation_from_bytes(perturbation_to_bytes(pert, {"dataset_hash": "abc"}))
    assert meta["dataset_hash"] == "abc"
    assert meta["method"] == "pgd"
    assert loaded.spec == pert.spec
    np.testing.assert_allclose(loaded.delta, pert.delta, atol=1e-7)
    assert np.all(loaded.norms <= loaded.epsilon)


def test_amcp_corruption_detected(smooth_model, ds):
    raw = bytearray(perturbation_to_bytes(craft(AttackSpec(method="fgsm"), smooth_model, ds)))
    flipped = bytearray(raw)
    flipped[-10] ^= 0x40
    with pytest.raises(DatasetFormatError) as err:
        perturbation_from_bytes(bytes(flipped))
    assert err.value.kind == "checksum"
    with pytest.raises(DatasetFormatError) as err:
        perturbation_from_bytes(bytes(raw[:-50]))
    assert err.value.kind == "truncated"
    with pytest.raises(DatasetFormatError) as err:
        perturbation_from_bytes(b"AMCD" + bytes(raw[4:]))
    assert err.value.kind == "bad_magic"


def test_cache_hit_equals_miss(smooth_model, ds, tmp_path):
    cache = PerturbationCache(tmp_path)
    spec = AttackSpec(method="mim", eps=0.1, steps=3)
    first = cache.get_or_craft(spec, smooth_model, ds)
    second = cache.get_or_craft(spec, smooth_model, ds)
    assert (cache.misses, cache.hits) == (1, 1)
    assert first == second
    assert len(list(tmp_path.glob("*.amcp"))) == 1


def test_cache_recrafts_corrupt_entry(smooth_model, ds, tmp_path):
    cache = PerturbationCache(tmp_path)
    spec = AttackSpec(method="fgsm", eps=0.1)
    first = cache.get_or_craft(spec, smooth_model, ds)
    path = cache.path_for(spec, smooth_model, ds)
    path.write_bytes(path.read_bytes()[:-3])
    again = cache.get_or_craft(spec, smooth_model, ds)
    assert cache.misses == 2
    assert again == first
