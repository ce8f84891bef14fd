import numpy as np
import pydantic
import pytest

from robust_amc.errors import DatasetFormatError
from robust_amc.signals import (
    GeneratorConfig,
    LabeledDataset,
    ModulationParams,
    ModulationScheme,
    dataset_hash,
    generate_dataset,
    read_dataset,
    render_frame,
    write_dataset,
)


@pytest.fixture(scope="module")
def small_cfg() -> GeneratorConfig:
    return GeneratorConfig(
        schemes=(ModulationScheme.BPSK, ModulationScheme.QAM16, ModulationScheme.GFSK),
        snr_db=(0, 10),
        frames_per_class_per_snr=4,
        frame_length=32,
        seed=42,
    )


@pytest.fixture(scope="module")
def small_ds(small_cfg) -> LabeledDataset:
    return generate_dataset(small_cfg)


def test_counts_are_balanced():
    cfg = GeneratorConfig(snr_db=(0, 4, 8, 12, 16), frames_per_class_per_snr=50)
    assert cfg.n_frames == 2000
    ds = generate_dataset(cfg.model_copy(update={"frame_length": 16}))
    assert len(ds) == 2000
    np.testing.assert_array_equal(ds.class_counts(), [250] * 8)


def test_generation_is_deterministic(small_cfg, small_ds, tmp_path):
    again = generate_dataset(small_cfg)
    assert again == small_ds
    a = write_dataset(small_ds, tmp_path / "a.amcd")
    b = write_dataset(again, tmp_path / "b.amcd")
    assert a.read_bytes() == b.read_bytes()


def test_worker_count_does_not_change_output(small_cfg, small_ds):
    threaded = generate_dataset(small_cfg.model_copy(update={"workers": 4}))
    assert threaded == small_ds
    assert dataset_hash(threaded) == dataset_hash(small_ds)


def test_clean_frames_have_near_unit_power(rng):
    cfg = GeneratorConfig(modulation=ModulationParams(rolloff=0.35))
    for scheme in ModulationScheme:
        for _ in range(20):
            assert 0.5 <= render_frame(scheme, rng, cfg).power() <= 2.0


def test_round_trip_is_bit_exact(small_ds, tmp_path):
    path = write_dataset(small_ds, tmp_path / "ds.amcd")
    loaded = read_dataset(path)
    assert loaded == small_ds
    assert loaded.class_names == ("BPSK", "QAM16", "GFSK")


def test_empty_dataset_round_trips(tmp_path):
    empty = LabeledDataset.empty(128, ("BPSK", "QPSK"))
    assert read_dataset(write_dataset(empty, tmp_path / "e.amcd")) == empty


def test_corrupted_length_field_is_truncated(small_ds, tmp_path):
    path = write_dataset(small_ds, tmp_path / "ds.amcd")
    raw = bytearray(path.read_bytes())
    raw[16:24] = (len(small_ds) + 1000).to_bytes(8, "little")
    path.write_bytes(bytes(raw))
    with pytest.raises(DatasetFormatError) as err:
        read_dataset(path)
    assert err.value.kind == "truncated"


def test_flipped_payload_byte_fails_checksum(small_ds, tmp_path):
    path = write_dataset(small_ds, tmp_path / "ds.amcd")
    raw = bytearray(path.read_bytes())
    raw[200] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(DatasetFormatError) as err:
        read_dataset(path)
    assert err.value.kind == "checksum"


def test_bad_magic_and_version(small_ds, tmp_path):
    path = write_dataset(small_ds, tmp_path / "ds.amcd")
    raw = path.read_bytes()
    (tmp_path / "magic.amcd").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(DatasetFormatError) as err:
        read_dataset(tmp_path / "magic.amcd")
    assert err.value.kind == "bad_magic"

    (tmp_path / "ver.amcd").write_bytes(raw[:4] + (7).to_bytes(4, "little") + raw[8:])
    with pytest.raises(DatasetFormatError) as err:
        read_dataset(tmp_path / "ver.amcd")
    assert err.value.kind == "version"


def test_invalid_configs_rejected():
    with pytest.raises(pydantic.ValidationError):
        GeneratorConfig(schemes=())
    with pytest.raises(pydantic.ValidationError):
        GeneratorConfig(snr_db=())
    with pytest.raises(pydantic.ValidationError):
        GeneratorConfig(snr_db=(0, 0))


def test_subset_and_concat(small_ds):
    head = small_ds.subset(range(5))
    tail = small_ds.subset(np.arange(5, len(small_ds)))
    assert head.concat(tail) == small_ds
