"""Synthetic I/Q modulation datasets and their on-disk format."""

from .channel import ChannelModel, apply_channel
from .dataset import (
    GeneratorConfig,
    LabeledDataset,
    dataset_hash,
    generate_dataset,
    render_frame,
)
from .io import read_dataset, write_dataset
from .modulation import (
    IQFrame,
    ModulationParams,
    ModulationScheme,
    modulate,
    normalize_power,
    symbols_required,
)

__all__ = [
    "ChannelModel",
    "GeneratorConfig",
    "IQFrame",
    "LabeledDataset",
    "ModulationParams",
    "ModulationScheme",
    "apply_channel",
    "dataset_hash",
    "generate_dataset",
    "modulate",
    "normalize_power",
    "read_dataset",
    "render_frame",
    "symbols_required",
    "write_dataset",
]
