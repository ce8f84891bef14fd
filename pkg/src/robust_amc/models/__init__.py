"""Desk-scale modulation classifiers over a flat parameter vector."""

from .architecture import (
    PRESETS,
    Architecture,
    LayerSlot,
    cnn1d_lite,
    mlp_small,
    mlp_wide,
    preset,
)
from .checkpoint import read_checkpoint, write_checkpoint
from .network import (
    ModelParams,
    argmax_class,
    batch_loss,
    forward_logits,
    init_model,
    input_gradient,
    input_gradients,
    logits,
    loss_and_grad,
    model_hash,
    predict,
    predict_batch,
)
from .training import TrainConfig, accuracy, train

__all__ = [
    "PRESETS",
    "Architecture",
    "LayerSlot",
    "ModelParams",
    "TrainConfig",
    "accuracy",
    "argmax_class",
    "batch_loss",
    "cnn1d_lite",
    "forward_logits",
    "init_model",
    "input_gradient",
    "input_gradients",
    "logits",
    "loss_and_grad",
    "mlp_small",
    "mlp_wide",
    "model_hash",
    "predict",
    "predict_batch",
    "preset",
    "read_checkpoint",
    "train",
    "write_checkpoint",
]
