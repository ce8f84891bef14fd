"""Meta-adversarial training, its baselines, and online adaptation."""

from .baselines import (
    Baseline,
    Checkpoint,
    adversarial_training_set,
    scratch_model,
    transfer_adversarial,
    transfer_train,
)
from .config import MetaAlgorithm, MetaConfig, config_hash
from .inner import AdaptResult, inner_adapt, online_adapt
from .loss import LossFn, classifier_loss, loss_value, quadratic_loss, value_and_grad
from .outer import (
    OuterStep,
    fomaml_meta_gradient,
    fomaml_outer_step,
    maml_meta_gradient,
    maml_outer_step,
    reptile_outer_step,
)
from .train import MetaResult, meta_train, meta_train_theta

__all__ = [
    "AdaptResult",
    "Baseline",
    "Checkpoint",
    "LossFn",
    "MetaAlgorithm",
    "MetaConfig",
    "MetaResult",
    "OuterStep",
    "adversarial_training_set",
    "classifier_loss",
    "config_hash",
    "fomaml_meta_gradient",
    "fomaml_outer_step",
    "inner_adapt",
    "loss_value",
    "maml_meta_gradient",
    "maml_outer_step",
    "meta_train",
    "meta_train_theta",
    "online_adapt",
    "quadratic_loss",
    "reptile_outer_step",
    "scratch_model",
    "transfer_adversarial",
    "transfer_train",
    "value_and_grad",
]
