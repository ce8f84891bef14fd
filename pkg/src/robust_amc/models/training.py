from __future__ import annotations

import logging

from typing import Literal

import numpy as np

from pydantic import BaseModel, ConfigDict, Field
from sklearn.metrics import accuracy_score
from tqdm import tqdm

from robust_amc.errors import ShapeError, TrainingDivergedError
from robust_amc.signals import LabeledDataset

from .network import ModelParams, loss_and_grad, predict_batch

_LOG = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    """Minibatch optimiser settings for plain supervised training."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    optimizer: Literal["sgd", "adam"] = "adam"
    lr: float = Field(1e-3, ge=0.0)
    batch_size: int = Field(64, ge=1)
    epochs: int = Field(10, ge=1)
    seed: int = 0
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps_adam: float = Field(1e-8, gt=0.0)
    log_every: int = Field(10, ge=1, description="epochs between progress log lines")


class _Adam:
    def __init__(self, size: int, cfg: TrainConfig) -> None:
        self.cfg = cfg
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, theta: np.ndarray, g: np.ndarray) -> np.ndarray:
        c = self.cfg
        self.t += 1
        self.m = c.beta1 * self.m + (1 - c.beta1) * g
        self.v = c.beta2 * self.v + (1 - c.beta2) * g * g
        m_hat = self.m / (1 - c.beta1**self.t)
        v_hat = self.v / (1 - c.beta2**self.t)
        return theta - c.lr * m_hat / (np.sqrt(v_hat) + c.eps_adam)


def _check_compatible(params: ModelParams, ds: LabeledDataset) -> None:
    if len(ds) == 0:
        raise ShapeError("cannot train on an empty dataset")
    if ds.length != params.arch.input_length:
        raise ShapeError(f"dataset frames have λ={ds.length}, model expects {params.arch.input_length}")
    if ds.n_classes != params.arch.n_classes:
        raise ShapeError(f"dataset has C={ds.n_classes}, model outputs {params.arch.n_classes}")


def train(
    params: ModelParams,
    ds: LabeledDataset,
    cfg: TrainConfig,
    *,
    progress: bool = False,
) -> tuple[ModelParams, list[float]]:
    """Minimise mean cross-entropy on *ds*; returns new params and per-epoch loss.

    The epoch loss is the sample-weighted mean of the minibatch losses seen
    during that epoch.  A non-finite loss aborts with
    :class:`TrainingDivergedError`.
    """
    _check_compatible(params, ds)
    rng = np.random.default_rng(cfg.seed)
    theta = params.theta.copy()
    adam = _Adam(theta.size, cfg) if cfg.optimizer == "adam" else None
    history: list[float] = []
    n = len(ds)
    step = 0

    for epoch in tqdm(range(cfg.epochs), disable=not progress, desc=params.model_id or "train"):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, g = loss_and_grad(params.with_theta(theta), ds.frames[idx], ds.labels[idx])
            if not np.isfinite(loss) or not np.all(np.isfinite(g)):
                raise TrainingDivergedError(
                    f"non-finite loss {loss!r} in epoch {epoch}",
                    step=step,
                    model_id=params.model_id,
                    history=history,
                )
            theta = adam.step(theta, g) if adam is not None else theta - cfg.lr * g
            if not np.all(np.isfinite(theta)):
                raise TrainingDivergedError(
                    "parameters overflowed", step=step, model_id=params.model_id, history=history
                )
            total += loss * idx.size
            step += 1
        history.append(total / n)
        if (epoch + 1) % cfg.log_every == 0 or epoch + 1 == cfg.epochs:
            _LOG.info(
                "%s epoch %d/%d loss=%.5f",
                params.model_id or params.arch.name or params.arch.kind,
                epoch + 1,
                cfg.epochs,
                history[-1],
            )
    return params.with_theta(theta), history


def accuracy(params: ModelParams, ds: LabeledDataset) -> float:
    if len(ds) == 0:
        return float("nan")
    return float(accuracy_score(ds.labels, predict_batch(params, ds.frames)))
