from __future__ import annotations

import logging

import numpy as np

from robust_amc.models import ModelParams
from robust_amc.signals import LabeledDataset

from .cw import cw_l2
from .iterative import fgsm, mim, pgd
from .pca import pca_attack
from .power import psr_gain
from .spec import AttackMethod, AttackSpec, Perturbation

_LOG = logging.getLogger(__name__)


def _per_frame(spec: AttackSpec, params: ModelParams, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if spec.method is AttackMethod.FGSM:
        return fgsm(params, x, y, spec.eps, spec.p)
    if spec.method is AttackMethod.PGD:
        return pgd(params, x, y, spec.eps, spec.alpha, spec.steps, spec.p)
    if spec.method is AttackMethod.MIM:
        return mim(params, x, y, spec.eps, spec.alpha, spec.momentum, spec.steps, spec.p)
    if spec.method is AttackMethod.CW_L2:
        return cw_l2(params, x, y, spec.c, spec.cw_lr, spec.steps, eps=spec.eps)
    raise ValueError(f"{spec.method.value} is not a per-frame attack")


def craft(
    spec: AttackSpec,
    params: ModelParams,
    ds: LabeledDataset,
    *,
    substitute_id: str | None = None,
    batch_size: int = 256,
) -> Perturbation:
    """Run *spec* against *params* over every frame of *ds*."""
    if spec.method is AttackMethod.PCA:
        delta = pca_attack(params, ds, spec.eps, seed=spec.seed, batch_size=batch_size)
    else:
        parts = [
            _per_frame(spec, params, ds.frames[s : s + batch_size], ds.labels[s : s + batch_size])
            for s in range(0, len(ds), batch_size)
        ]
        delta = np.concatenate(parts) if parts else np.zeros_like(ds.frames)

    epsilon = spec.eps
    if spec.psr_db is not None:
        gain = psr_gain(delta, ds, spec.psr_db)
        delta = delta * gain
        epsilon = spec.eps * gain

    pert = Perturbation(delta, spec, epsilon, substitute_id or params.model_id)
    _LOG.info(
        "crafted %s against %s: %s frames, mean norm %.4g (budget %.4g)",
        spec.name,
        pert.substitute_id,
        "universal" if pert.universal else len(ds),
        float(np.mean(pert.norms)) if pert.norms.size else 0.0,
        epsilon,
    )
    return pert
