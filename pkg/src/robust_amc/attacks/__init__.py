"""Adversarial perturbations against any model exposing input gradients."""

from .cache import (
    PerturbationCache,
    perturbation_from_bytes,
    perturbation_to_bytes,
    read_perturbation,
    write_perturbation,
)
from .craft import craft
from .cw import cw_l2
from .iterative import fgsm, mim, pgd
from .pca import gradient_matrix, pca_attack, principal_direction
from .power import awgn_like, mean_power, psr_db, psr_gain, scale_to_psr
from .projection import frame_norms, project
from .spec import AttackMethod, AttackSpec, Perturbation, spec_hash

__all__ = [
    "AttackMethod",
    "AttackSpec",
    "Perturbation",
    "PerturbationCache",
    "awgn_like",
    "craft",
    "cw_l2",
    "fgsm",
    "frame_norms",
    "gradient_matrix",
    "mean_power",
    "mim",
    "pca_attack",
    "perturbation_from_bytes",
    "perturbation_to_bytes",
    "pgd",
    "principal_direction",
    "project",
    "psr_db",
    "psr_gain",
    "read_perturbation",
    "scale_to_psr",
    "spec_hash",
    "write_perturbation",
]
