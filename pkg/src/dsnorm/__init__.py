"""Doubly-sparse structured-norm toolkit."""

from .vecnorms import (
    NormDescriptor,
    SortContext,
    SubdiffDescription,
    FullDualBall,
    eval_norm,
    eval_dual_norm,
    sort_context,
    subdifferential,
)
from .kdnorm import (
    IntervalPartition,
    ProjectionOutcome,
    BlockDiagElement,
    project_skd,
    dual_norm_kd,
    dual_norm_bruteforce,
    enumerate_bd,
    eval_norm_kd,
    check_membership_skd,
)
from .proxops import ProxConfig, QcqpConstraintFamily, project_dual_ball, prox_norm, moreau_check

__all__ = [
    "NormDescriptor",
    "SortContext",
    "SubdiffDescription",
    "FullDualBall",
    "eval_norm",
    "eval_dual_norm",
    "sort_context",
    "subdifferential",
    "IntervalPartition",
    "ProjectionOutcome",
    "BlockDiagElement",
    "project_skd",
    "dual_norm_kd",
    "dual_norm_bruteforce",
    "enumerate_bd",
    "eval_norm_kd",
    "check_membership_skd",
    "ProxConfig",
    "QcqpConstraintFamily",
    "project_dual_ball",
    "prox_norm",
    "moreau_check",
]
