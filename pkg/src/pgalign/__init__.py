"""Gradient-aligned multi-objective optimization over partitioned parameters."""

from pgalign.objective import DomainObjective, check_gradient, fd_gradient
from pgalign.optimizer import DomainObjectives, PGAConfig, erm_step, lr_at, pga_step
from pgalign.params import GradSlices, ParamLayout, ParamVector

__all__ = [
    "DomainObjective",
    "DomainObjectives",
    "GradSlices",
    "PGAConfig",
    "ParamLayout",
    "ParamVector",
    "check_gradient",
    "erm_step",
    "fd_gradient",
    "lr_at",
    "pga_step",
]
