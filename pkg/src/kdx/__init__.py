"""Kernel methods with analytic derivatives with respect to their inputs."""

from . import density, gpr, hsic, kernels, numerics, sensitivity, svm, toydata
from .errors import (
    DimensionMismatch,
    InvalidOrder,
    InvalidRank,
    KdxError,
    NonFiniteInput,
    NotPositiveDefinite,
    SampleCountMismatch,
    SingleClassInput,
    StepCollapse,
    UnknownDataset,
)
from .kernels import KernelSpec
from .sensitivity import DerivField, feature_sensitivity, point_sensitivity

__version__ = "0.1.0"

__all__ = [
    "DerivField",
    "DimensionMismatch",
    "InvalidOrder",
    "InvalidRank",
    "KdxError",
    "KernelSpec",
    "NonFiniteInput",
    "NotPositiveDefinite",
    "SampleCountMismatch",
    "SingleClassInput",
    "StepCollapse",
    "UnknownDataset",
    "density",
    "feature_sensitivity",
    "gpr",
    "hsic",
    "kernels",
    "numerics",
    "point_sensitivity",
    "sensitivity",
    "svm",
    "toydata",
]
