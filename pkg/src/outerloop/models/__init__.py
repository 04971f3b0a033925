from .base import Model, ModelCapabilities, Prediction, require
from .blr import BlrModel, PolynomialFeatures, RandomCosineFeatures
from .gp import GpModel, RbfKernel

__all__ = [
    "BlrModel",
    "GpModel",
    "Model",
    "ModelCapabilities",
    "PolynomialFeatures",
    "Prediction",
    "RandomCosineFeatures",
    "RbfKernel",
    "require",
]
