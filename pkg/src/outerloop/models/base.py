"""The backend-agnostic model interface.

Methods only talk to models through :class:`Model`. A backend implements the
abstract methods and sets :attr:`Model.capabilities` to advertise the
optional ones (gradients, joint covariance, closed-form integration).
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from ..errors import CapabilityError, OuterLoopError


@dataclass(frozen=True)
class Prediction:
    """Marginal predictive mean and variance at m query points."""

    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        var = np.asarray(self.variance, dtype=float).ravel()
        if mean.shape != var.shape:
            raise ValueError(f"mean and variance lengths differ: {mean.shape} vs {var.shape}")
        if np.any(var < 0):
            raise ValueError("predictive variance must be non-negative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", var)

    @property
    def std(self):
        return np.sqrt(self.variance)

    def __len__(self):
        return self.mean.size


@dataclass(frozen=True)
class ModelCapabilities:
    has_gradients: bool = False
    has_joint_covariance: bool = False
    has_integrability: bool = False


def require(model, *names: str) -> None:
    """Raise CapabilityError unless ``model`` advertises every named capability."""
    caps = getattr(model, "capabilities", ModelCapabilities())
    missing = [n for n in names if not getattr(caps, n, False)]
    if missing:
        raise CapabilityError(f"{type(model).__name__} lacks required capabilities: {', '.join(missing)}")


def as_inputs(X, dim=None):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if dim is not None and X.shape[1] != dim:
        raise OuterLoopError(f"input dimension mismatch: model has {dim}, got {X.shape[1]}")
    return X


def as_targets(Y, n):
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2 or Y.shape[1] != 1:
        raise ValueError(f"models are single-output; got targets of shape {Y.shape}")
    if Y.shape[0] != n:
        raise ValueError(f"X has {n} rows but Y has {Y.shape[0]}")
    return Y


class Model(abc.ABC):
    """A trained emulator.

    ``set_data`` replaces the training set wholesale; accumulation belongs to
    the loop. Between updates a model is treated as immutable, so concurrent
    ``predict`` calls are safe.
    """

    capabilities = ModelCapabilities()

    @property
    @abc.abstractmethod
    def X(self) -> np.ndarray: ...

    @property
    @abc.abstractmethod
    def Y(self) -> np.ndarray: ...

    @abc.abstractmethod
    def set_data(self, X, Y) -> "Model": ...

    @abc.abstractmethod
    def predict(self, X) -> Prediction: ...

    @abc.abstractmethod
    def optimize_hyperparameters(self, seed=0) -> "Model": ...

    @abc.abstractmethod
    def objective(self) -> float:
        """Value of the backend's fit objective at the current hyperparameters."""

    def predict_gradients(self, X):
        """Return (d mean / dX, d variance / dX), each of shape (m, d)."""
        raise CapabilityError(f"{type(self).__name__} does not provide gradients")

    def posterior_covariance(self, X1, X2) -> np.ndarray:
        """Posterior covariance of the latent function between two point sets."""
        raise CapabilityError(f"{type(self).__name__} does not provide joint covariance")

    def latent_variance(self, X) -> np.ndarray:
        """Marginal posterior variance of the latent function (no observation noise)."""
        X = np.atleast_2d(X)
        return np.array([self.posterior_covariance(x[None], x[None])[0, 0] for x in X])

    def observation_noise(self) -> float:
        """Variance a new observation adds on top of the latent function."""
        return 0.0
