"""Bayesian linear regression on fixed feature maps.

Prior w ~ N(0, prior_variance * I), likelihood y ~ N(phi(x)^T w, noise_variance).
Exists mainly as a second backend: nothing in the method modules knows which
of the two it is talking to.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg

from .._rng import make_rng
from ..errors import FitDegeneracyError
from .base import Model, ModelCapabilities, Prediction, as_inputs, as_targets


class PolynomialFeatures:
    """[1, x_d, x_d^2, ..., x_d^degree] for every input dimension (no cross terms)."""

    def __init__(self, degree, input_dim=1):
        if degree < 0:
            raise ValueError("degree must be >= 0")
        self.degree = int(degree)
        self.input_dim = int(input_dim)

    @property
    def n_features(self):
        return 1 + self.degree * self.input_dim

    def __call__(self, X):
        X = np.atleast_2d(X)
        cols = [np.ones((X.shape[0], 1))]
        cols += [X**p for p in range(1, self.degree + 1)]
        return np.hstack(cols)

    def gradient(self, X):
        """d phi / dX, shape (m, n_features, d)."""
        X = np.atleast_2d(X)
        m, d = X.shape
        out = np.zeros((m, self.n_features, d))
        for p in range(1, self.degree + 1):
            block = 1 + (p - 1) * d
            out[:, block + np.arange(d), np.arange(d)] = p * X ** (p - 1)
        return out


class RandomCosineFeatures:
    """sqrt(2/m) * cos(x W + b) with W ~ N(0, 1/lengthscale^2), b ~ U(0, 2 pi).

    With prior variance s2 on the weights, phi(x)^T phi(x') * s2 approximates an
    RBF kernel of variance s2 and the given lengthscale.
    """

    def __init__(self, n_features, lengthscale=1.0, input_dim=1, seed=0):
        self._m = int(n_features)
        self.lengthscale = np.broadcast_to(np.asarray(lengthscale, dtype=float), (input_dim,)).copy()
        self.input_dim = int(input_dim)
        self.seed = seed
        rng = make_rng(seed)
        self.W = rng.standard_normal((input_dim, self._m)) / self.lengthscale[:, None]
        self.b = rng.uniform(0, 2 * np.pi, self._m)

    @property
    def n_features(self):
        return self._m

    def __call__(self, X):
        return np.sqrt(2.0 / self._m) * np.cos(np.atleast_2d(X) @ self.W + self.b)

    def gradient(self, X):
        s = -np.sqrt(2.0 / self._m) * np.sin(np.atleast_2d(X) @ self.W + self.b)
        return s[:, :, None] * self.W.T[None, :, :]


class BlrModel(Model):
    """Conjugate Bayesian linear regression.

    Predictive variance includes the observation noise, so it never drops
    below ``noise_variance`` (in output units).
    """

    capabilities = ModelCapabilities(has_gradients=True, has_joint_covariance=True)

    PRIOR_GRID = np.logspace(-2, 2, 7)
    NOISE_GRID = np.logspace(-6, 0, 7)

    def __init__(self, features, prior_variance=1.0, noise_variance=1e-2, normalize_y=True):
        if prior_variance <= 0 or noise_variance <= 0:
            raise ValueError("prior and noise variances must be positive")
        self.features = features
        self.prior_variance = float(prior_variance)
        self.noise_variance = float(noise_variance)
        self.normalize_y = normalize_y
        self._X = np.empty((0, features.input_dim))
        self._Y = np.empty((0, 1))
        self._y_mean, self._y_std = 0.0, 1.0
        self._posterior()

    @property
    def X(self):
        return self._X

    @property
    def Y(self):
        return self._Y

    @property
    def weight_mean(self):
        return self._m

    @property
    def weight_covariance(self):
        return self._S

    def set_data(self, X, Y):
        X = as_inputs(X, self.features.input_dim)
        Y = as_targets(Y, X.shape[0])
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ValueError("training data must be finite")
        self._X, self._Y = X.copy(), Y.copy()
        if self.normalize_y and Y.shape[0] > 0:
            self._y_mean = float(Y.mean())
            std = float(Y.std())
            self._y_std = std if std > 0 else 1.0
        else:
            self._y_mean, self._y_std = 0.0, 1.0
        self._posterior()
        return self

    def _posterior(self):
        Phi = self.features(self._X) if self._X.shape[0] else np.empty((0, self.features.n_features))
        beta = 1.0 / self.noise_variance
        A = np.eye(Phi.shape[1]) / self.prior_variance + beta * Phi.T @ Phi
        L = linalg.cholesky(A, lower=True)
        self._S = linalg.cho_solve((L, True), np.eye(A.shape[0]))
        self._S = 0.5 * (self._S + self._S.T)
        y = (self._Y[:, 0] - self._y_mean) / self._y_std
        self._m = beta * self._S @ (Phi.T @ y)

    def predict(self, X) -> Prediction:
        X = as_inputs(X, self.features.input_dim)
        Phi = self.features(X)
        mean = Phi @ self._m
        var = np.einsum("ij,jk,ik->i", Phi, self._S, Phi) + self.noise_variance
        return Prediction(self._y_mean + self._y_std * mean, self._y_std**2 * np.maximum(var, 0.0))

    def predict_gradients(self, X):
        X = as_inputs(X, self.features.input_dim)
        Phi = self.features(X)
        dPhi = self.features.gradient(X)  # m x M x d
        dmean = np.einsum("mkd,k->md", dPhi, self._m)
        dvar = 2.0 * np.einsum("mkd,kl,ml->md", dPhi, self._S, Phi)
        return self._y_std * dmean, self._y_std**2 * dvar

    def posterior_covariance(self, X1, X2):
        P1 = self.features(as_inputs(X1, self.features.input_dim))
        P2 = self.features(as_inputs(X2, self.features.input_dim))
        return self._y_std**2 * P1 @ self._S @ P2.T

    def latent_variance(self, X):
        Phi = self.features(as_inputs(X, self.features.input_dim))
        return self._y_std**2 * np.maximum(np.einsum("ij,jk,ik->i", Phi, self._S, Phi), 0.0)

    def observation_noise(self):
        # predict() already includes the noise; the latent covariance above does not
        return self._y_std**2 * self.noise_variance

    def log_evidence(self, X=None, Y=None, prior_variance=None, noise_variance=None):
        """log N(Y | 0, noise I + prior Phi Phi^T), by default on the model's
        standardized training targets."""
        if X is None:
            X, y = self._X, (self._Y[:, 0] - self._y_mean) / self._y_std
        else:
            X = as_inputs(X, self.features.input_dim)
            y = as_targets(Y, X.shape[0])[:, 0]
        a = self.prior_variance if prior_variance is None else prior_variance
        s2 = self.noise_variance if noise_variance is None else noise_variance
        n = X.shape[0]
        if n == 0:
            return 0.0
        Phi = self.features(X)
        M = Phi.shape[1]
        beta = 1.0 / s2
        A = np.eye(M) / a + beta * Phi.T @ Phi
        L = linalg.cholesky(A, lower=True)
        m = beta * linalg.cho_solve((L, True), Phi.T @ y)
        fit = 0.5 * beta * np.sum((y - Phi @ m) ** 2) + 0.5 * (m @ m) / a
        logdetA = 2 * np.log(np.diag(L)).sum()
        return float(-0.5 * M * np.log(a) + 0.5 * n * np.log(beta) - fit
                     - 0.5 * logdetA - 0.5 * n * np.log(2 * np.pi))

    def objective(self):
        return self.log_evidence()

    def optimize_hyperparameters(self, seed=0):
        """Pick (prior, noise) variances by evidence over a fixed 7x7 log grid.

        The current setting competes with the grid, so the evidence never
        decreases. ``seed`` is accepted for interface parity; the search is
        deterministic.
        """
        if self._X.shape[0] < 2:
            raise FitDegeneracyError("hyperparameter selection needs at least two points")
        if np.all(np.ptp(self._X, axis=0) == 0):
            raise FitDegeneracyError("all training inputs are identical")
        best = (self.log_evidence(), self.prior_variance, self.noise_variance)
        for a in self.PRIOR_GRID:
            for s2 in self.NOISE_GRID:
                value = self.log_evidence(prior_variance=a, noise_variance=s2)
                if value > best[0]:
                    best = (value, a, s2)
        _, self.prior_variance, self.noise_variance = best
        self._posterior()
        return self

    def __repr__(self):
        return (f"BlrModel({type(self.features).__name__}, prior_variance={self.prior_variance:.3g}, "
                f"noise_variance={self.noise_variance:.3g}, n={self._X.shape[0]})")


def blr_fit(model: BlrModel, X, Y) -> BlrModel:
    return model.set_data(X, Y)


def blr_predict(model: BlrModel, X) -> Prediction:
    return model.predict(X)


def blr_evidence(model: BlrModel, X, Y) -> float:
    return model.log_evidence(X, Y)
