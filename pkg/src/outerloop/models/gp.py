"""Exact Gaussian-process regression with an ARD RBF kernel."""

from __future__ import annotations

import warnings

import numpy as np
from scipy import linalg, optimize

from .._rng import make_rng
from ..errors import ConditioningError, FitDegeneracyError
from .base import Model, ModelCapabilities, Prediction, as_inputs, as_targets


class RbfKernel:
    """k(x, x') = variance * exp(-0.5 * sum_d (x_d - x'_d)^2 / lengthscale_d^2)."""

    def __init__(self, variance=1.0, lengthscales=1.0, input_dim=1):
        ls = np.broadcast_to(np.asarray(lengthscales, dtype=float), (input_dim,)).copy()
        if variance <= 0 or np.any(ls <= 0):
            raise ValueError("kernel variance and lengthscales must be positive")
        self.variance = float(variance)
        self.lengthscales = ls

    @property
    def input_dim(self):
        return self.lengthscales.size

    def copy(self):
        return RbfKernel(self.variance, self.lengthscales.copy(), self.input_dim)

    def scaled_sqdist(self, X1, X2):
        A = X1 / self.lengthscales
        B = X2 / self.lengthscales
        d2 = (A**2).sum(1)[:, None] + (B**2).sum(1)[None, :] - 2 * A @ B.T
        return np.maximum(d2, 0.0)

    def __call__(self, X1, X2=None):
        X1 = np.atleast_2d(X1)
        X2 = X1 if X2 is None else np.atleast_2d(X2)
        K = self.variance * np.exp(-0.5 * self.scaled_sqdist(X1, X2))
        if X2 is X1:
            np.fill_diagonal(K, self.variance)
        return K

    def diag(self, X):
        return np.full(np.atleast_2d(X).shape[0], self.variance)

    def __repr__(self):
        return f"RbfKernel(variance={self.variance:.4g}, lengthscales={np.round(self.lengthscales, 4).tolist()})"


def kernel_eval(kernel: RbfKernel, X1, X2) -> np.ndarray:
    X1, X2 = np.atleast_2d(X1), np.atleast_2d(X2)
    if X1.shape[1] != X2.shape[1] or X1.shape[1] != kernel.input_dim:
        raise ValueError("input dimensions do not match the kernel")
    return kernel(X1, X2)


def _cholesky_with_jitter(K):
    """Cholesky of K, adding diagonal jitter from 1e-10 to 1e-4 of the mean
    diagonal (doubling) if the plain factorization fails."""
    try:
        return linalg.cholesky(K, lower=True), 0.0
    except linalg.LinAlgError:
        pass
    scale = max(float(np.mean(np.diag(K))), 1e-300)
    jitter = 1e-10 * scale
    eye = np.eye(K.shape[0])
    while jitter <= 1e-4 * scale * (1 + 1e-12):
        try:
            return linalg.cholesky(K + jitter * eye, lower=True), jitter
        except linalg.LinAlgError:
            jitter *= 2
    raise ConditioningError("gram matrix is not positive definite even with maximal jitter")


class GpModel(Model):
    """GP regression with internally standardized outputs.

    Hyperparameters (kernel variance, noise variance) live in standardized
    output units; predictions are returned in the original units. With data
    present the prior mean is therefore the data mean, not zero.

    :param kernel: RBF kernel; its input dimension fixes the model's.
    :param noise_variance: homoscedastic observation noise (standardized units).
    :param optimize_noise: learn the noise variance during fitting. Set to
        False with ``noise_variance=0`` for exact interpolation.
    :param normalize_y: standardize targets; if False the prior mean is 0.
    :param restarts: number of optimizer starts used by
        :meth:`optimize_hyperparameters`.
    :param lengthscale_floor: lower lengthscale bound as a fraction of each
        input's data range.
    """

    capabilities = ModelCapabilities(has_gradients=True, has_joint_covariance=True)

    VARIANCE_BOUNDS = (1e-2, 1e3)
    NOISE_BOUNDS = (1e-8, 10.0)

    def __init__(self, kernel: RbfKernel, noise_variance=1e-6, optimize_noise=True,
                 normalize_y=True, restarts=10, lengthscale_floor=1e-3):
        if noise_variance < 0:
            raise ValueError("noise variance must be non-negative")
        self.kernel = kernel
        self._cache = None
        self.noise_variance = noise_variance
        self.optimize_noise = optimize_noise
        self.normalize_y = normalize_y
        self.restarts = restarts
        self.lengthscale_floor = lengthscale_floor
        self.fit_warning = False
        self._X = np.empty((0, kernel.input_dim))
        self._Y = np.empty((0, 1))
        self._obs_noise = np.empty(0)
        self._y_mean, self._y_std = 0.0, 1.0
        self._cache = None

    @property
    def noise_variance(self):
        return self._noise_variance

    @noise_variance.setter
    def noise_variance(self, value):
        self._noise_variance = float(value)
        self._cache = None

    @classmethod
    def default(cls, input_dim, **kwargs):
        return cls(RbfKernel(1.0, 1.0, input_dim), **kwargs)

    # -- data -----------------------------------------------------------

    @property
    def X(self):
        return self._X

    @property
    def Y(self):
        return self._Y

    @property
    def input_dim(self):
        return self.kernel.input_dim

    @property
    def output_scale(self):
        """(mean, std) used to standardize the targets."""
        return self._y_mean, self._y_std

    def set_data(self, X, Y, noise=None):
        """Replace the training data.

        :param noise: optional per-point observation variances in output
            units, added on top of the homoscedastic noise.
        """
        X = as_inputs(X, self.input_dim)
        Y = as_targets(Y, X.shape[0])
        obs = np.zeros(X.shape[0]) if noise is None else np.asarray(noise, dtype=float).ravel()
        if obs.shape != (X.shape[0],):
            raise ValueError("noise must have one entry per training point")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y)) and np.all(np.isfinite(obs))):
            raise ValueError("training data must be finite")
        if np.any(obs < 0):
            raise ValueError("observation noise must be non-negative")
        self._X, self._Y, self._obs_noise = X.copy(), Y.copy(), obs.copy()
        if self.normalize_y and Y.shape[0] > 0:
            self._y_mean = float(Y.mean())
            std = float(Y.std())
            self._y_std = std if std > 0 else 1.0
        else:
            self._y_mean, self._y_std = 0.0, 1.0
        self._cache = None
        return self

    def _standardized_targets(self):
        return (self._Y - self._y_mean) / self._y_std

    # -- hyperparameters ------------------------------------------------

    def get_params(self):
        """Log-hyperparameters: [log variance, log lengthscales..., log noise]."""
        return np.concatenate([[np.log(self.kernel.variance)], np.log(self.kernel.lengthscales),
                               [np.log(self.noise_variance) if self.noise_variance > 0 else -np.inf]])

    def set_params(self, theta):
        theta = np.asarray(theta, dtype=float)
        self.kernel.variance = float(np.exp(theta[0]))
        self.kernel.lengthscales = np.exp(theta[1:1 + self.input_dim])
        if theta.size > 1 + self.input_dim:
            self.noise_variance = float(np.exp(theta[1 + self.input_dim]))
        self._cache = None

    def _gram(self):
        K = self.kernel(self._X)
        K[np.diag_indices_from(K)] += self.noise_variance + self._obs_noise / self._y_std**2
        return K

    def _factor(self):
        if self._cache is None:
            L, jitter = _cholesky_with_jitter(self._gram())
            alpha = linalg.cho_solve((L, True), self._standardized_targets())
            self._cache = (L, alpha, jitter)
        return self._cache

    # -- prediction -----------------------------------------------------

    def predict(self, X, include_noise=False) -> Prediction:
        """Posterior of the latent function; ``include_noise`` adds the
        homoscedastic observation noise."""
        X = as_inputs(X, self.input_dim)
        kss = self.kernel.diag(X)
        if self._X.shape[0] == 0:
            mean, var = np.zeros(X.shape[0]), kss.copy()
        else:
            L, alpha, _ = self._factor()
            Ks = self.kernel(self._X, X)
            mean = Ks.T @ alpha[:, 0]
            v = linalg.solve_triangular(L, Ks, lower=True)
            var = kss - (v**2).sum(0)
        var = np.maximum(var, 0.0)
        if include_noise:
            var = var + self.noise_variance
        return Prediction(self._y_mean + self._y_std * mean, self._y_std**2 * var)

    def predict_gradients(self, X):
        X = as_inputs(X, self.input_dim)
        if self._X.shape[0] == 0:
            zeros = np.zeros_like(X)
            return zeros, zeros.copy()
        L, alpha, _ = self._factor()
        Ks = self.kernel(self._X, X)  # n x m
        diff = X[:, None, :] - self._X[None, :, :]  # m x n x d
        dK = -Ks.T[:, :, None] * diff / self.kernel.lengthscales**2  # m x n x d
        dmean = np.einsum("mnd,n->md", dK, alpha[:, 0])
        Kinv_ks = linalg.cho_solve((L, True), Ks)  # n x m
        dvar = -2.0 * np.einsum("mnd,nm->md", dK, Kinv_ks)
        return self._y_std * dmean, self._y_std**2 * dvar

    def posterior_covariance(self, X1, X2):
        X1 = as_inputs(X1, self.input_dim)
        X2 = as_inputs(X2, self.input_dim)
        K12 = self.kernel(X1, X2)
        if self._X.shape[0]:
            L, _, _ = self._factor()
            A = linalg.solve_triangular(L, self.kernel(self._X, X1), lower=True)
            B = linalg.solve_triangular(L, self.kernel(self._X, X2), lower=True)
            K12 = K12 - A.T @ B
        return self._y_std**2 * K12

    def latent_variance(self, X):
        return self.predict(X).variance

    def observation_noise(self):
        return self._y_std**2 * self.noise_variance

    # -- fitting --------------------------------------------------------

    def log_marginal_likelihood(self, gradient=False):
        """Log evidence of the standardized targets.

        With ``gradient=True`` also returns the derivative with respect to
        (log variance, log lengthscales..., log noise).
        """
        n = self._X.shape[0]
        if n == 0:
            raise FitDegeneracyError("log marginal likelihood needs at least one point")
        L, alpha, jitter = self._factor()
        y = self._standardized_targets()
        value = float(-0.5 * (y * alpha).sum() - np.log(np.diag(L)).sum() - 0.5 * n * np.log(2 * np.pi))
        if not gradient:
            return value
        Kf = self.kernel(self._X)
        W = alpha @ alpha.T - linalg.cho_solve((L, True), np.eye(n))
        grad = np.empty(2 + self.input_dim)
        grad[0] = 0.5 * np.sum(W * Kf)
        for d in range(self.input_dim):
            sq = (self._X[:, d:d + 1] - self._X[:, d:d + 1].T) ** 2 / self.kernel.lengthscales[d] ** 2
            grad[1 + d] = 0.5 * np.sum(W * Kf * sq)
        grad[-1] = 0.5 * self.noise_variance * np.trace(W)
        return value, grad

    def objective(self):
        return self.log_marginal_likelihood()

    def _bounds(self):
        span = np.ptp(self._X, axis=0)
        if np.all(span == 0):
            raise FitDegeneracyError("all training inputs are identical")
        span = np.where(span > 0, span, 1.0)
        bounds = [tuple(np.log(self.VARIANCE_BOUNDS))]
        bounds += [(np.log(self.lengthscale_floor * s), np.log(10 * s)) for s in span]
        if self.optimize_noise:
            bounds.append(tuple(np.log(self.NOISE_BOUNDS)))
        return np.array(bounds)

    def fit(self, restarts=None, seed=0):
        """Maximize the log marginal likelihood over log-hyperparameters.

        The first start is the current setting (clipped into the bounds), the
        second a data-scaled default, the rest uniform in a plausible sub-box. Every evaluated point is a candidate, so
        the result is never worse than any start point.
        """
        restarts = self.restarts if restarts is None else restarts
        if self._X.shape[0] < 2:
            raise FitDegeneracyError("hyperparameter fitting needs at least two points")
        bounds = self._bounds()
        k = bounds.shape[0]
        full = self.get_params()
        fixed_noise = full[-1]

        def unpack(theta):
            return theta if self.optimize_noise else np.append(theta, fixed_noise)

        best = {"value": -np.inf, "theta": None}
        try:
            current = self.log_marginal_likelihood()
            best.update(value=current, theta=full[:k].copy())
        except ConditioningError:
            pass

        def negative(theta):
            self.set_params(unpack(theta))
            try:
                value, grad = self.log_marginal_likelihood(gradient=True)
            except ConditioningError:
                return 1e25, np.zeros_like(theta)
            if value > best["value"]:
                best.update(value=value, theta=theta.copy())
            return -value, -grad[:k]

        rng = make_rng(seed)
        # random starts come from a plausible sub-box; tiny lengthscales are
        # flat white-noise plateaus the optimizer cannot climb out of
        span = np.where(np.ptp(self._X, axis=0) > 0, np.ptp(self._X, axis=0), 1.0)
        lo = np.log(np.r_[0.1, 0.05 * span, 1e-6][:k])
        hi = np.log(np.r_[10.0, 2.0 * span, 1e-1][:k])
        lo, hi = np.clip(lo, bounds[:, 0], bounds[:, 1]), np.clip(hi, bounds[:, 0], bounds[:, 1])
        starts = [np.clip(full[:k], bounds[:, 0], bounds[:, 1]),
                  np.clip(np.log(np.r_[1.0, 0.2 * span, 1e-4][:k]), bounds[:, 0], bounds[:, 1])]
        starts += [rng.uniform(lo, hi) for _ in range(max(restarts, 2) - 2)]
        starts = starts[:max(restarts, 1)]
        successes = 0
        for x0 in starts:
            res = optimize.minimize(negative, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                                    options={"maxiter": 200, "gtol": 1e-6})
            successes += bool(res.success)
        if best["theta"] is None:
            raise ConditioningError("every hyperparameter setting tried was ill-conditioned")
        self.set_params(unpack(best["theta"]))
        self.fit_warning = successes == 0
        if self.fit_warning:
            warnings.warn("no optimizer restart converged; keeping the best evaluated point", RuntimeWarning)
        return self

    def optimize_hyperparameters(self, seed=0):
        return self.fit(seed=seed)

    def __repr__(self):
        return f"GpModel({self.kernel!r}, noise_variance={self.noise_variance:.3g}, n={self._X.shape[0]})"


def gp_predict(model: GpModel, X) -> Prediction:
    return model.predict(X)


def log_marginal_likelihood(model: GpModel, gradient=False):
    return model.log_marginal_likelihood(gradient=gradient)
