"""Two-fidelity autoregressive emulator: f_high(x) = rho * f_low(x) + delta(x).

Fitting is staged. The low-fidelity GP is fitted on its own data first.
Then rho and the discrepancy GP are chosen together by maximizing the
likelihood of the residuals Y_high - rho * mu_low(X_high), with
rho^2 * var_low(X_high) added to the discrepancy's per-point noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import FitDegeneracyError
from .models.base import Model, ModelCapabilities, Prediction, as_inputs, as_targets
from .models.gp import GpModel


@dataclass(frozen=True)
class TwoFidelityData:
    X_low: np.ndarray
    Y_low: np.ndarray
    X_high: np.ndarray
    Y_high: np.ndarray

    def __post_init__(self):
        XL, XH = np.atleast_2d(self.X_low), np.atleast_2d(self.X_high)
        if XL.shape[1] != XH.shape[1]:
            raise ValueError("both fidelities need the same input dimension")
        if XH.shape[0] < 2 or XL.shape[0] < 2:
            raise ValueError("need at least two points per fidelity")
        object.__setattr__(self, "X_low", XL)
        object.__setattr__(self, "X_high", XH)
        object.__setattr__(self, "Y_low", as_targets(self.Y_low, XL.shape[0]))
        object.__setattr__(self, "Y_high", as_targets(self.Y_high, XH.shape[0]))


class Ar1Model(Model):
    """Linear two-fidelity model.

    As a :class:`Model` it represents the high fidelity: ``set_data`` replaces
    the high-fidelity data and ``optimize_hyperparameters`` refits rho and the
    discrepancy, so it can drive any loop. The high-fidelity variance uses
    the independence approximation rho^2 var_low + var_delta.
    """

    capabilities = ModelCapabilities(has_gradients=True, has_joint_covariance=True)

    def __init__(self, low: GpModel, delta: GpModel | None = None, rho=1.0, restarts=3):
        self.low = low
        self.delta = delta if delta is not None else GpModel.default(low.input_dim, restarts=restarts)
        self.rho = float(rho)
        self.restarts = restarts

    @property
    def X(self):
        return self.delta.X

    @property
    def Y(self):
        return self._Y_high

    @property
    def input_dim(self):
        return self.low.input_dim

    def _low_at(self, X):
        return self.low.predict(X)

    def _residual_fit(self, rho):
        p = self._low_at(self._X_high)
        self.delta.set_data(self._X_high, self._Y_high[:, 0] - rho * p.mean, noise=rho**2 * p.variance)

    def set_data(self, X, Y):
        X = as_inputs(X, self.input_dim)
        Y = as_targets(Y, X.shape[0])
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ValueError("training data must be finite")
        self._X_high, self._Y_high = X.copy(), Y.copy()
        self._residual_fit(self.rho)
        return self

    def objective(self):
        """Log likelihood of the high-fidelity residuals in output units."""
        return self.delta.log_marginal_likelihood() - self.Y.shape[0] * np.log(self.delta.output_scale[1])

    def optimize_hyperparameters(self, seed=0):
        """Choose rho and the discrepancy hyperparameters jointly.

        For each candidate rho the discrepancy GP is refitted from the same
        starting hyperparameters, giving a deterministic profile likelihood
        that is maximized over a grid; the best three local maxima are refined
        with bounded Brent.
        """
        if self._X_high.shape[0] < 2:
            raise FitDegeneracyError("need at least two high-fidelity points")
        if np.all(np.ptp(self._X_high, axis=0) == 0):
            raise FitDegeneracyError("all high-fidelity inputs are identical")
        theta0 = self.delta.get_params()
        start_rho = self.rho
        self._residual_fit(start_rho)
        current = self.objective()
        mu = self._low_at(self._X_high).mean
        y = self._Y_high[:, 0]
        rho_ls = float(mu @ y / (mu @ mu)) if mu @ mu > 0 else 0.0
        cache = {}

        def profile(rho):
            rho = float(rho)
            if rho not in cache:
                self.delta.set_params(theta0)
                self._residual_fit(rho)
                self.delta.fit(self.restarts, seed)
                cache[rho] = (self.objective(), self.delta.get_params())
            return cache[rho][0]

        half = 2.0 * (abs(rho_ls) + 1.0)
        grid = np.concatenate([np.linspace(rho_ls - half, rho_ls + half, 21), [0.0, rho_ls, start_rho]])
        values = np.array([profile(r) for r in grid])
        step = grid[1] - grid[0]
        # the profile can be multimodal with narrow peaks, so refine the best few local maxima
        v = values[:21]
        peaks = [i for i in range(21) if (i == 0 or v[i] >= v[i - 1]) and (i == 20 or v[i] >= v[i + 1])]
        for i in sorted(peaks, key=lambda i: -v[i])[:3]:
            optimize.minimize_scalar(lambda r: -profile(r), bounds=(grid[i] - step, grid[i] + step),
                                     method="bounded", options={"xatol": 1e-5})
        candidates = list(cache.items())
        best_rho, (best_value, best_theta) = max(candidates, key=lambda kv: kv[1][0])
        if best_value < current:
            best_rho, best_theta = start_rho, theta0
        self.rho = best_rho
        self.delta.set_params(best_theta)
        self._residual_fit(self.rho)
        return self

    def predict(self, X, fidelity="high") -> Prediction:
        X = as_inputs(X, self.input_dim)
        low = self.low.predict(X)
        if fidelity == "low":
            return low
        if fidelity != "high":
            raise ValueError("fidelity must be 'low' or 'high'")
        d = self.delta.predict(X)
        return Prediction(self.rho * low.mean + d.mean, self.rho**2 * low.variance + d.variance)

    def predict_gradients(self, X):
        dm_low, dv_low = self.low.predict_gradients(X)
        dm_d, dv_d = self.delta.predict_gradients(X)
        return self.rho * dm_low + dm_d, self.rho**2 * dv_low + dv_d

    def posterior_covariance(self, X1, X2):
        return self.rho**2 * self.low.posterior_covariance(X1, X2) + self.delta.posterior_covariance(X1, X2)

    def latent_variance(self, X):
        return self.predict(X).variance

    def observation_noise(self):
        return self.delta.observation_noise()

    def __repr__(self):
        return f"Ar1Model(rho={self.rho:.4g}, low={self.low!r}, delta={self.delta!r})"


def mf_fit(data: TwoFidelityData, seed=0, restarts=5) -> Ar1Model:
    low = GpModel.default(data.X_low.shape[1], restarts=restarts)
    low.set_data(data.X_low, data.Y_low).fit(seed=seed)
    model = Ar1Model(low, restarts=restarts)
    model.set_data(data.X_high, data.Y_high)
    return model.optimize_hyperparameters(seed)


def mf_predict(model: Ar1Model, X, fidelity="high") -> Prediction:
    return model.predict(X, fidelity)
