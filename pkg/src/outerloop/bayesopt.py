"""Bayesian optimization: acquisition functions, their optimizer and the
candidate-point calculator.

Everything minimizes. Set ``maximize=True`` on the acquisition config to
optimize the other way; outputs are then negated internally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.stats import norm

from ._rng import derive_seed
from .errors import OptimizationFailure
from .models.base import Prediction
from .space import ParameterSpace, round_to_space, sample_uniform

SIGMA_FLOOR = 1e-10


def expected_improvement(pred: Prediction, y_best: float, xi: float = 0.0) -> np.ndarray:
    """EI = s * (u Phi(u) + phi(u)), u = (y_best - mu - xi) / s."""
    mu, s = pred.mean, pred.std
    improve = y_best - mu - xi
    out = np.maximum(improve, 0.0)
    ok = s > SIGMA_FLOOR
    u = improve[ok] / s[ok]
    out[ok] = s[ok] * (u * norm.cdf(u) + norm.pdf(u))
    return out


def probability_of_improvement(pred: Prediction, y_best: float, xi: float = 0.0) -> np.ndarray:
    mu, s = pred.mean, pred.std
    improve = y_best - mu - xi
    out = (improve > 0).astype(float)
    ok = s > SIGMA_FLOOR
    out[ok] = norm.cdf(improve[ok] / s[ok])
    return out


def lower_confidence_bound(pred: Prediction, beta: float = 2.0) -> np.ndarray:
    """-(mu - beta * sigma); larger is better."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return -(pred.mean - beta * pred.std)


@dataclass(frozen=True)
class AcquisitionConfig:
    """``kind`` is one of "ei", "pi", "lcb".

    ``xi=None`` means 0.01 times the standard deviation of the observed outputs.
    """

    kind: str = "ei"
    xi: float | None = None
    beta: float = 2.0
    maximize: bool = False

    def __post_init__(self):
        if self.kind not in ("ei", "pi", "lcb"):
            raise ValueError(f"unknown acquisition {self.kind!r}")
        if self.xi is not None and self.xi < 0:
            raise ValueError("xi must be >= 0")
        if self.beta <= 0:
            raise ValueError("beta must be positive")


@dataclass(frozen=True)
class AcquisitionOptimizerConfig:
    restarts: int = 5
    raw_samples: int = 1000
    gradient_steps: int = 100

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.raw_samples < self.restarts:
            raise ValueError("raw_samples must be >= restarts")


class Acquisition:
    """Acquisition over a model. ``evaluate`` takes encoded points (m, d)."""

    has_gradients = False

    def evaluate(self, X) -> np.ndarray:
        raise NotImplementedError

    def evaluate_with_gradients(self, X):
        raise NotImplementedError

    def __call__(self, X):
        return self.evaluate(X)


class ModelAcquisition(Acquisition):
    """EI, PI or LCB of a model under the minimization convention."""

    def __init__(self, model, cfg: AcquisitionConfig, y_best: float, xi: float):
        self.model = model
        self.cfg = cfg
        self.sign = -1.0 if cfg.maximize else 1.0
        self.y_best = self.sign * y_best
        self.xi = xi
        self.has_gradients = model.capabilities.has_gradients

    def _prediction(self, X):
        p = self.model.predict(X)
        return Prediction(self.sign * p.mean, p.variance)

    def evaluate(self, X):
        pred = self._prediction(X)
        if self.cfg.kind == "ei":
            return expected_improvement(pred, self.y_best, self.xi)
        if self.cfg.kind == "pi":
            return probability_of_improvement(pred, self.y_best, self.xi)
        return lower_confidence_bound(pred, self.cfg.beta)

    def evaluate_with_gradients(self, X):
        pred = self._prediction(X)
        dmu, dvar = self.model.predict_gradients(X)
        dmu = self.sign * dmu
        s = np.maximum(pred.std, SIGMA_FLOOR)
        ds = dvar / (2 * s[:, None])
        if self.cfg.kind == "lcb":
            return lower_confidence_bound(pred, self.cfg.beta), -dmu + self.cfg.beta * ds
        u = (self.y_best - pred.mean - self.xi) / s
        flat = pred.std <= SIGMA_FLOOR
        if self.cfg.kind == "ei":
            value = expected_improvement(pred, self.y_best, self.xi)
            grad = -norm.cdf(u)[:, None] * dmu + norm.pdf(u)[:, None] * ds
            grad[flat] = np.where(value[flat, None] > 0, -dmu[flat], 0.0)
        else:
            value = probability_of_improvement(pred, self.y_best, self.xi)
            grad = norm.pdf(u)[:, None] * (-dmu / s[:, None] - u[:, None] * ds / s[:, None])
            grad[flat] = 0.0
        return value, grad


class FunctionAcquisition(Acquisition):
    """Adapts a plain callable (and optional gradient callable)."""

    def __init__(self, f, gradient=None):
        self.f = f
        self.gradient = gradient
        self.has_gradients = gradient is not None

    def evaluate(self, X):
        return np.asarray(self.f(np.atleast_2d(X)), dtype=float).ravel()

    def evaluate_with_gradients(self, X):
        return self.evaluate(X), np.atleast_2d(self.gradient(np.atleast_2d(X)))


def _as_acquisition(acq):
    return acq if isinstance(acq, Acquisition) else FunctionAcquisition(acq)


def optimize_acquisition(acq, space: ParameterSpace, cfg: AcquisitionOptimizerConfig = AcquisitionOptimizerConfig(),
                         seed=0):
    """Maximize an acquisition over the space.

    Evaluates ``raw_samples`` uniform probes, then refines the best
    ``restarts`` of them with bounded L-BFGS-B over the encoded box (analytic
    gradients when the acquisition has them, finite differences otherwise)
    and snaps each result back onto the space. Returns (x, value) with value
    at least the best probe value.
    """
    acq = _as_acquisition(acq)
    probes = sample_uniform(space, cfg.raw_samples, derive_seed(seed, 0))
    values = acq.evaluate(probes)
    finite = np.isfinite(values)
    if not finite.any():
        raise OptimizationFailure("acquisition is non-finite at every probe")
    values = np.where(finite, values, -np.inf)
    # stable sort keeps ties in probe order, so the result is seed-deterministic
    order = np.argsort(-values, kind="stable")
    best_x, best_v = probes[order[0]], float(values[order[0]])
    if cfg.gradient_steps <= 0:
        return best_x, best_v
    bounds = space.bounds

    if acq.has_gradients:
        def negative(x):
            v, g = acq.evaluate_with_gradients(x[None])
            if not np.isfinite(v[0]):
                return 1e30, np.zeros_like(x)
            return -float(v[0]), -g[0]
        jac = True
    else:
        def negative(x):
            v = acq.evaluate(x[None])[0]
            return -float(v) if np.isfinite(v) else 1e30
        jac = None

    for i in order[:cfg.restarts]:
        res = optimize.minimize(negative, probes[i], jac=jac, method="L-BFGS-B", bounds=bounds,
                                options={"maxiter": cfg.gradient_steps})
        x = round_to_space(space, res.x)
        v = float(acq.evaluate(x[None])[0])
        if np.isfinite(v) and v > best_v:
            best_x, best_v = x, v
    return best_x, best_v


class BayesianOptimizationCalculator:
    """Proposes the maximizer of the configured acquisition under the current model.

    ``y_best`` is the best observed output, not the best posterior mean.
    """

    def __init__(self, model, acq_cfg: AcquisitionConfig = AcquisitionConfig(),
                 opt_cfg: AcquisitionOptimizerConfig = AcquisitionOptimizerConfig(), target_column: int = 0):
        self.model = model
        self.acq_cfg = acq_cfg
        self.opt_cfg = opt_cfg
        self.target_column = target_column

    def acquisition(self, state) -> ModelAcquisition:
        Y = state.outputs[:, self.target_column]
        y_best = float(Y.max() if self.acq_cfg.maximize else Y.min())
        xi = self.acq_cfg.xi
        if xi is None:
            xi = 0.01 * float(Y.std()) if Y.size > 1 else 0.0
        return ModelAcquisition(self.model, self.acq_cfg, y_best, xi)

    def __call__(self, state, space, seed):
        if state.n == 0:
            raise ValueError("Bayesian optimization needs an initial design")
        return optimize_acquisition(self.acquisition(state), space, self.opt_cfg, seed)


def bo_calculator(model, acq_cfg=AcquisitionConfig(), opt_cfg=AcquisitionOptimizerConfig()):
    return BayesianOptimizationCalculator(model, acq_cfg, opt_cfg)


def weighted_sum(objectives, weights):
    """Scalarize several figures of merit into one objective for the loop."""
    weights = np.asarray(weights, dtype=float)
    if len(objectives) != weights.size:
        raise ValueError("one weight per objective")

    def f(X):
        return sum(w * np.asarray(g(X), dtype=float).ravel() for w, g in zip(weights, objectives))

    return f
