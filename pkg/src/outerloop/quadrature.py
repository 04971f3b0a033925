"""Bayesian quadrature with an RBF Gaussian process over a box.

The integral of a GP is Gaussian; with an RBF kernel and the (unnormalized)
Lebesgue measure on a box its mean and variance need only two closed-form
kernel integrals, computed here per dimension.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.special import erf

from ._rng import derive_seed, make_rng
from .bayesopt import Acquisition, AcquisitionOptimizerConfig, optimize_acquisition
from .errors import CapabilityError
from .loop import (FixedIterations, LoopState, ModelUpdater, UserFunction, evaluate_initial_design,
                   fit_initial_model, run_loop)
from .models.base import Model, ModelCapabilities, require
from .models.gp import GpModel, RbfKernel
from .space import ContinuousParameter, ParameterSpace, sample_latin_hypercube
from .tasks import SeirConfig, peak_statistics, simulate_peaks

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class IntegrationBox:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or np.any(~(lo < hi)):
            raise ValueError("integration box needs lower < upper in every dimension")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.size

    @property
    def volume(self):
        return float(np.prod(self.upper - self.lower))

    def space(self) -> ParameterSpace:
        return ParameterSpace([ContinuousParameter(f"x{i + 1}", a, b)
                               for i, (a, b) in enumerate(zip(self.lower, self.upper))])


@dataclass(frozen=True)
class IntegralEstimate:
    mean: float
    variance: float

    @property
    def std(self):
        return float(np.sqrt(self.variance))

    def scaled(self, factor):
        return IntegralEstimate(self.mean * factor, self.variance * factor**2)


def rbf_kernel_mean(kernel: RbfKernel, box: IntegrationBox, X) -> np.ndarray:
    """Integral of k(x, .) over the box, for each row x of X."""
    X = np.atleast_2d(X)
    ell = kernel.lengthscales
    a, b = box.lower, box.upper
    per_dim = np.sqrt(np.pi / 2) * ell * (erf((b - X) / (SQRT2 * ell)) - erf((a - X) / (SQRT2 * ell)))
    return kernel.variance * np.prod(per_dim, axis=1)


def rbf_initial_error(kernel: RbfKernel, box: IntegrationBox) -> float:
    """Double integral of k over box x box (prior variance of the integral)."""
    ell = kernel.lengthscales
    r = box.upper - box.lower
    per_dim = (2 * ell**2 * (np.exp(-r**2 / (2 * ell**2)) - 1)
               + np.sqrt(2 * np.pi) * ell * r * erf(r / (SQRT2 * ell)))
    return float(kernel.variance * np.prod(per_dim))


class QuadratureGp(Model):
    """An RBF :class:`GpModel` that can also integrate itself over a box.

    Data, prediction and fitting are delegated to the wrapped GP.
    """

    capabilities = ModelCapabilities(has_gradients=True, has_joint_covariance=True, has_integrability=True)

    def __init__(self, gp: GpModel, box: IntegrationBox):
        if not isinstance(gp.kernel, RbfKernel):
            raise CapabilityError("closed-form embeddings need an RBF kernel")
        if gp.input_dim != box.dim:
            raise ValueError("box and model dimensions differ")
        self.gp = gp
        self.box = box

    @property
    def X(self):
        return self.gp.X

    @property
    def Y(self):
        return self.gp.Y

    def set_data(self, X, Y, noise=None):
        self.gp.set_data(X, Y, noise=noise)
        return self

    def predict(self, X, include_noise=False):
        return self.gp.predict(X, include_noise=include_noise)

    def predict_gradients(self, X):
        return self.gp.predict_gradients(X)

    def posterior_covariance(self, X1, X2):
        return self.gp.posterior_covariance(X1, X2)

    def observation_noise(self):
        return self.gp.observation_noise()

    def optimize_hyperparameters(self, seed=0):
        self.gp.optimize_hyperparameters(seed)
        return self

    def objective(self):
        return self.gp.objective()

    def kernel_mean(self, X):
        return rbf_kernel_mean(self.gp.kernel, self.box, X)

    def initial_error(self):
        return rbf_initial_error(self.gp.kernel, self.box)

    def integrate(self) -> IntegralEstimate:
        """Posterior mean and variance of the integral over the box."""
        if self.gp.X.shape[0] == 0:
            raise ValueError("integration needs at least one observation")
        L, alpha, _ = self.gp._factor()
        y_mean, y_std = self.gp.output_scale
        qk = self.kernel_mean(self.gp.X)
        w = linalg.solve_triangular(L, qk, lower=True)
        var = self.initial_error() - float(w @ w)
        if var < -1e-8 * max(self.initial_error(), 1.0):
            warnings.warn(f"integral variance {var:.3g} is negative beyond round-off; clamped to 0", RuntimeWarning)
        mean = y_mean * self.box.volume + y_std * float(qk @ alpha[:, 0])
        return IntegralEstimate(mean, y_std**2 * max(var, 0.0))

    def integral_variance_reduction(self, Xc):
        """Drop in integral variance from observing each candidate row once."""
        Xc = np.atleast_2d(Xc)
        gp = self.gp
        noise = gp.noise_variance
        if gp._obs_noise.size:
            noise = noise + float(np.mean(gp._obs_noise)) / gp.output_scale[1] ** 2
        qc = self.kernel_mean(Xc)
        kcc = gp.kernel.diag(Xc)
        if gp.X.shape[0] == 0:
            num, den = qc, kcc + noise
        else:
            L, _, _ = gp._factor()
            Kxc = gp.kernel(gp.X, Xc)
            v = linalg.solve_triangular(L, Kxc, lower=True)
            w = linalg.solve_triangular(L, self.kernel_mean(gp.X), lower=True)
            num = qc - w @ v
            den = kcc - (v**2).sum(0) + noise
        den = np.maximum(den, 1e-300)
        return gp.output_scale[1] ** 2 * num**2 / den


def kernel_mean(qmodel: QuadratureGp, x) -> float | np.ndarray:
    x = np.asarray(x, dtype=float)
    out = qmodel.kernel_mean(np.atleast_2d(x))
    return float(out[0]) if x.ndim <= 1 else out


def initial_error(qmodel: QuadratureGp) -> float:
    return qmodel.initial_error()


def integrate(qmodel: QuadratureGp) -> IntegralEstimate:
    return qmodel.integrate()


class IntegralVarianceReduction(Acquisition):
    def __init__(self, qmodel: QuadratureGp):
        self.qmodel = qmodel

    def evaluate(self, X):
        return self.qmodel.integral_variance_reduction(X)


class UncertaintySamplingCalculator:
    """Next node = argmax over the box of the integral-variance reduction."""

    def __init__(self, qmodel, opt_cfg: AcquisitionOptimizerConfig = AcquisitionOptimizerConfig()):
        require(qmodel, "has_integrability")
        self.qmodel = qmodel
        self.opt_cfg = opt_cfg

    def __call__(self, state, space, seed):
        return optimize_acquisition(IntegralVarianceReduction(self.qmodel), space, self.opt_cfg, seed)


def uncertainty_sampling_calculator(qmodel, opt_cfg=AcquisitionOptimizerConfig()):
    return UncertaintySamplingCalculator(qmodel, opt_cfg)


@dataclass(frozen=True)
class BqConfig:
    """``initial_nodes`` Latin-hypercube nodes, then ``iterations`` loop passes."""

    initial_nodes: int = 5
    iterations: int = 15
    fit_restarts: int = 3
    optimizer: AcquisitionOptimizerConfig = field(
        default_factory=lambda: AcquisitionOptimizerConfig(restarts=3, raw_samples=500))


def make_quadrature_model(box: IntegrationBox, noise_free=False, restarts=3) -> QuadratureGp:
    if noise_free:
        gp = GpModel.default(box.dim, noise_variance=0.0, optimize_noise=False, restarts=restarts)
    else:
        gp = GpModel.default(box.dim, restarts=restarts)
    gp.kernel.lengthscales = 0.3 * (box.upper - box.lower)
    return QuadratureGp(gp, box)


@dataclass
class BqResult:
    estimate: IntegralEstimate
    state: LoopState
    model: QuadratureGp
    history: list


def bq_loop(function: UserFunction, box: IntegrationBox, seed=0, cfg: BqConfig = BqConfig(), model=None,
            noise_column=None, observers=()) -> BqResult:
    """Run vanilla BQ with uncertainty sampling and return the integral estimate.

    ``history`` holds the integral estimate after the initial design and
    after every pass.
    """
    space = box.space()
    if model is None:
        model = make_quadrature_model(box, noise_free=noise_column is None, restarts=cfg.fit_restarts)
    require(model, "has_integrability")
    X0 = sample_latin_hypercube(space, cfg.initial_nodes, derive_seed(seed, 0))
    state = evaluate_initial_design(function, X0)
    updater = ModelUpdater(model, noise_column=noise_column)
    fit_initial_model(updater, state, seed)
    history = [model.integrate()]

    def record(s):
        history.append(model.integrate())

    state = run_loop(uncertainty_sampling_calculator(model, cfg.optimizer), updater, function,
                     FixedIterations(cfg.iterations), state, seed, space, [record, *observers])
    return BqResult(model.integrate(), state, model, history)


# -- SEIR case study ----------------------------------------------------------


def seir_integrand(cfg: SeirConfig, target: str, seed) -> UserFunction:
    """User function beta -> [replication mean, variance of that mean] for
    ``target`` in {"height", "time"}. Each call uses a fresh derived seed."""
    if target not in ("height", "time"):
        raise ValueError("target must be 'height' or 'time'")
    counter = [0]

    def f(X):
        out = []
        for beta in X[:, 0]:
            counter[0] += 1
            stats = peak_statistics(cfg, float(beta), cfg.replications, derive_seed(seed, counter[0]))
            if target == "height":
                out.append((stats.height, stats.height_var))
            else:
                out.append((stats.time, stats.time_var))
        return np.array(out)

    return UserFunction(f, out_dim=2)


@dataclass
class SeirPeakEstimate:
    """Expected peak height and time over the uniform infection-rate box."""

    height: IntegralEstimate
    time: IntegralEstimate
    runs: dict


def estimate_seir_peak(cfg: SeirConfig = SeirConfig(), bq_cfg: BqConfig = BqConfig(), seed=0,
                       observers=()) -> SeirPeakEstimate:
    """One BQ run per integrand; integrals are divided by the box width to give
    expectations under the uniform rate distribution."""
    box = IntegrationBox([cfg.beta_bounds[0]], [cfg.beta_bounds[1]])
    runs = {}
    for k, target in enumerate(("height", "time")):
        fn = seir_integrand(cfg, target, derive_seed(seed, k, 0))
        model = make_quadrature_model(box, restarts=bq_cfg.fit_restarts)
        model.gp.optimize_noise = False
        model.gp.noise_variance = 1e-8
        runs[target] = bq_loop(fn, box, derive_seed(seed, k, 1), bq_cfg, model=model, noise_column=1,
                               observers=observers)
    scale = 1.0 / box.volume
    return SeirPeakEstimate(runs["height"].estimate.scaled(scale), runs["time"].estimate.scaled(scale), runs)


def monte_carlo_seir_peak(cfg: SeirConfig, n_draws=2000, seed=0):
    """Plain Monte Carlo reference: one trajectory per uniformly drawn rate.

    Returns ((height mean, standard error), (time mean, standard error)).
    """
    rng = make_rng(seed, 0)
    betas = rng.uniform(*cfg.beta_bounds, n_draws)
    h, t = simulate_peaks(cfg, betas, derive_seed(seed, 1))
    return ((float(h.mean()), float(h.std(ddof=1) / np.sqrt(n_draws))),
            (float(t.mean()), float(t.std(ddof=1) / np.sqrt(n_draws))))
