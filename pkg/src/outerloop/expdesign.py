"""Experimental design: place evaluations where they make the emulator
globally more accurate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import derive_seed
from .bayesopt import Acquisition, AcquisitionOptimizerConfig, optimize_acquisition
from .models.base import Prediction, require
from .space import sample_uniform


def model_variance(pred: Prediction) -> np.ndarray:
    return pred.variance


def integrated_variance_reduction(model, x, probes) -> float | np.ndarray:
    """Average drop in latent posterior variance over ``probes`` from one
    observation at ``x`` (hyperparameters held fixed).

    Uses var_new(p) = var(p) - cov(p, x)^2 / (var(x) + noise), so no refit is
    needed. ``x`` may be one point or a matrix of candidates.
    """
    x = np.asarray(x, dtype=float)
    Xc = np.atleast_2d(x)
    cov = model.posterior_covariance(probes, Xc)  # M x m
    den = model.latent_variance(Xc) + model.observation_noise()
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, np.mean(cov**2, axis=0) / np.maximum(den, 1e-300), 0.0)
    return float(out[0]) if x.ndim == 1 else out


class ModelVariance(Acquisition):
    def __init__(self, model):
        self.model = model
        self.has_gradients = model.capabilities.has_gradients

    def evaluate(self, X):
        return self.model.predict(X).variance

    def evaluate_with_gradients(self, X):
        return self.model.predict(X).variance, self.model.predict_gradients(X)[1]


class IntegratedVarianceReduction(Acquisition):
    def __init__(self, model, probes):
        self.model = model
        self.probes = probes

    def evaluate(self, X):
        return integrated_variance_reduction(self.model, np.atleast_2d(X), self.probes)


@dataclass(frozen=True)
class DesignAcquisitionConfig:
    """``kind`` is "variance" or "ivr"; IVR averages over ``mc_points`` uniform probes."""

    kind: str = "ivr"
    mc_points: int = 1000

    def __post_init__(self):
        if self.kind not in ("variance", "ivr"):
            raise ValueError(f"unknown design acquisition {self.kind!r}")
        if self.kind == "ivr" and self.mc_points < 100:
            raise ValueError("IVR needs at least 100 Monte Carlo points")


class ExperimentalDesignCalculator:
    def __init__(self, model, cfg: DesignAcquisitionConfig = DesignAcquisitionConfig(),
                 opt_cfg: AcquisitionOptimizerConfig = AcquisitionOptimizerConfig()):
        if cfg.kind == "ivr":
            require(model, "has_joint_covariance")
        self.model = model
        self.cfg = cfg
        self.opt_cfg = opt_cfg

    def acquisition(self, space, seed) -> Acquisition:
        if self.cfg.kind == "variance":
            return ModelVariance(self.model)
        # fresh probe set every call
        probes = sample_uniform(space, self.cfg.mc_points, derive_seed(seed, 1))
        return IntegratedVarianceReduction(self.model, probes)

    def __call__(self, state, space, seed):
        return optimize_acquisition(self.acquisition(space, seed), space, self.opt_cfg, derive_seed(seed, 0))


def ed_calculator(model, cfg=DesignAcquisitionConfig(), opt_cfg=AcquisitionOptimizerConfig()):
    return ExperimentalDesignCalculator(model, cfg, opt_cfg)
