"""Model-agnostic outer-loop decision making.

Every method is a loop: a candidate-point calculator proposes inputs, a
user function evaluates them, and a model updater refits the emulator.
Emulators only need to satisfy :class:`outerloop.models.Model`.
"""

from .bayesopt import (AcquisitionConfig, AcquisitionOptimizerConfig, BayesianOptimizationCalculator,
                       bo_calculator, expected_improvement, lower_confidence_bound, optimize_acquisition,
                       probability_of_improvement)
from .errors import (CapabilityError, ConditioningError, ContractViolation, DegenerateVarianceError,
                     EvaluationError, FitDegeneracyError, OptimizationFailure, OuterLoopError, SpaceError,
                     UnsupportedDesignError)
from .expdesign import DesignAcquisitionConfig, ed_calculator, integrated_variance_reduction
from .loop import (LoopState, ModelUpdater, OuterLoop, RandomCalculator, UserFunction, fixed_iterations,
                   run_loop, stop_when_acquisition_below)
from .models import BlrModel, GpModel, Model, ModelCapabilities, Prediction
from .multifidelity import Ar1Model, TwoFidelityData, mf_fit, mf_predict
from .quadrature import BqConfig, IntegrationBox, QuadratureGp, bq_loop, estimate_seir_peak
from .sensitivity import emulator_sobol, saltelli_sample, sobol_analysis, sobol_indices
from .space import (CategoricalParameter, ContinuousParameter, DiscreteParameter, ParameterSpace,
                    round_to_space, sample_latin_hypercube, sample_uniform)

__version__ = "0.1.0"
