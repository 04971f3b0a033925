"""The decision loop: pick a point, evaluate it, update the model, repeat.

Method modules plug in by supplying a candidate-point calculator and a model
updater; :func:`run_loop` itself never looks at which method it is running.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Protocol

import numpy as np

from ._rng import derive_seed
from .errors import ContractViolation, EvaluationError
from .space import ParameterSpace, sample_uniform


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LoopState:
    """Append-only record of everything evaluated so far.

    ``row_iteration[i]`` is the loop pass that produced row i (0 for rows
    supplied before the loop started). ``acquisition[k]`` is the maximal
    acquisition value the calculator reported on pass k+1, or None.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    iteration: int = 0
    row_iteration: np.ndarray = None
    acquisition: tuple = ()
    costs: np.ndarray | None = None

    def __post_init__(self):
        X, Y = _frozen(self.inputs), _frozen(self.outputs)
        if X.ndim != 2 or Y.ndim != 2:
            raise ValueError("inputs and outputs must be 2-D")
        if X.shape[0] != Y.shape[0]:
            raise ValueError("inputs and outputs must have the same number of rows")
        if not np.all(np.isfinite(Y)):
            raise EvaluationError("outputs must be finite")
        rows = np.zeros(X.shape[0], dtype=int) if self.row_iteration is None else np.array(self.row_iteration, dtype=int)
        rows.setflags(write=False)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "outputs", Y)
        object.__setattr__(self, "row_iteration", rows)
        if self.costs is not None:
            object.__setattr__(self, "costs", _frozen(self.costs))

    @classmethod
    def empty(cls, input_dim, output_dim=1):
        return cls(np.empty((0, input_dim)), np.empty((0, output_dim)))

    @classmethod
    def from_data(cls, X, Y):
        Y = np.asarray(Y, dtype=float)
        return cls(np.atleast_2d(X), Y[:, None] if Y.ndim == 1 else Y)

    @property
    def n(self):
        return self.inputs.shape[0]

    @property
    def last_acquisition(self):
        for value in reversed(self.acquisition):
            if value is not None:
                return value
        return None

    def best(self, column=0, maximize=False):
        if self.n == 0:
            return None
        col = self.outputs[:, column]
        return float(col.max() if maximize else col.min())

    def append(self, x, y, cost=None) -> "LoopState":
        """Return a new state with one more row; this state is left untouched."""
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        if x.size != self.inputs.shape[1] or y.size != self.outputs.shape[1]:
            raise ValueError("observation dimensions do not match the state")
        if not np.all(np.isfinite(y)):
            raise EvaluationError("non-finite output rejected", point=x)
        costs = self.costs
        if cost is not None or costs is not None:
            prior = np.full(self.n, np.nan) if costs is None else costs
            costs = np.append(prior, np.nan if cost is None else cost)
        return replace(
            self,
            inputs=np.vstack([self.inputs, x[None]]),
            outputs=np.vstack([self.outputs, y[None]]),
            row_iteration=np.append(self.row_iteration, self.iteration + 1),
            costs=costs,
        )

    def to_jsonl(self) -> str:
        lines = [
            json.dumps({"iter": int(it), "x": x.tolist(), "y": y.tolist()})
            for it, x, y in zip(self.row_iteration, self.inputs, self.outputs)
        ]
        return "".join(line + "\n" for line in lines)

    @classmethod
    def from_jsonl(cls, text: str) -> "LoopState":
        records = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not records:
            raise ValueError("no records")
        X = np.array([r["x"] for r in records], dtype=float)
        Y = np.array([r["y"] for r in records], dtype=float)
        its = np.array([r["iter"] for r in records], dtype=int)
        return cls(X, Y, iteration=int(its.max()), row_iteration=its,
                   acquisition=(None,) * int(its.max()))


def append_observation(state: LoopState, x, y) -> LoopState:
    return state.append(x, y)


class UserFunction:
    """Wraps the system under study.

    ``f`` maps a batch of input rows (n, d) to outputs (n,) or (n, out_dim).
    Counts calls so tests can assert that emulator-only analyses never touch it.
    """

    def __init__(self, f: Callable, out_dim: int = 1):
        self.f = f
        self.out_dim = out_dim
        self.calls = 0
        self.evaluations = 0

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self.calls += 1
        self.evaluations += X.shape[0]
        Y = np.asarray(self.f(X), dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.shape != (X.shape[0], self.out_dim):
            raise EvaluationError(f"user function returned shape {Y.shape}, expected {(X.shape[0], self.out_dim)}",
                                  point=X[0] if X.shape[0] == 1 else X)
        bad = ~np.all(np.isfinite(Y), axis=1)
        if bad.any():
            point = X[np.argmax(bad)]
            raise EvaluationError(f"user function returned non-finite output at {point.tolist()}", point=point)
        return Y


# -- stopping ---------------------------------------------------------------


class StoppingCondition(Protocol):
    def __call__(self, state: LoopState) -> bool: ...


@dataclass(frozen=True)
class FixedIterations:
    k: int

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("iteration budget must be >= 0")

    def __call__(self, state):
        return state.iteration >= self.k


@dataclass(frozen=True)
class AcquisitionBelow:
    threshold: float

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")

    def __call__(self, state):
        last = state.last_acquisition
        return last is not None and last < self.threshold


@dataclass(frozen=True)
class AnyOf:
    conditions: tuple

    def __call__(self, state):
        return any(c(state) for c in self.conditions)


def fixed_iterations(k: int) -> FixedIterations:
    return FixedIterations(k)


def stop_when_acquisition_below(threshold: float) -> AcquisitionBelow:
    return AcquisitionBelow(threshold)


# -- components -------------------------------------------------------------


class CandidatePointCalculator(Protocol):
    def __call__(self, state: LoopState, space: ParameterSpace, seed: int) -> tuple[np.ndarray, float | None]:
        """Return the next encoded input row and the maximal acquisition value
        (None if the strategy has no acquisition)."""


class RandomCalculator:
    """Uniformly random candidates; needs no model."""

    def __call__(self, state, space, seed):
        return sample_uniform(space, 1, seed)[0], None


@dataclass
class ModelUpdater:
    """Refit the model on all data after each append.

    Hyperparameters are re-optimized every ``interval`` iterations (0 turns
    that off). ``target_column`` picks the output column the model learns;
    ``noise_column``, if set, holds per-point observation variances passed
    to the model.
    """

    model: object
    interval: int = 1
    target_column: int = 0
    noise_column: int | None = None

    def __call__(self, state: LoopState, seed: int) -> None:
        Y = state.outputs[:, self.target_column]
        if self.noise_column is None:
            self.model.set_data(state.inputs, Y)
        else:
            self.model.set_data(state.inputs, Y, noise=state.outputs[:, self.noise_column])
        if self.interval and state.iteration % self.interval == 0 and state.n >= 2:
            self.model.optimize_hyperparameters(seed=seed)


class NoUpdate:
    def __call__(self, state, seed):
        pass


def run_loop(calculator, updater, function: UserFunction, stop, state: LoopState, seed: int,
             space: ParameterSpace, observers: Iterable[Callable[[LoopState], None]] = ()) -> LoopState:
    """Run decide/evaluate/update passes until ``stop(state)`` holds.

    The stopping condition is checked before every pass, so a budget of zero
    evaluates nothing. Each pass evaluates exactly one point.
    """
    observers = tuple(observers)
    while not stop(state):
        k = state.iteration + 1
        x, acq = calculator(state, space, derive_seed(seed, k, 0))
        x = np.asarray(x, dtype=float).ravel()
        if x.size != space.encoded_dim or not space.contains(x)[0]:
            raise ContractViolation(f"calculator proposed a point outside the space: {x.tolist()}")
        y = function(x[None, :])[0]
        state = state.append(x, y)
        state = replace(state, iteration=k, acquisition=state.acquisition + (None if acq is None else float(acq),))
        updater(state, derive_seed(seed, k, 1))
        for observe in observers:
            observe(state)
    return state


@dataclass
class OuterLoop:
    """Bundles the components of one method so it can be run repeatedly."""

    space: ParameterSpace
    calculator: object
    updater: object
    function: UserFunction
    observers: list = field(default_factory=list)

    def run(self, state: LoopState, stop, seed: int = 0) -> LoopState:
        return run_loop(self.calculator, self.updater, self.function, stop, state, seed,
                        self.space, self.observers)


def evaluate_initial_design(function: UserFunction, X) -> LoopState:
    """Evaluate a design and wrap the result as the loop's starting state."""
    return LoopState(np.atleast_2d(X), function(X))


def fit_initial_model(updater, state: LoopState, seed: int) -> None:
    """Train the model on the initial design before the first pass."""
    updater(state, derive_seed(seed, 0, 1))
