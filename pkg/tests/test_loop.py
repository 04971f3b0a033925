import numpy as np
import pytest

from outerloop.errors import ContractViolation, EvaluationError
from outerloop.loop import (AcquisitionBelow, AnyOf, FixedIterations, LoopState, ModelUpdater, NoUpdate, OuterLoop,
                            RandomCalculator, UserFunction, append_observation, evaluate_initial_design,
                            fixed_iterations, run_loop, stop_when_acquisition_below)
from outerloop.space import ContinuousParameter, ParameterSpace

SPACE = ParameterSpace([ContinuousParameter("x", 0.0, 1.0), ContinuousParameter("y", -1.0, 1.0)])


def square(X):
    return (X**2).sum(1)


def test_state_is_append_only():
    s0 = LoopState.from_data(np.zeros((2, 2)), np.ones((2, 1)))
    s1 = append_observation(s0, [0.5, 0.5], [2.0])
    assert s0.n == 2 and s1.n == 3
    with pytest.raises(ValueError):
        s1.inputs[0, 0] = 9.0
    assert s1.row_iteration.tolist() == [0, 0, 1]


def test_state_rejects_non_finite_output():
    with pytest.raises(EvaluationError):
        LoopState.empty(2).append([0.0, 0.0], [np.nan])


def test_best_observation():
    s = LoopState.from_data(np.arange(6.0).reshape(3, 2), [[3.0], [1.0], [2.0]])
    assert s.best() == 1.0
    assert s.best(maximize=True) == 3.0
    assert LoopState.empty(2).best() is None


def test_jsonl_round_trip():
    state = run_loop(RandomCalculator(), NoUpdate(), UserFunction(square), fixed_iterations(3),
                     evaluate_initial_design(UserFunction(square), np.zeros((2, 2))), 0, SPACE)
    again = LoopState.from_jsonl(state.to_jsonl())
    assert np.array_equal(again.inputs, state.inputs)
    assert np.array_equal(again.outputs, state.outputs)
    assert again.row_iteration.tolist() == [0, 0, 1, 2, 3]


def test_zero_budget_evaluates_nothing():
    f = UserFunction(square)
    state = run_loop(RandomCalculator(), NoUpdate(), f, FixedIterations(0), LoopState.empty(2), 0, SPACE)
    assert f.calls == 0 and state.n == 0


def test_loop_runs_exact_budget_and_records_acquisition():
    f = UserFunction(square)

    def calc(state, space, seed):
        return np.array([0.5, 0.0]), 1.0 / (state.iteration + 1)

    state = run_loop(calc, NoUpdate(), f, fixed_iterations(4), LoopState.empty(2), 0, SPACE)
    assert f.evaluations == 4 and state.iteration == 4
    assert state.acquisition == (1.0, 0.5, 1 / 3, 0.25)


def test_acquisition_threshold_stops_early():
    def calc(state, space, seed):
        return np.array([0.5, 0.0]), 0.5 ** (state.iteration + 1)

    stop = AnyOf((stop_when_acquisition_below(0.1), FixedIterations(100)))
    state = run_loop(calc, NoUpdate(), UserFunction(square), stop, LoopState.empty(2), 0, SPACE)
    assert state.iteration == 4  # 0.5, 0.25, 0.125, 0.0625
    with pytest.raises(ValueError):
        AcquisitionBelow(0.0)


def test_out_of_space_proposal_is_a_contract_violation():
    def bad(state, space, seed):
        return np.array([2.0, 0.0]), None

    with pytest.raises(ContractViolation):
        run_loop(bad, NoUpdate(), UserFunction(square), fixed_iterations(1), LoopState.empty(2), 0, SPACE)


@pytest.mark.parametrize("f, exc", [
    (lambda X: np.full(len(X), np.inf), EvaluationError),
    (lambda X: np.ones((len(X), 3)), EvaluationError),
])
def test_user_function_validation(f, exc):
    with pytest.raises(exc) as info:
        UserFunction(f)(np.array([[0.2, 0.3]]))
    assert info.value.point is not None


def test_same_seed_same_trajectory():
    def run(seed):
        return run_loop(RandomCalculator(), NoUpdate(), UserFunction(square), fixed_iterations(5),
                        LoopState.empty(2), seed, SPACE)

    assert np.array_equal(run(3).inputs, run(3).inputs)
    assert not np.array_equal(run(3).inputs, run(4).inputs)


def test_model_updater_refits_on_schedule():
    calls = []

    class Recorder:
        def set_data(self, X, Y, noise=None):
            calls.append(("data", len(X), noise is not None))

        def optimize_hyperparameters(self, seed=0):
            calls.append(("fit",))

    loop = OuterLoop(SPACE, RandomCalculator(), ModelUpdater(Recorder(), interval=2, noise_column=1),
                     UserFunction(lambda X: np.c_[square(X), np.ones(len(X))], out_dim=2))
    state = evaluate_initial_design(loop.function, np.zeros((2, 2)))
    loop.run(state, fixed_iterations(4), seed=0)
    assert [c for c in calls if c[0] == "fit"] == [("fit",)] * 2
    assert all(c[2] for c in calls if c[0] == "data")


def test_observers_see_every_state():
    seen = []
    loop = OuterLoop(SPACE, RandomCalculator(), NoUpdate(), UserFunction(square), [lambda s: seen.append(s.n)])
    loop.run(LoopState.empty(2), fixed_iterations(3))
    assert seen == [1, 2, 3]
