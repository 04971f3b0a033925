import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from outerloop.errors import SpaceError, UnsupportedDesignError
from outerloop.space import (CategoricalParameter, ContinuousParameter, DiscreteParameter, ParameterSpace,
                             initial_design, round_to_space, sample_latin_hypercube, sample_uniform)


def mixed_space():
    return ParameterSpace([
        ContinuousParameter("x", -1.0, 2.0),
        DiscreteParameter("k", (1, 2, 5)),
        CategoricalParameter("c", ("red", "green", "blue")),
    ])


def test_encoded_width_and_bounds():
    space = mixed_space()
    assert space.encoded_dim == 5
    assert space.bounds == [(-1.0, 2.0), (1, 5), (0, 1), (0, 1), (0, 1)]
    assert not space.is_continuous


@pytest.mark.parametrize("params", [
    [],
    [ContinuousParameter("a", 0, 1), ContinuousParameter("a", 0, 2)],
])
def test_invalid_spaces(params):
    with pytest.raises(SpaceError):
        ParameterSpace(params)


@pytest.mark.parametrize("make", [
    lambda: ContinuousParameter("a", 1.0, 1.0),
    lambda: ContinuousParameter("a", 0.0, np.inf),
    lambda: DiscreteParameter("k", ()),
    lambda: DiscreteParameter("k", (1, 1)),
    lambda: CategoricalParameter("c", ("a",)),
])
def test_invalid_parameters(make):
    with pytest.raises((SpaceError, ValueError)):
        make()


def test_uniform_samples_lie_in_space():
    space = mixed_space()
    X = sample_uniform(space, 200, seed=3)
    assert X.shape == (200, 5)
    assert space.contains(X).all()


def test_sampling_is_seed_deterministic():
    space = mixed_space()
    assert np.array_equal(sample_uniform(space, 10, 7), sample_uniform(space, 10, 7))
    assert not np.array_equal(sample_uniform(space, 10, 7), sample_uniform(space, 10, 8))


@given(n=st.integers(1, 40), d=st.integers(1, 4), seed=st.integers(0, 2**32))
def test_latin_hypercube_one_point_per_stratum(n, d, seed):
    space = ParameterSpace([ContinuousParameter(f"x{i}", -2.0 * i, 3.0 + i) for i in range(d)])
    X = sample_latin_hypercube(space, n, seed)
    assert X.shape == (n, d)
    assert space.contains(X).all()
    for j, (lo, hi) in enumerate(space.bounds):
        strata = np.minimum(np.floor((X[:, j] - lo) / (hi - lo) * n), n - 1).astype(int)
        assert sorted(strata) == list(range(n))


def test_latin_hypercube_rejects_non_continuous():
    with pytest.raises(UnsupportedDesignError):
        sample_latin_hypercube(mixed_space(), 5, 0)


def test_initial_design_size():
    space = ParameterSpace([ContinuousParameter(f"x{i}", 0, 1) for i in range(4)])
    assert initial_design(space, 0).shape == (8, 4)
    assert initial_design(ParameterSpace([ContinuousParameter("x", 0, 1)]), 0).shape == (5, 1)
    # non-continuous spaces fall back to uniform sampling
    assert mixed_space().contains(initial_design(mixed_space(), 0)).all()


@given(st.lists(st.floats(-10, 10), min_size=5, max_size=5))
def test_round_is_idempotent_and_lands_in_space(raw):
    space = mixed_space()
    once = round_to_space(space, np.array(raw))
    assert space.contains(once).all()
    assert np.array_equal(round_to_space(space, once), once)


def test_categorical_tie_breaks_to_lowest_index():
    c = CategoricalParameter("c", ("a", "b", "c"))
    assert np.array_equal(c.round(np.array([[0.5, 0.5, 0.1]])), [[1, 0, 0]])
    assert np.array_equal(c.round(np.array([[0.2, 0.7, 0.7]])), [[0, 1, 0]])


def test_discrete_rounds_to_nearest_value():
    k = DiscreteParameter("k", (1, 2, 5))
    assert k.round(np.array([[3.6], [3.4], [-9.0], [99.0]])).ravel().tolist() == [5, 2, 1, 5]


def test_json_round_trip():
    space = mixed_space()
    text = json.dumps(space.to_dict())
    again = ParameterSpace.from_json(text)
    assert again.to_dict() == space.to_dict()
    assert again.names == ["x", "k", "c"]


@pytest.mark.parametrize("doc", [
    {},
    {"parameters": [{"type": "wobbly", "name": "a"}]},
    {"parameters": [{"type": "continuous", "name": "a", "lower": 0}]},
])
def test_from_dict_rejects_malformed(doc):
    with pytest.raises(SpaceError):
        ParameterSpace.from_dict(doc)


def test_contains_checks_width():
    with pytest.raises(SpaceError):
        mixed_space().contains(np.zeros((1, 3)))
