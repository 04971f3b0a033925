"""Checks every model backend must pass.

Each check takes a ``factory(input_dim) -> Model`` that builds a fresh,
untrained model, and raises AssertionError on failure. A backend whose
predictions carry an irreducible noise floor passes ``interpolation_sd`` to
relax exact interpolation to "within that many predictive standard
deviations".
"""

from __future__ import annotations

import numpy as np

from .._rng import make_rng
from ..errors import FitDegeneracyError


def _toy_data(seed=0, n=5):
    rng = make_rng(seed)
    X = (np.linspace(0.05, 0.95, n) + 0.02 * (rng.uniform(0, 1, n) - 0.5))[:, None]
    Y = np.sin(6 * X) + 0.5 * X
    return X, Y


def check_prediction_valid(factory, **_):
    X, Y = _toy_data()
    model = factory(1).set_data(X, Y)
    pred = model.predict(np.linspace(-1, 2, 31)[:, None])
    assert np.all(np.isfinite(pred.mean)), "non-finite predictive mean"
    assert np.all(pred.variance >= 0), "negative predictive variance"
    assert len(pred) == 31


def check_interpolation(factory, interpolation_sd=None, tol=1e-6, **_):
    X, Y = _toy_data()
    model = factory(1).set_data(X, Y)
    pred = model.predict(X)
    err = np.abs(pred.mean - Y[:, 0])
    if interpolation_sd is None:
        assert np.all(err <= tol), f"max interpolation error {err.max():.3g} > {tol}"
    else:
        assert np.all(err <= interpolation_sd * pred.std), "training targets outside predictive band"


def check_variance_far_from_data(factory, **_):
    X, Y = _toy_data()
    model = factory(1).set_data(X, Y)
    at_data = model.predict(X[2:3]).variance[0]
    far = model.predict(np.array([[8.0]])).variance[0]
    assert far >= at_data, f"variance far from data ({far:.3g}) below variance at data ({at_data:.3g})"


def check_set_data_replaces(factory, **_):
    X1, Y1 = _toy_data(seed=1)
    X2, Y2 = X1[:3] + 0.013, np.cos(4 * X1[:3])
    probe = np.linspace(0, 1, 17)[:, None]
    twice = factory(1).set_data(X1, Y1).set_data(X2, Y2)
    fresh = factory(1).set_data(X2, Y2)
    a, b = twice.predict(probe), fresh.predict(probe)
    np.testing.assert_allclose(a.mean, b.mean, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(a.variance, b.variance, rtol=1e-12, atol=1e-12)


def check_set_data_rejects_bad_input(factory, **_):
    X, Y = _toy_data()
    model = factory(1)
    for bad in [(X, Y[:-1]), (X, np.where(np.arange(5)[:, None] == 2, np.nan, Y))]:
        try:
            model.set_data(*bad)
        except ValueError:
            continue
        raise AssertionError("set_data accepted invalid data")


def check_dimension_mismatch(factory, **_):
    X, Y = _toy_data()
    model = factory(1).set_data(X, Y)
    try:
        model.predict(np.zeros((3, 2)))
    except Exception:
        return
    raise AssertionError("predict accepted inputs of the wrong dimension")


def check_gradients(factory, **_):
    model = factory(2)
    if not model.capabilities.has_gradients:
        return
    rng = make_rng(3)
    X = rng.uniform(0, 1, (8, 2))
    model.set_data(X, np.sin(3 * X[:, :1]) + X[:, 1:] ** 2)
    Q = rng.uniform(0, 1, (10, 2))
    dmean, dvar = model.predict_gradients(Q)
    h = 1e-5
    for d in range(2):
        e = np.zeros(2)
        e[d] = h
        up, down = model.predict(Q + e), model.predict(Q - e)
        fd_mean = (up.mean - down.mean) / (2 * h)
        fd_var = (up.variance - down.variance) / (2 * h)
        np.testing.assert_allclose(dmean[:, d], fd_mean, rtol=1e-4, atol=1e-6)
        np.testing.assert_allclose(dvar[:, d], fd_var, rtol=1e-4, atol=1e-6)


def check_optimize_monotone(factory, **_):
    X, Y = _toy_data(n=8)
    model = factory(1).set_data(X, Y)
    before = model.objective()
    model.optimize_hyperparameters(seed=0)
    assert model.objective() >= before - 1e-9, "fit objective decreased"


def check_optimize_deterministic(factory, **_):
    X, Y = _toy_data(n=8)
    a = factory(1).set_data(X, Y).optimize_hyperparameters(seed=5)
    b = factory(1).set_data(X, Y).optimize_hyperparameters(seed=5)
    probe = np.linspace(0, 1, 11)[:, None]
    pa, pb = a.predict(probe), b.predict(probe)
    assert np.array_equal(pa.mean, pb.mean) and np.array_equal(pa.variance, pb.variance)


def check_degenerate_fit(factory, **_):
    model = factory(1).set_data(np.full((4, 1), 0.3), np.arange(4.0)[:, None])
    try:
        model.optimize_hyperparameters(seed=0)
    except FitDegeneracyError:
        return
    raise AssertionError("fitting identical inputs did not raise FitDegeneracyError")


CHECKS = [
    check_prediction_valid,
    check_interpolation,
    check_variance_far_from_data,
    check_set_data_replaces,
    check_set_data_rejects_bad_input,
    check_dimension_mismatch,
    check_gradients,
    check_optimize_monotone,
    check_optimize_deterministic,
    check_degenerate_fit,
]


def run_conformance(factory, **options):
    """Run every check; return a list of (name, error-or-None)."""
    results = []
    for check in CHECKS:
        try:
            check(factory, **options)
            results.append((check.__name__, None))
        except AssertionError as exc:
            results.append((check.__name__, exc))
    return results
