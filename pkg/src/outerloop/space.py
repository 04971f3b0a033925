"""Input domains: typed parameters, sampling and the encoded representation.

Points are handled in an *encoded* form: continuous and discrete parameters
take one column each, a categorical parameter takes one column per category
(one-hot).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ._rng import make_rng
from .errors import SpaceError, UnsupportedDesignError


@dataclass(frozen=True)
class ContinuousParameter:
    name: str
    lower: float
    upper: float

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise SpaceError(f"{self.name}: bounds must be finite")
        if not lo < hi:
            raise SpaceError(f"{self.name}: need lower < upper, got [{lo}, {hi}]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    width = 1

    @property
    def bounds(self):
        return [(self.lower, self.upper)]

    def sample(self, rng, n):
        return rng.uniform(self.lower, self.upper, size=(n, 1))

    def round(self, block):
        return np.clip(block, self.lower, self.upper)

    def contains(self, block):
        return (block[:, 0] >= self.lower) & (block[:, 0] <= self.upper)


@dataclass(frozen=True)
class DiscreteParameter:
    name: str
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise SpaceError(f"{self.name}: value list is empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise SpaceError(f"{self.name}: values must be strictly increasing")
        if not all(np.isfinite(vals)):
            raise SpaceError(f"{self.name}: values must be finite")
        object.__setattr__(self, "values", vals)

    width = 1

    @property
    def bounds(self):
        return [(self.values[0], self.values[-1])]

    def sample(self, rng, n):
        return np.asarray(self.values)[rng.integers(len(self.values), size=n)][:, None]

    def round(self, block):
        vals = np.asarray(self.values)
        # argmin returns the first minimum, so exact midpoints go to the lower value
        nearest = np.argmin(np.abs(block[:, :1] - vals[None, :]), axis=1)
        return vals[nearest][:, None]

    def contains(self, block):
        return np.isin(block[:, 0], self.values)


@dataclass(frozen=True)
class CategoricalParameter:
    name: str
    categories: tuple

    def __post_init__(self):
        cats = tuple(self.categories)
        if len(cats) < 2 or len(set(cats)) != len(cats):
            raise SpaceError(f"{self.name}: need at least 2 distinct categories")
        object.__setattr__(self, "categories", cats)

    @property
    def width(self):
        return len(self.categories)

    @property
    def bounds(self):
        return [(0.0, 1.0)] * self.width

    def sample(self, rng, n):
        return np.eye(self.width)[rng.integers(self.width, size=n)]

    def round(self, block):
        return np.eye(self.width)[np.argmax(block, axis=1)]

    def contains(self, block):
        return np.isin(block, (0.0, 1.0)).all(axis=1) & (block.sum(axis=1) == 1)

    def encode(self, label):
        return np.eye(self.width)[self.categories.index(label)]

    def decode(self, block):
        return self.categories[int(np.argmax(block))]


Parameter = Union[ContinuousParameter, DiscreteParameter, CategoricalParameter]


class ParameterSpace:
    """An ordered, immutable collection of parameters."""

    def __init__(self, parameters: Sequence[Parameter]):
        self._parameters = tuple(parameters)
        if not self._parameters:
            raise SpaceError("a parameter space needs at least one parameter")
        names = [p.name for p in self._parameters]
        if len(set(names)) != len(names):
            raise SpaceError(f"parameter names must be unique: {names}")
        offsets = np.cumsum([0] + [p.width for p in self._parameters])
        self._slices = tuple(slice(a, b) for a, b in zip(offsets[:-1], offsets[1:]))
        self.encoded_dim = int(offsets[-1])

    @property
    def parameters(self):
        return self._parameters

    @property
    def names(self):
        return [p.name for p in self._parameters]

    @property
    def is_continuous(self) -> bool:
        return all(isinstance(p, ContinuousParameter) for p in self._parameters)

    @property
    def bounds(self) -> list[tuple[float, float]]:
        """Box bounds of the encoded representation."""
        return [b for p in self._parameters for b in p.bounds]

    def __len__(self):
        return len(self._parameters)

    def __repr__(self):
        return f"ParameterSpace({list(self._parameters)!r})"

    def _check(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.encoded_dim:
            raise SpaceError(f"expected {self.encoded_dim} encoded columns, got {X.shape[1]}")
        return X

    def round(self, X) -> np.ndarray:
        X = self._check(X)
        out = np.empty_like(X)
        for p, sl in zip(self._parameters, self._slices):
            out[:, sl] = p.round(X[:, sl])
        return out

    def contains(self, X) -> np.ndarray:
        X = self._check(X)
        ok = np.ones(X.shape[0], dtype=bool)
        for p, sl in zip(self._parameters, self._slices):
            ok &= p.contains(X[:, sl])
        return ok

    def to_dict(self) -> dict:
        out = []
        for p in self._parameters:
            if isinstance(p, ContinuousParameter):
                out.append({"type": "continuous", "name": p.name, "lower": p.lower, "upper": p.upper})
            elif isinstance(p, DiscreteParameter):
                out.append({"type": "discrete", "name": p.name, "values": list(p.values)})
            else:
                out.append({"type": "categorical", "name": p.name, "categories": list(p.categories)})
        return {"parameters": out}

    @classmethod
    def from_dict(cls, doc: dict) -> "ParameterSpace":
        try:
            entries = doc["parameters"]
        except (KeyError, TypeError):
            raise SpaceError('space document needs a "parameters" list') from None
        params = []
        for entry in entries:
            kind = entry.get("type")
            try:
                if kind == "continuous":
                    params.append(ContinuousParameter(entry["name"], entry["lower"], entry["upper"]))
                elif kind == "discrete":
                    params.append(DiscreteParameter(entry["name"], tuple(entry["values"])))
                elif kind == "categorical":
                    params.append(CategoricalParameter(entry["name"], tuple(entry["categories"])))
                else:
                    raise SpaceError(f"unknown parameter type {kind!r}")
            except KeyError as exc:
                raise SpaceError(f"parameter entry missing key {exc}") from None
        return cls(params)

    @classmethod
    def from_json(cls, text: str) -> "ParameterSpace":
        return cls.from_dict(json.loads(text))


def sample_uniform(space: ParameterSpace, n: int, seed) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed)
    return np.hstack([p.sample(rng, n) for p in space.parameters])


def sample_latin_hypercube(space: ParameterSpace, n: int, seed) -> np.ndarray:
    """One point per equal-width stratum in every dimension, randomly paired."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not space.is_continuous:
        raise UnsupportedDesignError("Latin hypercube sampling needs an all-continuous space")
    rng = make_rng(seed)
    d = space.encoded_dim
    strata = np.stack([rng.permutation(n) for _ in range(d)], axis=1)
    u = (strata + rng.random((n, d))) / n
    lower = np.array([p.lower for p in space.parameters])
    upper = np.array([p.upper for p in space.parameters])
    # keep the top edge inside the last stratum and the box after rescaling
    return np.minimum(lower + u * (upper - lower), upper)


def round_to_space(space: ParameterSpace, point) -> np.ndarray:
    """Snap one encoded point (or a matrix of points) onto the space."""
    point = np.asarray(point, dtype=float)
    out = space.round(point)
    return out[0] if point.ndim == 1 else out


def initial_design(space: ParameterSpace, seed, n: int | None = None) -> np.ndarray:
    """Default initial design: Latin hypercube of size max(5, 2*dim) for continuous
    spaces, uniform samples otherwise."""
    if n is None:
        n = max(5, 2 * space.encoded_dim)
    if space.is_continuous:
        return sample_latin_hypercube(space, n, seed)
    return sample_uniform(space, n, seed)
