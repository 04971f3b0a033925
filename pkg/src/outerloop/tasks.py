"""Benchmark objectives and a Gillespie SEIR epidemic simulator.

The objectives take a matrix ``X`` of shape (n, d) and return a vector of
length n. Each catalog entry carries its domain so the CLI and tests can
build a :class:`~outerloop.space.ParameterSpace` for it.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np

from ._rng import make_rng
from .space import ContinuousParameter, ParameterSpace


def branin(X):
    X = np.atleast_2d(X)
    x1, x2 = X[:, 0], X[:, 1]
    b = 5.1 / (4 * np.pi**2)
    c = 5 / np.pi
    t = 1 / (8 * np.pi)
    return (x2 - b * x1**2 + c * x1 - 6) ** 2 + 10 * (1 - t) * np.cos(x1) + 10


def forrester_high(X):
    x = np.atleast_2d(X)[:, 0]
    return (6 * x - 2) ** 2 * np.sin(12 * x - 4)


def forrester_low(X):
    x = np.atleast_2d(X)[:, 0]
    return 0.5 * forrester_high(X) + 10 * (x - 0.5) - 5


def ishigami(X, a=7.0, b=0.1):
    X = np.atleast_2d(X)
    x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
    return np.sin(x1) + a * np.sin(x2) ** 2 + b * x3**4 * np.sin(x1)


def first_input(X):
    """f(x) = x1; every other input is ignored."""
    return np.atleast_2d(X)[:, 0].astype(float)


def additive(X):
    """f(x) = x1 + 2 x2 on the unit square."""
    X = np.atleast_2d(X)
    return X[:, 0] + 2 * X[:, 1]


def quadratic(X):
    return (np.atleast_2d(X)[:, 0] - 0.5) ** 2


@dataclass(frozen=True)
class Objective:
    name: str
    function: Callable[[np.ndarray], np.ndarray]
    bounds: tuple[tuple[float, float], ...]
    minimum: float | None = None
    minimizers: tuple[tuple[float, ...], ...] = ()

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def space(self) -> ParameterSpace:
        return ParameterSpace(
            [ContinuousParameter(f"x{i + 1}", lo, hi) for i, (lo, hi) in enumerate(self.bounds)]
        )

    def __call__(self, X):
        return self.function(X)


def standard_objectives() -> dict[str, Objective]:
    """Catalog of named test functions with their domains."""
    return {
        "branin": Objective(
            "branin",
            branin,
            ((-5.0, 10.0), (0.0, 15.0)),
            minimum=0.39788735772973816,
            minimizers=((-np.pi, 12.275), (np.pi, 2.275), (9.42478, 2.475)),
        ),
        "forrester": Objective(
            "forrester", forrester_high, ((0.0, 1.0),), minimum=-6.020740055767083,
            minimizers=((0.7572487144081974,),),
        ),
        "forrester-low": Objective("forrester-low", forrester_low, ((0.0, 1.0),)),
        "ishigami": Objective("ishigami", ishigami, ((-np.pi, np.pi),) * 3),
        "first-input": Objective("first-input", first_input, ((0.0, 1.0), (0.0, 1.0))),
        "additive": Objective("additive", additive, ((0.0, 1.0), (0.0, 1.0))),
        "quadratic": Objective("quadratic", quadratic, ((0.0, 1.0),), minimum=0.0, minimizers=((0.5,),)),
    }


def ishigami_indices(a=7.0, b=0.1):
    """Analytic first-order and total Sobol indices of the Ishigami function."""
    v1 = 0.5 * (1 + b * np.pi**4 / 5) ** 2
    v2 = a**2 / 8
    v13 = b**2 * np.pi**8 * (1 / 18 - 1 / 50)
    var = a**2 / 8 + b * np.pi**4 / 5 + b**2 * np.pi**8 / 18 + 0.5
    first = np.array([v1, v2, 0.0]) / var
    total = np.array([v1 + v13, v2, v13]) / var
    return first, total, var


# ---------------------------------------------------------------------------
# SEIR


@dataclass(frozen=True)
class SeirConfig:
    """Stochastic SEIR settings.

    Rates are per unit time. ``beta_bounds`` is the interval over which the
    infection rate is uncertain. The defaults are a local calibration: the
    basic reproduction number beta/recovery_rate spans [1.5, 3.5], the
    population sets the peak height near 62 individuals and a common rate
    scale of 6 puts the peak near one time unit. They are not published
    settings.
    """

    population: int = 360
    exposed0: int = 5
    infected0: int = 1
    incubation_rate: float = 12.0
    recovery_rate: float = 6.0
    horizon: float = 4.0
    replications: int = 300
    beta_bounds: tuple[float, float] = (9.0, 21.0)

    def __post_init__(self):
        if self.population < 1:
            raise ValueError("population must be >= 1")
        if not (0 <= self.exposed0 and 0 <= self.infected0
                and self.exposed0 + self.infected0 <= self.population):
            raise ValueError("initial counts must lie in [0, population]")
        if self.incubation_rate <= 0 or self.recovery_rate <= 0:
            raise ValueError("rates must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        lo, hi = self.beta_bounds
        if not 0 < lo < hi:
            raise ValueError("beta_bounds must satisfy 0 < lower < upper")
        object.__setattr__(self, "beta_bounds", (float(lo), float(hi)))

    @classmethod
    def from_dict(cls, d: dict) -> "SeirConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown SEIR config keys: {sorted(unknown)}")
        d = dict(d)
        if "beta_bounds" in d:
            d["beta_bounds"] = tuple(d["beta_bounds"])
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["beta_bounds"] = list(self.beta_bounds)
        return d


@dataclass(frozen=True)
class Trajectory:
    """Event times and compartment counts (columns S, E, I, R).

    Row 0 is the initial state at t = 0.
    """

    times: np.ndarray
    counts: np.ndarray
    transitions: np.ndarray = field(repr=False)  # event kind per row; -1 for the initial state

    @property
    def infected(self):
        return self.counts[:, 2]

    def peak(self) -> tuple[int, float]:
        i = int(np.argmax(self.infected))  # first maximum = earliest time
        return int(self.infected[i]), float(self.times[i])


def gillespie_seir(cfg: SeirConfig, beta: float, seed) -> Trajectory:
    """Sample one SEIR trajectory with the direct-method SSA.

    Events: S->E at rate beta*S*I/N, E->I at incubation_rate*E,
    I->R at recovery_rate*I. Stops when no event can fire or the next event
    would fall after the horizon.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    rng = make_rng(seed)
    n = cfg.population
    s, e, i, r = n - cfg.exposed0 - cfg.infected0, cfg.exposed0, cfg.infected0, 0
    t = 0.0
    times, counts, kinds = [0.0], [(s, e, i, r)], [-1]
    buf = rng.random(2048)
    pos = 0
    while True:
        a1 = beta * s * i / n
        a2 = cfg.incubation_rate * e
        a3 = cfg.recovery_rate * i
        a0 = a1 + a2 + a3
        if a0 <= 0:
            break
        if pos + 2 > buf.size:
            buf = rng.random(2048)
            pos = 0
        u1, u2 = buf[pos], buf[pos + 1]
        pos += 2
        t += -math.log1p(-u1) / a0
        if t > cfg.horizon:
            break
        pick = u2 * a0
        if pick < a1:
            s, e, kind = s - 1, e + 1, 0
        elif pick < a1 + a2:
            e, i, kind = e - 1, i + 1, 1
        else:
            i, r, kind = i - 1, r + 1, 2
        times.append(t)
        counts.append((s, e, i, r))
        kinds.append(kind)
    return Trajectory(np.array(times), np.array(counts, dtype=np.int64), np.array(kinds))


def simulate_peaks(cfg: SeirConfig, betas, seed):
    """Peak height and peak time of one trajectory per entry of ``betas``.

    Same process as :func:`gillespie_seir`, advanced for all replications at
    once. Random streams differ from the single-trajectory sampler, so the
    two agree in distribution, not draw for draw.
    """
    betas = np.asarray(betas, dtype=float).ravel()
    if np.any(betas <= 0):
        raise ValueError("beta must be positive")
    rng = make_rng(seed)
    m = betas.size
    n = float(cfg.population)
    heights = np.full(m, cfg.infected0, dtype=np.int64)
    peak_times = np.zeros(m)

    idx = np.arange(m)
    b = betas.copy()
    s = np.full(m, cfg.population - cfg.exposed0 - cfg.infected0, dtype=np.int64)
    e = np.full(m, cfg.exposed0, dtype=np.int64)
    i = np.full(m, cfg.infected0, dtype=np.int64)
    t = np.zeros(m)
    best = heights.copy()
    best_t = peak_times.copy()
    while idx.size:
        a1 = b * s * i / n
        a2 = cfg.incubation_rate * e
        a3 = cfg.recovery_rate * i
        a0 = a1 + a2 + a3
        u = rng.random((2, idx.size))
        with np.errstate(divide="ignore"):
            t = t - np.log1p(-u[0]) / a0
        live = (a0 > 0) & (t <= cfg.horizon)
        if not live.all():
            done = ~live
            heights[idx[done]] = best[done]
            peak_times[idx[done]] = best_t[done]
            idx, b, s, e, i, t, best, best_t = (
                v[live] for v in (idx, b, s, e, i, t, best, best_t)
            )
            a1, a2, a0, u = a1[live], a2[live], a0[live], u[:, live]
            if not idx.size:
                break
        pick = u[1] * a0
        to_e = pick < a1
        to_i = ~to_e & (pick < a1 + a2)
        to_r = ~(to_e | to_i)
        s = s - to_e
        e = e + to_e - to_i
        i = i + to_i - to_r
        rise = i > best
        best = np.where(rise, i, best)
        best_t = np.where(rise, t, best_t)
    return heights.astype(float), peak_times


@dataclass(frozen=True)
class PeakStatistics:
    """Replication averages at one infection rate.

    ``height_var`` and ``time_var`` are variances of the *means*
    (sample variance divided by the replication count).
    """

    height: float
    time: float
    height_var: float
    time_var: float
    replications: int


def peak_statistics(cfg: SeirConfig, beta: float, replications: int | None = None, seed=0) -> PeakStatistics:
    reps = cfg.replications if replications is None else int(replications)
    if reps < 2:
        raise ValueError("need at least 2 replications for a variance estimate")
    h, t = simulate_peaks(cfg, np.full(reps, float(beta)), seed)
    return PeakStatistics(
        height=float(h.mean()),
        time=float(t.mean()),
        height_var=float(h.var(ddof=1) / reps),
        time_var=float(t.var(ddof=1) / reps),
        replications=reps,
    )
