"""Assemble and run one method/backend/task configuration.

This is what the CLI drives. Every run yields plain dict records so the
caller decides how to serialize them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from ._rng import derive_seed
from .bayesopt import AcquisitionConfig, AcquisitionOptimizerConfig, bo_calculator
from .errors import CapabilityError, OuterLoopError
from .expdesign import DesignAcquisitionConfig, ed_calculator
from .loop import (FixedIterations, ModelUpdater, RandomCalculator, UserFunction, evaluate_initial_design,
                   fit_initial_model, run_loop)
from .models import BlrModel, GpModel, RandomCosineFeatures, require
from .multifidelity import Ar1Model
from .quadrature import BqConfig, IntegrationBox, bq_loop, estimate_seir_peak, make_quadrature_model
from .sensitivity import sobol_analysis
from .space import initial_design, sample_latin_hypercube
from .tasks import SeirConfig, forrester_low, standard_objectives

METHODS = ("bo", "ed", "bq", "sensitivity", "mf-demo")
BACKENDS = ("gp", "blr")
ACQUISITIONS = {
    "bo": ("ei", "pi", "lcb", "random"),
    "ed": ("ivr", "variance", "random"),
    "bq": ("us",),
    "mf-demo": ("ei", "pi", "lcb"),
    "sensitivity": ("none",),
}
DEFAULT_ACQUISITION = {"bo": "ei", "ed": "ivr", "bq": "us", "mf-demo": "ei", "sensitivity": "none"}
SEIR_TASK = "seir-peak"


class ConfigError(OuterLoopError, ValueError):
    """Invalid run configuration."""


def task_names():
    return sorted(standard_objectives()) + [SEIR_TASK]


@dataclass(frozen=True)
class RunConfig:
    task: str = "branin"
    method: str = "bo"
    backend: str = "gp"
    acquisition: str | None = None
    iters: int = 20
    seeds: tuple = (0,)
    n_base: int = 2**12
    fit_restarts: int = 3
    seir: SeirConfig = field(default_factory=SeirConfig)

    def __post_init__(self):
        if self.acquisition is None:
            object.__setattr__(self, "acquisition", DEFAULT_ACQUISITION.get(self.method))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    def validate(self) -> "RunConfig":
        if self.task not in task_names():
            raise ConfigError(f"unknown task {self.task!r}; choose from {task_names()}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {list(METHODS)}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}; choose from {list(BACKENDS)}")
        if self.acquisition not in ACQUISITIONS[self.method]:
            raise ConfigError(f"acquisition {self.acquisition!r} not valid for {self.method}; "
                              f"choose from {list(ACQUISITIONS[self.method])}")
        if self.iters < 0:
            raise ConfigError("iters must be >= 0")
        if not self.seeds or any(s < 0 for s in self.seeds):
            raise ConfigError("need at least one non-negative seed")
        if self.n_base < 2:
            raise ConfigError("n-base must be >= 2")
        if self.task == SEIR_TASK and self.method != "bq":
            raise ConfigError("the seir-peak task only supports --method bq")
        if self.method == "mf-demo" and self.task != "forrester":
            raise ConfigError("mf-demo runs on the forrester task")
        # capability gating happens here, before anything is evaluated
        if self.method == "bq" and self.backend != "gp":
            raise CapabilityError(f"backend {self.backend!r} cannot integrate; bq needs has_integrability")
        if self.method == "mf-demo" and self.backend != "gp":
            raise CapabilityError("the two-fidelity model is built from GP components; use --backend gp")
        return self

    def to_dict(self) -> dict:
        return {
            "task": self.task, "method": self.method, "backend": self.backend,
            "acquisition": self.acquisition, "iters": self.iters, "seed": list(self.seeds),
            "n-base": self.n_base, "fit-restarts": self.fit_restarts, "seir": self.seir.to_dict(),
        }

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:12]

    @classmethod
    def from_mapping(cls, d: dict) -> "RunConfig":
        known = {"task", "method", "backend", "acquisition", "iters", "seed", "n-base", "fit-restarts",
                 "seir", "out"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for key, attr in [("task", "task"), ("method", "method"), ("backend", "backend"),
                          ("acquisition", "acquisition")]:
            if key in d:
                kwargs[attr] = str(d[key])
        try:
            if "iters" in d:
                kwargs["iters"] = int(d["iters"])
            if "seed" in d:
                seeds = d["seed"]
                kwargs["seeds"] = tuple(int(s) for s in (seeds if isinstance(seeds, (list, tuple)) else [seeds]))
            if "n-base" in d:
                kwargs["n_base"] = int(d["n-base"])
            if "fit-restarts" in d:
                kwargs["fit_restarts"] = int(d["fit-restarts"])
            if "seir" in d:
                kwargs["seir"] = SeirConfig.from_dict(d["seir"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from None
        return cls(**kwargs)


def make_model(backend: str, space, seed: int, fit_restarts: int = 3):
    d = space.encoded_dim
    if backend == "gp":
        return GpModel.default(d, restarts=fit_restarts)
    widths = np.array([hi - lo for lo, hi in space.bounds])
    features = RandomCosineFeatures(256, lengthscale=0.2 * widths, input_dim=d, seed=derive_seed(seed, 99))
    return BlrModel(features)


def _record(seed, it, x, y, best, acq, **extra):
    rec = {"seed": seed, "iter": int(it), "x": [float(v) for v in x], "y": [float(v) for v in y],
           "best": float(best), "acq": None if acq is None else float(acq)}
    rec.update(extra)
    return rec


def _loop_records(seed, state, start_iteration=0, best_of=None):
    """Per-iteration records for rows produced by the loop (not the initial design)."""
    out = []
    for row in range(state.n):
        it = int(state.row_iteration[row])
        if it <= start_iteration:
            continue
        best = best_of(row) if best_of else float(state.outputs[: row + 1, 0].min())
        out.append(_record(seed, it, state.inputs[row], state.outputs[row], best, state.acquisition[it - 1]))
    return out


def run_single(cfg: RunConfig, seed: int) -> tuple[list[dict], dict]:
    """Run one seed; return (iteration records, summary)."""
    if cfg.method == "bq":
        return _run_bq(cfg, seed)
    if cfg.method == "sensitivity":
        return [], run_sensitivity(cfg, seed)
    objective = standard_objectives()[cfg.task]
    space = objective.space()
    function = UserFunction(objective)
    if cfg.method == "mf-demo":
        model, X0 = _mf_model(cfg, seed, space)
    else:
        model = make_model(cfg.backend, space, seed, cfg.fit_restarts)
        X0 = initial_design(space, derive_seed(seed, 0))
    state = evaluate_initial_design(function, X0)
    updater = ModelUpdater(model)
    fit_initial_model(updater, state, seed)
    opt_cfg = AcquisitionOptimizerConfig()
    if cfg.acquisition == "random":
        calculator = RandomCalculator()
    elif cfg.method in ("bo", "mf-demo"):
        calculator = bo_calculator(model, AcquisitionConfig(cfg.acquisition), opt_cfg)
    else:
        calculator = ed_calculator(model, DesignAcquisitionConfig(cfg.acquisition), opt_cfg)
    state = run_loop(calculator, updater, function, FixedIterations(cfg.iters), state, seed, space)
    records = _loop_records(seed, state)
    best_row = int(np.argmin(state.outputs[:, 0]))
    summary = {"seed": seed, "evaluations": state.n, "best": float(state.outputs[best_row, 0]),
               "best_x": state.inputs[best_row].tolist()}
    if isinstance(model, Ar1Model):
        summary["rho"] = float(model.rho)
    if objective.minimum is not None:
        summary["regret"] = summary["best"] - objective.minimum
    return records, summary


def _mf_model(cfg, seed, space):
    XL = sample_latin_hypercube(space, 11, derive_seed(seed, 5))
    low = GpModel.default(1, restarts=cfg.fit_restarts).set_data(XL, forrester_low(XL))
    low.fit(seed=seed)
    X0 = sample_latin_hypercube(space, 4, derive_seed(seed, 6))
    return Ar1Model(low, restarts=cfg.fit_restarts), X0


def _run_bq(cfg, seed):
    bq_cfg = BqConfig(iterations=cfg.iters, fit_restarts=cfg.fit_restarts)
    records = []
    if cfg.task == SEIR_TASK:
        result = estimate_seir_peak(cfg.seir, bq_cfg, seed)
        volume = cfg.seir.beta_bounds[1] - cfg.seir.beta_bounds[0]
        for target, run in result.runs.items():
            for rec in _loop_records(seed, run.state, best_of=None):
                rec["best"] = run.history[rec["iter"]].mean / volume
                rec["target"] = target
                records.append(rec)
        summary = {"seed": seed,
                   "height": {"mean": result.height.mean, "std": result.height.std},
                   "time": {"mean": result.time.mean, "std": result.time.std}}
        return records, summary
    objective = standard_objectives()[cfg.task]
    lo, hi = np.array(objective.bounds).T
    box = IntegrationBox(lo, hi)
    model = make_quadrature_model(box, noise_free=True, restarts=cfg.fit_restarts)
    require(model, "has_integrability")
    result = bq_loop(UserFunction(objective), box, seed, bq_cfg, model=model)
    for rec in _loop_records(seed, result.state):
        rec["best"] = result.history[rec["iter"]].mean
        records.append(rec)
    summary = {"seed": seed, "integral": {"mean": result.estimate.mean, "std": result.estimate.std}}
    return records, summary


def run_sensitivity(cfg: RunConfig, seed: int) -> dict:
    objective = standard_objectives()[cfg.task]
    space = objective.space()
    result = sobol_analysis(UserFunction(objective), space, cfg.n_base, seed)
    report = {"task": cfg.task, "n_base": cfg.n_base, "seed": seed, "names": space.names}
    report.update(result.to_dict())
    return report


def iter_runs(cfg: RunConfig) -> Iterator[tuple[int, list[dict], dict]]:
    cfg.validate()
    for seed in cfg.seeds:
        records, summary = run_single(cfg, seed)
        yield seed, records, summary


def expand_matrix(doc: dict) -> list[RunConfig]:
    """Cross product of list-valued task/method/backend/acquisition entries.

    Each resulting configuration runs every seed in ``seed``.
    """
    def as_list(v):
        return list(v) if isinstance(v, (list, tuple)) else [v]

    axes = {k: as_list(doc[k]) for k in ("task", "method", "backend", "acquisition") if k in doc}
    base = {k: v for k, v in doc.items() if k not in axes and k != "out"}
    configs = [base]
    for key, values in axes.items():
        configs = [{**c, key: v} for c in configs for v in values]
    return [RunConfig.from_mapping(c) for c in configs]


CSV_COLUMNS = ("task", "method", "backend", "acquisition", "seed", "iters", "best", "wall_ms")


def benchmark_rows(configs: list[RunConfig], clock=None) -> list[dict]:
    import time

    clock = clock or time.perf_counter
    if len(configs) < 2:
        raise ConfigError("a benchmark needs at least two configurations")
    for c in configs:
        c.validate()
        if len(c.seeds) < 2:
            raise ConfigError("a benchmark needs at least two seeds")
        if c.method == "sensitivity":
            raise ConfigError("sensitivity runs are not benchmarkable; use the sensitivity command")
    rows = []
    for c in configs:
        for seed in c.seeds:
            t0 = clock()
            records, summary = run_single(replace(c, seeds=(seed,)), seed)
            wall_ms = (clock() - t0) * 1e3
            best = summary.get("best")
            if best is None:
                best = summary.get("integral", summary.get("height", {})).get("mean")
            rows.append({"task": c.task, "method": c.method, "backend": c.backend,
                         "acquisition": c.acquisition, "seed": seed, "iters": c.iters,
                         "best": float(best), "wall_ms": round(wall_ms, 3)})
    rows.sort(key=lambda r: (r["task"], r["method"], r["backend"], r["acquisition"], r["seed"]))
    return rows
