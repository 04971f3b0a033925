"""Command-line harness.

    outerloop run --task branin --method bo --backend gp --acquisition ei --iters 20 --seed 7
    outerloop benchmark --task branin --acquisition ei --acquisition random --seed 0 --seed 1
    outerloop sensitivity --task ishigami --n-base 16384 --seed 0

Exit codes: 0 ok, 2 config error, 3 capability mismatch, 4 evaluation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from contextlib import contextmanager
from pathlib import Path

from .errors import (CapabilityError, ConditioningError, DegenerateVarianceError, EvaluationError,
                     OptimizationFailure, SpaceError, UnsupportedDesignError)
from .runner import CSV_COLUMNS, ConfigError, RunConfig, benchmark_rows, expand_matrix, iter_runs, run_sensitivity

EXIT_OK, EXIT_CONFIG, EXIT_CAPABILITY, EXIT_EVALUATION = 0, 2, 3, 4
RESULTS_DIR = Path("results")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    parser = _Parser(prog="outerloop", description="Run outer-loop methods on catalog tasks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("run", "benchmark", "sensitivity"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file whose keys mirror the flag names")
        p.add_argument("--task")
        p.add_argument("--method")
        p.add_argument("--backend")
        # benchmark accepts several of these to form a matrix
        repeat = "append" if name == "benchmark" else None
        p.add_argument("--acquisition", action=repeat)
        p.add_argument("--iters", type=int)
        p.add_argument("--seed", type=int, action="append")
        p.add_argument("--n-base", type=int, dest="n_base")
        p.add_argument("--out", help="output path, or - for standard output")
    return parser


def _load_config(args) -> dict:
    doc = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
    # explicit flags win over the config file
    for flag, attr in [("task", "task"), ("method", "method"), ("backend", "backend"),
                       ("acquisition", "acquisition"), ("iters", "iters"), ("seed", "seed"),
                       ("n-base", "n_base"), ("out", "out")]:
        value = getattr(args, attr)
        if value is not None:
            doc[flag] = value
    return doc


@contextmanager
def _open_out(out, default_name):
    if out == "-":
        yield sys.stdout
        sys.stdout.flush()
        return
    path = Path(out) if out else RESULTS_DIR / default_name
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    yield buf
    # written only once everything succeeded
    path.write_text(buf.getvalue())
    print(f"wrote {path}", file=sys.stderr)


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, allow_nan=False)


def cmd_run(doc: dict) -> int:
    cfg = RunConfig.from_mapping(doc).validate()
    if cfg.method == "sensitivity":
        return cmd_sensitivity(doc)
    lines = []
    summaries = []
    for seed, records, summary in iter_runs(cfg):
        lines.extend(_dumps(r) for r in records)
        summaries.append(summary)
    head = {"task": cfg.task, "method": cfg.method, "backend": cfg.backend, "acquisition": cfg.acquisition,
            "iters": cfg.iters}
    lines.append(_dumps({"summary": {**head, "runs": summaries}}))
    with _open_out(doc.get("out"), f"run-{cfg.digest()}.jsonl") as fh:
        fh.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_benchmark(doc: dict) -> int:
    doc = dict(doc)
    doc.setdefault("method", "bo")
    configs = expand_matrix(doc)
    rows = benchmark_rows(configs)
    digest = RunConfig.from_mapping({}).digest() if not configs else _matrix_digest(configs)
    with _open_out(doc.get("out"), f"benchmark-{digest}.csv") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({**row, "best": repr(row["best"])})
    return EXIT_OK


def _matrix_digest(configs):
    import hashlib

    blob = _dumps([c.to_dict() for c in configs])
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def cmd_sensitivity(doc: dict) -> int:
    doc = {"method": "sensitivity", **doc}
    doc["method"] = "sensitivity"
    doc.setdefault("task", "ishigami")
    cfg = RunConfig.from_mapping(doc).validate()
    reports = [run_sensitivity(cfg, seed) for seed in cfg.seeds]
    with _open_out(doc.get("out"), f"sensitivity-{cfg.digest()}.jsonl") as fh:
        for report in reports:
            fh.write(_dumps(report) + "\n")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "benchmark": cmd_benchmark, "sensitivity": cmd_sensitivity}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](_load_config(args))
    except CapabilityError as exc:
        print(f"capability mismatch: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (ConfigError, SpaceError, UnsupportedDesignError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EvaluationError, DegenerateVarianceError, ConditioningError, OptimizationFailure) as exc:
        print(f"evaluation failure: {exc}", file=sys.stderr)
        return EXIT_EVALUATION


if __name__ == "__main__":
    sys.exit(main())
