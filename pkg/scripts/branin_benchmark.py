"""EI vs random search on Branin over a set of seeds.

    python scripts/branin_benchmark.py --seeds 10 --iters 45
"""
import argparse

import numpy as np

from outerloop.runner import RunConfig, run_single

BRANIN_MIN = 0.397887


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--iters", type=int, default=45, help="loop passes after the 5-point initial design")
    p.add_argument("--backend", default="gp", choices=["gp", "blr"])
    args = p.parse_args()

    best = {}
    for acq in ("ei", "random"):
        cfg = RunConfig(task="branin", method="bo", backend=args.backend, acquisition=acq, iters=args.iters,
                        seeds=tuple(range(args.seeds))).validate()
        best[acq] = np.array([run_single(cfg, s)[1]["best"] for s in cfg.seeds])
    print("seed  " + "  ".join(f"{a:>8s}" for a in best))
    for s in range(args.seeds):
        print(f"{s:4d}  " + "  ".join(f"{best[a][s]:8.4f}" for a in best))
    for a, v in best.items():
        print(f"{a:>6s}: median {np.median(v):.4f}, regret<0.1 in {np.sum(v - BRANIN_MIN < 0.1)}/{len(v)}")


if __name__ == "__main__":
    main()
