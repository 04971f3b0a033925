"""Expected SEIR peak height and time: Bayesian quadrature vs plain Monte Carlo.

    python scripts/seir_peak_study.py --seed 0 --draws 2000
"""
import argparse
import time

from outerloop.quadrature import BqConfig, estimate_seir_peak, monte_carlo_seir_peak
from outerloop.tasks import SeirConfig


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=15)
    p.add_argument("--draws", type=int, default=2000)
    args = p.parse_args()

    cfg = SeirConfig()
    t0 = time.perf_counter()
    est = estimate_seir_peak(cfg, BqConfig(iterations=args.iters), seed=args.seed)
    bq_s = time.perf_counter() - t0
    t0 = time.perf_counter()
    (mc_h, se_h), (mc_t, se_t) = monte_carlo_seir_peak(cfg, args.draws, seed=args.seed)
    mc_s = time.perf_counter() - t0

    print(f"{'':8s}{'BQ mean':>10s}{'BQ std':>10s}{'MC mean':>10s}{'MC se':>10s}")
    print(f"{'height':8s}{est.height.mean:10.3f}{est.height.std:10.3f}{mc_h:10.3f}{se_h:10.3f}")
    print(f"{'time':8s}{est.time.mean:10.4f}{est.time.std:10.4f}{mc_t:10.4f}{se_t:10.4f}")
    print(f"wall: BQ {bq_s:.1f}s, MC {mc_s:.1f}s")


if __name__ == "__main__":
    main()
