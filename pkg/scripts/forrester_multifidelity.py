"""Two-fidelity AR(1) model vs a high-fidelity-only GP on Forrester.

    python scripts/forrester_multifidelity.py --seeds 10
"""
import argparse

import numpy as np

from outerloop.models import GpModel
from outerloop.multifidelity import TwoFidelityData, mf_fit
from outerloop.space import sample_latin_hypercube
from outerloop.tasks import forrester_high, forrester_low, standard_objectives


def rmse(a, b):
    return float(np.sqrt(np.mean((a - b) ** 2)))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--n-low", type=int, default=11)
    p.add_argument("--n-high", type=int, default=4)
    args = p.parse_args()

    space = standard_objectives()["forrester"].space()
    grid = np.linspace(0, 1, 200)[:, None]
    truth = forrester_high(grid)
    wins = 0
    print(f"{'seed':>4s}{'rho':>9s}{'mf rmse':>10s}{'hf rmse':>10s}")
    for seed in range(args.seeds):
        XL = sample_latin_hypercube(space, args.n_low, 2 * seed)
        XH = sample_latin_hypercube(space, args.n_high, 2 * seed + 1)
        mf = mf_fit(TwoFidelityData(XL, forrester_low(XL), XH, forrester_high(XH)), seed=seed)
        hf = GpModel.default(1, restarts=5).set_data(XH, forrester_high(XH)).fit(seed=seed)
        a, b = rmse(mf.predict(grid).mean, truth), rmse(hf.predict(grid).mean, truth)
        wins += a < b
        print(f"{seed:4d}{mf.rho:9.3f}{a:10.3f}{b:10.3f}")
    print(f"two-fidelity model wins in {wins}/{args.seeds} seeds")


if __name__ == "__main__":
    main()
