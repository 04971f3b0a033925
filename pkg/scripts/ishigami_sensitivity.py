"""Sobol indices of the Ishigami function: direct sampling vs a GP emulator.

    python scripts/ishigami_sensitivity.py --n-base 8192 --train 120
"""
import argparse

from outerloop.models import GpModel
from outerloop.sensitivity import emulator_sobol, sobol_analysis
from outerloop.space import sample_latin_hypercube
from outerloop.tasks import ishigami_indices, standard_objectives


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n-base", type=int, default=2**13)
    p.add_argument("--train", type=int, default=120, help="emulator training points")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    task = standard_objectives()["ishigami"]
    space = task.space()
    direct = sobol_analysis(task, space, args.n_base, seed=args.seed)

    X = sample_latin_hypercube(space, args.train, args.seed)
    gp = GpModel.default(3, restarts=3).set_data(X, task(X)).fit(seed=args.seed)
    emu = emulator_sobol(gp, space, args.n_base, seed=args.seed)

    first, total, _ = ishigami_indices()
    print(f"{'':4s}{'S1 true':>9s}{'direct':>9s}{'emul':>9s}{'ST true':>9s}{'direct':>9s}{'emul':>9s}")
    for i in range(3):
        print(f"x{i + 1:<3d}{first[i]:9.4f}{direct.first_order[i]:9.4f}{emu.first_order[i]:9.4f}"
              f"{total[i]:9.4f}{direct.total[i]:9.4f}{emu.total[i]:9.4f}")
    print(f"evaluations: direct {direct.sample_count}, emulator {args.train}")


if __name__ == "__main__":
    main()
