"""WDBC comparison over several shuffle seeds.

A single split is noisy. Looping over a few seeds shows how much the minimum
test loss and the selected support move with the shuffle.
"""

import argparse

from irlasso.cli import DEFAULT_WDBC
from irlasso.data_io import WDBC_SCHEMA, load_csv
from irlasso.real_data import DEFAULT_SEED, run_real_data


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", default=str(DEFAULT_WDBC))
    ap.add_argument("--seeds", type=int, nargs="+", default=[DEFAULT_SEED, 0, 1, 2, 3, 4])
    args = ap.parse_args(argv)

    data = load_csv(args.data, WDBC_SCHEMA)
    print(f"{'seed':>6} {'irl loss':>9} {'const loss':>10} {'irl nz':>6} {'const nz':>8} "
          f"{'irl l1':>8} {'const l1':>8}")
    for seed in args.seeds:
        _, (irl, const), _ = run_real_data(data, seed)
        print(f"{seed:>6} {irl.min_test_loss:9.4f} {const.min_test_loss:10.4f} "
              f"{irl.nonzeros_at_min:6d} {const.nonzeros_at_min:8d} "
              f"{irl.l1_norm_at_min:8.1f} {const.l1_norm_at_min:8.1f}")


if __name__ == "__main__":
    main()
