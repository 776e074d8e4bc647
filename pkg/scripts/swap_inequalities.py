"""Deterministic swap inequalities on random and extremal inputs.

For S = sup_r sum_k r[k, sigma(k)] and S_ij its value after swapping positions
i and j, compare sum_ij (S - S_ij)_+^2 with 2nS and 4nS, and the gain sum
sum_ij (S_ij - S)_+ with twice the total mass, over random [0,1] matrices and
over identity matrices, where every swap of two fixed points loses 2.

    python3 scripts/swap_inequalities.py --pairs 2000
"""

import argparse

import numpy as np

from permconc.families import SingletonMatrix, swap_deficit_sums
from permconc.sampling import PermutationSample, SeedSpec


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--pairs", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    rng = SeedSpec(args.seed).generator()
    worst_2n, worst_gain = 0.0, 0.0
    for _ in range(args.pairs):
        n = int(rng.integers(2, 51))
        a = rng.uniform(0, 1, (n, n))
        perm = PermutationSample(n, rng.permutation(n))
        s = swap_deficit_sums(SingletonMatrix(a), perm)
        S = float(a[np.arange(n), perm.sigma].sum())
        worst_2n = max(worst_2n, s.sum_pos_sq / (2 * n * S))
        worst_gain = max(worst_gain, s.sum_gain / (2 * a.sum()))
    print(f"random [0,1] matrices, {args.pairs} pairs:")
    print(f"  max sum (S-S_ij)_+^2 / (2nS)      = {worst_2n:.4f}")
    print(f"  max sum (S_ij-S)_+ / (2 sum a)    = {worst_gain:.4f}")
    print("identity matrix at the identity permutation:")
    for n in range(2, 9):
        s = swap_deficit_sums(SingletonMatrix(np.eye(n)), PermutationSample.identity(n))
        print(f"  n={n}: sum sq deficit {s.sum_pos_sq:6.0f}   2nS {2 * n * n:4d}   4nS {4 * n * n:4d}   "
              f"deficit sum {s.sum_pos:4.0f}   gain sum {s.sum_gain:3.0f}   2 sum a {2 * n:3d}")


if __name__ == "__main__":
    main()
