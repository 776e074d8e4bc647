"""Exact law of the number of fixed points of a uniform permutation against the
centered Bennett bound for a single Hoeffding statistic.

    python3 scripts/fixed_point_oracle.py --nmax 8
"""

import argparse

from permconc.bounds import bennett_hoeffding_centered, chatterjee_bernstein, bennett_positive_hoeffding
from permconc.families import center_matrix
from permconc.oracle import enumerate_distribution, fixed_point_tail
from permconc.scenarios import fixed_point_matrix


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--nmax", type=int, default=8)
    args = p.parse_args()
    print(f"{'n':>2} {'j':>2} {'P(f>=j)':>12} {'centered':>10} {'positive':>10} {'chatterjee':>10}")
    for n in range(4, args.nmax + 1):
        R = fixed_point_matrix(n)
        var = center_matrix(R.a).variance
        law = enumerate_distribution(R)
        for j in range(2, n + 1):
            if j == n - 1:
                continue  # n - 1 fixed points is impossible
            t = j - law.mean
            print(f"{n:>2} {j:>2} {fixed_point_tail(n, j):12.6g} {bennett_hoeffding_centered(t, var):10.4g} "
                  f"{bennett_positive_hoeffding(t, 1.0):10.4g} {chatterjee_bernstein(t, 1.0):10.4g}")


if __name__ == "__main__":
    main()
