"""Brute-force ground truth over the whole symmetric group for small n."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import permutations

import numpy as np

from .errors import InvalidParameterError, SizeLimitError
from .families import FromVectors, MatrixFamily

MAX_N_DISTRIBUTION = 8
MAX_N_ENTROPY = 7


@lru_cache(maxsize=None)
def all_permutations(n: int) -> np.ndarray:
    """(n!, n) array of every permutation of range(n), lexicographic order."""
    p = np.array(list(permutations(range(n))), dtype=np.int64).reshape(-1, n)
    p.flags.writeable = False
    return p


def _values(R: MatrixFamily, perms: np.ndarray) -> np.ndarray:
    mats = R.dense() if isinstance(R, FromVectors) else R.matrices
    n = mats.shape[1]
    vals = mats[:, np.arange(n), perms].sum(axis=-1)  # (members, n!)
    return vals.max(axis=0)


@dataclass(frozen=True)
class ExactDistribution:
    support: np.ndarray = field(repr=False)
    probs: np.ndarray = field(repr=False)

    @property
    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    @property
    def variance(self) -> float:
        return float(np.dot((self.support - self.mean) ** 2, self.probs))

    def survival(self, x: float, tol: float = 1e-12) -> float:
        """P(X >= x), with values within tol of x counted as equal."""
        if x - tol <= self.support[0]:
            return 1.0
        return min(1.0, float(self.probs[self.support >= x - tol].sum()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "prob"])
        for v, p in zip(self.support.tolist(), self.probs.tolist()):
            w.writerow([f"{v:.17g}", f"{p:.17g}"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"value": self.support.tolist(), "prob": self.probs.tolist(),
                "mean": self.mean, "variance": self.variance}


def enumerate_distribution(R: MatrixFamily, decimals: int = 12) -> ExactDistribution:
    """Law of S = sup_r sum_k r[k, sigma(k)] under the uniform measure on S_n.

    Values that agree to ``decimals`` places are merged, since summing the same
    entries in different orders can differ in the last bit.
    """
    n = R.n
    if n > MAX_N_DISTRIBUTION:
        raise SizeLimitError(f"enumeration is limited to n <= {MAX_N_DISTRIBUTION}")
    vals = np.round(_values(R, all_permutations(n)), decimals)
    support, counts = np.unique(vals, return_counts=True)
    return ExactDistribution(support, counts / math.factorial(n))


def fixed_point_pmf(n: int) -> list[Fraction]:
    """P(f = i) for the number of fixed points of a uniform permutation of n items."""
    if n < 0:
        raise InvalidParameterError("n must be nonnegative")
    out = []
    for i in range(n + 1):
        s = sum(Fraction((-1) ** r, math.factorial(r)) for r in range(n - i + 1))
        out.append(s / math.factorial(i))
    return out


def fixed_point_tail(n: int, j: int) -> float:
    """P(f >= j), exact via inclusion-exclusion."""
    if not 0 <= j <= n:
        raise InvalidParameterError(f"need 0 <= j <= n, got j={j}, n={n}")
    return float(sum(fixed_point_pmf(n)[j:]))


@dataclass(frozen=True)
class EntropyCheck:
    lhs: float
    rhs: float
    passed: bool


def check_entropy_inequality(R: MatrixFamily, lam: float, tol: float = 1e-10) -> EntropyCheck:
    """Exact check of Ent(e^{lam S}) <= (lam/n) E[e^{lam S} sum_ij (1 - e^{-lam (S - S_ij)})_+ (S - S_ij)_+].

    Both sides are computed over all n! permutations and all n^2 ordered pairs,
    in extended precision.
    """
    if lam < 0:
        raise InvalidParameterError("lambda must be nonnegative")
    n = R.n
    if n > MAX_N_ENTROPY:
        raise SizeLimitError(f"entropy check is limited to n <= {MAX_N_ENTROPY}")
    perms = all_permutations(n)
    mats = (R.dense() if isinstance(R, FromVectors) else R.matrices).astype(np.longdouble)
    rows = np.arange(n)
    own = mats[:, rows, perms]  # (members, n!, n): r[i, sigma_i]
    S = own.sum(axis=-1).max(axis=0)  # (n!,)
    # cross[r, p, i, j] = r[i, sigma_p(j)]
    cross = mats[:, rows[None, :, None], perms[:, None, :]]
    delta = cross + cross.transpose(0, 1, 3, 2) - own[..., :, None] - own[..., None, :]
    Sij = (own.sum(axis=-1)[..., None, None] + delta).max(axis=0)  # (n!, n, n)
    d = np.maximum(S[:, None, None] - Sij, 0)
    lam_ = np.longdouble(lam)
    F = np.exp(lam_ * S)
    EF = F.mean()
    lhs = (F * lam_ * S).mean() - EF * np.log(EF)
    inner = (-np.expm1(-lam_ * d) * d).sum(axis=(1, 2))
    rhs = lam_ / n * (F * inner).mean()
    return EntropyCheck(float(lhs), float(rhs), bool(lhs <= rhs + tol))
