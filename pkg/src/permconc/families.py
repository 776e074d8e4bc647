"""Payoff families and exact per-realization statistics.

A vector family X in R^n defines, for a sample of indices i_1..i_m,

    Z        = sup_{x in X} sum_k x[i_k]
    Sigma^2  = sup_{x in X} sum_k x[i_k]**2

Without-replacement samples (the first m entries of a permutation) give Z
and Sigma^2; with-replacement samples give Z' and Sigma~^2. Both cases go
through the same multiset code path: a sample is reduced to hit counts per
coordinate, and the supremum is taken over the counts-weighted member sums.

A matrix family R in R^{n x n} defines S = sup_{r in R} sum_k r[k, sigma(k)].
The vector case embeds into it via ``FromVectors`` (first m rows are copies
of x, the rest zero).

Member ids are 0-based positions for explicit families. For the capped
indicator family the id of 1_S + sign*1_B is the sorted tuple of 1-based
elements of S.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import InvalidParameterError
from .sampling import PermutationSample, ReplacementSample


@dataclass(frozen=True)
class StatisticValue:
    value: float
    argmax_id: object


def _readonly(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


def _check_box(arr: np.ndarray, lo: float, hi: float, what: str):
    if arr.size and (arr.min() < lo or arr.max() > hi):
        raise InvalidParameterError(f"{what} entries must lie in [{lo}, {hi}]")


# ---------------------------------------------------------------------------
# vector families

@dataclass(frozen=True)
class ExplicitVectors:
    """A finite list of vectors, stored as rows of a (size, n) array."""

    vectors: np.ndarray = field(repr=False)
    lo: float = -1.0
    hi: float = 1.0

    def __post_init__(self):
        v = _readonly(self.vectors)
        if v.ndim != 2 or v.shape[0] == 0:
            raise InvalidParameterError("need a non-empty 2-d array of vectors")
        if not (-1.0 <= self.lo <= self.hi <= 1.0):
            raise InvalidParameterError("bound_box must satisfy -1 <= lo <= hi <= 1")
        _check_box(v, self.lo, self.hi, "vector")
        object.__setattr__(self, "vectors", v)

    @property
    def n(self) -> int:
        return self.vectors.shape[1]

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def sup_counts(self, counts: np.ndarray) -> StatisticValue:
        # row-wise reduction so one member re-evaluates to the identical float
        vals = (self.vectors * counts).sum(axis=1)
        i = int(np.argmax(vals))
        return StatisticValue(float(vals[i]), i)

    def sup_sq_counts(self, counts: np.ndarray) -> StatisticValue:
        vals = (self.vectors**2 * counts).sum(axis=1)
        i = int(np.argmax(vals))
        return StatisticValue(float(vals[i]), i)

    def member(self, member_id) -> np.ndarray:
        return self.vectors[member_id]

    def max_value(self, m: int) -> float:
        """Largest Z over all size-m subsets: best sum of m largest entries."""
        top = -np.sort(-self.vectors, axis=1)[:, :m]
        return float(top.sum(axis=1).max())

    def as_explicit(self) -> ExplicitVectors:
        return self


@dataclass(frozen=True)
class CappedIndicatorContrast:
    """X = {1_S + b_sign * 1_B : S subset of A, |S| <= l}.

    ``b_sign = -1`` is the contrast family of the adversarial example; the
    ``b_sign = +1`` variant only arises as the heavy part of a truncation.
    A and B are 0-based index arrays.
    """

    n: int
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    l: int
    b_sign: int = -1

    def __post_init__(self):
        A = _readonly(np.unique(self.A), dtype=np.int64)
        B = _readonly(np.unique(self.B), dtype=np.int64)
        if len(A) != len(np.asarray(self.A)) or len(B) != len(np.asarray(self.B)):
            raise InvalidParameterError("A and B must not repeat elements")
        for S in (A, B):
            if S.size and (S.min() < 0 or S.max() >= self.n):
                raise InvalidParameterError("set elements outside range(n)")
        if np.intersect1d(A, B).size:
            raise InvalidParameterError("A and B must be disjoint")
        if not 1 <= self.l <= len(A):
            raise InvalidParameterError("need 1 <= l <= |A|")
        if self.b_sign not in (-1, 1):
            raise InvalidParameterError("b_sign must be -1 or +1")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    lo = property(lambda self: -1.0 if self.b_sign < 0 and len(self.B) else 0.0)
    hi = 1.0

    @property
    def size(self) -> int:
        return sum(math.comb(len(self.A), s) for s in range(self.l + 1))

    def _top(self, counts: np.ndarray) -> tuple[int, tuple[int, ...]]:
        # sup over |S| <= l of sum_{i in S} counts[i]: keep the l largest
        # positive hit counts, ties to the smaller index
        ca = counts[self.A]
        order = np.lexsort((self.A, -ca))[: self.l]
        chosen = order[ca[order] > 0]
        ids = tuple(sorted(int(i) + 1 for i in self.A[chosen]))
        return int(ca[chosen].sum()), ids

    def sup_counts(self, counts: np.ndarray) -> StatisticValue:
        top, ids = self._top(counts)
        return StatisticValue(float(top + self.b_sign * counts[self.B].sum()), ids)

    def sup_sq_counts(self, counts: np.ndarray) -> StatisticValue:
        top, ids = self._top(counts)
        return StatisticValue(float(top + counts[self.B].sum()), ids)

    def member(self, member_id) -> np.ndarray:
        x = np.zeros(self.n)
        x[np.asarray(member_id, dtype=np.int64) - 1] = 1.0
        x[self.B] = self.b_sign
        return x

    def max_value(self, m: int) -> float:
        if self.b_sign < 0:
            return float(min(self.l, m))
        return float(min(m, self.l + len(self.B)))

    def as_explicit(self, limit: int = 200_000) -> ExplicitVectors:
        from itertools import combinations

        if self.size > limit:
            raise InvalidParameterError(f"family has {self.size} members, above limit {limit}")
        rows = []
        for s in range(self.l + 1):
            for S in combinations(self.A.tolist(), s):
                x = np.zeros(self.n)
                x[list(S)] = 1.0
                x[self.B] = self.b_sign
                rows.append(x)
        return ExplicitVectors(np.array(rows), lo=min(0.0, float(self.b_sign)), hi=1.0)


VectorFamily = Union[ExplicitVectors, CappedIndicatorContrast]


def _counts(idx: np.ndarray, n: int) -> np.ndarray:
    return np.bincount(idx, minlength=n)


def _check_dim(family, n: int):
    if family.n != n:
        raise InvalidParameterError(f"family dimension {family.n} != sample size {n}")


def _check_m(m: int, n: int):
    if not 1 <= m <= n:
        raise InvalidParameterError(f"need 1 <= m <= n, got m={m}, n={n}")


def eval_Z(family: VectorFamily, m: int, perm: PermutationSample) -> StatisticValue:
    _check_dim(family, perm.n)
    _check_m(m, perm.n)
    return family.sup_counts(_counts(perm.head(m), perm.n))


def eval_Zprime(family: VectorFamily, sample: ReplacementSample) -> StatisticValue:
    _check_dim(family, sample.n)
    return family.sup_counts(_counts(sample.indices, sample.n))


def eval_sigma2(family: VectorFamily, m: int, perm: PermutationSample) -> StatisticValue:
    _check_dim(family, perm.n)
    _check_m(m, perm.n)
    return family.sup_sq_counts(_counts(perm.head(m), perm.n))


def eval_sigma2_tilde(family: VectorFamily, sample: ReplacementSample) -> StatisticValue:
    _check_dim(family, sample.n)
    return family.sup_sq_counts(_counts(sample.indices, sample.n))


def truncate_family(family: VectorFamily, rho: float) -> tuple[VectorFamily, VectorFamily]:
    """Split at threshold rho into (low, high).

    low keeps x_i where |x_i| <= rho, high keeps |x_i| where |x_i| > rho, so
    that Z <= Z_low + Z_high for every sample.
    """
    if not rho > 0:
        raise InvalidParameterError("rho must be positive")
    if isinstance(family, CappedIndicatorContrast):
        # every nonzero entry has modulus 1
        if rho >= 1:
            return family, ExplicitVectors(np.zeros((1, family.n)), lo=0.0, hi=0.0)
        high = CappedIndicatorContrast(family.n, family.A, family.B, family.l, b_sign=1)
        return ExplicitVectors(np.zeros((1, family.n)), lo=0.0, hi=0.0), high
    v = family.vectors
    mask = np.abs(v) <= rho
    low = ExplicitVectors(np.where(mask, v, 0.0), lo=family.lo, hi=family.hi)
    high = ExplicitVectors(np.where(mask, 0.0, np.abs(v)), lo=0.0, hi=1.0)
    return low, high


# ---------------------------------------------------------------------------
# matrix families

def _square(a) -> np.ndarray:
    a = _readonly(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidParameterError("matrix must be square and non-empty")
    return a


@dataclass(frozen=True)
class ExplicitMatrices:
    matrices: np.ndarray = field(repr=False)

    def __post_init__(self):
        mats = _readonly(self.matrices)
        if mats.ndim != 3 or mats.shape[0] == 0:
            raise InvalidParameterError("family must contain at least one matrix")
        if mats.shape[1] != mats.shape[2]:
            raise InvalidParameterError("matrices must be square")
        _check_box(mats, -1.0, 1.0, "matrix")
        object.__setattr__(self, "matrices", mats)

    @property
    def n(self) -> int:
        return self.matrices.shape[1]

    def dense(self) -> np.ndarray:
        return self.matrices

    def member_values(self, sigma: np.ndarray) -> np.ndarray:
        return self.matrices[:, np.arange(self.n), sigma].sum(axis=1)

    def sup(self, sigma: np.ndarray) -> StatisticValue:
        vals = self.member_values(sigma)
        i = int(np.argmax(vals))
        return StatisticValue(float(vals[i]), i)

    def sup_sq(self, sigma: np.ndarray) -> StatisticValue:
        vals = (self.matrices[:, np.arange(self.n), sigma] ** 2).sum(axis=1)
        i = int(np.argmax(vals))
        return StatisticValue(float(vals[i]), i)


class SingletonMatrix(ExplicitMatrices):
    """R = {a}: the single Hoeffding statistic f(sigma) = sum_k a[k, sigma(k)]."""

    def __init__(self, a):
        super().__init__(_square(a)[None, :, :])

    @property
    def a(self) -> np.ndarray:
        return self.matrices[0]


@dataclass(frozen=True)
class FromVectors:
    """R = {a^x : x in X} where a^x has m copies of x on top and zeros below."""

    family: VectorFamily
    m: int

    def __post_init__(self):
        _check_m(self.m, self.family.n)

    @property
    def n(self) -> int:
        return self.family.n

    def sup(self, sigma: np.ndarray) -> StatisticValue:
        return self.family.sup_counts(_counts(sigma[: self.m], self.n))

    def sup_sq(self, sigma: np.ndarray) -> StatisticValue:
        return self.family.sup_sq_counts(_counts(sigma[: self.m], self.n))

    def dense(self) -> np.ndarray:
        X = self.family.as_explicit().vectors
        mats = np.zeros((X.shape[0], self.n, self.n))
        mats[:, : self.m, :] = X[:, None, :]
        return mats

    def to_explicit(self) -> ExplicitMatrices:
        return ExplicitMatrices(self.dense())


MatrixFamily = Union[ExplicitMatrices, SingletonMatrix, FromVectors]


def _check_entries(a: np.ndarray):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidParameterError("matrix must be square")
    _check_box(a, -1.0, 1.0, "matrix")


def eval_hoeffding(a, perm: PermutationSample) -> float:
    a = np.asarray(a, dtype=float)
    _check_entries(a)
    if a.shape[0] != perm.n:
        raise InvalidParameterError("matrix size does not match permutation")
    return float(a[np.arange(perm.n), perm.sigma].sum())


def eval_S(R: MatrixFamily, perm: PermutationSample) -> StatisticValue:
    if R.n != perm.n:
        raise InvalidParameterError("family size does not match permutation")
    return R.sup(perm.sigma)


def eval_sigma2_R(R: MatrixFamily, perm: PermutationSample) -> StatisticValue:
    """Sigma_R^2 = sup_r sum_k r[k, sigma(k)]**2."""
    if R.n != perm.n:
        raise InvalidParameterError("family size does not match permutation")
    return R.sup_sq(perm.sigma)


def swap_statistic(R: MatrixFamily, perm: PermutationSample, i: int, j: int) -> float:
    """S evaluated at sigma o tau_ij; i, j are 1-based positions."""
    if not (1 <= i <= perm.n and 1 <= j <= perm.n):
        raise InvalidParameterError(f"positions must lie in 1..{perm.n}")
    return eval_S(R, perm.swapped(i - 1, j - 1)).value


@dataclass(frozen=True)
class SwapSums:
    sum_pos: float  # sum_ij (S - S_ij)_+
    sum_pos_sq: float  # sum_ij (S - S_ij)_+^2
    sum_gain: float  # sum_ij (S_ij - S)_+


def swap_values(R: MatrixFamily, sigma: np.ndarray) -> np.ndarray:
    """(n, n) array of S_ij over all ordered position pairs, vectorized per member."""
    mats = R.dense()
    n = mats.shape[1]
    rows = np.arange(n)
    # own[r, i] = r[i, sigma_i];  cross[r, i, j] = r[i, sigma_j]
    own = mats[:, rows, sigma]
    cross = mats[:, :, sigma]
    base = own.sum(axis=1)
    delta = cross + cross.transpose(0, 2, 1) - own[:, :, None] - own[:, None, :]
    return (base[:, None, None] + delta).max(axis=0)


def swap_deficit_sums(R: MatrixFamily, perm: PermutationSample) -> SwapSums:
    S = eval_S(R, perm).value
    Sij = swap_values(R, perm.sigma)
    d = S - Sij
    pos = np.maximum(d, 0.0)
    return SwapSums(float(pos.sum()), float((pos**2).sum()), float(np.maximum(-d, 0.0).sum()))


# ---------------------------------------------------------------------------
# centering and test functions

@dataclass(frozen=True)
class CenteredMatrix:
    d: np.ndarray = field(repr=False)
    variance: float


def center_matrix(a) -> CenteredMatrix:
    """Doubly centered matrix d with f - E f = sum_k d[k, sigma(k)].

    ``variance`` is Var(f) = sum_ij d_ij**2 / (n - 1).
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidParameterError("matrix must be square")
    n = a.shape[0]
    if n < 2:
        raise InvalidParameterError("centering needs n >= 2")
    d = a - a.mean(axis=1, keepdims=True) - a.mean(axis=0, keepdims=True) + a.mean()
    return CenteredMatrix(_readonly(d), float((d**2).sum() / (n - 1)))


@dataclass(frozen=True)
class ConvexTestFunction:
    """One of: identity, positive part x -> (x - c)_+, exponential x -> exp(rate * x)."""

    kind: str = "identity"
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in ("identity", "positive_part", "exp"):
            raise InvalidParameterError(f"unknown test function {self.kind!r}")
        if self.kind == "exp" and self.param < 0:
            raise InvalidParameterError("exp rate must be nonnegative")

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def positive_part(cls, c: float):
        return cls("positive_part", float(c))

    @classmethod
    def exp(cls, rate: float):
        return cls("exp", float(rate))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            out = x
        elif self.kind == "positive_part":
            out = np.maximum(x - self.param, 0.0)
        else:
            out = np.exp(self.param * x)
        return out if out.ndim else float(out)

    def label(self) -> str:
        return self.kind if self.kind == "identity" else f"{self.kind}({self.param:g})"


def apply_test_function(phi: ConvexTestFunction, x: float) -> float:
    return phi(x)
