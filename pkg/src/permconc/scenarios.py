"""Named instances: the adversarial capped-indicator example, fixed points, random families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .families import CappedIndicatorContrast, ExplicitMatrices, ExplicitVectors, SingletonMatrix
from .sampling import ReplacementSample, SeedSpec, permutation_from, replacement_from


@dataclass(frozen=True)
class AppendixDInstance:
    """X = {1_S - 1_B : S subset of A, |S| <= l} with |A| = k, |B| = k/2, A and B disjoint.

    ``analytics`` holds the closed-form expectations: E R_S = m|S|/n,
    E W = k - k(1 - 1/n)^m and the bracket mk/n <= E Sigma^2 <= 3mk/(2n).
    Since |B| = k/2, E R_B is only mk/(2n); the lower end of the bracket
    additionally needs E min(R_A, l) >= mk/(2n), which the recommended l gives.
    """

    n: int
    m: int
    k: int
    l: int
    family: CappedIndicatorContrast = field(repr=False)
    analytics: dict = field(repr=False)
    placement_seed: int | None = None

    @property
    def A(self) -> np.ndarray:
        return self.family.A

    @property
    def B(self) -> np.ndarray:
        return self.family.B

    def e_r_s(self, size: int) -> float:
        return self.m * size / self.n

    def sup_index_variance(self) -> float:
        """sup over members of Var(x_J) = (|S| + |B|)/n - ((|S| - |B|)/n)^2."""
        b = len(self.B)
        s = np.arange(self.l + 1)
        return float(((s + b) / self.n - ((s - b) / self.n) ** 2).max())

    def to_dict(self) -> dict:
        return {
            "kind": "appendix_d", "n": self.n, "m": self.m, "k": self.k, "l": self.l,
            "placement_seed": self.placement_seed,
            "A": (self.A + 1).tolist(), "B": (self.B + 1).tolist(),
            "analytics": self.analytics,
        }


def build_appendix_d(n: int, m: int, k: int, l: int, placement_seed: int | None = None) -> AppendixDInstance:
    if not (0 < l <= k <= n / 2):
        raise InvalidParameterError("need 0 < l <= k <= n/2")
    if k % 2:
        raise InvalidParameterError("k must be even so that |B| = k/2")
    if not 1 <= m <= n:
        raise InvalidParameterError("need 1 <= m <= n")
    if placement_seed is None:
        A = np.arange(k)
        B = np.arange(k, k + k // 2)
    else:
        p = SeedSpec(placement_seed).generator().permutation(n)
        A, B = np.sort(p[:k]), np.sort(p[k : k + k // 2])
    analytics = {
        "e_r_a": m * k / n,
        "e_r_b": m * (k // 2) / n,
        "e_w": k - k * (1 - 1 / n) ** m,
        "e_sigma2_lo": m * k / n,
        "e_sigma2_hi": 3 * m * k / (2 * n),
    }
    family = CappedIndicatorContrast(n, A, B, l)
    return AppendixDInstance(n, m, k, l, family, analytics, placement_seed)


def eval_W(instance: AppendixDInstance, sample: ReplacementSample) -> int:
    """Number of distinct elements of A hit by the with-replacement sample."""
    if sample.n != instance.n:
        raise InvalidParameterError("sample size does not match instance")
    return int(np.isin(instance.A, sample.indices).sum())


def recommended_parameters(n: int, epsilon: float) -> dict:
    """Parameters m ~ n/2, k ~ n^(1/2+eps), l ~ (k/2)(1 - e^{-1/2} + 1/2).

    With these, E W <= l <= E R_A, so E Z' is close to k/4 while E Z stays
    near l - k/4, leaving a gap of about (k/2)(e^{-1/2} - 1/2) > 0.05k.
    """
    if not 0 < epsilon <= 0.5:
        raise InvalidParameterError("epsilon must lie in (0, 0.5]")
    # nearest even k, so that |B| = k/2 is an integer
    k = 2 * int(round(n ** (0.5 + epsilon) / 2))
    if k > n / 2:
        raise InvalidParameterError(f"k={k} exceeds n/2")
    l = int(round(k / 2 * (1 - math.exp(-0.5) + 0.5)))
    return {
        "n": n, "m": n // 2, "k": k, "l": l,
        "target_e_zprime": k / 4,
        "target_gap": k / 2 * (math.exp(-0.5) - 0.5),
    }


@dataclass(frozen=True)
class AppendixDReplicate:
    """One replicate of (Z, Z', Sigma^2, Sigma~^2, W, R_A, R_B, R~_A, R~_B)."""

    instance: AppendixDInstance

    def __call__(self, rng: np.random.Generator) -> np.ndarray:
        inst = self.instance
        fam = inst.family
        pc = np.bincount(permutation_from(rng, inst.n)[: inst.m], minlength=inst.n)
        rc = np.bincount(replacement_from(rng, inst.n, inst.m), minlength=inst.n)
        r_a, r_b = pc[fam.A].sum(), pc[fam.B].sum()
        hits = rc[fam.A]
        rt_a, rt_b = hits.sum(), rc[fam.B].sum()
        # top-l hit multiplicities; equals min(R~_A, l) only when no element is hit twice
        top = np.partition(hits, len(hits) - inst.l)[len(hits) - inst.l :].sum()
        z = min(r_a, inst.l) - r_b
        return np.array([z, top - rt_b, min(r_a, inst.l) + r_b, top + rt_b,
                         np.count_nonzero(hits), r_a, r_b, rt_a, rt_b], dtype=float)


APPENDIX_D_COLUMNS = ("Z", "Zprime", "sigma2", "sigma2_tilde", "W", "R_A", "R_B", "Rt_A", "Rt_B")


def fixed_point_matrix(n: int) -> SingletonMatrix:
    if n < 1:
        raise InvalidParameterError("n must be positive")
    return SingletonMatrix(np.eye(n))


def random_vector_family(n: int, size: int, seed: SeedSpec, box: tuple[float, float] = (-1.0, 1.0)) -> ExplicitVectors:
    lo, hi = box
    v = seed.generator().uniform(lo, hi, size=(size, n))
    return ExplicitVectors(np.clip(v, lo, hi), lo=lo, hi=hi)


def random_matrix_family(n: int, size: int, seed: SeedSpec, box: tuple[float, float] = (-1.0, 1.0)) -> ExplicitMatrices:
    lo, hi = box
    if not -1 <= lo <= hi <= 1:
        raise InvalidParameterError("box must lie within [-1, 1]")
    return ExplicitMatrices(seed.generator().uniform(lo, hi, size=(size, n, n)))


def random_matrix(n: int, seed: SeedSpec, box: tuple[float, float] = (-1.0, 1.0)) -> SingletonMatrix:
    return SingletonMatrix(random_matrix_family(n, 1, seed, box).matrices[0])


def random_family(n: int, size: int, seed: SeedSpec, box: tuple[float, float] = (-1.0, 1.0), kind: str = "vector"):
    """Uniform random entries in ``box``: a vector family or a matrix family."""
    if n < 1 or size < 1:
        raise InvalidParameterError("need n >= 1 and size >= 1")
    if kind == "vector":
        return random_vector_family(n, size, seed, box)
    if kind == "matrix":
        return random_matrix_family(n, size, seed, box)
    raise InvalidParameterError(f"unknown family kind {kind!r}")
