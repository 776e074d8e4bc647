"""Seeded draws of permutations, with-replacement samples and Rademacher signs.

Every draw is keyed by a ``SeedSpec``. The underlying bit generator is
Philox, a counter-based generator whose 128-bit key is exactly the pair
``(master_seed, stream_id)``, so replicate ``r`` of an experiment always sees
the same stream no matter which worker runs it or in which order.

Indices are 0-based internally; ``one_based()`` converts for display and
serialization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError

_U64 = 1 << 64

# High counter word per purpose. Philox streams with equal keys but counters
# 2**192 apart never overlap.
_DOMAIN_INDEX = 0
_DOMAIN_SIGNS = 1


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) < _U64:
                raise InvalidParameterError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self, domain: int = _DOMAIN_INDEX) -> np.random.Generator:
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        counter = np.array([0, 0, 0, domain], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))

    def replicate(self, r: int) -> SeedSpec:
        """Seed of replicate ``r`` in a run keyed by this spec."""
        return SeedSpec(self.master_seed, (self.stream_id * 0x9E3779B97F4A7C15 + r) % _U64)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PermutationSample:
    """A permutation ``sigma`` of ``range(n)``; its first m entries are I_1..I_m."""

    n: int
    sigma: np.ndarray = field(repr=False)

    def __post_init__(self):
        sigma = _frozen(self.sigma)
        if sigma.shape != (self.n,):
            raise InvalidParameterError(f"sigma must have length {self.n}")
        seen = np.zeros(self.n, dtype=bool)
        if self.n and (sigma.min() < 0 or sigma.max() >= self.n):
            raise InvalidParameterError("sigma has entries outside range(n)")
        seen[sigma] = True
        if not seen.all():
            raise InvalidParameterError("sigma is not a permutation")
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def from_one_based(cls, values) -> PermutationSample:
        v = np.asarray(values, dtype=np.int64) - 1
        return cls(len(v), v)

    @classmethod
    def identity(cls, n: int) -> PermutationSample:
        return cls(n, np.arange(n))

    def one_based(self) -> list[int]:
        return (self.sigma + 1).tolist()

    def head(self, m: int) -> np.ndarray:
        return self.sigma[:m]

    def swapped(self, i: int, j: int) -> PermutationSample:
        """sigma composed with the transposition of positions i and j (0-based)."""
        s = self.sigma.copy()
        s[i], s[j] = s[j], s[i]
        return PermutationSample(self.n, s)


@dataclass(frozen=True)
class ReplacementSample:
    """m i.i.d. uniform indices J_1..J_m in ``range(n)``."""

    n: int
    m: int
    indices: np.ndarray = field(repr=False)

    def __post_init__(self):
        idx = _frozen(self.indices)
        if idx.shape != (self.m,):
            raise InvalidParameterError(f"indices must have length {self.m}")
        if self.m and (idx.min() < 0 or idx.max() >= self.n):
            raise InvalidParameterError("indices outside range(n)")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_one_based(cls, n: int, values) -> ReplacementSample:
        v = np.asarray(values, dtype=np.int64) - 1
        return cls(n, len(v), v)

    def one_based(self) -> list[int]:
        return (self.indices + 1).tolist()


def _check_positive(**kw):
    for name, v in kw.items():
        if int(v) < 1:
            raise InvalidParameterError(f"{name} must be >= 1, got {v}")


# Generator-level draws; the Monte Carlo engine calls these with one
# generator per replicate.

def permutation_from(rng: np.random.Generator, n: int) -> np.ndarray:
    # numpy's permutation is an in-place Fisher-Yates shuffle
    return rng.permutation(n)


def replacement_from(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    return rng.integers(0, n, size=m)


def rademacher_from(rng: np.random.Generator, m: int) -> np.ndarray:
    return 2 * rng.integers(0, 2, size=m) - 1


def draw_permutation(n: int, seed: SeedSpec) -> PermutationSample:
    _check_positive(n=n)
    return PermutationSample(n, permutation_from(seed.generator(), n))


def draw_with_replacement(n: int, m: int, seed: SeedSpec) -> ReplacementSample:
    _check_positive(n=n, m=m)
    return ReplacementSample(n, m, replacement_from(seed.generator(), n, m))


def draw_rademacher(m: int, seed: SeedSpec) -> np.ndarray:
    _check_positive(m=m)
    return rademacher_from(seed.generator(_DOMAIN_SIGNS), m)
