"""Seeded Monte Carlo replication, tail curves with exact binomial bands, and bound checks.

A *statistic* is any picklable callable ``stat(rng) -> float | 1-d array``
that draws what it needs from the generator it is handed. Replicate ``r``
always receives the generator of ``seed.replicate(r)``, so results depend
only on the seed and never on the number of workers.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import beta

from .bounds import TailBound
from .errors import InvalidParameterError
from .families import ConvexTestFunction, VectorFamily
from .sampling import SeedSpec, permutation_from, replacement_from

DEFAULT_REPS = 100_000
DEFAULT_DELTA = 1e-3
_CHUNK = 4096


@dataclass(frozen=True)
class EstimateWithError:
    mean: float
    std_error: float
    n_reps: int

    @classmethod
    def from_samples(cls, x) -> EstimateWithError:
        x = np.asarray(x, dtype=float)
        if x.size < 2:
            raise InvalidParameterError("need at least two replicates")
        se = float(x.std(ddof=1) / math.sqrt(x.size))
        return cls(float(x.mean()), se, int(x.size))

    def to_dict(self) -> dict:
        return asdict(self)


def _run_chunk(statistic, seed: SeedSpec, start: int, stop: int) -> np.ndarray:
    return np.array([statistic(seed.replicate(r).generator()) for r in range(start, stop)], dtype=float)


def simulate(statistic: Callable, n_reps: int, seed: SeedSpec, workers: int = 1) -> np.ndarray:
    """Array of per-replicate outputs, shape (n_reps,) or (n_reps, d)."""
    if n_reps < 1:
        raise InvalidParameterError("n_reps must be positive")
    bounds = [(s, min(s + _CHUNK, n_reps)) for s in range(0, n_reps, _CHUNK)]
    if workers <= 1 or len(bounds) == 1:
        parts = [_run_chunk(statistic, seed, a, b) for a, b in bounds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futures = [ex.submit(_run_chunk, statistic, seed, a, b) for a, b in bounds]
            parts = [f.result() for f in futures]
    return np.concatenate(parts)


def estimate_expectation(statistic: Callable, n_reps: int, seed: SeedSpec, workers: int = 1) -> EstimateWithError:
    if n_reps < 2:
        raise InvalidParameterError("need at least two replicates")
    return EstimateWithError.from_samples(simulate(statistic, n_reps, seed, workers))


# ---------------------------------------------------------------------------
# tail curves

def clopper_pearson_upper(k, n: int, alpha: float) -> np.ndarray:
    """One-sided exact binomial upper limit at confidence 1 - alpha."""
    k = np.asarray(k)
    with np.errstate(invalid="ignore"):
        up = beta.ppf(1 - alpha, k + 1, n - k)
    return np.where(k >= n, 1.0, up)


@dataclass(frozen=True)
class TailCurve:
    grid: np.ndarray = field(repr=False)
    survival: np.ndarray = field(repr=False)
    upper_ci: np.ndarray = field(repr=False)
    center: float
    delta: float
    n_reps: int = 0

    def rows(self):
        return zip(self.grid.tolist(), self.survival.tolist(), self.upper_ci.tolist())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "survival", "upper_ci"])
        for t, s, u in self.rows():
            w.writerow([f"{t:.17g}", f"{s:.17g}", f"{u:.17g}"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "center": self.center,
            "delta": self.delta,
            "n_reps": self.n_reps,
            "t": self.grid.tolist(),
            "survival": self.survival.tolist(),
            "upper_ci": self.upper_ci.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> TailCurve:
        return cls(np.array(d["t"]), np.array(d["survival"]), np.array(d["upper_ci"]),
                   d["center"], d["delta"], d.get("n_reps", 0))


def default_grid(esigma2: float, t_max: float, num: int = 32) -> np.ndarray:
    """Log-spaced deviations from 0.1 * sqrt(E Sigma^2 + 1) up to t_max."""
    lo = 0.1 * math.sqrt(esigma2 + 1)
    hi = max(t_max, lo * 1.01)
    return np.geomspace(lo, hi, num)


def _check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise InvalidParameterError("grid must be a nonempty 1-d sequence")
    if np.any(np.diff(g) <= 0):
        raise InvalidParameterError("grid must be strictly increasing")
    return g


def tail_curve(samples, center: float, grid, delta: float = DEFAULT_DELTA, center_se: float = 0.0) -> TailCurve:
    """Empirical survival P(X >= center + t) and Bonferroni exact upper band.

    ``center_se`` widens the band for an estimated center: exceedances for the
    band are counted at ``center + t - center_se``.
    """
    g = _check_grid(grid)
    if not 0 < delta < 1:
        raise InvalidParameterError("delta must lie in (0, 1)")
    x = np.sort(np.asarray(samples, dtype=float))
    N = x.size
    exceed = N - np.searchsorted(x, center + g, side="left")
    exceed_band = N - np.searchsorted(x, center + g - center_se, side="left")
    survival = exceed / N
    upper = clopper_pearson_upper(exceed_band, N, delta / g.size)
    # isotonic adjustment, a no-op for exact counts but cheap insurance
    survival = np.minimum.accumulate(survival)
    upper = np.maximum(np.minimum.accumulate(upper), survival)
    return TailCurve(g, survival, upper, float(center), float(delta), N)


def estimate_tail(statistic: Callable, center: float, grid, n_reps: int, delta: float, seed: SeedSpec,
                  workers: int = 1, center_se: float = 0.0) -> TailCurve:
    _check_grid(grid)
    return tail_curve(simulate(statistic, n_reps, seed, workers), center, grid, delta, center_se)


def exact_tail_curve(support, probs, center: float, grid) -> TailCurve:
    """Zero-width curve from an exact law, for comparisons against bounds."""
    g = _check_grid(grid)
    support = np.asarray(support, dtype=float)
    probs = np.asarray(probs, dtype=float)
    surv = np.array([min(1.0, probs[support >= center + t - 1e-12].sum()) for t in g])
    return TailCurve(g, surv, surv.copy(), float(center), 0.0, 0)


@dataclass(frozen=True)
class DominationVerdict:
    passed: bool
    worst_t: float
    worst_margin: float
    n_checked: int
    # active points where the survival estimate itself exceeds the bound; a
    # failing verdict with zero such points is limited by the band's resolution
    n_point_violations: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def check_domination(curve: TailCurve, bound: TailBound) -> DominationVerdict:
    """Pass iff upper_ci <= bound at every grid point where the bound is below 1."""
    b = bound.evaluate(curve.grid)
    margin = curve.upper_ci - b
    active = b < 1.0
    if not active.any():
        return DominationVerdict(True, math.nan, -math.inf, 0)
    idx = np.flatnonzero(active)
    worst = idx[np.argmax(margin[idx])]
    point = int((curve.survival[idx] > b[idx]).sum())
    return DominationVerdict(bool((margin[idx] <= 0).all()), float(curve.grid[worst]),
                             float(margin[worst]), int(idx.size), point)


# ---------------------------------------------------------------------------
# convex order

@dataclass(frozen=True)
class ConvexOrderVerdict:
    phi: str
    mean_z: float
    mean_zprime: float
    combined_se: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def convex_order_from_samples(z, zprime, phis: Sequence[ConvexTestFunction]) -> list[ConvexOrderVerdict]:
    out = []
    for phi in phis:
        a = EstimateWithError.from_samples(phi(np.asarray(z, dtype=float)))
        b = EstimateWithError.from_samples(phi(np.asarray(zprime, dtype=float)))
        se = math.hypot(a.std_error, b.std_error)
        out.append(ConvexOrderVerdict(phi.label(), a.mean, b.mean, se, a.mean <= b.mean + 4 * se))
    return out


@dataclass(frozen=True)
class SupremumReplicate:
    """One replicate of (Z, Z', Sigma^2, Sigma~^2) for a vector family."""

    family: VectorFamily
    m: int

    def __call__(self, rng: np.random.Generator) -> np.ndarray:
        n = self.family.n
        perm_counts = np.bincount(permutation_from(rng, n)[: self.m], minlength=n)
        repl_counts = np.bincount(replacement_from(rng, n, self.m), minlength=n)
        return np.array([
            self.family.sup_counts(perm_counts).value,
            self.family.sup_counts(repl_counts).value,
            self.family.sup_sq_counts(perm_counts).value,
            self.family.sup_sq_counts(repl_counts).value,
        ])


SUPREMUM_COLUMNS = ("Z", "Zprime", "sigma2", "sigma2_tilde")


def check_convex_order(family: VectorFamily, m: int, phis: Sequence[ConvexTestFunction], n_reps: int,
                       seed: SeedSpec, workers: int = 1) -> list[ConvexOrderVerdict]:
    if not 1 <= m <= family.n:
        raise InvalidParameterError("need 1 <= m <= n")
    out = simulate(SupremumReplicate(family, m), n_reps, seed, workers)
    return convex_order_from_samples(out[:, 0], out[:, 1], phis)


def estimate_variance_of_index(x) -> float:
    """Var(x_J) for J uniform on the coordinates: mean of squares minus squared mean."""
    x = np.asarray(x, dtype=float)
    return float(np.mean(x**2) - np.mean(x) ** 2)
