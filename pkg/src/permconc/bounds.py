"""Closed-form tail and MGF bounds, Herbst converters and a Chernoff optimizer.

All tail bounds are functions of the deviation ``t >= 0`` above the relevant
center and return a probability clamped to [0, 1]. Bennett-type bounds have
the shape ``c * exp(-(t/C1) * log(1 + t/(C2*V)))``; Bernstein-type bounds
have the shape ``exp(-min(t/c1, t**2/(c2*V)))``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, HypothesisViolationError, InvalidParameterError


def _nonneg(**kw):
    for name, v in kw.items():
        if not v >= 0:
            raise InvalidParameterError(f"{name} must be nonnegative, got {v}")


def _clamp(p: float) -> float:
    return min(1.0, max(0.0, p))


def _bennett(t: float, variance: float, C1: float, C2: float, prefactor: float = 2.0) -> float:
    if t == 0:
        return 1.0
    if variance == 0:
        return 0.0
    return _clamp(prefactor * math.exp(-(t / C1) * math.log1p(t / (C2 * variance))))


@dataclass(frozen=True)
class TailBound:
    """A named bound t -> P(X >= center + t), clamped to [0, 1]."""

    name: str
    params: dict
    fn: Callable[[float], float] = field(repr=False, compare=False)
    domain_note: str = "t >= 0"

    def __call__(self, t: float) -> float:
        if not t >= 0:
            raise InvalidParameterError("deviation t must be nonnegative")
        return _clamp(self.fn(float(t)))

    def evaluate(self, ts) -> np.ndarray:
        return np.array([self(t) for t in np.asarray(ts, dtype=float)])

    def params_json(self) -> str:
        return json.dumps(self.params, sort_keys=True)


@dataclass(frozen=True)
class MGFBound:
    """Upper bound lambda -> log E exp(lambda * X) on [lo, hi] (hi may be inf)."""

    fn: Callable[[float], float] = field(repr=False)
    lo: float = 0.0
    hi: float = math.inf

    def __call__(self, lam: float) -> float:
        if not self.lo <= lam <= self.hi:
            raise DomainError(f"lambda={lam} outside [{self.lo}, {self.hi}]")
        return self.fn(lam)


@dataclass(frozen=True)
class EntropyBoundParams:
    a: float = 0.0
    b: float = 0.0
    epsilon: float = 0.0
    mean: float = 0.0


# ---------------------------------------------------------------------------
# suprema of empirical processes without replacement

def bennett_suprema(t: float, esigma2_tilde: float, C1: float = 36.0, C2: float = 46.0) -> float:
    """P(Z >= E Z + t) for X in [-1,1]^n, variance proxy E Sigma~^2."""
    _nonneg(t=t, esigma2_tilde=esigma2_tilde)
    return _bennett(t, esigma2_tilde, C1, C2)


def bernstein_suprema(t: float, esigma2: float) -> float:
    """P(Z >= E Z + t) <= exp(-min(t/32, t^2/(128 E Sigma^2)))."""
    _nonneg(t=t, esigma2=esigma2)
    if esigma2 == 0:
        return _clamp(math.exp(-t / 32))
    return _clamp(math.exp(-min(t / 32, t * t / (128 * esigma2))))


def bernstein_hoeffding_suprema(t: float, esigma2: float) -> float:
    """Same formula as ``bernstein_suprema``, for S = sup over a matrix family R in [-1,1].

    Here E Sigma_R^2 = E sup_r sum_k r[k, sigma(k)]**2; for a single matrix it
    is sum_ij a_ij**2 / n.
    """
    return bernstein_suprema(t, esigma2)


def ledoux_mgf(lam: float, ezprime: float) -> float:
    """Upper bound on log E exp(lam * Z') for X in [0,1]^n, valid for lam >= 1/4."""
    if lam < 0.25:
        raise DomainError("the estimate holds only for lambda >= 1/4")
    _nonneg(ezprime=ezprime)
    return math.exp(8 * lam) * ezprime / 16


def tbk_bound(t: float, v: float) -> float:
    """Bennett bound of Tolstikhin, Blanchard and Kloft.

    Note the center: it bounds P(Z >= E Z' + t), not P(Z >= E Z + t).
    """
    _nonneg(t=t)
    if not v > 0:
        raise InvalidParameterError("v must be positive")
    L = math.log1p(t / v)
    return _clamp(math.exp(-t * L + t - v * L))


def tbk_recentered(t: float, v: float, gap: float) -> float:
    """The TBK bound read as a bound on P(Z >= E Z + t), given gap = E Z' - E Z >= 0."""
    _nonneg(t=t, gap=gap)
    return tbk_bound(max(t - gap, 0.0), v)


def tbk_center_shift(m: int, n: int) -> float:
    """Upper bound 2 m^3 / n on E Z' - E Z."""
    if m > n or m < 0 or n < 1:
        raise InvalidParameterError("need 0 <= m <= n")
    return 2 * m**3 / n


def sigma_tilde_symmetric_upper(m: int, sup_var: float, ezprime: float, symmetric: bool = True) -> float:
    """E Sigma~^2 <= m sup Var(x_J) + 16 E Z' when X = -X."""
    if not symmetric:
        raise HypothesisViolationError("estimate requires a family symmetric about the origin")
    _nonneg(m=m, sup_var=sup_var, ezprime=ezprime)
    return m * sup_var + 16 * ezprime


# ---------------------------------------------------------------------------
# single Hoeffding statistics

def bennett_hoeffding(t: float, esigma2: float, zero_sum: bool, C1: float = 36.0, C2: float = 36.0) -> float:
    """P(f >= t) for a in [-1,1] with sum_ij a_ij = 0 (certified by ``zero_sum``)."""
    if not zero_sum:
        raise HypothesisViolationError("bound requires sum_ij a_ij = 0")
    _nonneg(t=t, esigma2=esigma2)
    return _bennett(t, esigma2, C1, C2)


def bennett_hoeffding_centered(t: float, variance: float, C1: float = 36.0, C2: float = 36.0) -> float:
    """P(f >= E f + t) for arbitrary a in [-1,1], in terms of Var(f)."""
    _nonneg(t=t, variance=variance)
    return _bennett(t, variance, 2 * C1, 2 * C2)


def bennett_positive_hoeffding(t: float, ef: float) -> float:
    """P(f > E f + t) for a in [0,1]."""
    _nonneg(t=t, ef=ef)
    return _bennett(t, ef, 4.0, 4.0, prefactor=1.0)


def chatterjee_bernstein(t: float, ef: float) -> float:
    _nonneg(t=t, ef=ef)
    if t == 0:
        return 1.0
    return _clamp(math.exp(-t * t / (4 * ef + 2 * t)))


# ---------------------------------------------------------------------------
# Herbst converters

@dataclass(frozen=True)
class HerbstResult:
    mgf: MGFBound
    tail: TailBound


def herbst_poisson(params: EntropyBoundParams) -> HerbstResult:
    """Ent(e^{lam X}) <= a lam^2 e^{b lam} F(lam)  ==>  Poisson-type tail."""
    a, b = params.a, params.b
    if not (a > 0 and b > 0):
        raise InvalidParameterError("Poisson variant needs a, b > 0")

    def psi(lam):
        return (a / b) * lam * math.expm1(b * lam)

    def tail(t):
        return math.exp(-(t / (2 * b)) * math.log1p(b * t / (2 * a)))

    return HerbstResult(
        MGFBound(psi, 0.0, math.inf),
        TailBound("herbst_poisson", {"a": a, "b": b}, tail),
    )


def herbst_poisson_lambda(params: EntropyBoundParams, t: float) -> float:
    return math.log1p(params.b * t / (2 * params.a)) / params.b


def herbst_bernstein(params: EntropyBoundParams) -> TailBound:
    """Ent <= lam^2 (a F' + b F) with a > 0  ==>  Bernstein-type tail."""
    a, b, mean = params.a, params.b, params.mean
    c = a * mean + b
    if not a > 0:
        raise InvalidParameterError("Bernstein variant needs a > 0")
    if not c > 0:
        raise InvalidParameterError("Bernstein variant needs a*mean + b > 0")
    return TailBound(
        "herbst_bernstein",
        {"a": a, "b": b, "mean": mean},
        lambda t: math.exp(-min(t / (4 * a), t * t / (8 * c))),
        domain_note="X not constant",
    )


def herbst_bernstein_mgf(params: EntropyBoundParams) -> MGFBound:
    """log E e^{lam (X - E X)} <= 2 lam^2 (a E X + b) on [0, 1/(2a)]."""
    c = params.a * params.mean + params.b
    herbst_bernstein(params)  # validates
    return MGFBound(lambda lam: 2 * lam * lam * c, 0.0, 1 / (2 * params.a))


def herbst_bernstein_lambda(params: EntropyBoundParams, t: float) -> float:
    c = params.a * params.mean + params.b
    return t / (4 * c) if t <= 2 * c / params.a else 1 / (2 * params.a)


def herbst_bernstein2(params: EntropyBoundParams) -> TailBound:
    """Ent <= b lam^2 F on [0, eps]  ==>  exp(-min(eps t / 2, t^2 / (4b)))."""
    eps, b = params.epsilon, params.b
    if not (eps > 0 and b > 0):
        raise InvalidParameterError("second Bernstein variant needs epsilon, b > 0")
    return TailBound(
        "herbst_bernstein2",
        {"epsilon": eps, "b": b},
        lambda t: math.exp(-min(eps * t / 2, t * t / (4 * b))),
    )


def herbst_bernstein2_mgf(params: EntropyBoundParams) -> MGFBound:
    herbst_bernstein2(params)
    b = params.b
    return MGFBound(lambda lam: b * lam * lam, 0.0, params.epsilon)


def herbst_bernstein2_lambda(params: EntropyBoundParams, t: float) -> float:
    return t / (2 * params.b) if t <= 2 * params.b * params.epsilon else params.epsilon


# ---------------------------------------------------------------------------
# Chernoff optimization

@dataclass(frozen=True)
class ChernoffResult:
    lambda_star: float
    bound: float


def chernoff_optimize(mgf: MGFBound, t: float, center: float = 0.0, xatol: float = 1e-12) -> ChernoffResult:
    """Minimize exp(-lam (center + t) + psi(lam)) over the MGF's lambda interval.

    ``center`` is the offset between the variable the MGF describes and the
    deviation origin: 0 for MGF bounds of X - E X, E X for bounds on log E e^{lam X}.
    The log-objective is convex for the MGF bounds in this module, so a
    bounded Brent search on a bracket that contains the minimizer suffices.
    """
    lo, hi = mgf.lo, mgf.hi
    if not lo <= hi:
        raise InvalidParameterError("empty lambda domain")
    shift = t + center

    def g(lam):
        return -lam * shift + mgf.fn(lam)

    if not math.isfinite(hi):
        # grow the bracket until g stops decreasing
        step = 1.0
        hi = lo + step
        while g(hi) < g(lo + step / 2) and hi < 1e6:
            step *= 2
            hi = lo + step
    candidates = [(g(lo), lo), (g(hi), hi)]
    if hi > lo:
        res = minimize_scalar(g, bounds=(lo, hi), method="bounded", options={"xatol": xatol, "maxiter": 500})
        candidates.append((float(res.fun), float(res.x)))
    gmin, lam = min(candidates)
    return ChernoffResult(lam, _clamp(math.exp(gmin)))


# ---------------------------------------------------------------------------
# registry used by the CLI and the Monte Carlo checks

def make_bound(name: str, **params) -> TailBound:
    """Build a TailBound by name with keyword parameters."""
    table = {
        "bennett_suprema": (lambda p: lambda t: bennett_suprema(t, p["esigma2_tilde"], p.get("C1", 36.0), p.get("C2", 46.0)),
                            "X in [-1,1]^n; deviation above E Z"),
        "bernstein_suprema": (lambda p: lambda t: bernstein_suprema(t, p["esigma2"]), "X in [-1,1]^n; deviation above E Z"),
        "bernstein_hoeffding_suprema": (lambda p: lambda t: bernstein_hoeffding_suprema(t, p["esigma2"]),
                                        "R in [-1,1]^{n x n}; deviation above E S"),
        "bennett_hoeffding": (lambda p: lambda t: bennett_hoeffding(t, p["esigma2"], bool(p.get("zero_sum", False))),
                              "a in [-1,1], sum a_ij = 0; deviation above 0"),
        "bennett_hoeffding_centered": (lambda p: lambda t: bennett_hoeffding_centered(t, p["variance"]),
                                       "a in [-1,1]; deviation above E f"),
        "bennett_positive_hoeffding": (lambda p: lambda t: bennett_positive_hoeffding(t, p["ef"]),
                                       "a in [0,1]; deviation above E f (strict)"),
        "chatterjee_bernstein": (lambda p: lambda t: chatterjee_bernstein(t, p["ef"]), "a in [0,1]; deviation above E f (strict)"),
        "tbk": (lambda p: lambda t: tbk_bound(t, p["v"]), "sum_i x_i = 0; deviation above E Z'"),
        "tbk_recentered": (lambda p: lambda t: tbk_recentered(t, p["v"], p["gap"]), "deviation above E Z via gap E Z' - E Z"),
    }
    if name in ("herbst_poisson", "herbst_bernstein", "herbst_bernstein2"):
        ep = EntropyBoundParams(**{k: float(v) for k, v in params.items()})
        if name == "herbst_poisson":
            return herbst_poisson(ep).tail
        return herbst_bernstein(ep) if name == "herbst_bernstein" else herbst_bernstein2(ep)
    if name not in table:
        raise InvalidParameterError(f"unknown bound {name!r}")
    build, note = table[name]
    fn = build(params)
    if name == "bennett_hoeffding" and not params.get("zero_sum", False):
        raise HypothesisViolationError("bennett_hoeffding requires zero_sum=true")
    return TailBound(name, dict(params), fn, note)


BOUND_NAMES = (
    "bennett_suprema", "bernstein_suprema", "bernstein_hoeffding_suprema", "bennett_hoeffding",
    "bennett_hoeffding_centered", "bennett_positive_hoeffding", "chatterjee_bernstein", "tbk",
    "tbk_recentered", "herbst_poisson", "herbst_bernstein", "herbst_bernstein2",
)
