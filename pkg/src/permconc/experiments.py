"""Experiment orchestration behind the CLI: config records, scenarios and reports.

Each ``run_*`` function takes a ``RunConfig`` and returns a results dict;
``make_report`` wraps results with the config and provenance so that a
report file can be re-read into the same config and results.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import bounds as B
from .errors import InvalidParameterError, InvariantError
from .families import ConvexTestFunction, ExplicitVectors, FromVectors, SingletonMatrix, center_matrix
from .montecarlo import (
    DEFAULT_DELTA,
    DEFAULT_REPS,
    SUPREMUM_COLUMNS,
    EstimateWithError,
    SupremumReplicate,
    check_domination,
    convex_order_from_samples,
    default_grid,
    estimate_variance_of_index,
    exact_tail_curve,
    simulate,
    tail_curve,
)
from .oracle import MAX_N_DISTRIBUTION, check_entropy_inequality, enumerate_distribution
from .sampling import SeedSpec, permutation_from
from .scenarios import (
    APPENDIX_D_COLUMNS,
    AppendixDReplicate,
    build_appendix_d,
    fixed_point_matrix,
    recommended_parameters,
)
from .schema import family_from_dict, family_to_dict, provenance

COMMANDS = ("estimate", "tail", "bounds", "compare", "oracle", "scenario")


@dataclass
class RunConfig:
    command: str
    scenario: dict | None = None
    statistic: str = "Z"
    statistics: list | None = None
    n_reps: int = DEFAULT_REPS
    seed: int = 0
    delta: float = DEFAULT_DELTA
    grid: dict | None = None
    bounds: list | None = None
    center: float | None = None
    lambdas: list | None = None
    workers: int = 1
    out: str | None = None
    format: str = "json"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InvalidParameterError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise InvalidParameterError("format must be csv or json")
        if int(self.n_reps) < 2:
            raise InvalidParameterError("n_reps must be at least 2")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidParameterError("seed must be an unsigned 64-bit integer")
        if not 0 < float(self.delta) < 1:
            raise InvalidParameterError("delta must lie in (0, 1)")
        if int(self.workers) < 1:
            raise InvalidParameterError("workers must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("workers")  # does not affect results
        d.pop("out")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise InvalidParameterError(f"unknown config fields: {sorted(extra)}")
        return cls(**d)

    @property
    def seed_spec(self) -> SeedSpec:
        return SeedSpec(int(self.seed), 0)


# ---------------------------------------------------------------------------
# scenarios

@dataclass(frozen=True)
class MatrixReplicate:
    """One replicate of (S, Sigma_R^2) for a matrix family."""

    family: object

    def __call__(self, rng):
        sigma = permutation_from(rng, self.family.n)
        return np.array([self.family.sup(sigma).value, self.family.sup_sq(sigma).value])


@dataclass
class Scenario:
    kind: str  # "vector" or "matrix"
    description: dict
    replicate: object
    columns: tuple
    family: object = None
    m: int | None = None
    instance: object = None
    extra: dict = field(default_factory=dict)

    def max_value(self) -> float:
        if self.kind == "vector":
            return self.family.max_value(self.m)
        mats = self.family.dense() if isinstance(self.family, FromVectors) else self.family.matrices
        best = -math.inf
        for a in mats:
            r, c = linear_sum_assignment(a, maximize=True)
            best = max(best, float(a[r, c].sum()))
        return best


def _load_family(spec: dict, base: Path | None):
    if "family" in spec:
        return family_from_dict(spec["family"])
    if "family_path" in spec:
        p = Path(spec["family_path"])
        if base is not None and not p.is_absolute():
            p = base / p
        if not p.exists():
            raise InvalidParameterError(f"family file {p} does not exist")
        return family_from_dict(json.loads(p.read_text()))
    raise InvalidParameterError("scenario needs 'family' or 'family_path'")


def build_scenario(spec: dict | None, base: Path | None = None) -> Scenario:
    if not spec or "kind" not in spec:
        raise InvalidParameterError("config needs a scenario with a 'kind'")
    kind = spec["kind"]
    if kind == "appendix_d":
        if "epsilon" in spec:
            rec = recommended_parameters(int(spec["n"]), float(spec["epsilon"]))
            n, m, k, l = rec["n"], rec["m"], rec["k"], rec["l"]
            m = int(spec.get("m", m))
            l = int(spec.get("l", l))
        else:
            rec = None
            n, m, k = int(spec["n"]), int(spec["m"]), int(spec["k"])
            l = int(spec["l"]) if "l" in spec else int(round(k / 2 * (1.5 - math.exp(-0.5))))
        inst = build_appendix_d(n, m, k, l, spec.get("placement_seed"))
        desc = inst.to_dict()
        if rec is not None:
            desc["recipe"] = rec
        return Scenario("vector", desc, AppendixDReplicate(inst), APPENDIX_D_COLUMNS, inst.family, m, inst)
    if kind == "vector_family":
        fam = _load_family(spec, base)
        m = int(spec["m"])
        rep = SupremumReplicate(fam, m)
        return Scenario("vector", {"kind": kind, "m": m, "family": family_to_dict(fam)}, rep, SUPREMUM_COLUMNS, fam, m)
    if kind == "fixed_point":
        fam = fixed_point_matrix(int(spec["n"]))
        return Scenario("matrix", {"kind": kind, "n": fam.n}, MatrixReplicate(fam), ("S", "sigma2"), fam)
    if kind == "matrix_family":
        fam = _load_family(spec, base)
        if isinstance(fam, ExplicitVectors):
            raise InvalidParameterError("matrix_family scenario needs a matrix family")
        return Scenario("matrix", {"kind": kind, "family": family_to_dict(fam)}, MatrixReplicate(fam), ("S", "sigma2"), fam)
    raise InvalidParameterError(f"unknown scenario kind {kind!r}")


def _simulate(cfg: RunConfig, sc: Scenario) -> np.ndarray:
    out = simulate(sc.replicate, int(cfg.n_reps), cfg.seed_spec, int(cfg.workers))
    return out.reshape(len(out), -1)


def _column(sc: Scenario, name: str) -> int:
    aliases = {"f": "S", "Zp": "Zprime"}
    name = aliases.get(name, name)
    if name not in sc.columns:
        raise InvalidParameterError(f"statistic {name!r} not available; choose from {list(sc.columns)}")
    return sc.columns.index(name)


def _grid(cfg: RunConfig, esigma2: float, t_max: float) -> np.ndarray:
    g = cfg.grid or {}
    if "t" in g:
        return np.asarray(g["t"], dtype=float)
    num = int(g.get("num", 32))
    if g.get("spacing") == "linear":
        return np.linspace(float(g.get("start", 0.0)), float(g.get("stop", t_max)), num)
    return default_grid(esigma2, float(g.get("t_max", t_max)), num)


# ---------------------------------------------------------------------------
# commands

def run_scenario(cfg: RunConfig, base: Path | None = None) -> dict:
    sc = build_scenario(cfg.scenario, base)
    return {"scenario": sc.description}


def run_estimate(cfg: RunConfig, base: Path | None = None) -> dict:
    sc = build_scenario(cfg.scenario, base)
    data = _simulate(cfg, sc)
    names = cfg.statistics or list(sc.columns)
    est = {name: EstimateWithError.from_samples(data[:, _column(sc, name)]).to_dict() for name in names}
    res = {"scenario": sc.description, "estimates": est}
    if sc.instance is not None:
        res["analytics"] = sc.instance.analytics
    return res


def run_tail(cfg: RunConfig, base: Path | None = None) -> dict:
    sc = build_scenario(cfg.scenario, base)
    data = _simulate(cfg, sc)
    x = data[:, _column(sc, cfg.statistic)]
    est = EstimateWithError.from_samples(x)
    if cfg.center is None:
        center, center_se = est.mean, est.std_error
    else:
        center, center_se = float(cfg.center), 0.0
    sq = data[:, 2] if sc.kind == "vector" else data[:, 1]
    grid = _grid(cfg, float(sq.mean()), max(float(x.max()) - center, 1e-9))
    curve = tail_curve(x, center, grid, float(cfg.delta), center_se)
    _check_curve(curve)
    return {"scenario": sc.description, "statistic": cfg.statistic, "estimate": est.to_dict(), "curve": curve.to_dict()}


def _bound_specs(cfg: RunConfig) -> list[tuple[str, dict]]:
    out = []
    for b in cfg.bounds or []:
        if isinstance(b, str):
            out.append((b, {}))
        else:
            out.append((b["name"], dict(b.get("params", {}))))
    return out


def run_bounds(cfg: RunConfig, base: Path | None = None) -> dict:
    grid = cfg.grid or {}
    if "t" in grid:
        ts = [float(t) for t in grid["t"]]
    else:
        ts = np.linspace(float(grid.get("start", 0.0)), float(grid.get("stop", 100.0)), int(grid.get("num", 32))).tolist()
    rows = []
    for name, params in _bound_specs(cfg):
        tb = B.make_bound(name, **params)
        for t in ts:
            rows.append({"bound_name": name, "t": t, "value": tb(t), "params_json": tb.params_json()})
    return {"rows": rows}


def run_oracle(cfg: RunConfig, base: Path | None = None) -> dict:
    sc = build_scenario(cfg.scenario, base)
    if sc.kind != "matrix":
        fam = FromVectors(sc.family, sc.m)
    else:
        fam = sc.family
    dist = enumerate_distribution(fam)
    res = {"scenario": sc.description, "distribution": dist.to_dict()}
    if isinstance(fam, SingletonMatrix):
        cm = center_matrix(fam.a)
        res["center_matrix_variance"] = cm.variance
        if abs(cm.variance - dist.variance) > 1e-9 * max(1.0, cm.variance):
            raise InvariantError("centered-matrix variance disagrees with enumeration")
    if cfg.lambdas:
        checks = []
        for lam in cfg.lambdas:
            c = check_entropy_inequality(fam, float(lam))
            checks.append({"lambda": float(lam), "lhs": c.lhs, "rhs": c.rhs, "pass": c.passed})
        res["entropy_checks"] = checks
    return res


def _check_curve(curve):
    if np.any(curve.survival > curve.upper_ci):
        raise InvariantError("survival exceeds its upper confidence limit")


def _trivial_flags(grid, curves: dict) -> list[dict]:
    flags = []
    names = list(curves)
    for i, t in enumerate(grid):
        trivial = [n for n in names if curves[n][i] >= 1.0]
        nontrivial = [n for n in names if curves[n][i] < 1.0]
        if trivial and nontrivial:
            flags.append({"t": float(t), "trivial": trivial, "nontrivial": nontrivial})
    return flags


def run_compare(cfg: RunConfig, base: Path | None = None) -> dict:
    sc = build_scenario(cfg.scenario, base)
    data = _simulate(cfg, sc)
    if sc.kind == "vector":
        return _compare_vector(cfg, sc, data)
    return _compare_matrix(cfg, sc, data)


def _compare_vector(cfg, sc, data) -> dict:
    est = {c: EstimateWithError.from_samples(data[:, i]) for i, c in enumerate(sc.columns)}
    ez, ezp = est["Z"], est["Zprime"]
    if sc.instance is not None:
        sup_var = sc.instance.sup_index_variance()
    else:
        sup_var = max(estimate_variance_of_index(x) for x in sc.family.as_explicit().vectors)
    v = sc.m * sup_var + 2 * ezp.mean
    gap = max(ezp.mean - ez.mean, 0.0)
    grid = _grid(cfg, est["sigma2"].mean, sc.max_value() - ez.mean)
    curve = tail_curve(data[:, 0], ez.mean, grid, float(cfg.delta), ez.std_error)
    _check_curve(curve)

    auto = {
        "bennett_suprema": {"esigma2_tilde": est["sigma2_tilde"].mean},
        "bernstein_suprema": {"esigma2": est["sigma2"].mean},
        "tbk_recentered": {"v": v, "gap": gap},
        "tbk": {"v": v},
    }
    selected = _bound_specs(cfg) if cfg.bounds is not None else [(n, {}) for n in ("bennett_suprema", "bernstein_suprema", "tbk_recentered")]
    phis = default_test_functions(ezp.mean)
    bound_curves, verdicts = {}, {}
    for name, params in selected:
        p = {**auto.get(name, {}), **params}
        tb = B.make_bound(name, **p)
        bound_curves[name] = {"params": tb.params, "values": tb.evaluate(grid).tolist()}
        if name != "tbk":  # different center
            verdicts[name] = check_domination(curve, tb).to_dict()
    return {
        "scenario": sc.description,
        "estimates": {k: e.to_dict() for k, e in est.items()},
        "v": v,
        "sup_index_variance": sup_var,
        "gap": ezp.mean - ez.mean,
        "curve": curve.to_dict(),
        "bounds": bound_curves,
        "domination": verdicts,
        "trivial_flags": _trivial_flags(grid, {k: b["values"] for k, b in bound_curves.items()}),
        "convex_order": [c.to_dict() for c in convex_order_from_samples(data[:, 0], data[:, 1], phis)],
    }


def default_test_functions(ezprime: float) -> list[ConvexTestFunction]:
    return [ConvexTestFunction.identity(), ConvexTestFunction.positive_part(ezprime),
            ConvexTestFunction.exp(0.05), ConvexTestFunction.exp(0.2)]


def _compare_matrix(cfg, sc, data) -> dict:
    est = {c: EstimateWithError.from_samples(data[:, i]) for i, c in enumerate(sc.columns)}
    es = est["S"]
    fam = sc.family
    grid = _grid(cfg, est["sigma2"].mean, sc.max_value() - es.mean)
    exact = None
    center, center_se = es.mean, es.std_error
    if fam.n <= MAX_N_DISTRIBUTION:
        dist = enumerate_distribution(fam)
        exact = dist
        center, center_se = dist.mean, 0.0
    curve = tail_curve(data[:, 0], center, grid, float(cfg.delta), center_se)
    _check_curve(curve)

    auto = {"bernstein_hoeffding_suprema": {"esigma2": est["sigma2"].mean}}
    default = ["bernstein_hoeffding_suprema"]
    if isinstance(fam, SingletonMatrix):
        a = fam.a
        auto["bernstein_hoeffding_suprema"] = {"esigma2": float((a**2).sum() / fam.n)}
        auto["bennett_hoeffding_centered"] = {"variance": center_matrix(a).variance}
        default.insert(0, "bennett_hoeffding_centered")
        if a.min() >= 0:
            ef = float(a.sum() / fam.n)
            auto["bennett_positive_hoeffding"] = {"ef": ef}
            auto["chatterjee_bernstein"] = {"ef": ef}
            default += ["bennett_positive_hoeffding", "chatterjee_bernstein"]
    selected = _bound_specs(cfg) if cfg.bounds is not None else [(n, {}) for n in default]
    bound_curves, verdicts = {}, {}
    exact_curve = exact_tail_curve(exact.support, exact.probs, center, grid) if exact is not None else None
    for name, params in selected:
        tb = B.make_bound(name, **{**auto.get(name, {}), **params})
        bound_curves[name] = {"params": tb.params, "values": tb.evaluate(grid).tolist()}
        verdicts[name] = check_domination(curve, tb).to_dict()
        if exact_curve is not None:
            verdicts[name + "@exact"] = check_domination(exact_curve, tb).to_dict()
    res = {
        "scenario": sc.description,
        "estimates": {k: e.to_dict() for k, e in est.items()},
        "curve": curve.to_dict(),
        "bounds": bound_curves,
        "domination": verdicts,
        "trivial_flags": _trivial_flags(grid, {k: b["values"] for k, b in bound_curves.items()}),
    }
    if exact is not None:
        res["exact"] = exact.to_dict()
        res["exact_survival"] = exact_curve.survival.tolist()
    return res


RUNNERS = {
    "estimate": run_estimate,
    "tail": run_tail,
    "bounds": run_bounds,
    "compare": run_compare,
    "oracle": run_oracle,
    "scenario": run_scenario,
}


def run(cfg: RunConfig, base: Path | None = None) -> dict:
    return RUNNERS[cfg.command](cfg, base)


def make_report(cfg: RunConfig, results: dict) -> dict:
    return {"command": cfg.command, "config": cfg.to_dict(), "seed": int(cfg.seed),
            "provenance": provenance(), "results": results}


def load_report(path) -> tuple[RunConfig, dict]:
    d = json.loads(Path(path).read_text())
    return RunConfig.from_dict(d["config"]), d["results"]


# ---------------------------------------------------------------------------
# CSV rendering

def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def to_csv(command: str, res: dict) -> str:
    if command == "bounds":
        return _csv(["bound_name", "t", "value", "params_json"],
                    [[r["bound_name"], float(r["t"]), float(r["value"]), r["params_json"]] for r in res["rows"]])
    if command == "oracle":
        d = res["distribution"]
        return _csv(["value", "prob"], zip(map(float, d["value"]), map(float, d["prob"])))
    if command == "estimate":
        return _csv(["statistic", "mean", "std_error", "n_reps"],
                    [[k, e["mean"], e["std_error"], e["n_reps"]] for k, e in res["estimates"].items()])
    if command == "tail":
        c = res["curve"]
        return _csv(["t", "survival", "upper_ci"], zip(c["t"], c["survival"], c["upper_ci"]))
    if command == "compare":
        c = res["curve"]
        names = list(res["bounds"])
        header = ["t", "survival", "upper_ci"] + (["exact_survival"] if "exact_survival" in res else []) + names
        rows = []
        for i, t in enumerate(c["t"]):
            row = [t, c["survival"][i], c["upper_ci"][i]]
            if "exact_survival" in res:
                row.append(res["exact_survival"][i])
            row += [res["bounds"][n]["values"][i] for n in names]
            rows.append([float(v) for v in row])
        return _csv(header, rows)
    if command == "scenario":
        flat = []
        for k, v in sorted(res["scenario"].items()):
            flat.append([k, json.dumps(v, sort_keys=True)])
        return _csv(["field", "value"], flat)
    raise InvalidParameterError(f"no CSV layout for {command}")
