"""Harness comparing Monte Carlo and oracle values with two-sided bound shapes.

A two-sided estimate with unknown constants is judged by the ratio of the
observed value to the bound shape on a grid: it passes when the ratio is
finite, max/min stays under a ceiling, and there is no monotone drift across
scales. Explicit constants (2, 24, pi^2, 5, 1/2) are asserted directly and a
violation is a hard failure.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from ._numerics import log_grid
from .characteristics import pruitt_h, scaling_indices, script_J
from .domains import Ball, BallComplement, Domain, HalfSpace
from .io import atomic_write_text, dumps_json, write_rows
from .model import LevyModel, psi_star
from .renewal import RenewalTable, condition_A, renewal_V
from .simulate import (McEstimate, SimConfig, dynkin_estimate, exit_tail_from, exit_time_from,
                       hit_ball_prob, sample_increment, simulate_paths, survival_curve)

log = logging.getLogger(__name__)

__all__ = [
    "BoundCheck",
    "HardAssertion",
    "Report",
    "trend_test",
    "comparability",
    "renewal_for",
    "check_psi_star",
    "check_condition_A",
    "check_exit_ball",
    "check_exit_c11",
    "check_exit_tail",
    "check_survival",
    "check_hitting",
    "check_barriers",
    "check_harmonic_halfspace",
    "check_dynkin_exit_time",
    "check_position_tail",
    "check_exit_time_lower",
    "ball_exit_time_closed_form",
]

CEILING = 1e3
SLOPE_TOL = 0.1  # per decade
PASS, FAIL, INCONCLUSIVE, UNSUPPORTED = "pass", "fail", "inconclusive", "unsupported"


@dataclass
class HardAssertion:
    name: str
    value: float
    bound: float
    holds: bool
    note: str = ""


@dataclass
class BoundCheck:
    name: str
    grid: np.ndarray
    grid_label: str
    observed: list
    lhs: np.ndarray | None = None
    rhs: np.ndarray | None = None
    ratio_stats: dict = field(default_factory=dict)
    empirical_constants: dict = field(default_factory=dict)
    verdict: str = PASS
    hard: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def hard_failure(self) -> bool:
        return any(not h.holds for h in self.hard)

    def to_dict(self) -> dict:
        arr = lambda a: None if a is None else np.asarray(a, float).tolist()
        return {
            "name": self.name,
            "grid": arr(self.grid),
            "grid_label": self.grid_label,
            "observed": [o.to_dict() if isinstance(o, McEstimate) else o for o in self.observed],
            "lhs": arr(self.lhs),
            "rhs": arr(self.rhs),
            "ratio_stats": self.ratio_stats,
            "empirical_constants": self.empirical_constants,
            "verdict": self.verdict,
            "hard": [vars(h) for h in self.hard],
            "series": {k: arr(v) for k, v in self.series.items()},
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BoundCheck":
        arr = lambda a: None if a is None else np.asarray([np.nan if v is None else v for v in a], float)
        obs = [McEstimate.from_dict(o) if isinstance(o, dict) and "tag" in o else o for o in data["observed"]]
        return cls(data["name"], arr(data["grid"]), data["grid_label"], obs, arr(data["lhs"]), arr(data["rhs"]),
                   data["ratio_stats"], data["empirical_constants"], data["verdict"],
                   [HardAssertion(**h) for h in data["hard"]],
                   {k: arr(v) for k, v in data.get("series", {}).items()}, list(data.get("notes", [])))


@dataclass
class Report:
    checks: list
    meta: dict = field(default_factory=dict)

    @property
    def hard_failure(self) -> bool:
        return any(c.hard_failure for c in self.checks)

    def to_dict(self) -> dict:
        return {"kind": "verification-report", "meta": self.meta, "hard_failure": self.hard_failure,
                "checks": [c.to_dict() for c in self.checks]}

    @classmethod
    def from_dict(cls, data: dict) -> "Report":
        return cls([BoundCheck.from_dict(c) for c in data["checks"]], data.get("meta", {}))

    def to_json(self, path) -> None:
        atomic_write_text(path, dumps_json(self.to_dict()))

    @classmethod
    def from_json(cls, path) -> "Report":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def summary_rows(self) -> list:
        rows = []
        for c in self.checks:
            k = c.empirical_constants
            rows.append([c.name, c.verdict, int(c.hard_failure), len(c.grid),
                         c.ratio_stats.get("min", math.nan), c.ratio_stats.get("max", math.nan),
                         c.ratio_stats.get("max_over_min", math.nan), json.dumps(k, sort_keys=True)])
        return rows

    def to_csv(self, path) -> None:
        write_rows(path, ["check", "verdict", "hard_failure", "points", "ratio_min", "ratio_max",
                          "max_over_min", "constants"], self.summary_rows())


# ---------------------------------------------------------------------------
# Ratio analysis


def trend_test(x, ratio, se, *, tol: float = SLOPE_TOL, k: float = 3.0) -> dict:
    """Detect a monotone drift of log(ratio) against log10(x).

    Divergence is declared when every consecutive pair of grid points shows a
    slope of the same sign exceeding ``tol`` per decade by k standard errors.
    A bounded variation that levels off somewhere is not a divergence.
    """
    x = np.asarray(x, float)
    ratio = np.asarray(ratio, float)
    se = np.asarray(se, float)
    order = np.argsort(x)
    x, ratio, se = x[order], ratio[order], se[order]
    lx = np.log10(x)
    lr = np.log10(ratio)
    rel = np.maximum(se / ratio, 1e-12) / math.log(10.0)
    slopes = np.diff(lr) / np.diff(lx)
    slope_se = np.sqrt(rel[1:] ** 2 + rel[:-1] ** 2) / np.diff(lx)
    significant = np.abs(slopes) - k * slope_se > tol
    diverging = bool(slopes.size > 0 and np.all(significant)
                     and (np.all(slopes > 0) or np.all(slopes < 0)))
    w = 1.0 / rel ** 2
    xm = np.sum(w * lx) / np.sum(w)
    sxx = np.sum(w * (lx - xm) ** 2)
    slope = float(np.sum(w * (lx - xm) * lr) / sxx) if sxx > 0 else 0.0
    return {"pair_slopes": slopes.tolist(), "pair_slope_se": slope_se.tolist(),
            "weighted_slope": slope, "weighted_slope_se": float(1.0 / math.sqrt(sxx)) if sxx > 0 else math.inf,
            "diverging": diverging}


def comparability(x, observed, stderr, shape, *, ceiling: float = CEILING, tol: float = SLOPE_TOL) -> dict:
    """Ratio statistics of observed / shape with the boundedness and trend verdict."""
    observed = np.asarray(observed, float)
    shape = np.asarray(shape, float)
    ratio = observed / shape
    se = np.asarray(stderr, float) / shape
    finite = bool(np.all(np.isfinite(ratio)) and np.all(ratio > 0))
    out = {"ratio": ratio.tolist(), "finite": finite}
    if not finite:
        out.update(min=math.nan, max=math.nan, median=math.nan, max_over_min=math.inf, ok=False,
                   trend={"diverging": False})
        return out
    mm = float(ratio.max() / ratio.min())
    trend = trend_test(x, ratio, se, tol=tol) if ratio.size > 1 else {"diverging": False}
    out.update(min=float(ratio.min()), max=float(ratio.max()), median=float(np.median(ratio)),
               max_over_min=mm, trend=trend, ok=bool(mm <= ceiling and not trend["diverging"]))
    return out


def _verdict(comp_ok: bool, inconclusive: bool, hard: Sequence[HardAssertion]) -> str:
    if any(not h.holds for h in hard):
        return FAIL
    if inconclusive:
        return INCONCLUSIVE
    return PASS if comp_ok else FAIL


# ---------------------------------------------------------------------------
# Shared tables


def renewal_for(model: LevyModel, lo: float = 1e-6, hi: float = 1e4, per_decade: int = 8) -> RenewalTable:
    """Renewal table on a log grid, cached on the model."""
    return model._cached(("renewal", lo, hi, per_decade),
                         lambda: renewal_V(model, log_grid(lo, hi, per_decade)))


def _renewal(model, renewal, lo, hi):
    if renewal is not None and renewal.grid[0] <= lo and renewal.grid[-1] >= hi:
        return renewal
    lo10 = 10.0 ** math.floor(math.log10(lo))
    hi10 = 10.0 ** math.ceil(math.log10(hi))
    return renewal_for(model, min(lo10, 1e-6), max(hi10, 1e4))


def _unit(d: int) -> np.ndarray:
    e = np.zeros(d)
    e[0] = 1.0
    return e


# ---------------------------------------------------------------------------
# Explicit constants


def check_psi_star(model: LevyModel, u: Sequence[float] | None = None, *, rtol: float = 1e-9) -> BoundCheck:
    """psi <= psi* <= pi^2 psi on a grid."""
    u = log_grid(1e-3, 1e3, 10) if u is None else np.asarray(u, float)
    p = np.array([float(model.psi(float(v))) for v in u])
    ps = np.asarray(psi_star(model, u), float)
    lower = float(np.min(ps / p))
    upper = float(np.max(ps / p))
    hard = [HardAssertion("psi <= psi*", lower, 1.0, lower >= 1.0 - rtol),
            HardAssertion("psi* <= pi^2 psi", upper, math.pi ** 2, upper <= math.pi ** 2 * (1 + rtol))]
    finite = bool(np.all(np.isfinite(p)) and np.all(np.isfinite(ps)))
    hard.append(HardAssertion("psi finite", float(finite), 1.0, finite))
    return BoundCheck("psi-star", u, "u", [], p, math.pi ** 2 * p,
                      {"min": lower, "max": upper, "max_over_min": upper / lower},
                      {"psi_star_over_psi_max": upper}, _verdict(True, False, hard), hard,
                      {"psi": p, "psi_star": ps})


def check_condition_A(model: LevyModel, rs: Sequence[float], *, renewal: RenewalTable | None = None,
                      tol: float = 1e-3) -> BoundCheck:
    """H_r on a radius grid, with H_r <= 5 asserted whenever V is log-concave."""
    rs = np.asarray(rs, float)
    table = _renewal(model, renewal, float(rs.min()) * 1e-6, float(rs.max()) * 5.0)
    results = [condition_A(table, float(r), x_min=float(r) * 1e-4) for r in rs]
    H = np.array([c.H for c in results])
    hard = []
    for c in results:
        if c.log_concave:
            hard.append(HardAssertion(f"H_{c.r:g} <= 5", c.H, 5.0, c.H <= 5.0 + tol, "V log-concave"))
    notes = [f"r={c.r:g}: concave={c.concave}, log_concave={c.log_concave}" for c in results]
    return BoundCheck("condition-A", rs, "r", [], None, np.full(rs.shape, 5.0),
                      {"min": float(H.min()), "max": float(H.max()), "max_over_min": float(H.max() / H.min())},
                      {"H_max": float(H.max())}, _verdict(True, False, hard), hard,
                      {"H": H, "concave": np.array([c.concave for c in results], float),
                       "log_concave": np.array([c.log_concave for c in results], float)}, notes)


# ---------------------------------------------------------------------------
# Exit times


def ball_exit_time_closed_form(model: LevyModel, radius: float = 1.0):
    """E^x tau of the ball B(0, radius) as a function of points, when known in closed form."""
    d = model.dimension
    if not model.has_jumps:
        c = 1.0 / (2.0 * d * model.sigma ** 2)
        return lambda y: c * np.maximum(0.0, radius ** 2 - np.sum(np.atleast_2d(y) ** 2, axis=-1))
    if model.family == "isotropic-stable" and model.sigma == 0 and len(model.stable_parts) == 1:
        a, w = model.stable_parts[0]
        c = math.gamma(d / 2.0) / (2.0 ** a * math.gamma(1 + a / 2.0) * math.gamma((d + a) / 2.0)) / w
        return lambda y: c * np.maximum(0.0, radius ** 2 - np.sum(np.atleast_2d(y) ** 2, axis=-1)) ** (a / 2.0)
    return None


def check_exit_ball(model: LevyModel, r: float = 1.0, delta_fracs: Sequence[float] = (0.9, 0.5, 0.1, 0.02),
                    config: SimConfig | None = None, *, renewal: RenewalTable | None = None,
                    ceiling: float = CEILING, max_rel_ci: float = 0.2) -> BoundCheck:
    """E^x tau_{B_r} against V(delta) V(r), with the hard upper bound 2 V(r) V(r - |x|)."""
    config = config or SimConfig()
    d = model.dimension
    fr = np.asarray(delta_fracs, float)
    if np.any(fr <= 0) or np.any(fr > 1):
        raise ValueError("delta fractions must lie in (0, 1]")
    deltas = fr * r
    table = _renewal(model, renewal, float(deltas.min()) * config.delta_abs_rel / 10.0, 10.0 * r)
    V = table.V
    ball = Ball(np.zeros(d), r)
    h_r = pruitt_h(model, r).h
    ests = []
    for delta in deltas:
        sample = simulate_paths(model, ball, (r - delta) * _unit(d), config, horizon=math.inf)
        ests.append(exit_time_from(sample, model, ball, renewal=table))
    mean = np.array([e.mean for e in ests])
    se = np.array([e.stderr for e in ests])
    band = np.array([e.bias_band for e in ests])
    shape = V(deltas) * V(r)
    upper = 2.0 * V(r) * V(deltas)
    comp = comparability(deltas, mean, se, shape, ceiling=ceiling)
    h_delta = np.array([pruitt_h(model, float(s)).h for s in deltas])
    pruitt_shape = 1.0 / np.sqrt(h_r * h_delta)
    comp_pruitt = comparability(deltas, mean, se, pruitt_shape, ceiling=ceiling)
    hard = [HardAssertion(f"E tau <= 2 V(r) V(r-|x|) at delta={s:g}", float(m - 3 * e - b), float(u),
                          bool(m - 3 * e - b <= u))
            for s, m, e, b, u in zip(deltas, mean, se, band, upper)]
    inconclusive = bool(np.any(3 * se > max_rel_ci * mean))
    constants = {"lower_constant": comp["min"], "upper_ratio": comp["max"],
                 "exit_upper_ratio_max": float(np.max(mean / upper)),
                 "pruitt_ratio_min": comp_pruitt["min"], "pruitt_ratio_max": comp_pruitt["max"]}
    center = None
    if np.any(np.isclose(fr, 1.0)):
        center = float(mean[np.argmin(np.abs(fr - 1.0))] * h_r)
        constants["pruitt_center"] = center
    return BoundCheck("exit-ball", deltas, "delta", ests, shape, upper,
                      {k: comp[k] for k in ("min", "max", "median", "max_over_min")} | {"trend": comp["trend"]},
                      constants, _verdict(comp["ok"], inconclusive, hard), hard,
                      {"observed": mean, "stderr": se, "bias_band": band, "shape": shape, "upper": upper,
                       "pruitt_shape": pruitt_shape, "ratio": np.asarray(comp["ratio"])},
                      [f"Pruitt comparison max/min={comp_pruitt['max_over_min']:.3g}"])


def check_exit_c11(model: LevyModel, domain: Domain, x_grid: Sequence[Sequence[float]],
                   config: SimConfig | None = None, *, renewal: RenewalTable | None = None,
                   ceiling: float = CEILING, max_rel_ci: float = 0.2) -> BoundCheck:
    """E^x tau_D against V(delta_D(x)) V(r0) for a bounded C^{1,1} domain."""
    config = config or SimConfig()
    if not domain.bounded or not math.isfinite(domain.c11_radius):
        raise ValueError("check_exit_c11 needs a bounded domain with a declared C11 radius")
    r0, diam = domain.c11_radius, domain.diameter
    pts = np.atleast_2d(np.asarray(x_grid, float))
    deltas = np.asarray(domain.delta(pts), float)
    if np.any(deltas <= 0):
        raise ValueError("all grid points must lie inside the domain")
    table = _renewal(model, renewal, float(deltas.min()) * config.delta_abs_rel / 10.0, 10.0 * diam)
    V = table.V
    J = script_J(model, r0, table)
    if J.degenerate:
        return BoundCheck("exit-c11", deltas, "delta", [], verdict=UNSUPPORTED,
                          notes=["J(r0) vanishes (truncated jumps at large scale); the two-sided "
                                 "shape is replaced by the fallback upper bound only"],
                          empirical_constants={"J_r0": J.value})
    H = condition_A(table, r0, x_min=r0 * 1e-4).H if model.dimension > 1 else 1.0
    ests = []
    for x in pts:
        sample = simulate_paths(model, domain, x, config, horizon=math.inf)
        ests.append(exit_time_from(sample, model, domain, renewal=table))
    mean = np.array([e.mean for e in ests])
    se = np.array([e.stderr for e in ests])
    band = np.array([e.bias_band for e in ests])
    shape = V(deltas) * V(r0)
    upper_factor = H / J.value ** 2 * (V(diam) / V(r0)) ** 2
    comp = comparability(deltas, mean, se, shape, ceiling=ceiling)
    hard = []
    notes = [f"upper shape factor H/J^2 (V(diam)/V(r0))^2 = {upper_factor:.4g}"]
    if model.dimension == 1 and isinstance(domain, Ball):
        for s, m, e, b, sh in zip(deltas, mean, se, band, shape):
            hard.append(HardAssertion(f"E tau <= 2 V(delta) V(r0) at delta={s:g}", float(m - 3 * e - b),
                                      float(2 * sh), bool(m - 3 * e - b <= 2 * sh)))
        notes.append("one-dimensional interval: band [lower_constant, 2]")
    inconclusive = bool(np.any(3 * se > max_rel_ci * mean))
    constants = {"lower_C": comp["min"], "upper_C": comp["max"] / upper_factor, "J_r0": J.value, "H_r0": H,
                 "lower_constant": comp["min"]}
    return BoundCheck("exit-c11", deltas, "delta", ests, shape, shape * upper_factor,
                      {k: comp[k] for k in ("min", "max", "median", "max_over_min")} | {"trend": comp["trend"]},
                      constants, _verdict(comp["ok"], inconclusive, hard), hard,
                      {"observed": mean, "stderr": se, "bias_band": band, "shape": shape,
                       "ratio": np.asarray(comp["ratio"])}, notes)


def check_exit_tail(model: LevyModel, domain: Domain, x, radii: Sequence[float],
                    config: SimConfig | None = None, *, renewal: RenewalTable | None = None) -> BoundCheck:
    """P^x(|X_tau| >= r) <= 24 h(r) E^x tau, both from one set of replicas."""
    config = config or SimConfig()
    x = np.atleast_1d(np.asarray(x, float))
    radii = np.asarray(radii, float)
    if np.any(np.linalg.norm(x) > radii / 2.0):
        raise ValueError("need |x| <= r/2 for every radius")
    sample = simulate_paths(model, domain, x, config, horizon=math.inf)
    tau = exit_time_from(sample, model, domain, renewal=renewal)
    hs = np.array([pruitt_h(model, float(r)).h for r in radii])
    tails = [exit_tail_from(sample, model, domain, float(r), renewal=renewal, h_r=float(h))
             for r, h in zip(radii, hs)]
    bound = 24.0 * hs * (tau.mean + tau.tolerance())
    hard = []
    for r, t, b in zip(radii, tails, bound):
        lhs = t.mean - t.tolerance()
        hard.append(HardAssertion(f"P(|X_tau| >= {r:g}) <= 24 h(r) E tau", float(lhs), float(b), bool(lhs <= b)))
    ratios = np.array([t.mean for t in tails]) / (24.0 * hs * tau.mean)
    return BoundCheck("exit-tail", radii, "r", [tau] + tails, None, 24.0 * hs * tau.mean,
                      {"min": float(ratios.min()), "max": float(ratios.max()),
                       "max_over_min": float(ratios.max() / ratios.min()) if ratios.min() > 0 else math.inf},
                      {"tail_over_bound_max": float(ratios.max())}, _verdict(True, False, hard), hard,
                      {"tail": np.array([t.mean for t in tails]), "bound": 24.0 * hs * tau.mean})


# ---------------------------------------------------------------------------
# Survival


def _wusc_index(model: LevyModel) -> float:
    sc = scaling_indices(model, (1e-3, 1e3))
    return 2.0 if sc.wusc is None else sc.wusc.alpha


def _inner_outer(domain: Domain, x: np.ndarray, h: float = 1e-6):
    """Inner tangent ball and outer tangent ball at the boundary point nearest to x."""
    d = x.size
    g = np.zeros(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        g[i] = (domain.delta(x + e) - domain.delta(x - e)) / (2 * h)
    n_in = g / np.linalg.norm(g)
    delta = float(domain.delta(x))
    z = x - delta * n_in
    r0 = domain.c11_radius
    return Ball(z + r0 * n_in, r0), BallComplement(z - r0 * n_in, r0)


def check_survival(model: LevyModel, kind: str, params: dict, config: SimConfig | None = None, *,
                   renewal: RenewalTable | None = None, ceiling: float = CEILING, min_survivors: int = 50) -> BoundCheck:
    """Survival probabilities against their bound shapes.

    kind: "half-line" (params xs, ts), "ball" (r, deltas, ts), "ball-complement"
    (R, deltas, ts) or "c11-sandwich" (domain, x, ts).
    """
    config = config or SimConfig()
    d = model.dimension
    ts = np.asarray(params["ts"], float)
    if np.any(ts <= 0):
        raise ValueError("survival times must be positive")
    if kind == "c11-sandwich":
        return _survival_sandwich(model, params["domain"], np.asarray(params["x"], float), ts, config, renewal)
    if kind == "half-line":
        xs = np.atleast_1d(np.asarray(params["xs"], float))
        domain = HalfSpace(_unit(d), 0.0)
        starts = [x * _unit(d) for x in xs]
        dists = xs
    elif kind == "ball":
        r = float(params["r"])
        dists = np.atleast_1d(np.asarray(params["deltas"], float))
        domain = Ball(np.zeros(d), r)
        starts = [(r - s) * _unit(d) for s in dists]
    elif kind == "ball-complement":
        R = float(params["R"])
        aup = _wusc_index(model)
        if not d > aup:
            return BoundCheck("survival-ball-complement", ts, "t", [], verdict=UNSUPPORTED,
                              notes=[f"needs d > upper index (d={d}, index={aup:.3g}); "
                                     "logarithmic corrections are possible there"])
        dists = np.atleast_1d(np.asarray(params["deltas"], float))
        domain = BallComplement(np.zeros(d), R)
        starts = [(R + s) * _unit(d) for s in dists]
    else:
        raise ValueError(f"unknown survival kind {kind!r}")
    table = _renewal(model, renewal, float(np.min(dists)) * config.delta_abs_rel / 10.0,
                     max(float(np.max(dists)), 1.0) * 10.0)
    V = table.V
    grid, obs, shapes, oracle = [], [], [], []
    gaussian = not model.has_jumps
    for s, x in zip(dists, starts):
        ests = survival_curve(model, domain, x, ts, config, renewal=table)
        for t, e in zip(ts, ests):
            grid.append((float(s), float(t)))
            obs.append(e)
            if kind == "half-line":
                shapes.append(min(1.0, 1.0 / math.sqrt(t * float(psi_star(model, 1.0 / s)))))
                if gaussian:
                    oracle.append(float(special.erf(s / math.sqrt(4.0 * model.sigma ** 2 * t))))
            elif kind == "ball":
                shapes.append(min(1.0, float(V(s)) / math.sqrt(t)))
            else:
                shapes.append(min(1.0, float(V(s)) / min(math.sqrt(t), float(V(R)))))
    mean = np.array([e.mean for e in obs])
    se = np.array([e.stderr for e in obs])
    band = np.array([e.bias_band for e in obs])
    shapes = np.array(shapes)
    survivors = np.array([e.details.get("survivors", 0) for e in obs])
    inconclusive = bool(np.any(survivors < min_survivors))
    # trend is judged along t for each start separately
    comp_all = comparability(np.arange(1, mean.size + 1), mean, se, shapes, ceiling=ceiling)
    diverging = False
    trends = []
    for s in np.unique([g[0] for g in grid]):
        idx = [i for i, g in enumerate(grid) if g[0] == s]
        tr = trend_test(ts, mean[idx] / shapes[idx], se[idx] / shapes[idx]) if len(idx) > 1 else {"diverging": False}
        trends.append(tr)
        diverging |= bool(tr["diverging"])
    ok = bool(comp_all["finite"] and comp_all["max_over_min"] <= ceiling and not diverging)
    hard = []
    series = {"dist": np.array([g[0] for g in grid]), "t": np.array([g[1] for g in grid]),
              "observed": mean, "stderr": se, "bias_band": band, "shape": shapes}
    constants = {"lower": comp_all["min"], "upper": comp_all["max"]}
    notes = []
    if oracle:
        oracle = np.array(oracle)
        series["oracle"] = oracle
        z_ok = np.abs(mean - oracle) <= 3 * se + band
        constants["oracle_matches"] = int(np.sum(z_ok))
        notes.append(f"reflection oracle matched at {int(np.sum(z_ok))} of {z_ok.size} points")
        # with an exact law the shape is judged on the exact ratio over a wide time range;
        # a short MC grid inside the crossover can show a steep but bounded drift
        wide = np.logspace(-4, 6, 41)
        exact_trends = []
        exact_ok = True
        for s in np.unique(dists):
            sc = float(s) ** 2 / model.sigma ** 2
            tt = wide * sc
            ex = special.erf(s / np.sqrt(4.0 * model.sigma ** 2 * tt))
            sh = np.minimum(1.0, 1.0 / np.sqrt(tt * float(psi_star(model, 1.0 / s))))
            c = comparability(tt, ex, np.full(tt.shape, 1e-12) * ex, sh, ceiling=ceiling)
            exact_trends.append(c["trend"])
            exact_ok &= c["ok"]
        constants["exact_ratio_trend_free"] = bool(exact_ok)
        notes.append("MC trends are informational; the verdict uses the exact ratio")
        ok = bool(comp_all["finite"] and comp_all["max_over_min"] <= ceiling and exact_ok and np.all(z_ok))
    name = {"half-line": "survival-half-line", "ball": "survival-ball", "ball-complement": "survival-ball-complement"}[kind]
    return BoundCheck(name, np.arange(mean.size, dtype=float), "index", obs, shapes, shapes,
                      {k: comp_all[k] for k in ("min", "max", "median", "max_over_min")} | {"trends": trends},
                      constants, _verdict(ok, inconclusive, hard), hard, series, notes)


def _survival_sandwich(model, domain, x, ts, config, renewal):
    inner, outer = _inner_outer(domain, x)
    runs = {}
    for label, dom in (("inner", inner), ("domain", domain), ("outer", outer)):
        runs[label] = survival_curve(model, dom, x, ts, config, renewal=renewal)
    get = lambda k, a: np.array([getattr(e, a) for e in runs[k]])
    lo_ok = get("inner", "mean") <= get("domain", "mean") + 3 * np.hypot(get("inner", "stderr"), get("domain", "stderr"))
    hi_ok = get("domain", "mean") <= get("outer", "mean") + 3 * np.hypot(get("outer", "stderr"), get("domain", "stderr"))
    ok = bool(np.all(lo_ok) and np.all(hi_ok))
    return BoundCheck("survival-c11-sandwich", ts, "t", runs["domain"], get("inner", "mean"), get("outer", "mean"),
                      {}, {}, PASS if ok else FAIL, [],
                      {"inner": get("inner", "mean"), "observed": get("domain", "mean"),
                       "outer": get("outer", "mean")},
                      ["inner tangent ball <= domain <= outer ball complement"])


# ---------------------------------------------------------------------------
# Hitting


def check_hitting(model: LevyModel, R: float, x_norms: Sequence[float], config: SimConfig,
                  *, renewal: RenewalTable | None = None, ceiling: float = CEILING) -> BoundCheck:
    """Finite-horizon hitting of B(0, R) against V^2(|x|) R^d / (|x|^d V^2(R))."""
    d = model.dimension
    xs = np.asarray(x_norms, float)
    if np.any(xs <= R):
        raise ValueError("need |x| > R")
    if d <= 2:
        aup = _wusc_index(model)
        if not aup < d:
            return BoundCheck("hitting", xs, "|x|", [], verdict=UNSUPPORTED,
                              notes=["recurrent or unverified regime: needs d >= 3 or an upper index below d"])
    table = _renewal(model, renewal, R * config.delta_abs_rel / 10.0, 10.0 * float(xs.max()))
    V = table.V
    ests = [hit_ball_prob(model, R, x * _unit(d), config, renewal=table) for x in xs]
    mean = np.array([e.mean for e in ests])
    se = np.array([e.stderr for e in ests])
    band = np.array([e.bias_band for e in ests])
    shape = V(xs) ** 2 * R ** d / (xs ** d * V(R) ** 2)
    comp = comparability(xs, np.maximum(mean, 1e-300), se, shape, ceiling=ceiling)
    escape = 1.0 - mean
    certified = escape - 3 * se - band >= 0.5
    multiple = float(xs[np.argmax(certified)] / R) if np.any(certified) else math.inf
    series = {"observed": mean, "stderr": se, "bias_band": band, "shape": shape, "escape": escape}
    notes = [f"horizon T={config.horizon:g}: hitting values are lower bounds for T = inf"]
    constants = {"C_upper": comp["max"], "escape_half_multiple": multiple}
    oracle_ok = True
    comp_shape = comp
    if not model.has_jumps and d >= 3:
        T = config.horizon
        orc = (R / xs) ** (d - 2)
        if d == 3:
            orc = orc * special.erfc((xs - R) / math.sqrt(4.0 * model.sigma ** 2 * T))
        series["oracle"] = orc
        oracle_ok = bool(np.all(np.abs(mean - orc) <= 3 * se + band))
        notes.append("Newtonian oracle with finite-horizon correction" if d == 3 else "Newtonian oracle (T = inf)")
        # finite-horizon values need not follow the T = inf shape; judge the shape on the exact T = inf law
        exact = (R / xs) ** (d - 2)
        comp_shape = comparability(xs, exact, 1e-12 * exact, shape, ceiling=ceiling)
        notes.append("shape judged on the exact T = inf law; MC ratio trend is informational")
    elif model.family == "isotropic-stable" and model.sigma == 0 and model.stable_parts[0][0] < d:
        a = model.stable_parts[0][0]
        series["oracle"] = special.betainc((d - a) / 2.0, a / 2.0, (R / xs) ** 2)
        notes.append("stable hitting oracle for T = inf")
    ok = comp["finite"] and comp_shape["ok"] and comp["max_over_min"] <= ceiling and oracle_ok
    return BoundCheck("hitting", xs, "|x|", ests, None, shape,
                      {k: comp[k] for k in ("min", "max", "median", "max_over_min")} | {"trend": comp["trend"]},
                      constants, _verdict(ok, False, []), [], series, notes)


# ---------------------------------------------------------------------------
# Dynkin operator checks


def _v_of(table: RenewalTable) -> Callable:
    return lambda s: np.where(np.asarray(s) > 0, table.V(np.maximum(np.asarray(s, float), 1e-300)), 0.0)


def check_barriers(model: LevyModel, r: float, delta_grid: Sequence[float], config: SimConfig, *,
                   renewal: RenewalTable | None = None, t_factor: float = 0.125, side: str = "both",
                   max_rel_ci: float = 0.3) -> BoundCheck:
    """Signs and size of the Dynkin operator of V composed with the distance to the (complement of the) ball."""
    d = model.dimension
    deltas = np.asarray(delta_grid, float)
    if np.any(deltas <= 0) or np.any(deltas >= r / 4.0):
        raise ValueError("delta grid must lie in (0, r/4)")
    table = _renewal(model, renewal, float(deltas.min()) * t_factor * config.delta_abs_rel / 10.0, 50.0 * r)
    Vf = _v_of(table)
    H = condition_A(table, r, x_min=r * 1e-4).H
    Vr = float(table.V(r))
    sides = ("interior", "exterior") if side == "both" else (side,)
    ests, grid, labels, signed = [], [], [], []
    for sd in sides:
        if sd == "interior":
            g = lambda y: Vf(r - np.linalg.norm(np.atleast_2d(y), axis=-1))
        else:
            g = lambda y: Vf(np.linalg.norm(np.atleast_2d(y), axis=-1) - r)
        for s in deltas:
            x = (r - s if sd == "interior" else r + s) * _unit(d)
            e = dynkin_estimate(model, g, x, s * t_factor, config, renewal=table)
            ests.append(e)
            grid.append(float(s))
            labels.append(sd)
            # -A g for the interior barrier, +A g for the exterior one; both should be >= 0
            signed.append(-e.mean if sd == "interior" else e.mean)
    signed = np.array(signed)
    se = np.array([e.stderr for e in ests])
    band = np.array([e.bias_band for e in ests])
    hard = []
    sign_ok = signed >= -(3 * se + band)
    C_emp = float(np.max(np.maximum(signed, 0.0)) * Vr / H)
    upper = C_emp * H / Vr + 3 * se + band
    size_ok = signed <= upper
    rel_ci = np.array([e.details["denominator_relative_ci"] for e in ests])
    inconclusive = bool(np.any(rel_ci > max_rel_ci))
    ok = bool(np.all(sign_ok) and np.all(size_ok) and math.isfinite(C_emp))
    series = {"delta": np.array(grid), "signed_value": signed, "stderr": se, "bias_band": band,
              "interior": np.array([lb == "interior" for lb in labels], float)}
    return BoundCheck("barriers", np.array(grid), "delta", ests, -(3 * se + band), upper,
                      {"min": float(signed.min()), "max": float(signed.max())},
                      {"C_emp": C_emp, "H_r": H, "V_r": Vr}, _verdict(ok, inconclusive, hard), hard, series,
                      [f"{lb} delta={s:g}: value={v:.4g} +- {3 * e:.2g}" for lb, s, v, e in zip(labels, grid, signed, se)])


def check_harmonic_halfspace(model: LevyModel, x1_grid: Sequence[float], config: SimConfig, *,
                             renewal: RenewalTable | None = None, t_factor: float = 0.125) -> BoundCheck:
    """A_t V_1 = 0 on the half-space, with V_1(y) = V(y_1)."""
    d = model.dimension
    xs = np.asarray(x1_grid, float)
    table = _renewal(model, renewal, float(xs.min()) * t_factor * config.delta_abs_rel / 10.0, 1e4)
    Vf = _v_of(table)
    f = lambda y: Vf(np.atleast_2d(y)[:, 0])
    ests = [dynkin_estimate(model, f, x * _unit(d), x * t_factor, config, renewal=table) for x in xs]
    mean = np.array([e.mean for e in ests])
    tol = np.array([e.tolerance() for e in ests])
    ok = bool(np.all(np.abs(mean) <= tol))
    return BoundCheck("harmonic", xs, "x1", ests, -tol, tol, {"min": float(mean.min()), "max": float(mean.max())},
                      {}, PASS if ok else FAIL, [], {"observed": mean, "tolerance": tol})


def check_dynkin_exit_time(model: LevyModel, radius: float, points: Sequence[Sequence[float]], config: SimConfig,
                           *, t_factor: float = 0.5) -> BoundCheck:
    """A_t s_D = -1 for the ball, using the closed-form mean exit time s_D."""
    sD = ball_exit_time_closed_form(model, radius)
    pts = np.atleast_2d(np.asarray(points, float))
    if sD is None:
        return BoundCheck("dynkin-exit-time", np.arange(len(pts), dtype=float), "index", [], verdict=UNSUPPORTED,
                          notes=["no closed-form exit time for this model"])
    ests = []
    for x in pts:
        delta = radius - float(np.linalg.norm(x))
        if delta <= 0:
            raise ValueError("points must lie inside the ball")
        ests.append(dynkin_estimate(model, sD, x, t_factor * delta, config))
    mean = np.array([e.mean for e in ests])
    tol = np.array([e.tolerance() for e in ests])
    ok = bool(np.all(np.abs(mean + 1.0) <= tol))
    return BoundCheck("dynkin-exit-time", np.linalg.norm(pts, axis=1), "|x|", ests, -1.0 - tol, -1.0 + tol,
                      {"min": float(mean.min()), "max": float(mean.max())}, {}, PASS if ok else FAIL, [],
                      {"observed": mean, "tolerance": tol})


# ---------------------------------------------------------------------------
# Free-space bounds


def check_position_tail(model: LevyModel, radii: Sequence[float], n: int = 200_000, *, seed: int = 0,
                 t_factor: float = 0.25, renewal: RenewalTable | None = None) -> BoundCheck:
    """P(|X_t| >= r) <= C t / V^2(r): the empirical C should be finite and stable in r."""
    radii = np.asarray(radii, float)
    table = _renewal(model, renewal, float(radii.min()) / 10.0, float(radii.max()) * 10.0)
    probs, ses, ts = [], [], []
    for r in radii:
        t = t_factor * float(table.V(r)) ** 2
        z = sample_increment(model, t, n, epsilon=0.01 * r, seed=seed)
        hit = np.linalg.norm(z, axis=1) >= r
        p = float(hit.mean())
        probs.append(p)
        ses.append(math.sqrt(max(p * (1 - p), 1.0 / n) / n))
        ts.append(t)
    probs, ses, ts = map(np.asarray, (probs, ses, ts))
    shape = ts / table.V(radii) ** 2
    comp = comparability(radii, np.maximum(probs, 1e-300), ses, shape)
    return BoundCheck("position-tail", radii, "r", [], None, shape,
                      {k: comp[k] for k in ("min", "max", "median", "max_over_min")} | {"trend": comp["trend"]},
                      {"C_tail": comp["max"]}, PASS if comp["ok"] else FAIL, [],
                      {"observed": probs, "stderr": ses, "t": ts})


def check_exit_time_lower(model: LevyModel, radii: Sequence[float], config: SimConfig, *,
               c_grid: Sequence[float] = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0),
               renewal: RenewalTable | None = None) -> BoundCheck:
    """Largest tested c with P^0(tau_{B_r} > c V^2(r)) >= 1/2 for every tested r."""
    d = model.dimension
    radii = np.asarray(radii, float)
    c_grid = np.sort(np.asarray(c_grid, float))
    table = _renewal(model, renewal, float(radii.min()) * config.delta_abs_rel / 10.0, float(radii.max()) * 10.0)
    best = []
    surv = []
    for r in radii:
        ts = c_grid * float(table.V(r)) ** 2
        ests = survival_curve(model, Ball(np.zeros(d), r), np.zeros(d), ts, config, renewal=table)
        lower = np.array([e.mean - e.tolerance() for e in ests])
        surv.append([e.mean for e in ests])
        ok = lower >= 0.5
        best.append(float(c_grid[ok].max()) if np.any(ok) else 0.0)
    c = float(min(best))
    hard = [HardAssertion("exists c > 0 with P(tau > c V^2(r)) >= 1/2", c, 0.0, c > 0.0)]
    return BoundCheck("exit-time-lower", radii, "r", [], None, None, {}, {"c_exit": c}, _verdict(True, False, hard), hard,
                      {"best_c": np.array(best)}, [f"survival at c grid: {np.round(s, 4).tolist()}" for s in surv])
