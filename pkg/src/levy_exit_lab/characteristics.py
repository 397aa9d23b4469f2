"""Pruitt's function, its companions, and empirical scaling indices.

For r > 0,

    K(r) = w_d r^{-2} int_0^r s^{d+1} nu(s) ds,
    L(r) = w_d int_r^inf s^{d-1} nu(s) ds,
    h(r) = sigma^2 d / r^2 + K(r) + L(r),

with w_d the area of the unit sphere.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import special

from ._numerics import checked_quad, log_integral, log_integral_down, sphere_area
from .io import atomic_write_text, dumps_json, write_csv
from .model import LevyModel, _segments

__all__ = [
    "PruittValue",
    "ScriptValue",
    "ScalingParams",
    "ScalingResult",
    "CharacteristicProfile",
    "pruitt_h",
    "h1",
    "nu_annulus",
    "script_I",
    "script_J",
    "scaling_indices",
    "build_profile",
    "PruittTable",
    "pruitt_table",
]

_EPSREL = 1e-10


class PruittValue(NamedTuple):
    h: float
    K: float
    L: float


def _G(model: LevyModel, r: float) -> float:
    """w_d int_0^r s^{d+1} nu(s) ds."""
    if not model.has_jumps:
        return 0.0
    d, nu = model.dimension, model.nu
    f = lambda s: nu.scalar(s) * s ** (d + 1)
    total = 0.0
    for lo, hi in _segments(0.0, min(r, nu.support), nu.breaks):
        if lo == 0.0:
            total += log_integral_down(f, hi, epsabs=0.0, epsrel=_EPSREL, what="K")[0]
        else:
            total += checked_quad(f, lo, hi, epsabs=0.0, epsrel=_EPSREL, what="K")[0]
    return sphere_area(d) * total


def nu_annulus(model: LevyModel, rho: float, r: float = math.inf) -> float:
    """Levy measure of the annulus {rho <= |z| < r}; L(rho) when r is infinite."""
    if not model.has_jumps or rho >= min(r, model.nu.support):
        return 0.0
    d, nu = model.dimension, model.nu
    f = lambda s: nu.scalar(s) * s ** (d - 1)
    total = 0.0
    for lo, hi in _segments(rho, min(r, nu.support), nu.breaks):
        total += log_integral(f, lo, hi, epsabs=0.0, epsrel=_EPSREL, what="L")[0]
    return sphere_area(d) * total


def pruitt_h(model: LevyModel, r: float) -> PruittValue:
    """Pruitt's function h(r) together with K(r) and L(r)."""
    if not r > 0:
        raise ValueError("pruitt_h requires r > 0")
    K = _G(model, r) / (r * r)
    L = nu_annulus(model, r)
    h = model.sigma ** 2 * model.dimension / (r * r) + K + L
    return PruittValue(h, K, L)


def _coordinate_weight(s: float, d: int) -> float:
    """E[min(s^2 T, 1)] for T the squared first coordinate of a uniform unit vector."""
    if s <= 1.0:
        return s * s / d
    c = 1.0 / (s * s)
    b = (d - 1) / 2.0
    return s * s / d * special.betainc(1.5, b, c) + 1.0 - special.betainc(0.5, b, c)


def h1(model: LevyModel, r: float) -> float:
    """Pruitt's function of the first coordinate process.

    The angular part of the d-dimensional integral is done in closed form: the
    squared first coordinate of a uniform direction is Beta(1/2, (d-1)/2).
    """
    if not r > 0:
        raise ValueError("h1 requires r > 0")
    d = model.dimension
    if d == 1:
        return pruitt_h(model, r).h
    gauss = model.sigma ** 2 / (r * r)
    if not model.has_jumps:
        return gauss
    nu = model.nu
    inner = _G(model, r) / (r * r * d)
    f = lambda s: nu.scalar(s) * s ** (d - 1) * _coordinate_weight(s / r, d)
    outer = 0.0
    for lo, hi in _segments(r, nu.support, nu.breaks):
        outer += log_integral(f, lo, hi, epsabs=0.0, epsrel=_EPSREL, what="h1")[0]
    return gauss + inner + sphere_area(d) * outer


# ---------------------------------------------------------------------------
# Infima I(r), J(r)


@dataclass(frozen=True)
class ScriptValue:
    value: float
    rho_min: float
    degenerate: bool


def _as_callable_v(V) -> Callable:
    return V if callable(V) else V.V


def _degenerate(values: np.ndarray) -> bool:
    top = float(np.max(values)) if values.size else 0.0
    return top <= 0.0 or float(np.min(values)) <= 1e-12 * top


def script_J(model: LevyModel, r: float, V, *, rho_min_factor: float = 1e-6, n: int = 64) -> ScriptValue:
    """inf over rho in (rho_min, r] of L(rho) V(rho)^2 on a log grid."""
    V = _as_callable_v(V)
    rho = np.logspace(math.log10(rho_min_factor * r), math.log10(r), n)
    vals = np.array([nu_annulus(model, float(p)) for p in rho]) * np.asarray(V(rho)) ** 2
    return ScriptValue(float(np.min(vals)), float(rho[0]), _degenerate(vals))


def script_I(model: LevyModel, r: float, V, *, rho_min_factor: float = 1e-6, n: int = 64) -> ScriptValue:
    """inf over rho in (rho_min, r/2] of nu(B_r minus B_rho) V(rho)^2 on a log grid."""
    V = _as_callable_v(V)
    rho = np.logspace(math.log10(rho_min_factor * r), math.log10(r / 2.0), n)
    vals = np.array([nu_annulus(model, float(p), r) for p in rho]) * np.asarray(V(rho)) ** 2
    return ScriptValue(float(np.min(vals)), float(rho[0]), _degenerate(vals))


# ---------------------------------------------------------------------------
# Scaling


@dataclass(frozen=True)
class ScalingParams:
    alpha: float
    theta: float
    constant: float


@dataclass(frozen=True)
class ScalingResult:
    """Empirical weak scaling parameters over the tested range of u."""

    wlsc: ScalingParams | None
    wusc: ScalingParams | None
    lsq_slope: float
    u: np.ndarray = field(repr=False)
    local_slopes: np.ndarray = field(repr=False)
    notes: tuple[str, ...] = ()
    label: str = "empirical over tested range"

    def to_dict(self) -> dict:
        return {
            "wlsc": None if self.wlsc is None else asdict(self.wlsc),
            "wusc": None if self.wusc is None else asdict(self.wusc),
            "lsq_slope": self.lsq_slope,
            "notes": list(self.notes),
            "label": self.label,
            "u": self.u.tolist(),
            "local_slopes": self.local_slopes.tolist(),
        }


_INDEX_EDGE = 5e-3


def _pairwise(u, p, min_ratio):
    lu, lp = np.log(u), np.log(p)
    i, j = np.triu_indices(len(u), k=0)
    lam = lu[j] - lu[i]
    far = lam >= math.log(min_ratio)
    slopes = (lp[j] - lp[i])[far] / lam[far]
    return i, j, lam, lp, slopes


def scaling_indices(model: LevyModel, u_range: Sequence[float], *, theta: float | None = None,
                    steps_per_octave: int = 4, targets: dict | None = None) -> ScalingResult:
    """Estimate weak lower and upper scaling parameters of psi.

    Stage one fits the least-squares slope of log psi* against log u. Stage two
    takes the extreme secant slopes over pairs at least a decade apart (clamped
    by the fit) and the best constants c and C for those indices over all pairs.
    With ``theta`` the analysis is restricted to u >= theta.
    """
    lo, hi = float(u_range[0]), float(u_range[1])
    if not (lo > 0 and hi / lo >= 1e4 * (1 - 1e-12)):
        raise ValueError("u_range must span at least four decades")
    if theta is not None:
        lo = max(lo, float(theta))
        if hi / lo < 10.0:
            raise ValueError("theta leaves less than one decade of the range")
    n = int(math.floor(steps_per_octave * math.log2(hi / lo))) + 1
    u = lo * 2.0 ** (np.arange(n) / steps_per_octave)
    p = np.asarray(model.psi_fast(u), float)
    pstar = np.maximum.accumulate(np.asarray(model.psi_star(u), float))
    lsq = float(np.polyfit(np.log(u), np.log(pstar), 1)[0])
    i, j, lam, lp, slopes = _pairwise(u, p, 10.0)
    notes = []
    theta_out = 0.0 if theta is None else float(theta)

    a_low = min(float(np.min(slopes)), lsq)
    wlsc = None
    if a_low <= _INDEX_EDGE:
        notes.append("no lower scaling: index estimate near 0")
    else:
        c = float(np.min(np.exp(lp[j] - lp[i] - a_low * lam)))
        wlsc = ScalingParams(a_low, theta_out, min(c, 1.0))

    a_up = max(float(np.max(slopes)), lsq)
    wusc = None
    if a_up >= 2.0 - _INDEX_EDGE:
        notes.append("no upper scaling: index reaches 2 (boundary case)")
    else:
        C = float(np.max(np.exp(lp[j] - lp[i] - a_up * lam)))
        wusc = ScalingParams(a_up, theta_out, max(C, 1.0))

    local = np.gradient(np.log(p), np.log(u))
    result = ScalingResult(wlsc, wusc, lsq, u, local, tuple(notes))
    if targets:
        verdicts = check_scaling(model, u, targets)
        object.__setattr__(result, "notes", result.notes + tuple(f"{k}: {v}" for k, v in verdicts.items()))
    return result


def check_scaling(model: LevyModel, u: np.ndarray, targets: dict) -> dict:
    """Verify user-supplied (alpha, theta, constant) tuples on the sampled pairs."""
    p = np.asarray(model.psi_fast(u), float)
    out = {}
    for kind, (alpha, theta, const) in targets.items():
        keep = u >= theta
        uu, pp = u[keep], p[keep]
        i, j = np.triu_indices(len(uu), k=0)
        ratio = pp[j] / pp[i] / (uu[j] / uu[i]) ** alpha
        if kind == "wlsc":
            ok = bool(np.all(ratio >= const * (1 - 1e-9)))
        elif kind == "wusc":
            ok = bool(np.all(ratio <= const * (1 + 1e-9)))
        else:
            raise ValueError(f"unknown scaling kind {kind!r}")
        out[kind] = "pass" if ok else "fail"
    return out


# ---------------------------------------------------------------------------
# Tables for simulation step control


@dataclass(frozen=True)
class PruittTable:
    """G, L and h on a uniform log grid, with power-law extrapolation beyond.

    G(s) = w_d int_0^s rho^{d+1} nu, so K(s) = G(s)/s^2.
    """

    log_s0: float
    dlog: float
    s: np.ndarray
    G: np.ndarray
    L: np.ndarray
    h: np.ndarray
    support: float


def pruitt_table(model: LevyModel, lo: float, hi: float, per_decade: int = 40) -> PruittTable:
    n = int(math.ceil(per_decade * math.log10(hi / lo))) + 1
    dlog = math.log(10.0) / per_decade
    s = lo * np.exp(dlog * np.arange(n))
    d, nu = model.dimension, model.nu
    G = np.zeros(n)
    L = np.zeros(n)
    if model.has_jumps:
        G[0] = _G(model, float(s[0]))
        fG = lambda x: nu.scalar(x) * x ** (d + 1)
        fL = lambda x: nu.scalar(x) * x ** (d - 1)
        w = sphere_area(d)
        for k in range(1, n):
            a, b = float(s[k - 1]), min(float(s[k]), nu.support)
            inc = 0.0
            for p, q in _segments(a, b, nu.breaks):
                inc += checked_quad(fG, p, q, epsabs=max(1e-14 * G[k - 1] / w, 1e-290),
                                    epsrel=1e-10, what="G table")[0]
            G[k] = G[k - 1] + w * inc
        L[-1] = nu_annulus(model, float(s[-1]))
        for k in range(n - 2, -1, -1):
            a, b = float(s[k]), min(float(s[k + 1]), nu.support)
            inc = 0.0
            for p, q in _segments(a, b, nu.breaks):
                inc += checked_quad(fL, p, q, epsabs=1e-290, epsrel=1e-10, what="L table")[0]
            L[k] = L[k + 1] + w * inc
    h = model.sigma ** 2 * d / s ** 2 + G / s ** 2 + L
    return PruittTable(math.log(lo), dlog, s, G, L, h, nu.support if model.has_jumps else 0.0)


# ---------------------------------------------------------------------------
# Profile


@dataclass
class CharacteristicProfile:
    grid: np.ndarray
    K: np.ndarray
    L: np.ndarray
    h: np.ndarray
    h1: np.ndarray
    script_I: np.ndarray | None = None
    script_J: np.ndarray | None = None
    degenerate_J: np.ndarray | None = None
    rho_min_factor: float = 1e-6
    scaling: ScalingResult | None = None
    hV2: np.ndarray | None = None
    model_spec: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    @property
    def wlsc(self):
        return None if self.scaling is None else self.scaling.wlsc

    @property
    def wusc(self):
        return None if self.scaling is None else self.scaling.wusc

    def columns(self) -> dict:
        nan = np.full_like(self.grid, np.nan)
        cols = {"r": self.grid, "K": self.K, "L": self.L, "h": self.h, "h1": self.h1,
                "I": nan if self.script_I is None else self.script_I,
                "J": nan if self.script_J is None else self.script_J}
        if self.hV2 is not None:
            cols["hV2"] = self.hV2
        return cols

    def to_csv(self, path) -> None:
        write_csv(path, self.columns())

    def to_dict(self) -> dict:
        cols = {k: np.asarray(v).tolist() for k, v in self.columns().items()}
        return {
            "kind": "characteristic-profile",
            "model": self.model_spec,
            "tolerances": self.tolerances,
            "rho_min_factor": self.rho_min_factor,
            "columns": cols,
            "degenerate_J": None if self.degenerate_J is None else np.asarray(self.degenerate_J).tolist(),
            "scaling": None if self.scaling is None else self.scaling.to_dict(),
        }

    def to_json(self, path) -> None:
        atomic_write_text(path, dumps_json(self.to_dict()))

    @classmethod
    def from_dict(cls, data: dict) -> "CharacteristicProfile":
        cols = {k: np.asarray([np.nan if v is None else v for v in vals], float)
                for k, vals in data["columns"].items()}
        scaling = None
        if data.get("scaling"):
            sc = data["scaling"]
            scaling = ScalingResult(
                None if sc["wlsc"] is None else ScalingParams(**sc["wlsc"]),
                None if sc["wusc"] is None else ScalingParams(**sc["wusc"]),
                sc["lsq_slope"], np.asarray(sc["u"]), np.asarray(sc["local_slopes"]),
                tuple(sc["notes"]), sc["label"])
        I, J = cols["I"], cols["J"]
        deg = data.get("degenerate_J")
        return cls(cols["r"], cols["K"], cols["L"], cols["h"], cols["h1"],
                   None if np.all(np.isnan(I)) else I, None if np.all(np.isnan(J)) else J,
                   None if deg is None else np.asarray(deg, bool), data.get("rho_min_factor", 1e-6),
                   scaling, cols.get("hV2"), data.get("model", {}), data.get("tolerances", {}))

    @classmethod
    def from_json(cls, path) -> "CharacteristicProfile":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def build_profile(model: LevyModel, grid: Sequence[float], *, table=None, u_range=None,
                  rho_min_factor: float = 1e-6, theta: float | None = None) -> CharacteristicProfile:
    """Tabulate K, L, h, h1 on ``grid`` (and I, J, h V^2 when a renewal table is given)."""
    grid = np.asarray(grid, float)
    vals = [pruitt_h(model, float(r)) for r in grid]
    K = np.array([v.K for v in vals])
    L = np.array([v.L for v in vals])
    h = np.array([v.h for v in vals])
    H1 = np.array([h1(model, float(r)) for r in grid])
    I = J = deg = hV2 = None
    if table is not None:
        Js = [script_J(model, float(r), table, rho_min_factor=rho_min_factor) for r in grid]
        Is = [script_I(model, float(r), table, rho_min_factor=rho_min_factor) for r in grid]
        J = np.array([v.value for v in Js])
        I = np.array([v.value for v in Is])
        deg = np.array([v.degenerate for v in Js])
        hV2 = h * np.asarray(table.V(grid)) ** 2
    scaling = None
    if u_range is not None:
        scaling = scaling_indices(model, u_range, theta=theta)
    return CharacteristicProfile(grid, K, L, h, H1, I, J, deg, rho_min_factor, scaling, hV2,
                                 model.spec(), {"epsrel": _EPSREL, "atol": model.atol, "rtol": model.rtol})
