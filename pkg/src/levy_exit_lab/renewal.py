"""Ladder-height exponent kappa, renewal function V and condition-A constants.

kappa(xi) = exp{ (1/pi) int_0^inf log psi(xi z) / (1 + z^2) dz }, and V is
recovered from its Laplace transform, int_0^inf e^{-xi x} V(x) dx = 1/(xi kappa(xi)).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate

from ._numerics import LogLogTable, QuadratureError
from .io import atomic_write_text, dumps_json, write_csv
from .model import LevyModel, psi_star

__all__ = [
    "kappa",
    "stehfest_weights",
    "renewal_V",
    "RenewalTable",
    "ConditionA",
    "condition_A",
    "condition_A_profile",
]

log = logging.getLogger(__name__)

_S_MAX = 60.0
STEHFEST_ORDER = 14
CHECK_ORDER = 12
INVERSION_TOL = 1e-3


def kappa(model: LevyModel, xi, *, epsabs: float = 1e-12):
    """Laplace exponent of the ascending ladder-height process (normalised local time).

    The integral is folded at z = 1 with z -> 1/z and mapped by z = e^{-s}:
    kappa(xi) = exp{ (1/pi) int_0^inf [log psi(xi e^{-s}) + log psi(xi e^{s})] e^{-s}/(1+e^{-2s}) ds },
    truncated at s = 60 where the weight is below 1e-26.
    """
    xi_arr = np.atleast_1d(np.asarray(xi, float))
    if np.any(~(xi_arr > 0)) or np.any(~np.isfinite(xi_arr)):
        raise ValueError("kappa requires finite xi > 0")

    def g(s):
        lo = model.psi_fast(xi_arr * math.exp(-s))
        hi = model.psi_fast(xi_arr * math.exp(s))
        if np.any(~(lo > 0)) or np.any(~np.isfinite(hi)):
            raise QuadratureError("log psi undefined inside the kappa integral")
        return (np.log(lo) + np.log(hi)) * (math.exp(-s) / (1.0 + math.exp(-2.0 * s)))

    val, err = integrate.quad_vec(g, 0.0, _S_MAX, epsabs=epsabs, epsrel=0.0, norm="max", limit=2000)
    if not err <= 1e3 * epsabs:
        raise QuadratureError("kappa integral lost precision", float(np.max(val)), float(err))
    out = np.exp(val / math.pi)
    return float(out[0]) if np.ndim(xi) == 0 else out


@lru_cache(maxsize=None)
def stehfest_weights(n: int) -> tuple[float, ...]:
    """Gaver-Stehfest weights for even order n, computed exactly."""
    if n % 2 or n < 2:
        raise ValueError("Stehfest order must be even and positive")
    half = n // 2
    fact = math.factorial
    weights = []
    for k in range(1, n + 1):
        s = Fraction(0)
        for j in range((k + 1) // 2, min(k, half) + 1):
            s += Fraction(j ** half * fact(2 * j),
                          fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k))
        weights.append(float((-1) ** (k + half) * s))
    return tuple(weights)


def _invert(x: np.ndarray, F: np.ndarray, order: int) -> np.ndarray:
    """F[i, k-1] holds the transform at k ln2 / x[i]."""
    w = np.asarray(stehfest_weights(order))
    return math.log(2.0) / x * (F[:, :order] @ w)


# ---------------------------------------------------------------------------


@dataclass
class RenewalTable:
    """Tabulated renewal function with its derivative and the kappa samples used."""

    grid: np.ndarray
    V_values: np.ndarray
    Vprime: np.ndarray
    methods: list
    proxy: np.ndarray
    proxy_scale: float
    kappa_xi: np.ndarray
    kappa_values: np.ndarray
    sigma: float
    model_spec: dict = field(default_factory=dict)
    stehfest_order: int = STEHFEST_ORDER

    def __post_init__(self):
        self._vtab = LogLogTable.from_values(self.grid, self.V_values)
        self._dtab = LogLogTable.from_values(self.grid, self.Vprime)

    @property
    def method(self) -> str:
        kinds = set(self.methods)
        if kinds == {"laplace-inversion"}:
            return "laplace-inversion"
        if kinds == {"proxy"}:
            return "proxy"
        return "mixed"

    @property
    def vprime_zero(self) -> float | None:
        """V'(0+) = 1/sigma when the model has a Gaussian part."""
        return 1.0 / self.sigma if self.sigma > 0 else None

    def V(self, x):
        """Renewal function; 0 for x <= 0, log-log interpolation elsewhere."""
        x = np.asarray(x, float)
        out = np.where(x > 0, self._vtab(np.where(x > 0, x, 1.0)), 0.0)
        return float(out) if out.ndim == 0 else out

    def dV(self, x):
        """V' interpolated from the finite-difference table."""
        x = np.asarray(x, float)
        if np.any(x <= 0):
            raise ValueError("V' is tabulated for x > 0 only")
        out = self._dtab(x)
        return float(out) if out.ndim == 0 else out

    def columns(self) -> dict:
        return {"x": self.grid, "V": self.V_values, "Vprime": self.Vprime,
                "method": list(self.methods), "proxy": self.proxy * self.proxy_scale}

    def to_csv(self, path) -> None:
        write_csv(path, self.columns())

    def to_dict(self) -> dict:
        return {
            "kind": "renewal-table",
            "model": self.model_spec,
            "method": self.method,
            "sigma": self.sigma,
            "stehfest_order": self.stehfest_order,
            "proxy_scale": self.proxy_scale,
            "x": self.grid, "V": self.V_values, "Vprime": self.Vprime,
            "methods": list(self.methods), "proxy": self.proxy,
            "kappa": {"xi": self.kappa_xi, "value": self.kappa_values},
        }

    def to_json(self, path) -> None:
        atomic_write_text(path, dumps_json(self.to_dict()))

    @classmethod
    def from_dict(cls, data: dict) -> "RenewalTable":
        arr = lambda k: np.asarray(data[k], float)
        return cls(arr("x"), arr("V"), arr("Vprime"), list(data["methods"]), arr("proxy"),
                   float(data["proxy_scale"]), np.asarray(data["kappa"]["xi"], float),
                   np.asarray(data["kappa"]["value"], float), float(data["sigma"]),
                   data.get("model", {}), int(data.get("stehfest_order", STEHFEST_ORDER)))

    @classmethod
    def from_json(cls, path) -> "RenewalTable":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _log_derivative(x: np.ndarray, V: np.ndarray) -> np.ndarray:
    """V' from central differences of log V on the log grid, one-sided at the ends."""
    lx, lv = np.log(x), np.log(V)
    slope = np.empty_like(lx)
    slope[1:-1] = (lv[2:] - lv[:-2]) / (lx[2:] - lx[:-2])
    slope[0] = (lv[1] - lv[0]) / (lx[1] - lx[0])
    slope[-1] = (lv[-1] - lv[-2]) / (lx[-1] - lx[-2])
    return slope * V / x


def renewal_V(model: LevyModel, grid: Sequence[float], *, order: int = STEHFEST_ORDER,
              check_order: int = CHECK_ORDER, tol: float = INVERSION_TOL) -> RenewalTable:
    """Renewal function on ``grid`` by Gaver-Stehfest inversion of 1/(xi kappa(xi)).

    Points where orders ``order`` and ``check_order`` disagree by more than
    ``tol`` (relative) fall back to the proxy 1/sqrt(psi*(1/x)), rescaled to the
    inverted values; the table records the route per point.
    """
    x = np.asarray(grid, float)
    if x.ndim != 1 or x.size < 3 or np.any(x <= 0) or np.any(np.diff(x) <= 0):
        raise ValueError("grid must be positive, strictly increasing, with at least 3 points")
    ks = np.arange(1, order + 1)
    p = (math.log(2.0) / x)[:, None] * ks[None, :]
    kap = kappa(model, p.ravel()).reshape(p.shape)
    F = 1.0 / (p * kap)
    v_main = _invert(x, F, order)
    v_check = _invert(x, F, check_order)
    ok = (v_main > 0) & (np.abs(v_main - v_check) <= tol * np.abs(v_main))
    proxy = 1.0 / np.sqrt(np.asarray(psi_star(model, 1.0 / x), float))
    scale = float(np.median(v_main[ok] / proxy[ok])) if np.any(ok) else 1.0
    V = np.where(ok, v_main, scale * proxy)
    methods = ["laplace-inversion" if o else "proxy" for o in ok]
    if not np.all(ok):
        log.warning("Laplace inversion unstable at %d of %d points; proxy used there",
                    int(np.sum(~ok)), x.size)
    if np.any(np.diff(V) <= 0):
        bad = ~np.concatenate([[True], np.diff(V) > 0])
        V = np.where(bad, scale * proxy, V)
        for i in np.flatnonzero(bad):
            methods[i] = "proxy"
        if np.any(np.diff(V) <= 0):
            raise ArithmeticError("renewal function table is not increasing")
    Vp = _log_derivative(x, V)
    order_idx = np.argsort(p.ravel())
    return RenewalTable(x, V, Vp, methods, proxy, scale, p.ravel()[order_idx], kap.ravel()[order_idx],
                        model.sigma, model.spec(), order)


# ---------------------------------------------------------------------------
# Condition A


@dataclass(frozen=True)
class ConditionA:
    r: float
    H: float
    concave: bool
    log_concave: bool
    n_triples: int


def _verdicts(table: RenewalTable, hi: float, tol: float) -> tuple[bool, bool]:
    keep = table.grid <= hi * (1 + 1e-12)
    d = table.Vprime[keep]
    logd = d / table.V_values[keep]
    concave = bool(np.all(np.diff(d) <= tol * d[:-1]))
    log_concave = bool(np.all(np.diff(logd) <= tol * logd[:-1]))
    return concave, log_concave


def condition_A(table: RenewalTable, r: float, *, per_decade: int = 48, n_random: int = 10_000,
                seed: int = 0, x_min: float | None = None, tol: float = 1e-4) -> ConditionA:
    """Smallest H with V(z) - V(y) <= H V'(x) (z - y) on sampled 0 < x <= y < z <= 5x <= 5r."""
    if np.any(table.Vprime <= 0):
        raise ArithmeticError("V' must be positive on the whole table")
    x_min = float(table.grid[0]) if x_min is None else float(x_min)
    if not (x_min < r and 5.0 * r <= table.grid[-1] * (1 + 1e-9)):
        raise ValueError("table must cover [x_min, 5r]")
    n = int(math.ceil(per_decade * math.log10(5.0 * r / x_min))) + 1
    g = np.logspace(math.log10(x_min), math.log10(5.0 * r), n)
    Vg = table.V(g)
    dVg = table.dV(g)
    best = -math.inf
    count = 0
    for i in range(n):
        if g[i] > r * (1 + 1e-12):
            break
        top = np.searchsorted(g, 5.0 * g[i] * (1 + 1e-12), side="right")
        j, k = np.triu_indices(top - i, k=1)
        y, z = g[i + j], g[i + k]
        ratio = (Vg[i + k] - Vg[i + j]) / (dVg[i] * (z - y))
        count += ratio.size
        if ratio.size:
            best = max(best, float(np.max(ratio)))
    rng = np.random.default_rng(seed)
    x = np.exp(rng.uniform(math.log(x_min), math.log(r), n_random))
    yz = np.sort(rng.uniform(x[:, None], 5.0 * x[:, None], (n_random, 2)), axis=1)
    keep = yz[:, 1] > yz[:, 0]
    x, y, z = x[keep], yz[keep, 0], yz[keep, 1]
    ratio = (table.V(z) - table.V(y)) / (table.dV(x) * (z - y))
    count += ratio.size
    best = max(best, float(np.max(ratio)))
    concave, log_concave = _verdicts(table, 5.0 * r, tol)
    return ConditionA(float(r), best, concave, log_concave, count)


def condition_A_profile(table: RenewalTable, rs: Sequence[float], **kw) -> list[ConditionA]:
    """condition_A over increasing radii, with H made non-decreasing by a running maximum."""
    out = []
    running = -math.inf
    for r in sorted(float(v) for v in rs):
        c = condition_A(table, r, **kw)
        running = max(running, c.H)
        out.append(ConditionA(c.r, running, c.concave, c.log_concave, c.n_triples))
    return out
