"""Isotropic unimodal Levy models and their characteristic exponents.

A model is described by its dimension ``d``, Gaussian coefficient ``sigma``
and a radial Levy density ``nu``; the characteristic exponent is

    psi(u) = sigma^2 u^2 + integral (1 - cos<xi, x>) nu(|x|) dx,   |xi| = u.

Families with a closed-form exponent carry it in ``psi_closed``; the others
are evaluated from ``nu`` through the radial reduction implemented here.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy import integrate, special

from ._numerics import (
    LogLogTable,
    QuadratureError,
    checked_quad,
    log_grid,
    log_integral,
    log_integral_down,
    sphere_area,
)

__all__ = [
    "ModelError",
    "RadialDensity",
    "LevyModel",
    "FAMILIES",
    "make_model",
    "psi",
    "psi_star",
    "stable_constant",
    "radial_kernel",
]

DEFAULT_ATOL = 1e-9
DEFAULT_RTOL = 1e-7


class ModelError(ValueError):
    """Invalid model parameters or a model violating the standing assumptions."""


def stable_constant(d: int, alpha: float) -> float:
    """Constant A with nu(r) = A r^{-d-alpha} for psi(u) = u^alpha."""
    return (alpha * 2.0 ** (alpha - 1.0) * math.gamma((d + alpha) / 2.0)
            / (math.pi ** (d / 2.0) * math.gamma(1.0 - alpha / 2.0)))


# ---------------------------------------------------------------------------
# Radial kernel: spherical average of cos<xi, x> as a function of x = |xi||x|.

_SERIES_MAX = 1.0


def _one_minus_kernel_series(x: float, d: int) -> float:
    a = d / 2.0
    t = 0.25 * x * x
    term = t / a
    total = 0.0
    k = 1
    while True:
        total += term if k % 2 else -term
        if term < 1e-18 * abs(total) or k > 40:
            return total
        term *= t / ((k + 1) * (k + a))
        k += 1


def radial_kernel(x, d: int):
    """Lambda_d(x) = Gamma(d/2) (2/x)^{d/2-1} J_{d/2-1}(x); equals cos(x) for d = 1."""
    x = np.asarray(x, float)
    if d == 1:
        return np.cos(x)
    mu = d / 2.0 - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = math.gamma(d / 2.0) * (2.0 / x) ** mu * special.jv(mu, x)
    return np.where(x == 0.0, 1.0, out)


def _one_minus_kernel(x: float, d: int) -> float:
    if x <= _SERIES_MAX:
        return _one_minus_kernel_series(x, d)
    return 1.0 - float(radial_kernel(x, d))


def _hankel_coeffs(mu: float, terms: int = 12) -> list[float]:
    """a_k(mu) of the large-argument expansion of J_mu."""
    out = [1.0]
    four_mu2 = 4.0 * mu * mu
    for k in range(1, terms):
        out.append(out[-1] * (four_mu2 - (2 * k - 1) ** 2) / (k * 8.0))
    return out


def _hankel_switch(d: int) -> float:
    mu = d / 2.0 - 1.0
    return max(30.0, 2.0 * mu * mu + 10.0)


def _kernel_envelopes(d: int):
    """Return (A, B) with Lambda_d(x) ~ A(x) cos x + B(x) sin x for large x."""
    mu = d / 2.0 - 1.0
    coeffs = _hankel_coeffs(mu)
    c = mu * math.pi / 2.0 + math.pi / 4.0
    cc, sc = math.cos(c), math.sin(c)
    pref = math.gamma(d / 2.0) * 2.0 ** mu * math.sqrt(2.0 / math.pi)

    def pq(x):
        p = q = 0.0
        xp = 1.0
        for k, a in enumerate(coeffs):
            if k:
                xp *= x
            term = a / xp
            sign = -1.0 if (k // 2) % 2 else 1.0
            if k % 2 == 0:
                p += sign * term
            else:
                q += sign * term
        return p, q

    def amp_cos(x):
        p, q = pq(x)
        return pref * x ** (-mu - 0.5) * (p * cc + q * sc)

    def amp_sin(x):
        p, q = pq(x)
        return pref * x ** (-mu - 0.5) * (p * sc - q * cc)

    return amp_cos, amp_sin


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialDensity:
    """Radial Levy density r -> nu(r), zero beyond ``support``.

    ``breaks`` lists radii where nu is not smooth; quadratures split there.
    ``integrability`` is the precomputed value of the integral of
    (r^2 ^ 1) nu(r) r^{d-1} dr (without the sphere factor).
    """

    func: Callable[[np.ndarray], np.ndarray]
    support: float = math.inf
    breaks: tuple[float, ...] = ()
    integrability: float = math.nan
    label: str = ""

    def __call__(self, r):
        r = np.asarray(r, float)
        with np.errstate(all="ignore"):
            out = np.asarray(self.func(np.where(r > 0, r, np.nan)), float)
        out = np.where((r <= 0) | (r >= self.support), 0.0, out)
        out = np.where(np.isnan(out) & (r > 0), 0.0, out)
        return out if out.ndim else float(out)

    def scalar(self, r: float) -> float:
        if r <= 0.0 or r >= self.support:
            return 0.0
        return float(self.func(r))


def _zero_density(r):
    return np.zeros_like(np.asarray(r, float))


ZERO_DENSITY = RadialDensity(_zero_density, support=0.0, integrability=0.0, label="zero")


@dataclass(frozen=True)
class LevyModel:
    """An isotropic unimodal Levy process, described by its exponent or Levy density.

    Immutable; derived tables are cached lazily and are safe to share.
    """

    dimension: int
    sigma: float
    nu: RadialDensity
    family: str
    params: Mapping[str, Any]
    psi_closed: Callable[[np.ndarray], np.ndarray] | None = None
    stable_parts: tuple[tuple[float, float], ...] = ()
    atol: float = DEFAULT_ATOL
    rtol: float = DEFAULT_RTOL
    _cache: dict = field(default_factory=dict, compare=False, repr=False)
    _lock: Any = field(default_factory=threading.RLock, compare=False, repr=False)

    @property
    def has_jumps(self) -> bool:
        return self.nu is not ZERO_DENSITY

    @property
    def is_exact_sampler(self) -> bool:
        """True when increments can be sampled exactly (Gaussian plus stable parts)."""
        return not self.has_jumps or bool(self.stable_parts)

    def spec(self) -> dict:
        """JSON-friendly description of the model."""
        params = {}
        for k, v in self.params.items():
            if callable(v):
                params[k] = getattr(v, "__name__", "callable")
            elif isinstance(v, (list, tuple)):
                params[k] = [float(t) for t in v]
            else:
                params[k] = v
        return {"family": self.family, "dimension": self.dimension,
                "sigma": self.sigma, "params": params}

    # -- exponent ----------------------------------------------------------
    def psi(self, u):
        return psi(self, u)

    def psi_star(self, u):
        return psi_star(self, u)

    def psi_fast(self, u):
        """Vectorised exponent: closed form, or a cached log-log table of the quadrature."""
        if self.psi_closed is not None:
            u = np.asarray(u, float)
            return np.where(u > 0, self.psi_closed(np.where(u > 0, u, 1.0)), 0.0)
        table = self._cached("psi_table", self._build_psi_table)
        u = np.asarray(u, float)
        with np.errstate(divide="ignore"):
            return np.where(u > 0, table(np.where(u > 0, u, 1.0)), 0.0)

    def _build_psi_table(self):
        grid = log_grid(1e-8, 1e8, 24)
        values = np.array([_psi_quadrature(self, float(u)) for u in grid])
        return LogLogTable.from_values(grid, values)

    def _cached(self, key, builder):
        try:
            return self._cache[key]
        except KeyError:
            pass
        with self._lock:
            if key not in self._cache:
                self._cache[key] = builder()
            return self._cache[key]


# ---------------------------------------------------------------------------
# Exponent evaluation


def _segments(lo: float, hi: float, breaks: Sequence[float]) -> list[tuple[float, float]]:
    pts = [lo] + sorted(b for b in breaks if lo < b < hi) + [hi]
    return [(pts[i], pts[i + 1]) for i in range(len(pts) - 1) if pts[i + 1] > pts[i]]


def _psi_quadrature(model: LevyModel, u: float, atol: float | None = None,
                    rtol: float | None = None) -> float:
    """psi(u) from the radial density via the radial kernel reduction."""
    d = model.dimension
    atol = model.atol if atol is None else atol
    rtol = model.rtol if rtol is None else rtol
    if u == 0.0:
        return 0.0
    gauss = model.sigma ** 2 * u * u
    if not model.has_jumps:
        return gauss
    nu = model.nu
    w = sphere_area(d)
    # integral over x = u r of (1 - Lambda(x)) nu(x/u) x^{d-1}; psi = gauss + w u^{-d} I
    scale = w * u ** (-d)
    ub = u * nu.support
    xbreaks = [u * b for b in nu.breaks]
    x0 = _hankel_switch(d)
    tol_abs = atol / scale

    def f(x):
        return nu.scalar(x / u) * x ** (d - 1)

    def small(x):
        return _one_minus_kernel_series(x, d) * f(x)

    def middle(x):
        return _one_minus_kernel(x, d) * f(x)

    total = 0.0
    errs = 0.0
    opts = dict(epsabs=tol_abs, epsrel=rtol * 0.1)
    # (0, min(1, ub)]
    a_hi = min(_SERIES_MAX, ub)
    segs = _segments(0.0, a_hi, xbreaks)
    for lo, hi in segs:
        if lo == 0.0:
            val, err = log_integral_down(small, hi, what="psi small-argument part", **opts)
        else:
            val, err = checked_quad(small, lo, hi, what="psi small-argument part", **opts)
        total += val
        errs += err
    # (1, x0]
    if ub > _SERIES_MAX:
        for lo, hi in _segments(_SERIES_MAX, min(x0, ub), xbreaks):
            val, err = checked_quad(middle, lo, hi, what="psi oscillatory part", **opts)
            total += val
            errs += err
    # (x0, ub): non-oscillatory mass minus Hankel-form oscillatory part
    if ub > x0:
        rbreaks = list(nu.breaks)
        mass = 0.0
        for lo, hi in _segments(x0 / u, nu.support, rbreaks):
            fr = lambda r: nu.scalar(r) * r ** (d - 1)
            val, err = log_integral(fr, lo, hi, what="psi tail mass", epsabs=tol_abs / u ** d,
                                    epsrel=rtol * 0.1)
            mass += val
            errs += err * u ** d
        total += mass * u ** d
        amp_c, amp_s = _kernel_envelopes(d)
        osc_tol = max(tol_abs, rtol * 0.1 * abs(total))
        for lo, hi in _segments(x0, ub, xbreaks):
            for amp, wname in ((amp_c, "cos"), (amp_s, "sin")):
                g = lambda x, amp=amp: amp(x) * f(x)
                if math.isinf(hi):
                    val, err = checked_quad(g, lo, math.inf, weight=wname, wvar=1.0,
                                            epsabs=osc_tol, epsrel=0.0, limit=400,
                                            what="psi Fourier tail")
                else:
                    val, err = checked_quad(g, lo, hi, weight=wname, wvar=1.0,
                                            epsabs=osc_tol, epsrel=rtol * 0.1, limit=2000,
                                            what="psi Fourier tail")
                total -= val
                errs += err
    result = gauss + scale * total
    if scale * errs > 50 * max(atol, rtol * abs(result)):
        raise QuadratureError("psi quadrature tolerance not reached", result, scale * errs)
    return result


def psi(model: LevyModel, u):
    """Characteristic exponent psi(u), u >= 0 (scalar or array)."""
    u_arr = np.asarray(u, float)
    if np.any(u_arr < 0) or np.any(~np.isfinite(u_arr)):
        raise ValueError("psi requires finite u >= 0")
    if model.psi_closed is not None:
        out = model.psi_fast(u_arr)
    else:
        flat = [_psi_quadrature(model, float(v)) for v in u_arr.ravel()]
        out = np.array(flat, float).reshape(u_arr.shape)
    return float(out) if np.ndim(out) == 0 else out


def psi_quadrature(model: LevyModel, u, atol: float | None = None, rtol: float | None = None):
    """psi evaluated from nu by quadrature even when a closed form exists."""
    u_arr = np.asarray(u, float)
    flat = [_psi_quadrature(model, float(v), atol, rtol) for v in u_arr.ravel()]
    out = np.array(flat, float).reshape(u_arr.shape)
    return float(out) if np.ndim(out) == 0 else out


_STAR_DECADES = 10
_STAR_PER_DECADE = 40


def psi_star(model: LevyModel, u):
    """Maximal exponent psi*(u) = sup of psi over [0, u]."""
    u_arr = np.asarray(u, float)
    if np.any(u_arr < 0):
        raise ValueError("psi_star requires u >= 0")
    rel = np.logspace(-_STAR_DECADES, 0.0, _STAR_DECADES * _STAR_PER_DECADE + 1)
    out = np.empty(u_arr.size)
    for i, v in enumerate(u_arr.ravel()):
        if v == 0.0:
            out[i] = 0.0
            continue
        grid_max = float(np.max(model.psi_fast(v * rel)))
        out[i] = max(grid_max, float(psi(model, v)))
    out = out.reshape(u_arr.shape)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Closed-form exponents, written to avoid cancellation near u = 0


def _relativistic(u, alpha, m):
    if m == 0.0:
        return u ** alpha
    return m ** (alpha / 2.0) * np.expm1(alpha / 2.0 * np.log1p(u * u / m))


def _bernstein_mix_psi(u, a1, a2, a3, a4, m):
    base = np.zeros_like(u)
    if a2 > 0:
        base = base + u ** a2
    if a3 > 0:
        base = base + _relativistic(u, a3, m)
    e1 = 1.0 - a1 / 2.0
    out = base ** e1 if e1 != 0 else np.ones_like(u)
    if a1 > 0:
        logpart = np.log1p(u ** a4) if a4 > 0 else np.full_like(u, math.log(2.0))
        out = out * logpart ** (a1 / 2.0)
    return out


def _bernstein_mix_phi(lam, a1, a2, a3, a4, m):
    """Same function in the subordinator variable lambda = u^2, complex-capable."""
    lam = np.asarray(lam, complex)
    base = np.zeros_like(lam)
    if a2 > 0:
        base = base + lam ** (a2 / 2.0)
    if a3 > 0:
        if m > 0:
            # (lam + m)^(a3/2) - m^(a3/2) without cancellation; log1p(z) = 2 atanh(z / (2 + z))
            # near 0, plain log(1 + z) elsewhere (keeps the +0j side of the cut)
            z = lam / m
            with np.errstate(all="ignore"):
                small = 2.0 * np.arctanh(z / (2.0 + z))
            l1p = np.where(np.abs(z) < 0.5, small, np.log(1.0 + z))
            base = base + m ** (a3 / 2.0) * np.expm1(a3 / 2.0 * l1p)
        else:
            base = base + lam ** (a3 / 2.0)
    e1 = 1.0 - a1 / 2.0
    out = base ** e1 if e1 != 0 else np.ones_like(lam)
    if a1 > 0:
        inner = np.log(1.0 + lam ** (a4 / 2.0)) if a4 > 0 else np.full_like(lam, math.log(2.0))
        out = out * inner ** (a1 / 2.0)
    return out


# ---------------------------------------------------------------------------
# Densities


def _stable_density(d, alpha, weight=1.0):
    a = weight * stable_constant(d, alpha)
    return lambda r: a * r ** (-d - alpha)


def _bessel_mixture_density(d, order, prefactor, power, rate):
    """prefactor * 2 (4 rate / r^2)^{power/2} K_order(r sqrt(rate)), evaluated in logs."""
    sq = math.sqrt(rate)

    def f(r):
        z = r * sq
        with np.errstate(all="ignore"):
            # small-argument form avoids overflow of K for tiny z
            tiny = math.lgamma(order) - math.log(2.0) + order * (math.log(2.0) - np.log(z))
            logk = np.where(z < 1e-8, tiny, np.log(special.kve(order, np.maximum(z, 1e-8))) - z)
            return prefactor * 2.0 * np.exp(power / 2.0 * (math.log(4.0 * rate) - 2.0 * np.log(r)) + logk)

    return f


def cbf_density(phi, d: int, branch_points: Sequence[float] = (), r_range=(1e-8, 1e8),
                per_decade: int = 24) -> Callable:
    """Levy density of the subordinate Brownian motion for a complete Bernstein phi.

    Uses the Stieltjes representation of the subordinator's Levy density: the
    boundary values Im phi(-s + i0) weight Gaussian mixtures. ``phi`` must
    accept complex numpy arrays and be analytic off (-inf, 0]. The result is a
    log-log table with power-law ends.
    """
    order = (d - 2) / 2.0
    pref = 2.0 / math.pi * (4.0 * math.pi) ** (-d / 2.0)

    def im_phi(s):
        return float(np.imag(phi(np.asarray(complex(-s, 0.0)))))

    def value(r):
        def g(v):
            if v == 0.0:
                return 0.0
            k = special.kve(order, v) * math.exp(-v)
            return im_phi(v * v / (r * r)) * (2.0 * v) ** order * 2.0 * v * k

        pts = sorted(r * math.sqrt(b) for b in branch_points if b > 0)
        edges = sorted(set([0.0, 1.0] + pts)) + [math.inf]
        total = 0.0
        tails = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            mid = min(hi, lo + 60.0)  # K decays like e^{-v}; beyond this the segment is a tail
            val, _ = checked_quad(g, lo, mid, epsabs=0.0, epsrel=1e-8, limit=1000,
                                  what="density from Bernstein function")
            total += val
            if hi > mid:
                tails.append((mid, hi))
        tail = 0.0
        for lo, hi in tails:
            tail += checked_quad(g, lo, hi, epsabs=1e-12 * abs(total) + 1e-300, epsrel=1e-8,
                                 what="density from Bernstein function")[0]
        return pref * r ** (-d) * (total + tail)

    grid = log_grid(r_range[0], r_range[1], per_decade)
    vals = []
    for r in grid:
        v = value(float(r))
        if not (v > 1e-290):
            break
        vals.append(v)
    grid = grid[: len(vals)]
    if len(vals) < 4:
        raise ModelError("Bernstein function yields a degenerate Levy density")
    table = LogLogTable.from_values(grid, np.array(vals))
    cutoff = math.inf if len(vals) == len(log_grid(*r_range, per_decade)) else float(grid[-1])

    def density(r):
        r = np.asarray(r, float)
        out = table(r)
        if math.isfinite(cutoff):
            out = np.where(r > cutoff, 0.0, out)
        return out

    density.cutoff = cutoff
    return density


# ---------------------------------------------------------------------------
# Catalogue


def _req(params, key, lo=None, hi=None, lo_open=False, hi_open=False, default=None):
    if key not in params:
        if default is None:
            raise ModelError(f"missing parameter '{key}'")
        return float(default)
    try:
        v = float(params[key])
    except (TypeError, ValueError):
        raise ModelError(f"parameter '{key}' must be a number") from None
    if not math.isfinite(v):
        raise ModelError(f"parameter '{key}' must be finite")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ModelError(f"parameter '{key}'={v} out of range")
    if hi is not None and (v > hi or (hi_open and v == hi)):
        raise ModelError(f"parameter '{key}'={v} out of range")
    return v


def _alpha(params, key="alpha", allow_two=True):
    return _req(params, key, 0.0, 2.0, lo_open=True, hi_open=not allow_two)


def _build_brownian(d, p):
    s = _req(p, "sigma", 0.0, lo_open=True, default=1.0)
    return dict(sigma=s, nu=ZERO_DENSITY, psi_closed=lambda u, s=s: s * s * u * u, params={"sigma": s})


def _build_stable(d, p):
    a = _alpha(p)
    if a == 2.0:
        return dict(sigma=1.0, nu=ZERO_DENSITY, psi_closed=lambda u: u * u, params={"alpha": a})
    return dict(sigma=0.0, nu=RadialDensity(_stable_density(d, a), label="stable"),
                psi_closed=lambda u, a=a: u ** a, stable_parts=((a, 1.0),), params={"alpha": a})


def _build_stable_sum(d, p):
    alphas = p.get("alphas", p.get("alpha"))
    if alphas is None:
        raise ModelError("missing parameter 'alphas'")
    alphas = [float(a) for a in np.atleast_1d(alphas)]
    weights = [float(w) for w in np.atleast_1d(p.get("weights", p.get("weight", [1.0] * len(alphas))))]
    if len(weights) != len(alphas):
        raise ModelError("'weights' must match 'alphas' in length")
    for a in alphas:
        if not 0.0 < a < 2.0:
            raise ModelError(f"stable index {a} out of range (0, 2)")
    for w in weights:
        if not w > 0.0:
            raise ModelError("stable weights must be positive")
    s = _req(p, "sigma", 0.0, default=0.0)
    funcs = [_stable_density(d, a, w) for a, w in zip(alphas, weights)]

    def nu(r):
        return sum(f(r) for f in funcs)

    def closed(u):
        return s * s * u * u + sum(w * u ** a for a, w in zip(alphas, weights))

    return dict(sigma=s, nu=RadialDensity(nu, label="stable-sum"), psi_closed=closed,
                stable_parts=tuple(zip(alphas, weights)),
                params={"alphas": alphas, "weights": weights, "sigma": s})


def _build_stable_brownian(d, p):
    a = _req(p, "alpha", 0.0, 2.0, lo_open=True, hi_open=True)
    w = _req(p, "weight", 0.0, lo_open=True, default=1.0)
    s = _req(p, "sigma", 0.0, lo_open=True, default=1.0)
    out = _build_stable_sum(d, {"alphas": [a], "weights": [w], "sigma": s})
    out["params"] = {"alpha": a, "weight": w, "sigma": s}
    return out


def _build_relativistic(d, p):
    a = _req(p, "alpha", 0.0, 2.0, lo_open=True, hi_open=True)
    m = _req(p, "m", 0.0, default=1.0)
    if m == 0.0:
        out = _build_stable(d, {"alpha": a})
        out["params"] = {"alpha": a, "m": m}
        return out
    pref = (a / 2.0) / math.gamma(1.0 - a / 2.0) * (4.0 * math.pi) ** (-d / 2.0)
    nu = _bessel_mixture_density(d, (d + a) / 2.0, pref, (d + a) / 2.0, m)
    return dict(sigma=0.0, nu=RadialDensity(nu, label="relativistic"),
                psi_closed=lambda u, a=a, m=m: _relativistic(u, a, m), params={"alpha": a, "m": m})


def _build_tempered(d, p):
    a = _req(p, "alpha", 0.0, 2.0, lo_open=True, hi_open=True)
    lam = _req(p, "lam", 0.0, lo_open=True, default=1.0)
    c = stable_constant(d, a)
    return dict(sigma=0.0, nu=RadialDensity(lambda r: c * r ** (-d - a) * np.exp(-lam * r), label="tempered"),
                params={"alpha": a, "lam": lam})


def _build_truncated(d, p):
    a = _req(p, "alpha", 0.0, 2.0, lo_open=True, hi_open=True)
    b = _req(p, "radius", 0.0, lo_open=True, default=1.0)
    c = stable_constant(d, a)
    return dict(sigma=0.0, nu=RadialDensity(lambda r: c * r ** (-d - a), support=b, label="truncated"),
                params={"alpha": a, "radius": b})


def _build_layered(d, p):
    a = _req(p, "alpha", 0.0, 2.0, lo_open=True, hi_open=True)
    a1 = _req(p, "alpha1", 0.0, 2.0, lo_open=True, hi_open=True)
    b = _req(p, "radius", 0.0, lo_open=True, default=1.0)
    c = stable_constant(d, a)
    c1 = c * b ** (a1 - a)

    def nu(r):
        return np.where(r < b, c * r ** (-d - a), c1 * r ** (-d - a1))

    return dict(sigma=0.0, nu=RadialDensity(nu, breaks=(b,), label="layered"),
                params={"alpha": a, "alpha1": a1, "radius": b})


def _build_variance_gamma(d, p):
    pref = (4.0 * math.pi) ** (-d / 2.0)
    nu = _bessel_mixture_density(d, d / 2.0, pref, d / 2.0, 1.0)
    return dict(sigma=0.0, nu=RadialDensity(nu, label="variance-gamma"),
                psi_closed=lambda u: np.log1p(u * u), params={})


def _build_geometric(d, p):
    a = _alpha(p)
    phi = lambda lam, a=a: np.log(1.0 + np.asarray(lam, complex) ** (a / 2.0))
    branch = (1.0,) if a == 2.0 else ()
    return dict(sigma=0.0, nu=RadialDensity(cbf_density(phi, d, branch), label="geometric"),
                psi_closed=lambda u, a=a: np.log1p(u ** a), params={"alpha": a})


def _build_bernstein_mix(d, p):
    a = [_req(p, f"alpha{i}", 0.0, 2.0, default=0.0) for i in (1, 2, 3, 4)]
    m = _req(p, "m", 0.0, default=0.0)
    if not a[0] + a[1] + a[2] > 0:
        raise ModelError("need alpha1 + alpha2 + alpha3 > 0")
    if not a[1] + a[2] + a[3] > 0:
        raise ModelError("need alpha2 + alpha3 + alpha4 > 0")
    phi = lambda lam: _bernstein_mix_phi(lam, *a, m)
    branch = tuple(b for b in (m, 1.0) if b > 0)
    return dict(sigma=0.0, nu=RadialDensity(cbf_density(phi, d, branch), label="bernstein-mix"),
                psi_closed=lambda u: _bernstein_mix_psi(u, *a, m),
                params={"alpha1": a[0], "alpha2": a[1], "alpha3": a[2], "alpha4": a[3], "m": m})


def _build_subordinate(d, p):
    phi = p.get("phi")
    if not callable(phi):
        raise ModelError("subordinate-bm needs a callable Bernstein function 'phi'")
    b = _req(p, "drift", 0.0, default=0.0)
    nu = p.get("nu")
    if nu is None:
        nu = cbf_density(lambda lam: phi(np.asarray(lam, complex)) - b * np.asarray(lam, complex),
                         d, tuple(p.get("branch_points", ())))
    elif not callable(nu):
        raise ModelError("'nu' must be callable")

    def closed(u):
        return np.real(phi(np.asarray(u * u, complex)))

    return dict(sigma=math.sqrt(b), nu=RadialDensity(nu, label="subordinate"), psi_closed=closed,
                params={"phi": phi, "drift": b})


def _build_custom(d, p):
    nu = p.get("nu")
    if not callable(nu):
        raise ModelError("custom family needs a callable radial density 'nu'")
    s = _req(p, "sigma", 0.0, default=0.0)
    support = _req(p, "support", 0.0, lo_open=True, default=math.inf)
    breaks = tuple(float(b) for b in p.get("breaks", ()))
    return dict(sigma=s, nu=RadialDensity(nu, support=support, breaks=breaks, label="custom"),
                params={"nu": nu, "sigma": s, "support": support})


FAMILIES: dict[str, Callable] = {
    "brownian": _build_brownian,
    "isotropic-stable": _build_stable,
    "stable-brownian": _build_stable_brownian,
    "stable-sum": _build_stable_sum,
    "relativistic-stable": _build_relativistic,
    "tempered-stable": _build_tempered,
    "truncated-stable": _build_truncated,
    "layered-stable": _build_layered,
    "geometric-stable": _build_geometric,
    "variance-gamma": _build_variance_gamma,
    "bernstein-mix": _build_bernstein_mix,
    "subordinate-bm": _build_subordinate,
    "custom": _build_custom,
}


def _check_density(d: int, sigma: float, nu: RadialDensity) -> RadialDensity:
    """Verify unimodality, integrability and unbounded exponent; attach the certificate."""
    if nu is ZERO_DENSITY:
        if sigma <= 0:
            raise ModelError("model has neither a Gaussian part nor jumps")
        return nu
    top = min(nu.support, 1e6)
    r = np.logspace(-8, math.log10(top), 801)
    r = r[r < nu.support]
    vals = np.asarray(nu(r), float)
    if np.any(~np.isfinite(vals)) or np.any(vals < 0):
        raise ModelError("Levy density must be finite and nonnegative")
    if np.any(np.diff(vals) > 1e-6 * vals[:-1] + 1e-300):
        raise ModelError("Levy density is not non-increasing (not unimodal)")
    f_small = lambda t: nu.scalar(t) * t ** (d + 1)
    f_large = lambda t: nu.scalar(t) * t ** (d - 1)
    try:
        small = sum(checked_quad(f_small, lo, hi, epsabs=1e-14, epsrel=1e-8)[0]
                    if lo > 0 else log_integral_down(f_small, hi, epsabs=1e-14, epsrel=1e-8)[0]
                    for lo, hi in _segments(0.0, min(1.0, nu.support), nu.breaks))
        large = 0.0
        if nu.support > 1.0:
            for lo, hi in _segments(1.0, nu.support, nu.breaks):
                if math.isinf(hi):
                    large += log_integral(f_large, lo, hi, epsabs=1e-14, epsrel=1e-8)[0]
                else:
                    large += checked_quad(f_large, lo, hi, epsabs=1e-14, epsrel=1e-8)[0]
    except QuadratureError as exc:
        raise ModelError(f"Levy density fails the integrability condition: {exc}") from None
    cert = small + large
    if not math.isfinite(cert):
        raise ModelError("Levy density fails the integrability condition")
    if sigma == 0.0:
        # unbounded exponent needs infinite total mass near the origin
        def mass(eps):
            lo_seg = min(1.0, nu.support)
            return checked_quad(lambda s: nu.scalar(lo_seg * math.exp(-s)) * (lo_seg * math.exp(-s)) ** d,
                                0.0, math.log(lo_seg / eps), epsabs=0.0, epsrel=1e-8, limit=800)[0]

        m1, m2 = mass(1e-6), mass(1e-12)
        if not (m2 > 1.3 * m1 and m2 > 0):
            raise ModelError("bounded characteristic exponent (compound Poisson) is not admitted")
    return RadialDensity(nu.func, nu.support, nu.breaks, cert, nu.label)


def make_model(family: str, params: Mapping[str, Any] | None = None, *, dimension: int | None = None,
               atol: float = DEFAULT_ATOL, rtol: float = DEFAULT_RTOL) -> LevyModel:
    """Build and validate a catalogue model.

    ``dimension`` may be given as keyword or as ``params['dimension']`` (alias ``d``).
    """
    params = dict(params or {})
    if dimension is None:
        dimension = params.pop("dimension", params.pop("d", None))
    else:
        params.pop("dimension", None)
        params.pop("d", None)
    if dimension is None:
        raise ModelError("missing 'dimension'")
    if isinstance(dimension, bool) or int(dimension) != dimension or int(dimension) < 1:
        raise ModelError("dimension must be a positive integer")
    d = int(dimension)
    try:
        builder = FAMILIES[family]
    except KeyError:
        raise ModelError(f"unknown family '{family}'; known: {sorted(FAMILIES)}") from None
    parts = builder(d, params)
    nu = _check_density(d, parts["sigma"], parts["nu"])
    return LevyModel(dimension=d, sigma=float(parts["sigma"]), nu=nu, family=family,
                     params=parts["params"], psi_closed=parts.get("psi_closed"),
                     stable_parts=parts.get("stable_parts", ()), atol=atol, rtol=rtol)
