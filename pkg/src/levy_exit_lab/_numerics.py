"""Small numerical helpers shared across modules."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline


class QuadratureError(ArithmeticError):
    """Raised when an adaptive quadrature fails to reach its tolerance."""

    def __init__(self, message: str, estimate: float = math.nan, error: float = math.nan):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def checked_quad(func, a, b, *, epsabs=1e-12, epsrel=1e-10, limit=400, what="integral", **kw):
    """scipy quad that raises instead of returning a silently inaccurate value.

    The achieved error estimate is accepted when it is within a factor 50 of
    the requested tolerance; scipy is often pessimistic near endpoint singularities.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(func, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit,
                             full_output=1, **kw)
    val, err = out[0], out[1]
    ier = 1 if len(out) == 4 else 0  # a fourth element carries the warning text
    if not np.isfinite(val):
        raise QuadratureError(f"{what}: non-finite result", val, err)
    if ier != 0 and err > 50.0 * max(epsabs, epsrel * abs(val)):
        raise QuadratureError(f"{what}: tolerance not reached", val, err)
    return val, err


def log_integral(func, lo, hi=math.inf, **kw):
    """Integrate a positive-ish function over [lo, hi] using r = lo * e^s.

    Designed for power-law integrands spanning many decades.
    """
    if hi <= lo:
        return 0.0, 0.0
    smax = math.inf if not math.isfinite(hi) else math.log(hi / lo)

    def g(s):
        if s > 700.0:
            return 0.0
        r = lo * math.exp(s)
        try:
            with np.errstate(all="ignore"):
                v = func(r) * r
        except (OverflowError, ZeroDivisionError):
            return 0.0
        return v if math.isfinite(v) else 0.0

    return checked_quad(g, 0.0, smax, **kw)


def log_integral_down(func, hi, **kw):
    """Integrate over (0, hi] using r = hi * e^{-s}."""

    def g(s):
        r = hi * math.exp(-s)
        try:
            with np.errstate(all="ignore"):
                v = func(r) * r
        except (OverflowError, ZeroDivisionError):
            return 0.0
        # past the float range the integrand of an integrable density has vanished
        return v if math.isfinite(v) else 0.0

    return checked_quad(g, 0.0, math.inf, **kw)


@dataclass(frozen=True)
class LogLogTable:
    """Cubic spline of log y against log x with power-law extrapolation.

    Values must be strictly positive on the nodes.
    """

    logx: np.ndarray
    logy: np.ndarray

    @classmethod
    def from_values(cls, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if np.any(y <= 0) or np.any(~np.isfinite(y)):
            raise ValueError("log-log table needs positive finite values")
        return cls(np.log(x), np.log(y))

    def __post_init__(self):
        spline = CubicSpline(self.logx, self.logy, bc_type="natural")
        object.__setattr__(self, "_spline", spline)
        lo = (self.logy[1] - self.logy[0]) / (self.logx[1] - self.logx[0])
        hi = (self.logy[-1] - self.logy[-2]) / (self.logx[-1] - self.logx[-2])
        object.__setattr__(self, "_slopes", (lo, hi))

    def log_eval(self, lx):
        lx = np.asarray(lx, float)
        out = self._spline(np.clip(lx, self.logx[0], self.logx[-1]))
        lo, hi = self._slopes
        out = np.where(lx < self.logx[0], self.logy[0] + lo * (lx - self.logx[0]), out)
        out = np.where(lx > self.logx[-1], self.logy[-1] + hi * (lx - self.logx[-1]), out)
        return out

    def __call__(self, x):
        x = np.asarray(x, float)
        with np.errstate(divide="ignore"):
            return np.exp(self.log_eval(np.log(x)))

    def log_slope(self, x):
        """d log y / d log x, constant outside the node range."""
        lx = np.log(np.asarray(x, float))
        lo, hi = self._slopes
        inner = self._spline(np.clip(lx, self.logx[0], self.logx[-1]), 1)
        return np.where(lx < self.logx[0], lo, np.where(lx > self.logx[-1], hi, inner))


def log_grid(lo: float, hi: float, per_decade: int) -> np.ndarray:
    """Logarithmic grid including both endpoints."""
    n = max(2, int(round(per_decade * math.log10(hi / lo))) + 1)
    return np.logspace(math.log10(lo), math.log10(hi), n)
