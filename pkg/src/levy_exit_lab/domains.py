"""Domains with exact distance to the complement.

Each domain exposes ``delta`` (vectorised, numpy) and a numba-compiled
``kernel`` pair (function, parameter array) used inside simulation loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba as nb
import numpy as np

__all__ = [
    "Domain",
    "Ball",
    "BallComplement",
    "HalfSpace",
    "HalfLine",
    "Interval",
    "Ellipsoid",
    "Generic",
    "make_domain",
]


@nb.njit(cache=True, nogil=True)
def _ball_delta(params, y):
    d = y.shape[0]
    s = 0.0
    for i in range(d):
        t = y[i] - params[i]
        s += t * t
    v = params[d] - math.sqrt(s)
    return v if v > 0.0 else 0.0


@nb.njit(cache=True, nogil=True)
def _complement_delta(params, y):
    d = y.shape[0]
    s = 0.0
    for i in range(d):
        t = y[i] - params[i]
        s += t * t
    v = math.sqrt(s) - params[d]
    return v if v > 0.0 else 0.0


@nb.njit(cache=True, nogil=True)
def _halfspace_delta(params, y):
    d = y.shape[0]
    s = 0.0
    for i in range(d):
        s += params[i] * y[i]
    v = s - params[d]
    return v if v > 0.0 else 0.0


@nb.njit(cache=True, nogil=True)
def _ellipsoid_delta(params, y):
    d = y.shape[0]
    f0 = 0.0
    for i in range(d):
        t = (y[i] - params[i]) / params[d + i]
        f0 += t * t
    if f0 >= 1.0:
        return 0.0
    amin2 = params[d] * params[d]
    for i in range(1, d):
        a2 = params[d + i] * params[d + i]
        if a2 < amin2:
            amin2 = a2
    # Lagrange multiplier of the nearest boundary point lies in (-amin2, 0]
    lo = -amin2
    hi = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = 0.0
        for i in range(d):
            a2 = params[d + i] * params[d + i]
            p = y[i] - params[i]
            if p != 0.0:
                den = a2 + mid
                f += math.inf if den <= 0.0 else (params[d + i] * p / den) ** 2
        if f > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * amin2:
            break
    t = 0.5 * (lo + hi)
    # nearest point q_i = a_i^2 p_i / (a_i^2 + t); an axis whose factor degenerates
    # (p_i = 0 at the critical multiplier) takes whatever height closes the ellipsoid
    rest = 0.0
    free = -1
    for i in range(d):
        a2 = params[d + i] * params[d + i]
        p = y[i] - params[i]
        if a2 + t <= 1e-12 * a2 and abs(p) <= 1e-12 * params[d + i]:
            free = i
        elif p != 0.0:
            rest += (params[d + i] * p / (a2 + t)) ** 2
    s = 0.0
    for i in range(d):
        a2 = params[d + i] * params[d + i]
        p = y[i] - params[i]
        if i == free:
            q = params[d + i] * math.sqrt(max(0.0, 1.0 - rest))
        elif p == 0.0:
            q = 0.0
        else:
            q = a2 * p / (a2 + t)
        s += (p - q) ** 2
    return math.sqrt(s)


@dataclass(frozen=True)
class Domain:
    """Base class. Subclasses set the geometry; ``kernel`` feeds the simulator."""

    dimension: int

    c11_radius: float = field(init=False, default=math.inf)
    diameter: float = field(init=False, default=math.inf)

    def delta(self, x):
        x = np.asarray(x, float)
        pts = np.atleast_2d(x)
        if pts.shape[-1] != self.dimension:
            raise ValueError(f"expected points in R^{self.dimension}")
        fn, params = self.kernel()
        out = np.array([fn(params, np.ascontiguousarray(p)) for p in pts])
        return float(out[0]) if x.ndim == 1 else out

    def contains(self, x):
        v = self.delta(x)
        return v > 0 if np.ndim(v) else bool(v > 0)

    def kernel(self) -> tuple[Callable, np.ndarray]:
        raise NotImplementedError

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.diameter)

    def scale(self, x=None) -> float:
        """Length scale used for absorption tolerances."""
        if math.isfinite(self.c11_radius):
            return self.c11_radius
        if x is None:
            raise ValueError("unbounded domain needs a start point to define its scale")
        return float(self.delta(np.asarray(x, float)))

    def spec(self) -> dict:
        raise NotImplementedError


def _vec(v, d=None, name="vector"):
    a = np.atleast_1d(np.asarray(v, float))
    if a.ndim != 1 or (d is not None and a.size != d):
        raise ValueError(f"{name} must have length {d}")
    return a


@dataclass(frozen=True)
class Ball(Domain):
    center: tuple = ()
    radius: float = 1.0

    def __init__(self, center: Sequence[float], radius: float):
        c = _vec(center, name="center")
        if not radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "dimension", c.size)
        object.__setattr__(self, "center", tuple(c))
        object.__setattr__(self, "radius", float(radius))
        object.__setattr__(self, "c11_radius", float(radius))
        object.__setattr__(self, "diameter", 2.0 * float(radius))

    def delta(self, x):
        x = np.asarray(x, float)
        v = self.radius - np.linalg.norm(x - np.asarray(self.center), axis=-1)
        v = np.maximum(v, 0.0)
        return float(v) if np.ndim(v) == 0 else v

    def kernel(self):
        return _ball_delta, np.array(list(self.center) + [self.radius])

    def spec(self):
        return {"kind": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class BallComplement(Domain):
    center: tuple = ()
    radius: float = 1.0

    def __init__(self, center: Sequence[float], radius: float):
        c = _vec(center, name="center")
        if not radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "dimension", c.size)
        object.__setattr__(self, "center", tuple(c))
        object.__setattr__(self, "radius", float(radius))
        object.__setattr__(self, "c11_radius", math.inf)
        object.__setattr__(self, "diameter", math.inf)

    def delta(self, x):
        x = np.asarray(x, float)
        v = np.linalg.norm(x - np.asarray(self.center), axis=-1) - self.radius
        v = np.maximum(v, 0.0)
        return float(v) if np.ndim(v) == 0 else v

    def scale(self, x=None):
        return self.radius

    def kernel(self):
        return _complement_delta, np.array(list(self.center) + [self.radius])

    def spec(self):
        return {"kind": "ball-complement", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class HalfSpace(Domain):
    """{x : <n, x> > offset} with n normalised."""

    normal: tuple = ()
    offset: float = 0.0

    def __init__(self, normal: Sequence[float], offset: float = 0.0):
        n = _vec(normal, name="normal")
        norm = float(np.linalg.norm(n))
        if norm == 0:
            raise ValueError("normal must be nonzero")
        object.__setattr__(self, "dimension", n.size)
        object.__setattr__(self, "normal", tuple(n / norm))
        object.__setattr__(self, "offset", float(offset))
        object.__setattr__(self, "c11_radius", math.inf)
        object.__setattr__(self, "diameter", math.inf)

    def delta(self, x):
        x = np.asarray(x, float)
        v = np.maximum(x @ np.asarray(self.normal) - self.offset, 0.0)
        return float(v) if np.ndim(v) == 0 else v

    def kernel(self):
        return _halfspace_delta, np.array(list(self.normal) + [self.offset])

    def spec(self):
        return {"kind": "half-space", "normal": list(self.normal), "offset": self.offset}


def HalfLine(start: float = 0.0) -> HalfSpace:
    """The half-line (start, inf) in dimension one."""
    return HalfSpace([1.0], start)


def Interval(a: float, b: float) -> Ball:
    """The open interval (a, b) as a one-dimensional ball."""
    if not b > a:
        raise ValueError("need a < b")
    return Ball([(a + b) / 2.0], (b - a) / 2.0)


@dataclass(frozen=True)
class Ellipsoid(Domain):
    """Axis-aligned ellipsoid with semi-axes ``axes``."""

    center: tuple = ()
    axes: tuple = ()

    def __init__(self, center: Sequence[float], axes: Sequence[float]):
        c = _vec(center, name="center")
        a = _vec(axes, c.size, name="axes")
        if np.any(a <= 0):
            raise ValueError("semi-axes must be positive")
        object.__setattr__(self, "dimension", c.size)
        object.__setattr__(self, "center", tuple(c))
        object.__setattr__(self, "axes", tuple(a))
        # smallest radius of curvature is amin^2 / amax
        object.__setattr__(self, "c11_radius", float(a.min() ** 2 / a.max()))
        object.__setattr__(self, "diameter", float(2.0 * a.max()))

    def kernel(self):
        return _ellipsoid_delta, np.array(list(self.center) + list(self.axes))

    def spec(self):
        return {"kind": "ellipsoid", "center": list(self.center), "axes": list(self.axes)}


@dataclass(frozen=True)
class Generic(Domain):
    """Domain given by a signed distance function (positive inside).

    ``sdf(params, y)`` must be numba-compilable for simulation; r0 and the
    diameter are declared by the user, not inferred.
    """

    sdf: Callable = None
    params: tuple = ()
    declared_r0: float = math.inf
    declared_diameter: float = math.inf

    def __init__(self, sdf: Callable, dimension: int, r0: float, diameter: float,
                 params: Sequence[float] = ()):
        if not (r0 > 0 and diameter > 0):
            raise ValueError("declared r0 and diameter must be positive")
        fn = sdf if isinstance(sdf, nb.core.dispatcher.Dispatcher) else nb.njit(sdf)
        object.__setattr__(self, "dimension", int(dimension))
        object.__setattr__(self, "sdf", fn)
        object.__setattr__(self, "params", tuple(float(p) for p in params))
        object.__setattr__(self, "declared_r0", float(r0))
        object.__setattr__(self, "declared_diameter", float(diameter))
        object.__setattr__(self, "c11_radius", float(r0))
        object.__setattr__(self, "diameter", float(diameter))

    def delta(self, x):
        x = np.asarray(x, float)
        pts = np.atleast_2d(x)
        p = np.array(self.params, float)
        out = np.array([max(0.0, self.sdf(p, np.ascontiguousarray(q))) for q in pts])
        return float(out[0]) if x.ndim == 1 else out

    def kernel(self):
        fn = self.sdf

        return _clamped(fn), np.array(self.params, float)

    def spec(self):
        return {"kind": "generic", "dimension": self.dimension, "r0": self.declared_r0,
                "diameter": self.declared_diameter,
                "sdf": getattr(self.sdf, "__name__", "sdf")}


_CLAMPED = {}


def _clamped(fn):
    if fn not in _CLAMPED:
        @nb.njit(nogil=True)
        def clamped(params, y):
            v = fn(params, y)
            return v if v > 0.0 else 0.0

        _CLAMPED[fn] = clamped
    return _CLAMPED[fn]


def make_domain(spec: dict) -> Domain:
    """Build a domain from a configuration mapping."""
    kind = spec.get("kind")
    if kind == "ball":
        return Ball(spec["center"], spec["radius"])
    if kind == "ball-complement":
        return BallComplement(spec["center"], spec["radius"])
    if kind == "half-space":
        return HalfSpace(spec["normal"], spec.get("offset", 0.0))
    if kind == "half-line":
        return HalfLine(spec.get("start", 0.0))
    if kind == "interval":
        return Interval(spec["a"], spec["b"])
    if kind == "ellipsoid":
        return Ellipsoid(spec["center"], spec["axes"])
    raise ValueError(f"unknown domain kind {kind!r}")
