"""Counter-based random streams for reproducible parallel Monte Carlo.

Each replica owns an independent SplitMix64 stream whose starting state is a
hash of (master seed, replica index). A stream is a one-element uint64
array so that numba kernels can advance it in place.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_REPLICA_SALT = np.uint64(0xD1B54A32D192ED03)
_INV53 = 1.0 / 9007199254740992.0


@nb.njit(cache=True, nogil=True, inline="always")
def mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True, nogil=True, inline="always")
def next_u64(state):
    state[0] += GOLDEN
    return mix64(state[0])


@nb.njit(cache=True, nogil=True, inline="always")
def uniform(state):
    """Uniform on the open interval (0, 1)."""
    return (float(np.int64(next_u64(state) >> np.uint64(11))) + 0.5) * _INV53


def _ziggurat_tables(boxes: int = 128, r: float = 3.442619855899, v: float = 9.91256303526217e-3):
    x = np.empty(boxes + 1)
    f = math.exp(-0.5 * r * r)
    x[0] = v / f
    x[1] = r
    x[boxes] = 0.0
    for i in range(2, boxes):
        x[i] = math.sqrt(-2.0 * math.log(v / x[i - 1] + f))
        f = math.exp(-0.5 * x[i] * x[i])
    return x, x[1:] / x[:-1]


_ZIG_R = 3.442619855899
_ZIG_X, _ZIG_RATIO = _ziggurat_tables()


@nb.njit(cache=True, nogil=True, inline="always")
def normal(state):
    """Standard normal by the 128-box ziggurat; box index and abscissa use disjoint bits."""
    while True:
        bits = next_u64(state)
        i = int(bits & np.uint64(127))
        u = 2.0 * (float(np.int64(bits >> np.uint64(11))) + 0.5) * _INV53 - 1.0
        if abs(u) < _ZIG_RATIO[i]:
            return u * _ZIG_X[i]
        if i == 0:
            # tail beyond the base strip
            while True:
                x = math.log(uniform(state)) / _ZIG_R
                y = math.log(uniform(state))
                if -2.0 * y >= x * x:
                    return x - _ZIG_R if u < 0.0 else _ZIG_R - x
        x = u * _ZIG_X[i]
        f0 = math.exp(-0.5 * (_ZIG_X[i] * _ZIG_X[i] - x * x))
        f1 = math.exp(-0.5 * (_ZIG_X[i + 1] * _ZIG_X[i + 1] - x * x))
        if f1 + uniform(state) * (f0 - f1) < 1.0:
            return x


@nb.njit(cache=True, nogil=True, inline="always")
def exponential(state):
    return -math.log(uniform(state))


@nb.njit(cache=True, nogil=True, inline="always")
def positive_stable(state, a):
    """Positive a-stable variable with Laplace transform exp(-lam^a), 0 < a < 1 (Kanter)."""
    u = math.pi * uniform(state)
    e = exponential(state)
    return (math.sin(a * u) / math.sin(u) ** (1.0 / a)) * (math.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a)


@nb.njit(cache=True, nogil=True, inline="always")
def poisson(state, mu):
    if mu <= 0.0:
        return 0
    if mu < 12.0:
        # inversion
        u = uniform(state)
        k = 0
        p = math.exp(-mu)
        c = p
        while u > c:
            k += 1
            p *= mu / k
            c += p
            if p == 0.0 and c < u:
                break
        return k
    # transformed rejection with squeeze (PTRS)
    slam = math.sqrt(mu)
    loglam = math.log(mu)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        U = uniform(state) - 0.5
        V = uniform(state)
        us = 0.5 - abs(U)
        k = math.floor((2.0 * a / us + b) * U + mu + 0.43)
        if us >= 0.07 and V <= vr:
            return int(k)
        if k < 0 or (us < 0.013 and V > us):
            continue
        if (math.log(V) + math.log(invalpha) - math.log(a / (us * us) + b)
                <= -mu + k * loglam - math.lgamma(k + 1.0)):
            return int(k)


@nb.njit(cache=True, nogil=True, inline="always")
def seed_stream(state, seed, replica):
    """Reset ``state`` to the start of the stream for ``replica`` under master ``seed``."""
    state[0] = mix64(mix64(np.uint64(seed) ^ _REPLICA_SALT) + np.uint64(replica) * GOLDEN)


@nb.njit(cache=True, nogil=True)
def stream_state(seed, replica):
    s = np.empty(1, np.uint64)
    seed_stream(s, seed, replica)
    return s


def splitmix64(seed: int, n: int) -> np.ndarray:
    """Plain SplitMix64 sequence from ``seed`` (reference stream)."""
    state = np.array([seed], dtype=np.uint64)
    return np.array([next_u64(state) for _ in range(n)], dtype=np.uint64)


@nb.njit(cache=True, nogil=True)
def _fill_uniform(seed, replica, out):
    s = stream_state(seed, replica)
    for i in range(out.shape[0]):
        out[i] = uniform(s)


def replica_uniforms(seed: int, replica: int, n: int) -> np.ndarray:
    out = np.empty(n)
    _fill_uniform(np.uint64(seed), np.uint64(replica), out)
    return out
