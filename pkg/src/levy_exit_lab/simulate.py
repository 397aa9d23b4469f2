"""Monte Carlo for exit times, survival, exit-place tails and hitting.

Paths are simulated as skeletons with a state-dependent step: at distance
delta from the complement the step is at most p_miss / (24 h(delta/2)), which
bounds by p_miss the chance of moving delta/2 between two recorded points.

Every replica has its own counter-based stream, and replicas are processed in
fixed blocks, so results do not depend on the number of worker threads.

A deterministic subset of replicas ("coupled" replicas) is driven by the finer
rule p_miss/4 while the main observer looks at the same path only on its own
coarse nodes. The coarse-minus-fine difference estimates the discretisation
bias of the main estimator with little extra variance.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numba as nb
import numpy as np

from . import rng
from ._numerics import log_grid
from .characteristics import pruitt_table
from .domains import Ball, BallComplement, Domain
from .io import atomic_write_text, csv_text
from .model import LevyModel
from .renewal import RenewalTable, renewal_V

log = logging.getLogger(__name__)

__all__ = [
    "SimConfig",
    "SimulationError",
    "McEstimate",
    "PathSample",
    "sample_increment",
    "simulate_paths",
    "exit_time",
    "survival_prob",
    "survival_curve",
    "exit_place_tail",
    "hit_ball_prob",
    "dynkin_estimate",
]

SURVIVED, EXITED, ABSORBED, BUDGET, OUTSIDE = 0, 1, 2, 3, 4
_TABLE_PER_DECADE = 40
_MIN_TABLE_LO = 1e-12


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings.

    ``epsilon`` caps the small-jump cutoff; the cutoff actually used at a
    state y is min(epsilon, epsilon_rel * delta(y)). ``dt`` caps the step.
    """

    n: int = 10_000
    seed: int = 0
    p_miss: float = 0.02
    epsilon: float = math.inf
    epsilon_rel: float = 0.05
    dt: float = math.inf
    horizon: float = math.inf
    delta_abs_rel: float = 1e-4
    companion_every: int = 8
    threads: int = 1
    block: int = 256
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ValueError("n must be a positive integer")
        if not 0.0 < self.p_miss <= 0.1:
            raise ValueError("p_miss must lie in (0, 0.1]")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < self.epsilon_rel <= 0.5:
            raise ValueError("epsilon_rel must lie in (0, 0.5]")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not 0.0 < self.delta_abs_rel < 0.1:
            raise ValueError("delta_abs_rel must lie in (0, 0.1)")
        if self.companion_every < 0:
            raise ValueError("companion_every must be >= 0 (0 disables the companion run)")
        if self.threads < 1 or self.block < 1:
            raise ValueError("threads and block must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")

    def replace(self, **kw) -> "SimConfig":
        data = asdict(self)
        data.update(kw)
        return SimConfig(**data)

    def to_dict(self) -> dict:
        """Settings that determine the numbers; threads and block only schedule work."""
        data = asdict(self)
        del data["threads"], data["block"]
        return data


@dataclass
class McEstimate:
    tag: str
    mean: float
    stderr: float
    n: int
    seed: int
    bias_band: float = 0.0
    inputs: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def tolerance(self, k: float = 3.0) -> float:
        """k standard errors plus the bias band."""
        return k * self.stderr + self.bias_band

    def to_dict(self) -> dict:
        return {"tag": self.tag, "mean": self.mean, "stderr": self.stderr, "n": self.n,
                "seed": self.seed, "bias_band": self.bias_band, "inputs": self.inputs,
                "details": self.details}

    @classmethod
    def from_dict(cls, data: dict) -> "McEstimate":
        return cls(data["tag"], data["mean"], data["stderr"], data["n"], data["seed"],
                   data.get("bias_band", 0.0), data.get("inputs", {}), data.get("details", {}))


# ---------------------------------------------------------------------------
# Tables consumed by the kernels


@dataclass(frozen=True)
class _Tables:
    kind: int  # 0 exact Gaussian/stable sampler, 1 compound Poisson approximation
    sigma2: float
    stable_alpha: np.ndarray
    stable_weight: np.ndarray
    log_s0: float
    dlog: float
    logh: np.ndarray
    h_nodes: np.ndarray
    h_unit: np.ndarray  # 1 / (24 h) at the nodes
    logG: np.ndarray
    logL: np.ndarray  # positive part only, length n_pos
    support: float
    lo: float


def _tables(model: LevyModel, lo: float, hi: float) -> _Tables:
    lo = 10.0 ** math.floor(math.log10(lo))
    hi = 10.0 ** math.ceil(math.log10(hi))
    if lo < _MIN_TABLE_LO:
        raise SimulationError(f"length scale {lo:g} below the sampler table resolution {_MIN_TABLE_LO:g}")

    def build():
        tab = pruitt_table(model, lo, hi, _TABLE_PER_DECADE)
        exact = model.is_exact_sampler
        alphas = np.array([a for a, _ in model.stable_parts], float)
        weights = np.array([w for _, w in model.stable_parts], float)
        if model.has_jumps and not exact:
            pos = tab.L > 0
            npos = int(np.argmin(pos)) if not np.all(pos) else pos.size
            if npos < 2:
                raise SimulationError("jump tail table has fewer than two positive nodes")
            logG = np.log(np.maximum(tab.G, 1e-300))
            logL = np.log(tab.L[:npos])
        else:
            logG = np.zeros(2)
            logL = np.zeros(2)
        return _Tables(0 if exact else 1, model.sigma ** 2, alphas, weights, tab.log_s0, tab.dlog,
                       np.log(tab.h), tab.s.copy(), 1.0 / (24.0 * tab.h), logG, logL, tab.support if model.has_jumps else math.inf, lo)

    return model._cached(("sim-tables", lo, hi), build)


@nb.njit(cache=True, nogil=True, inline="always")
def _interp(log_s0, dlog, logy, ls):
    n = logy.shape[0]
    k = (ls - log_s0) / dlog
    if k <= 0.0:
        return logy[0] + (logy[1] - logy[0]) * k
    if k >= n - 1:
        return logy[n - 1] + (logy[n - 1] - logy[n - 2]) * (k - (n - 1))
    i = int(k)
    f = k - i
    return logy[i] * (1.0 - f) + logy[i + 1] * f


@nb.njit(cache=True, nogil=True, inline="always")
def _tail_L(log_s0, dlog, logL, support, s):
    """Jump tail L(s); linear to zero between the last positive node and the support."""
    if s >= support:
        return 0.0
    n = logL.shape[0]
    s_last = math.exp(log_s0 + dlog * (n - 1))
    if s > s_last and support < math.inf:
        return math.exp(logL[n - 1]) * (support - s) / (support - s_last)
    return math.exp(_interp(log_s0, dlog, logL, math.log(s)))


@nb.njit(cache=True, nogil=True, inline="always")
def _tail_inverse(log_s0, dlog, logL, support, target):
    """Radius s with L(s) = target, for 0 < target < L(eps)."""
    n = logL.shape[0]
    lt = math.log(target)
    if lt < logL[n - 1]:
        s_last = math.exp(log_s0 + dlog * (n - 1))
        if support < math.inf:
            return s_last + (support - s_last) * (1.0 - target / math.exp(logL[n - 1]))
        slope = (logL[n - 1] - logL[n - 2]) / dlog
        return s_last * math.exp((lt - logL[n - 1]) / slope)
    if lt > logL[0]:
        slope = (logL[1] - logL[0]) / dlog
        return math.exp(log_s0 + (lt - logL[0]) / slope)
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if logL[mid] >= lt:
            lo = mid
        else:
            hi = mid
    f = (logL[lo] - lt) / (logL[lo] - logL[hi])
    return math.exp(log_s0 + dlog * (lo + f))


@nb.njit(cache=True, nogil=True, inline="always")
def _stable_part(state, z, dt, st_a, st_w):
    d = z.shape[0]
    for j in range(st_a.shape[0]):
        a = st_a[j]
        s = rng.positive_stable(state, 0.5 * a)
        c = math.sqrt(2.0 * (st_w[j] * dt) ** (2.0 / a) * s)
        for i in range(d):
            z[i] += c * rng.normal(state)


@nb.njit(cache=True, nogil=True, inline="always")
def _jump_part(state, z, g, dt, L_eps, log_s0, dlog, logL, support):
    d = z.shape[0]
    k = rng.poisson(state, dt * L_eps)
    for _ in range(k):
        r = _tail_inverse(log_s0, dlog, logL, support, rng.uniform(state) * L_eps)
        if d == 1:
            z[0] += r if rng.uniform(state) < 0.5 else -r
            continue
        nrm = 0.0
        while nrm == 0.0:
            for i in range(d):
                g[i] = rng.normal(state)
                nrm += g[i] * g[i]
        nrm = math.sqrt(nrm)
        for i in range(d):
            z[i] += r * g[i] / nrm


@nb.njit(cache=True, nogil=True, inline="always")
def _increment(state, z, g, dt, eps, kind, sigma2, st_a, st_w, log_s0, dlog, logG, logL, support):
    """Write one increment over ``dt`` into ``z``; ``g`` is scratch of the same length."""
    d = z.shape[0]
    var = 2.0 * sigma2
    L_eps = 0.0
    if kind == 1:
        ls = math.log(min(eps, support))
        var += math.exp(_interp(log_s0, dlog, logG, ls)) / d
        L_eps = _tail_L(log_s0, dlog, logL, support, eps)
    sd = math.sqrt(var * dt)
    if sd > 0.0:
        for i in range(d):
            z[i] = sd * rng.normal(state)
    else:
        for i in range(d):
            z[i] = 0.0
    if kind == 0:
        if st_a.shape[0] > 0:
            _stable_part(state, z, dt, st_a, st_w)
    elif L_eps > 0.0:
        _jump_part(state, z, g, dt, L_eps, log_s0, dlog, logL, support)


# The kernels run without reference counting (_nrt=False): they never allocate,
# and refcount traffic on array arguments otherwise dominates the step cost.


@nb.njit(cache=True, nogil=True, _nrt=False)
def _increments_kernel(seed, start, out, dt, eps, kind, sigma2, st_a, st_w, log_s0, dlog, logG, logL,
                       support, state, z, g):
    d = out.shape[1]
    for b in range(out.shape[0]):
        rng.seed_stream(state, seed, start + b)
        _increment(state, z, g, dt, eps, kind, sigma2, st_a, st_w, log_s0, dlog, logG, logL, support)
        for i in range(d):
            out[b, i] = z[i]


@nb.njit(cache=True, nogil=True, inline="always")
def _cell(h_nodes, k, s):
    """Index of the last node <= s, starting the walk from ``k``; -1 below the table."""
    n = h_nodes.shape[0]
    if s < h_nodes[0]:
        return -1
    if k < 0:
        k = 0
    while k + 1 < n and h_nodes[k + 1] <= s:
        k += 1
    while k > 0 and h_nodes[k] > s:
        k -= 1
    return k


@nb.njit(cache=True, nogil=True, inline="always")
def _step_unit(k, s, unit, log_s0, dlog, logh):
    """1 / (24 h(s)) evaluated at the node below s, which is conservative as h decreases."""
    if k >= 0:
        return unit[k]
    return 1.0 / (24.0 * math.exp(_interp(log_s0, dlog, logh, math.log(s))))


@nb.njit(nogil=True, _nrt=False)
def _paths_kernel(delta_fn, dparams, x0, horizon, p_main, p_fine, couple_every, dt_cap, delta_abs,
                  eps_abs, eps_rel, kind, sigma2, st_a, st_w, log_s0, dlog, logh, h_nodes, h_unit,
                  logG, logL, support, seed, start, max_steps, tau, pos, flag, tau_f, pos_f, flag_f, steps, state, y, z, g):
    d = x0.shape[0]
    for b in range(tau.shape[0]):
        rep = start + b
        rng.seed_stream(state, seed, rep)
        coupled = couple_every > 0 and rep % couple_every == 0
        for i in range(d):
            y[i] = x0[i]
        t = 0.0
        dl = delta_fn(dparams, y)
        tau_f[b] = math.nan
        flag_f[b] = -1
        if dl <= delta_abs:
            code = OUTSIDE if dl <= 0.0 else ABSORBED
            tau[b] = 0.0
            flag[b] = code
            for i in range(d):
                pos[b, i] = y[i]
            if coupled:
                tau_f[b] = 0.0
                flag_f[b] = code
                for i in range(d):
                    pos_f[b, i] = y[i]
            steps[b] = 0
            continue
        main_done = False
        fine_done = not coupled
        dl_node = dl
        k = _cell(h_nodes, -1, 0.5 * dl)
        t_node = min(p_main * _step_unit(k, 0.5 * dl, h_unit, log_s0, dlog, logh), dt_cap, horizon)
        n = 0
        while True:
            dt = math.inf
            if not fine_done:
                dt = min(p_fine * _step_unit(k, 0.5 * dl, h_unit, log_s0, dlog, logh), dt_cap)
            if not main_done:
                dt = min(dt, t_node - t)
            dt = min(dt, horizon - t)
            ref = dl if dl > delta_abs else dl_node
            eps = min(eps_abs, eps_rel * ref)
            _increment(state, z, g, dt, eps, kind, sigma2, st_a, st_w, log_s0, dlog, logG, logL, support)
            for i in range(d):
                y[i] += z[i]
            if dt == horizon - t:
                t = horizon
            elif not main_done and dt == t_node - t:
                t = t_node
            else:
                t += dt
            n += 1
            dl = delta_fn(dparams, y)
            if dl > delta_abs:
                k = _cell(h_nodes, k, 0.5 * dl)
            if not fine_done and dl <= delta_abs:
                fine_done = True
                tau_f[b] = t
                flag_f[b] = EXITED if dl <= 0.0 else ABSORBED
                for i in range(d):
                    pos_f[b, i] = y[i]
            if not main_done and t >= t_node:
                if dl <= delta_abs:
                    main_done = True
                    tau[b] = t
                    flag[b] = EXITED if dl <= 0.0 else ABSORBED
                    for i in range(d):
                        pos[b, i] = y[i]
                else:
                    dl_node = dl
                    t_node = t + min(p_main * _step_unit(k, 0.5 * dl, h_unit, log_s0, dlog, logh), dt_cap)
                    if t_node > horizon:
                        t_node = horizon
            if t >= horizon or n >= max_steps:
                code = SURVIVED if t >= horizon else BUDGET
                if not main_done:
                    tau[b] = t
                    flag[b] = code
                    for i in range(d):
                        pos[b, i] = y[i]
                if not fine_done:
                    tau_f[b] = t
                    flag_f[b] = code
                    for i in range(d):
                        pos_f[b, i] = y[i]
                break
            if main_done and fine_done:
                break
        steps[b] = n


# ---------------------------------------------------------------------------
# Public sampling API


def sample_increment(model: LevyModel, dt: float, n: int = 1, *, epsilon: float = 1e-3,
                     seed: int = 0, start: int = 0) -> np.ndarray:
    """Draw ``n`` increments over time ``dt``; replica i uses stream (seed, start + i).

    Exact for Gaussian and stable parts; otherwise jumps smaller than
    ``epsilon`` are replaced by a Gaussian with matching covariance.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    tab = _tables(model, epsilon / 10.0, max(1e3 * epsilon, 1e2))
    d = model.dimension
    out = np.empty((int(n), d))
    _increments_kernel(np.uint64(seed), int(start), out, float(dt), float(epsilon), tab.kind,
                       tab.sigma2, tab.stable_alpha, tab.stable_weight, tab.log_s0, tab.dlog, tab.logG,
                       tab.logL, tab.support, np.zeros(1, np.uint64), np.empty(d), np.empty(d))
    return out


@dataclass
class PathSample:
    """Per-replica exit data; ``*_f`` columns hold the fine observer (NaN when not coupled)."""

    tau: np.ndarray
    pos: np.ndarray
    flag: np.ndarray
    tau_f: np.ndarray
    pos_f: np.ndarray
    flag_f: np.ndarray
    steps: np.ndarray
    x0: np.ndarray
    delta_abs: float
    horizon: float
    config: SimConfig

    @property
    def coupled(self) -> np.ndarray:
        return self.flag_f >= 0

    @property
    def n(self) -> int:
        return self.tau.size

    def exited(self, fine: bool = False) -> np.ndarray:
        f = self.flag_f if fine else self.flag
        return (f == EXITED) | (f == ABSORBED) | (f == OUTSIDE)

    def trace_csv(self) -> str:
        cols = {"replica": np.arange(self.n), "tau": self.tau, "flag": self.flag, "steps": self.steps}
        for i in range(self.pos.shape[1]):
            cols[f"x{i}"] = self.pos[:, i]
        cols["tau_fine"] = self.tau_f
        cols["flag_fine"] = self.flag_f
        return csv_text(cols)


def _kernel_args(model: LevyModel, domain: Domain, x0: np.ndarray, config: SimConfig):
    scale = domain.scale(x0)
    delta_abs = config.delta_abs_rel * scale
    eps_min = min(config.epsilon, config.epsilon_rel * delta_abs)
    reach = max(scale, float(np.linalg.norm(x0)), domain.diameter if domain.bounded else 0.0)
    tab = _tables(model, min(eps_min, 0.5 * delta_abs) / 4.0, 1e3 * reach)
    return tab, delta_abs


def simulate_paths(model: LevyModel, domain: Domain, x, config: SimConfig, *,
                   horizon: float | None = None, trace_path=None) -> PathSample:
    """Run ``config.n`` replicas from ``x`` until exit from ``domain`` or the horizon."""
    x0 = np.ascontiguousarray(np.atleast_1d(np.asarray(x, float)))
    if x0.size != model.dimension or domain.dimension != model.dimension:
        raise ValueError("model, domain and start point dimensions differ")
    T = float(config.horizon if horizon is None else horizon)
    tab, delta_abs = _kernel_args(model, domain, x0, config)
    fn, dparams = domain.kernel()
    n, d = config.n, model.dimension
    tau = np.empty(n)
    pos = np.empty((n, d))
    flag = np.empty(n, np.int64)
    tau_f = np.empty(n)
    pos_f = np.full((n, d), np.nan)
    flag_f = np.empty(n, np.int64)
    steps = np.empty(n, np.int64)
    seed = np.uint64(config.seed)
    p_fine = config.p_miss / 4.0

    def run(lo, hi):
        _paths_kernel(fn, dparams, x0, T, config.p_miss, p_fine, config.companion_every, config.dt,
                      delta_abs, config.epsilon, config.epsilon_rel, tab.kind, tab.sigma2,
                      tab.stable_alpha, tab.stable_weight, tab.log_s0, tab.dlog, tab.logh, tab.h_nodes, tab.h_unit, tab.logG,
                      tab.logL, tab.support, seed, lo, config.max_steps, tau[lo:hi], pos[lo:hi],
                      flag[lo:hi], tau_f[lo:hi], pos_f[lo:hi], flag_f[lo:hi], steps[lo:hi],
                      np.zeros(1, np.uint64), np.empty(d), np.empty(d), np.empty(d))

    run(0, 0)  # compile on this thread before fanning out
    blocks = [(lo, min(lo + config.block, n)) for lo in range(0, n, config.block)]
    if config.threads == 1 or len(blocks) == 1:
        for lo, hi in blocks:
            run(lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            list(pool.map(lambda b: run(*b), blocks))
    sample = PathSample(tau, pos, flag, tau_f, pos_f, flag_f, steps, x0, delta_abs, T, config)
    if np.any(flag == BUDGET):
        raise SimulationError(f"{int(np.sum(flag == BUDGET))} replicas hit the step budget "
                              f"({config.max_steps} steps)")
    if trace_path is not None:
        atomic_write_text(trace_path, sample.trace_csv())
    return sample


# ---------------------------------------------------------------------------
# Estimators


def _mean_se(v: np.ndarray) -> tuple[float, float]:
    v = np.asarray(v, float)
    if v.size == 0:
        return math.nan, math.nan
    m = float(np.mean(v))
    se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.inf
    return m, se


def _richardson(sample: PathSample, stat: Callable[[bool], np.ndarray]) -> dict:
    """Coarse minus fine statistic on the coupled replicas."""
    c = sample.coupled
    if not np.any(c):
        return {"delta": 0.0, "se": 0.0, "m": 0}
    diff = (stat(False) - stat(True))[c]
    m, se = _mean_se(diff)
    return {"delta": m, "se": 0.0 if diff.size < 2 else se, "m": int(diff.size)}


def _v_func(model: LevyModel, lo: float, hi: float, renewal: RenewalTable | None):
    if renewal is not None and renewal.grid[0] <= lo and renewal.grid[-1] >= hi:
        return renewal.V
    if model.has_jumps is False:
        return lambda s: np.asarray(s, float) / model.sigma
    key = ("V-bounds", lo, hi)
    tab = model._cached(key, lambda: renewal_V(model, log_grid(lo / 2.0, 2.0 * hi, 4)))
    return tab.V


def _absorption_time_bound(V, delta_abs: float, outer: float) -> float:
    """Bound on the remaining mean exit time after an absorption event."""
    return 2.0 * float(V(delta_abs)) * float(V(outer))


def _absorption_survival_bound(V, delta_abs: float, s: np.ndarray) -> np.ndarray:
    """Bound on P(no exit within s) from distance delta_abs (half-space comparison)."""
    s = np.asarray(s, float)
    with np.errstate(divide="ignore"):
        return np.minimum(1.0, 2.0 * math.sqrt(2.0) * float(V(delta_abs)) / np.sqrt(s))


def _base_inputs(model, domain, x, config) -> dict:
    return {"model": model.spec(), "domain": domain.spec(),
            "x": [float(v) for v in np.atleast_1d(x)], "config": config.to_dict()}


def _outer_radius(domain: Domain) -> float:
    if isinstance(domain, Ball):
        return domain.radius
    return domain.diameter


def _exterior(domain: Domain, x) -> bool:
    return float(domain.delta(np.atleast_1d(np.asarray(x, float)))) <= 0.0


def exit_time_from(sample: PathSample, model: LevyModel, domain: Domain, *,
                   renewal: RenewalTable | None = None) -> McEstimate:
    config = sample.config
    if np.any(sample.flag == SURVIVED):
        raise SimulationError("some replicas did not exit before the horizon")
    mean, se = _mean_se(sample.tau)
    rich = _richardson(sample, lambda fine: sample.tau_f if fine else sample.tau)
    outer = _outer_radius(domain)
    V = _v_func(model, sample.delta_abs, outer, renewal)
    frac_abs = float(np.mean(sample.flag == ABSORBED))
    abs_band = frac_abs * _absorption_time_bound(V, sample.delta_abs, outer)
    return McEstimate("exit-time", mean, se, sample.n, config.seed, abs(rich["delta"]) + abs_band,
                      _base_inputs(model, domain, sample.x0, config),
                      {"richardson": rich, "absorbed_fraction": frac_abs, "absorption_band": abs_band,
                       "delta_abs": sample.delta_abs, "mean_steps": float(np.mean(sample.steps))})


def exit_time(model: LevyModel, domain: Domain, x, config: SimConfig, *,
              renewal: RenewalTable | None = None) -> McEstimate:
    """Monte Carlo estimate of the mean exit time from a bounded domain."""
    if not domain.bounded:
        raise ValueError("exit_time needs a bounded domain; use survival_prob for unbounded ones")
    if _exterior(domain, x):
        return McEstimate("exit-time", 0.0, 0.0, 0, config.seed, 0.0,
                          _base_inputs(model, domain, x, config), {"exterior_start": True})
    sample = simulate_paths(model, domain, x, config, horizon=math.inf)
    return exit_time_from(sample, model, domain, renewal=renewal)


def survival_from(sample: PathSample, model: LevyModel, domain: Domain, ts: Sequence[float], *,
                  renewal: RenewalTable | None = None) -> list[McEstimate]:
    config = sample.config
    ts = np.asarray(ts, float)
    V = _v_func(model, sample.delta_abs, max(1.0, float(np.max(ts))), renewal)
    out = []
    absorbed = sample.flag == ABSORBED
    for t in ts:
        alive = (sample.tau > t) | ((sample.flag == SURVIVED) & (sample.tau >= t))
        mean, se = _mean_se(alive.astype(float))
        rich = _richardson(sample, lambda fine: (
            (sample.tau_f if fine else sample.tau) > t).astype(float))
        hit = absorbed & (sample.tau <= t)
        abs_band = float(np.sum(_absorption_survival_bound(V, sample.delta_abs, t - sample.tau[hit]))) / sample.n
        surv = int(np.sum(alive))
        out.append(McEstimate("survival", mean, se, sample.n, config.seed, abs(rich["delta"]) + abs_band,
                              dict(_base_inputs(model, domain, sample.x0, config), t=float(t)),
                              {"richardson": rich, "absorption_band": abs_band, "survivors": surv,
                               "delta_abs": sample.delta_abs}))
    return out


def survival_curve(model: LevyModel, domain: Domain, x, ts: Sequence[float], config: SimConfig, *,
                   renewal: RenewalTable | None = None) -> list[McEstimate]:
    """P^x(tau_D > t) for each t, all from one shared set of replicas."""
    ts = np.asarray(ts, float)
    if np.any(ts < 0):
        raise ValueError("times must be nonnegative")
    if _exterior(domain, x):
        return [McEstimate("survival", 0.0, 0.0, 0, config.seed, 0.0,
                           dict(_base_inputs(model, domain, x, config), t=float(t)),
                           {"exterior_start": True}) for t in ts]
    sample = simulate_paths(model, domain, x, config, horizon=float(np.max(ts)) if ts.size else 0.0)
    return survival_from(sample, model, domain, ts, renewal=renewal)


def survival_prob(model: LevyModel, domain: Domain, x, t: float, config: SimConfig, *,
                  renewal: RenewalTable | None = None) -> McEstimate:
    if t == 0 and not _exterior(domain, x):
        return McEstimate("survival", 1.0, 0.0, 0, config.seed, 0.0,
                          dict(_base_inputs(model, domain, x, config), t=0.0), {})
    return survival_curve(model, domain, x, [t], config, renewal=renewal)[0]


def exit_tail_from(sample: PathSample, model: LevyModel, domain: Domain, r: float, *,
                   renewal: RenewalTable | None = None, h_r: float | None = None) -> McEstimate:
    config = sample.config
    norms = np.linalg.norm(sample.pos, axis=1)
    mean, se = _mean_se((norms >= r).astype(float))
    rich = _richardson(sample, lambda fine: (
        np.linalg.norm(sample.pos_f if fine else sample.pos, axis=1) >= r).astype(float))
    outer = _outer_radius(domain)
    V = _v_func(model, sample.delta_abs, outer, renewal)
    if h_r is None:
        from .characteristics import pruitt_h
        h_r = pruitt_h(model, r).h
    frac_abs = float(np.mean(sample.flag == ABSORBED))
    abs_band = min(1.0, frac_abs * 24.0 * h_r * _absorption_time_bound(V, sample.delta_abs, outer))
    return McEstimate("exit-place-tail", mean, se, sample.n, config.seed, abs(rich["delta"]) + abs_band,
                      dict(_base_inputs(model, domain, sample.x0, config), r=float(r)),
                      {"richardson": rich, "absorption_band": abs_band, "delta_abs": sample.delta_abs})


def exit_place_tail(model: LevyModel, domain: Domain, x, r: float, config: SimConfig, *,
                    renewal: RenewalTable | None = None) -> McEstimate:
    """P^x(|X at exit| >= r); the crossing jump is applied in full."""
    if not domain.bounded:
        raise ValueError("exit_place_tail needs a bounded domain")
    if _exterior(domain, x):
        v = float(np.linalg.norm(np.atleast_1d(x)) >= r)
        return McEstimate("exit-place-tail", v, 0.0, 0, config.seed, 0.0,
                          dict(_base_inputs(model, domain, x, config), r=float(r)), {"exterior_start": True})
    sample = simulate_paths(model, domain, x, config, horizon=math.inf)
    return exit_tail_from(sample, model, domain, r, renewal=renewal)


def hit_ball_prob(model: LevyModel, R: float, x, config: SimConfig, *,
                  renewal: RenewalTable | None = None, sample_out: list | None = None) -> McEstimate:
    """P^x(the closed ball B(0, R) is hit before the horizon); a lower bound for T = inf."""
    x = np.atleast_1d(np.asarray(x, float))
    if not np.linalg.norm(x) > R:
        raise ValueError("hit_ball_prob needs |x| > R")
    T = config.horizon
    if not math.isfinite(T):
        raise ValueError("hit_ball_prob needs a finite horizon")
    domain = BallComplement(np.zeros(model.dimension), R)
    sample = simulate_paths(model, domain, x, config, horizon=T)
    if sample_out is not None:
        sample_out.append(sample)
    mean, se = _mean_se(sample.exited().astype(float))
    rich = _richardson(sample, lambda fine: sample.exited(fine).astype(float))
    V = _v_func(model, sample.delta_abs, max(R, 1.0), renewal)
    absorbed = sample.flag == ABSORBED
    abs_band = float(np.sum(_absorption_survival_bound(V, sample.delta_abs, T - sample.tau[absorbed]))) / sample.n
    return McEstimate("hitting", mean, se, sample.n, config.seed, abs(rich["delta"]) + abs_band,
                      dict(_base_inputs(model, domain, x, config), R=float(R), horizon=T),
                      {"richardson": rich, "absorption_band": abs_band, "lower_bound_for_infinite_horizon": True,
                       "delta_abs": sample.delta_abs})


def dynkin_estimate(model: LevyModel, f: Callable, x, t_ball_radius: float, config: SimConfig, *,
                    renewal: RenewalTable | None = None) -> McEstimate:
    """(E^x f(X at exit of B(x, t)) - f(x)) / E^x tau_B(x, t), both from the same replicas.

    ``f`` maps an (m, d) array of points to m values. The standard error uses the
    delta method for a ratio of means.
    """
    x = np.atleast_1d(np.asarray(x, float))
    if not t_ball_radius > 0:
        raise ValueError("ball radius must be positive")
    ball = Ball(x, t_ball_radius)
    sample = simulate_paths(model, ball, x, config, horizon=math.inf)
    fx = float(np.asarray(f(x[None, :]), float)[0])

    def ratio(fine: bool, mask=None):
        pos = sample.pos_f if fine else sample.pos
        tau = sample.tau_f if fine else sample.tau
        if mask is not None:
            pos, tau = pos[mask], tau[mask]
        num = np.asarray(f(pos), float) - fx
        return num, tau

    num, den = ratio(False)
    nm, nse = _mean_se(num)
    dm, dse = _mean_se(den)
    if not dm > 0:
        raise SimulationError("degenerate Dynkin denominator")
    R = nm / dm
    se = float(np.std(num - R * den, ddof=1) / math.sqrt(sample.n) / dm)
    c = sample.coupled
    rich = {"delta": 0.0, "se": 0.0, "m": int(np.sum(c))}
    if np.sum(c) > 1:
        n1, d1 = ratio(False, c)
        n2, d2 = ratio(True, c)
        rich["delta"] = float(np.mean(n1) / np.mean(d1) - np.mean(n2) / np.mean(d2))
    V = _v_func(model, sample.delta_abs, t_ball_radius, renewal)
    frac_abs = float(np.mean(sample.flag == ABSORBED))
    abs_band = abs(R) * frac_abs * _absorption_time_bound(V, sample.delta_abs, t_ball_radius) / dm
    details = {"numerator": {"mean": nm, "stderr": nse}, "denominator": {"mean": dm, "stderr": dse},
               "denominator_relative_ci": 3.0 * dse / dm, "richardson": rich,
               "absorption_band": abs_band, "delta_abs": sample.delta_abs}
    return McEstimate("dynkin", R, se, sample.n, config.seed, abs(rich["delta"]) + abs_band,
                      dict(_base_inputs(model, ball, x, config), t=float(t_ball_radius)), details)
