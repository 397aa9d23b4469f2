"""Acceptance suite: one test per criterion, each printing a pass/fail line."""

import math
import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import special

from levy_exit_lab import cli
from levy_exit_lab import model as M
from levy_exit_lab import verify as vf
from levy_exit_lab._numerics import log_grid
from levy_exit_lab.characteristics import build_profile, scaling_indices
from levy_exit_lab.domains import Ball, Interval
from levy_exit_lab.renewal import kappa, renewal_V
from levy_exit_lab.simulate import SimConfig, exit_time, exit_time_from, simulate_paths

THREADS = os.cpu_count() or 1


def _custom_nu(r):
    return M.stable_constant(2, 1.0) * np.asarray(r, float) ** -3.0


def _phi(lam):
    return lam ** 0.75


CATALOGUE = {
    "brownian": {},
    "isotropic-stable": {"alpha": 1.5},
    "stable-brownian": {"alpha": 1.0},
    "stable-sum": {"alphas": [0.5, 1.5]},
    "relativistic-stable": {"alpha": 1.0},
    "tempered-stable": {"alpha": 1.5},
    "truncated-stable": {"alpha": 1.5},
    "layered-stable": {"alpha": 1.5, "alpha1": 0.8},
    "geometric-stable": {"alpha": 1.0},
    "variance-gamma": {},
    "bernstein-mix": {"alpha1": 0.5, "alpha3": 0.5, "m": 1.0},
    "subordinate-bm": {"phi": _phi},
    "custom": {"nu": _custom_nu},
}


@pytest.fixture(scope="module")
def catalogue():
    return {f: M.make_model(f, p, dimension=2) for f, p in CATALOGUE.items()}


@pytest.fixture(scope="module")
def cauchy1():
    return M.make_model("isotropic-stable", {"alpha": 1.0}, dimension=1)


@pytest.fixture(scope="module")
def exit_checks():
    """Exit-ball checks for the two comparability families, shared by criteria 4 and 8."""
    cfg = SimConfig(n=4000, seed=11, p_miss=0.05, threads=THREADS)
    out = {}
    for fam in ("tempered-stable", "truncated-stable"):
        m = M.make_model(fam, {"alpha": 1.5}, dimension=3)
        out[fam] = vf.check_exit_ball(m, 1.0, (0.9, 0.5, 0.2, 0.1, 0.05, 0.02), cfg)
    return out


def test_criterion_01_kappa_closed_forms(criterion):
    xi = log_grid(1e-3, 1e3, 6)
    worst = 0.0
    for a in (0.5, 1.0, 1.5, 2.0):
        m = M.make_model("isotropic-stable", {"alpha": a}, dimension=1)
        k = np.asarray(kappa(m, xi), float)
        worst = max(worst, float(np.max(np.abs(k / xi ** (a / 2) - 1.0))))
    ok = criterion("1", worst <= 1e-6, f"max relative error of kappa = {worst:.2e} (tol 1e-6)")
    assert ok


def test_criterion_02_renewal_closed_forms(criterion):
    x = log_grid(1e-2, 1e2, 8)
    worst = 0.0
    bm = M.make_model("brownian", {"sigma": 1.0}, dimension=1)
    tab = renewal_V(bm, x)
    assert tab.method == "laplace-inversion"
    worst = max(worst, float(np.max(np.abs(tab.V(x) / x - 1))))
    for a in (0.5, 1.0, 1.5):
        m = M.make_model("isotropic-stable", {"alpha": a}, dimension=1)
        tab = renewal_V(m, x)
        assert tab.method == "laplace-inversion"
        exact = x ** (a / 2) / math.gamma(1 + a / 2)
        worst = max(worst, float(np.max(np.abs(tab.V(x) / exact - 1))))
    ok = criterion("2", worst <= 0.01, f"max relative error of V = {worst:.2e} (tol 1e-2)")
    assert ok


def test_criterion_03a_brownian_ball(criterion):
    bm = M.make_model("brownian", {"sigma": 1 / math.sqrt(2)}, dimension=3)
    cfg = SimConfig(n=100_000, seed=3, p_miss=0.1, threads=THREADS)
    t0 = time.perf_counter()
    est = exit_time(bm, Ball(np.zeros(3), 1.0), np.zeros(3), cfg)
    elapsed = time.perf_counter() - t0
    err = abs(est.mean - 1 / 3)
    ok = err <= est.tolerance() and elapsed < 300
    criterion("3a", ok, f"E tau = {est.mean:.5f} vs 1/3, |err| = {err:.2e} <= 3se+band = {est.tolerance():.2e}; "
                        f"{elapsed:.0f} s with {THREADS} thread(s)")
    assert ok


def test_criterion_03b_cauchy_interval(criterion, cauchy1):
    cfg = SimConfig(n=10_000, seed=4, p_miss=0.05, threads=THREADS)
    dom = Interval(-1, 1)
    details = []
    ok = True
    for x in (0.0, 0.5, 0.9):
        est = exit_time(cauchy1, dom, [x], cfg)
        exact = math.sqrt(1 - x * x)
        good = abs(est.mean - exact) <= est.tolerance()
        ok &= good
        details.append(f"x={x}: {est.mean:.4f} vs {exact:.4f} (tol {est.tolerance():.3f})")
    criterion("3b", ok, "; ".join(details))
    assert ok


def test_criterion_04_explicit_constants(criterion, catalogue, cauchy1, exit_checks):
    failures = []
    for fam, m in catalogue.items():
        c = vf.check_psi_star(m, log_grid(1e-3, 1e3, 8))
        if c.hard_failure:
            failures.append(f"psi* {fam}")
    cfg = SimConfig(n=4000, seed=5, p_miss=0.05, threads=THREADS)
    upper = [vf.check_exit_ball(cauchy1, 1.0, (1.0, 0.5, 0.1, 0.02), cfg)] + list(exit_checks.values())
    for c in upper:
        if c.hard_failure:
            failures.append(f"exit upper {c.empirical_constants}")
    tails = [vf.check_exit_tail(cauchy1, Interval(-1, 1), [0.0], [2.0, 4.0], cfg),
             vf.check_exit_tail(M.make_model("tempered-stable", {"alpha": 1.5}, dimension=3),
                                Ball(np.zeros(3), 1.0), np.zeros(3), [2.0, 4.0], cfg)]
    for c in tails:
        if c.hard_failure:
            failures.append("exit place tail")
    log_concave = 0
    for fam in ("brownian", "isotropic-stable", "tempered-stable", "relativistic-stable", "variance-gamma"):
        c = vf.check_condition_A(catalogue[fam], [0.01, 0.1, 1.0, 10.0])
        log_concave += len(c.hard)
        if c.hard_failure:
            failures.append(f"H_r {fam}")
    ok = not failures and log_concave > 0
    ratio = max(c.empirical_constants["exit_upper_ratio_max"] for c in upper)
    tail = max(c.empirical_constants["tail_over_bound_max"] for c in tails)
    criterion("4", ok, f"psi* on {len(catalogue)} models; max E tau/(2V(r)V(r-|x|)) = {ratio:.3f}; "
                       f"max tail/(24 h E tau) = {tail:.3f}; {log_concave} H_r <= 5 assertions; "
                       f"failures: {failures or 'none'}")
    assert ok


def test_criterion_05_hV2_band(criterion, catalogue):
    r = log_grid(1e-3, 1e3, 4)
    grid = log_grid(1e-5, 1e4, 8)
    bands = {}
    for fam, m in catalogue.items():
        prof = build_profile(m, r, table=renewal_V(m, grid))
        bands[fam] = float(prof.hV2.max() / prof.hV2.min())
    stable = []
    for a in (0.5, 1.0, 1.5):
        m = M.make_model("isotropic-stable", {"alpha": a}, dimension=2)
        prof = build_profile(m, r, table=renewal_V(m, grid))
        stable.append(float(prof.hV2.max() / prof.hV2.min()))
    worst = max(bands, key=bands.get)
    ok = max(bands.values()) <= 1e2 and max(stable) <= 1.02
    criterion("5", ok, f"max h V^2 band {bands[worst]:.3f} ({worst}); stable bands "
                       f"{', '.join(f'{s - 1:.1e}' for s in stable)} above 1")
    assert ok


def test_criterion_06_scaling_recovery(criterion):
    worst_idx = worst_c = 0.0
    for a in (0.5, 1.0, 1.5):
        m = M.make_model("isotropic-stable", {"alpha": a}, dimension=1)
        sc = scaling_indices(m, (1e-3, 1e3))
        assert sc.wlsc is not None and sc.wusc is not None
        worst_idx = max(worst_idx, abs(sc.wlsc.alpha - a), abs(sc.wusc.alpha - a))
        worst_c = max(worst_c, abs(sc.wlsc.constant - 1), abs(sc.wusc.constant - 1))
    ok = worst_idx <= 0.01 and worst_c <= 0.02
    criterion("6", ok, f"max index error {worst_idx:.1e} (tol 0.01), max constant error {worst_c:.1e} (tol 0.02)")
    assert ok


def test_criterion_07_survival_half_line(criterion, cauchy1):
    bm = M.make_model("brownian", {"sigma": 1 / math.sqrt(2)}, dimension=1)
    cfg = SimConfig(n=10_000, seed=7, p_miss=0.05, threads=THREADS)
    bc = vf.check_survival(bm, "half-line", {"xs": [0.5, 1.0, 2.0], "ts": [0.5, 2.0, 8.0]}, cfg)
    oracle_ok = bc.verdict == vf.PASS and bc.empirical_constants["oracle_matches"] == 9
    ts = [0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0]
    cc = vf.check_survival(cauchy1, "half-line", {"xs": [1.0], "ts": ts}, cfg)
    trend = cc.ratio_stats["trends"][0]
    ok = oracle_ok and cc.verdict == vf.PASS
    criterion("7", ok, f"Brownian oracle matches {bc.empirical_constants['oracle_matches']}/9; Cauchy ratio in "
                       f"[{cc.ratio_stats['min']:.3f}, {cc.ratio_stats['max']:.3f}], weighted slope "
                       f"{trend['weighted_slope']:.3f}/decade, diverging={trend['diverging']}")
    assert ok


def test_criterion_08_exit_comparability(criterion, exit_checks):
    parts = []
    ok = True
    for fam, c in exit_checks.items():
        good = (c.verdict == vf.PASS and c.ratio_stats["max_over_min"] <= 1e2
                and not c.ratio_stats["trend"]["diverging"])
        ok &= good
        parts.append(f"{fam}: ratio in [{c.ratio_stats['min']:.3f}, {c.ratio_stats['max']:.3f}], "
                     f"max/min {c.ratio_stats['max_over_min']:.2f}, verdict {c.verdict}")
    criterion("8", ok, "; ".join(parts))
    assert ok


def test_criterion_09_barrier_signs(criterion):
    cfg = SimConfig(n=4000, seed=9, p_miss=0.05, threads=THREADS)
    parts = []
    ok = True
    for a in (0.5, 1.0, 1.5):
        m = M.make_model("isotropic-stable", {"alpha": a}, dimension=2)
        c = vf.check_barriers(m, 1.0, [0.05, 0.1, 0.2], cfg, side="interior")
        ok &= c.verdict == vf.PASS
        parts.append(f"alpha={a}: C_emp={c.empirical_constants['C_emp']:.3f} {c.verdict}")
    m = M.make_model("isotropic-stable", {"alpha": 1.0}, dimension=2)
    h = vf.check_harmonic_halfspace(m, [0.1, 1.0], cfg)
    s = vf.check_dynkin_exit_time(m, 1.0, [[0.0, 0.0], [0.5, 0.0]], cfg)
    ok &= h.verdict == vf.PASS and s.verdict == vf.PASS
    parts.append(f"A V_1 = {np.round(h.series['observed'], 3).tolist()} ({h.verdict})")
    parts.append(f"A s_D = {np.round(s.series['observed'], 3).tolist()} ({s.verdict})")
    criterion("9", ok, "; ".join(parts))
    assert ok


def test_criterion_10_hitting(criterion):
    bm = M.make_model("brownian", {"sigma": 1 / math.sqrt(2)}, dimension=3)
    cfg = SimConfig(n=10_000, seed=10, p_miss=0.05, threads=THREADS)
    xs = np.array([1.5, 2.0, 4.0])
    errs = {}
    ok = True
    for T in (2.0, 50.0):
        c = vf.check_hitting(bm, 1.0, xs, cfg.replace(horizon=T))
        ok &= c.verdict == vf.PASS
        errs[T] = np.abs(c.series["observed"] - 1.0 / xs)
    converging = bool(np.all(errs[50.0] < errs[2.0]))
    st = M.make_model("isotropic-stable", {"alpha": 1.0}, dimension=3)
    cs = vf.check_hitting(st, 1.0, [1.2, 1.5, 2.0, 4.0], cfg.replace(horizon=100.0))
    mult = cs.empirical_constants["escape_half_multiple"]
    below = bool(np.all(cs.series["observed"] <= cs.series["oracle"] + 3 * cs.series["stderr"]
                        + cs.series["bias_band"]))
    ok &= converging and math.isfinite(mult) and below
    criterion("10", ok, f"BM |P - R/|x|| at T=2: {np.round(errs[2.0], 4).tolist()}, T=50: "
                        f"{np.round(errs[50.0], 4).tolist()}; stable escape >= 1/2 from |x|/R = {mult:g}")
    assert ok


SPEC = """
model: {family: isotropic-stable, dimension: 1, params: {alpha: 1.0}}
seed: 99
tasks: [simulate, verify]
sim: {n: 3000, p_miss: 0.05, block: 64}
domains:
  interval: {kind: interval, a: -1.0, b: 1.0}
simulate:
  - {quantity: exit-time, domain: interval, x: [[0.0], [0.5]]}
  - {quantity: survival, domain: interval, x: [[0.0]], t: [0.1, 0.5]}
verify:
  - {check: exit-ball, r: 1.0, delta_fracs: [1.0, 0.5, 0.1]}
  - {check: survival, kind: half-line, x: [1.0], t: [0.1, 1.0, 10.0]}
"""


def test_criterion_11_determinism(criterion, tmp_path: Path):
    spec = tmp_path / "study.yaml"
    spec.write_text(SPEC)
    outs = {}
    for th in (8, 1):
        out = tmp_path / f"out{th}"
        assert cli.main(["run", str(spec), "--threads", str(th), "--out-dir", str(out)]) == 0
        outs[th] = out
    names = ["report.json", "report.csv", "simulate.json", "simulate.csv", "summary.txt"]
    same = {n: (outs[8] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names}
    ok = all(same.values())
    criterion("11", ok, f"8 vs 1 threads byte-identical: {', '.join(n for n, s in same.items() if s)}")
    assert ok
