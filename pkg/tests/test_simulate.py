import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levy_exit_lab import model as M
from levy_exit_lab.domains import Ball, BallComplement, HalfLine, Interval
from levy_exit_lab.simulate import (EXITED, McEstimate, SimConfig, SimulationError, dynkin_estimate,
                                    exit_place_tail, exit_time, hit_ball_prob, sample_increment,
                                    simulate_paths, survival_curve, survival_prob)

CAUCHY = M.make_model("isotropic-stable", {"alpha": 1.0}, dimension=1)
BM2 = M.make_model("brownian", {"sigma": 1.0}, dimension=2)


def _cf_gap(model, z, dt):
    u = np.array([0.3, 1.0, 2.5])
    proj = z[:, 0]
    emp = np.array([np.mean(np.cos(v * proj)) for v in u])
    return float(np.max(np.abs(emp - np.exp(-dt * np.asarray(model.psi(u), float)))))


@pytest.mark.parametrize("family,params", [
    ("isotropic-stable", {"alpha": 1.5}),
    ("stable-brownian", {"alpha": 0.7, "sigma": 0.5}),
    ("tempered-stable", {"alpha": 1.2}),
    ("truncated-stable", {"alpha": 1.5}),
    ("variance-gamma", {}),
])
def test_increments_match_characteristic_function(family, params):
    m = M.make_model(family, params, dimension=2)
    n = 100_000
    z = sample_increment(m, 0.5, n, epsilon=0.01, seed=1)
    assert z.shape == (n, 2)
    assert _cf_gap(m, z, 0.5) < 4.0 / math.sqrt(n)
    # isotropy: both coordinates share the law
    assert abs(np.mean(np.cos(z[:, 0])) - np.mean(np.cos(z[:, 1]))) < 5.0 / math.sqrt(n)


def test_increments_reproducible_by_replica():
    a = sample_increment(CAUCHY, 1.0, 10, seed=5)
    b = sample_increment(CAUCHY, 1.0, 4, seed=5, start=6)
    np.testing.assert_array_equal(a[6:], b)


def test_threads_do_not_change_results():
    cfg = SimConfig(n=700, seed=2, block=64)
    a = simulate_paths(CAUCHY, Interval(-1, 1), [0.3], cfg)
    b = simulate_paths(CAUCHY, Interval(-1, 1), [0.3], cfg.replace(threads=3))
    for k in ("tau", "pos", "flag", "tau_f", "flag_f", "steps"):
        np.testing.assert_array_equal(getattr(a, k), getattr(b, k))
    assert np.all(a.coupled == (np.arange(700) % 8 == 0))
    assert np.all(a.exited()) and np.any(a.flag == EXITED)


def test_cauchy_interval_oracle():
    cfg = SimConfig(n=4000, seed=3, p_miss=0.05)
    for x in (0.0, 0.7):
        est = exit_time(CAUCHY, Interval(-1, 1), [x], cfg)
        assert abs(est.mean - math.sqrt(1 - x * x)) <= est.tolerance()


def test_brownian_disc_oracle():
    cfg = SimConfig(n=4000, seed=4, p_miss=0.05)
    est = exit_time(BM2, Ball([0.0, 0.0], 1.0), [0.5, 0.0], cfg)
    # generator Laplacian: E tau = (1 - |x|^2) / (2 d)
    assert abs(est.mean - 0.75 / 4) <= est.tolerance()
    assert est.details["richardson"]["m"] == 500


def test_exterior_start_and_zero_time():
    cfg = SimConfig(n=100)
    assert exit_time(CAUCHY, Interval(-1, 1), [2.0], cfg).mean == 0.0
    assert survival_prob(CAUCHY, Interval(-1, 1), [0.0], 0.0, cfg).mean == 1.0
    assert survival_prob(CAUCHY, Interval(-1, 1), [5.0], 1.0, cfg).mean == 0.0
    assert exit_place_tail(CAUCHY, Interval(-1, 1), [3.0], 2.0, cfg).mean == 1.0
    with pytest.raises(ValueError):
        exit_time(CAUCHY, HalfLine(0.0), [1.0], cfg)


def test_survival_curve_monotone():
    cfg = SimConfig(n=2000, seed=5)
    ests = survival_curve(CAUCHY, HalfLine(0.0), [1.0], [0.1, 1.0, 10.0], cfg)
    means = [e.mean for e in ests]
    assert means[0] >= means[1] >= means[2] > 0
    assert all(e.details["survivors"] == round(e.mean * 2000) for e in ests)


def test_hitting_preconditions_and_oracle():
    bm3 = M.make_model("brownian", {"sigma": 1 / math.sqrt(2)}, dimension=3)
    cfg = SimConfig(n=3000, seed=6, p_miss=0.05, horizon=20.0)
    with pytest.raises(ValueError):
        hit_ball_prob(bm3, 1.0, [0.5, 0, 0], cfg)
    with pytest.raises(ValueError):
        hit_ball_prob(bm3, 1.0, [2.0, 0, 0], cfg.replace(horizon=math.inf))
    est = hit_ball_prob(bm3, 1.0, [2.0, 0.0, 0.0], cfg)
    from scipy.special import erfc
    oracle = 0.5 * erfc(1.0 / math.sqrt(2 * 20.0))
    assert abs(est.mean - oracle) <= est.tolerance()


def test_dynkin_of_quadratic_is_exact_for_brownian():
    # A |y|^2 = 2 d sigma^2 for the generator sigma^2 Laplacian
    cfg = SimConfig(n=3000, seed=7, p_miss=0.05)
    est = dynkin_estimate(BM2, lambda y: np.sum(np.atleast_2d(y) ** 2, axis=1), [0.3, 0.1], 0.2, cfg)
    assert abs(est.mean - 4.0) <= est.tolerance()


def test_step_budget_raises():
    with pytest.raises(SimulationError, match="step budget"):
        simulate_paths(BM2, Ball([0.0, 0.0], 1.0), [0.0, 0.0], SimConfig(n=10, max_steps=5))


def test_trace_file(tmp_path):
    cfg = SimConfig(n=20, seed=8)
    s = simulate_paths(CAUCHY, Interval(-1, 1), [0.0], cfg, trace_path=tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0].split(",")[:3] == ["replica", "tau", "flag"] and len(lines) == 21
    assert s.n == 20


def test_complement_exit_is_hit():
    m = M.make_model("isotropic-stable", {"alpha": 1.0}, dimension=3)
    s = simulate_paths(m, BallComplement([0, 0, 0], 1.0), [1.5, 0, 0], SimConfig(n=300, seed=9), horizon=5.0)
    hit = s.exited()
    assert np.all(np.linalg.norm(s.pos[hit], axis=1) <= 1.0 + s.delta_abs + 1e-12)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(1, 5000), seed=st.integers(0, 2 ** 63), band=st.floats(0, 1))
def test_estimate_round_trip(n, seed, band):
    e = McEstimate("exit-time", 0.25, 0.01, n, seed, band, {"x": [0.0]}, {"a": 1})
    assert McEstimate.from_dict(e.to_dict()) == e
    assert e.tolerance() == pytest.approx(0.03 + band)


def test_config_validation_and_serialisation():
    with pytest.raises(ValueError):
        SimConfig(n=0)
    with pytest.raises(ValueError):
        SimConfig(p_miss=0.5)
    with pytest.raises(ValueError):
        SimConfig(epsilon_rel=0.0)
    d = SimConfig(threads=4).to_dict()
    assert "threads" not in d and "block" not in d and d["n"] == 10_000
