import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levy_exit_lab import model as M


def test_stable_constant_cauchy_line():
    # Cauchy density on the line is 1 / (pi x^2)
    assert M.stable_constant(1, 1.0) == pytest.approx(1 / math.pi, rel=1e-14)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_radial_kernel_closed_forms(d):
    x = np.array([0.0, 0.3, 1.0, 7.5, 40.0])
    k = M.radial_kernel(x, d)
    if d == 1:
        ref = np.cos(x)
    elif d == 3:
        ref = np.where(x == 0, 1.0, np.sin(x) / np.where(x == 0, 1, x))
    else:
        from scipy.special import j0
        ref = j0(x)
    np.testing.assert_allclose(k, ref, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.7])
def test_stable_quadrature_matches_power(d, alpha):
    m = M.make_model("isotropic-stable", {"alpha": alpha}, dimension=d)
    u = np.array([1e-3, 0.37, 1.0, 12.0, 3e3])
    np.testing.assert_allclose(M.psi_quadrature(m, u), u ** alpha, rtol=1e-6)


def test_relativistic_and_variance_gamma_quadrature():
    u = np.array([1e-2, 0.5, 2.0, 50.0])
    rel = M.make_model("relativistic-stable", {"alpha": 1.0, "m": 1.0}, dimension=3)
    np.testing.assert_allclose(M.psi_quadrature(rel, u), np.sqrt(u * u + 1) - 1, rtol=1e-6)
    vg = M.make_model("variance-gamma", {}, dimension=2)
    np.testing.assert_allclose(M.psi_quadrature(vg, u), np.log1p(u * u), rtol=1e-6)


@pytest.mark.parametrize("alpha", [0.6, 1.5])
def test_tempered_line_closed_form(alpha):
    # on the line: 2 c Gamma(-a) [lam^a - (lam^2 + u^2)^(a/2) cos(a atan(u/lam))]
    lam = 1.3
    m = M.make_model("tempered-stable", {"alpha": alpha, "lam": lam}, dimension=1)
    c = M.stable_constant(1, alpha)
    u = np.array([0.05, 1.0, 9.0])
    ref = 2 * c * math.gamma(-alpha) * (lam ** alpha
                                        - (lam ** 2 + u ** 2) ** (alpha / 2) * np.cos(alpha * np.arctan(u / lam)))
    np.testing.assert_allclose(M.psi(m, u), ref, rtol=1e-6)


def test_truncated_line_against_mpmath():
    alpha, b = 1.5, 0.8
    m = M.make_model("truncated-stable", {"alpha": alpha, "radius": b}, dimension=1)
    c = M.stable_constant(1, alpha)
    # term-by-term integral of the cosine series: exact, no endpoint singularity to resolve
    for u in (0.3, 4.0):
        ref = 2 * c * mpmath.nsum(lambda k: (-1) ** (k + 1) * u ** (2 * k) / mpmath.factorial(2 * k)
                                  * b ** (2 * k - alpha) / (2 * k - alpha), [1, mpmath.inf])
        assert M.psi(m, u) == pytest.approx(float(ref), rel=1e-6)


def test_brownian_exponent():
    m = M.make_model("brownian", {"sigma": 0.5}, dimension=2)
    assert M.psi(m, 3.0) == pytest.approx(0.25 * 9)
    assert not m.has_jumps and m.is_exact_sampler


@settings(max_examples=40, deadline=None)
@given(u=st.floats(1e-4, 1e4), alpha=st.sampled_from([0.5, 1.0, 1.5]))
def test_psi_star_bounds_property(u, alpha):
    for fam, p in (("relativistic-stable", {"alpha": alpha, "m": 2.0}),
                   ("stable-sum", {"alphas": [alpha, 1.9], "weights": [1.0, 0.1]})):
        m = M.make_model(fam, p, dimension=2)
        ps, pstar = M.psi(m, u), M.psi_star(m, u)
        assert ps <= pstar * (1 + 1e-12)
        assert pstar <= math.pi ** 2 * ps


@settings(max_examples=25, deadline=None)
@given(a=st.floats(1e-3, 1e3), b=st.floats(1e-3, 1e3))
def test_psi_star_monotone(a, b):
    m = M.make_model("geometric-stable", {"alpha": 1.0}, dimension=1)
    lo, hi = sorted((a, b))
    assert M.psi_star(m, lo) <= M.psi_star(m, hi) * (1 + 1e-12)


def test_psi_star_equals_psi_for_increasing_exponent():
    m = M.make_model("isotropic-stable", {"alpha": 1.2}, dimension=3)
    u = np.array([0.01, 1.0, 100.0])
    np.testing.assert_allclose(M.psi_star(m, u), u ** 1.2, rtol=1e-12)


@pytest.mark.parametrize("family,params,msg", [
    ("isotropic-stable", {"alpha": 2.5}, "out of range"),
    ("isotropic-stable", {}, "missing parameter"),
    ("no-such-family", {}, "unknown family"),
    ("bernstein-mix", {"alpha1": 0.0, "alpha2": 0.0, "alpha3": 0.0, "alpha4": 1.0}, r"alpha1 \+ alpha2"),
    ("custom", {"nu": 3.0}, "callable"),
])
def test_invalid_models(family, params, msg):
    with pytest.raises(M.ModelError, match=msg):
        M.make_model(family, params, dimension=2)


def test_missing_dimension():
    with pytest.raises(M.ModelError, match="dimension"):
        M.make_model("isotropic-stable", {"alpha": 1.0})
    with pytest.raises(M.ModelError, match="positive integer"):
        M.make_model("isotropic-stable", {"alpha": 1.0}, dimension=0)


def test_dimension_from_params_and_spec_json():
    m = M.make_model("stable-sum", {"alphas": [0.5, 1.5], "d": 3})
    assert m.dimension == 3
    spec = json.loads(json.dumps(m.spec()))
    assert spec["family"] == "stable-sum" and spec["params"]["alphas"] == [0.5, 1.5]


def test_custom_density_psi_matches_stable():
    nu = lambda r: M.stable_constant(2, 1.0) * np.asarray(r, float) ** -3.0
    m = M.make_model("custom", {"nu": nu}, dimension=2)
    assert M.psi(m, 2.5) == pytest.approx(2.5, rel=1e-6)


def test_bernstein_mix_density_reproduces_exponent():
    m = M.make_model("bernstein-mix", {"alpha1": 0.5, "alpha3": 0.5, "m": 1.0}, dimension=2)
    u = np.array([1e-3, 0.1, 1.0, 10.0, 1e3])
    np.testing.assert_allclose(M.psi_quadrature(m, u), m.psi_closed(u), rtol=1e-5)
