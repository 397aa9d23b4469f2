import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levy_exit_lab import model as M
from levy_exit_lab._numerics import log_grid, sphere_area
from levy_exit_lab.characteristics import (CharacteristicProfile, build_profile, h1, pruitt_h, pruitt_table,
                                           scaling_indices, script_I, script_J)
from levy_exit_lab.io import dumps_json
from levy_exit_lab.renewal import renewal_V


def _stable_KL(d, a):
    A = M.stable_constant(d, a)
    w = sphere_area(d)
    return w * A / (2 - a), w * A / a


def test_cauchy_line_pruitt_value():
    # K = L = 2/(pi r) on the line, so h(r) = 4/(pi r)
    m = M.make_model("isotropic-stable", {"alpha": 1.0}, dimension=1)
    for r in (1e-3, 1.0, 250.0):
        v = pruitt_h(m, r)
        assert v.K == pytest.approx(2 / (math.pi * r), rel=1e-9)
        assert v.L == pytest.approx(2 / (math.pi * r), rel=1e-9)
        assert v.h == pytest.approx(4 / (math.pi * r), rel=1e-9)


@pytest.mark.parametrize("d,a", [(2, 0.5), (3, 1.5)])
def test_stable_pruitt_closed_form(d, a):
    m = M.make_model("isotropic-stable", {"alpha": a}, dimension=d)
    K, L = _stable_KL(d, a)
    v = pruitt_h(m, 0.3)
    assert v.K == pytest.approx(K * 0.3 ** -a, rel=1e-8)
    assert v.L == pytest.approx(L * 0.3 ** -a, rel=1e-8)


def test_brownian_pruitt():
    m = M.make_model("brownian", {"sigma": 2.0}, dimension=3)
    assert pruitt_h(m, 0.5).h == pytest.approx(4 * 3 / 0.25)
    assert h1(m, 0.5) == pytest.approx(4 / 0.25)


@settings(max_examples=30, deadline=None)
@given(r=st.floats(1e-3, 1e3), lam=st.floats(1.1, 50.0))
def test_stable_scaling_of_h(r, lam):
    m = M.make_model("isotropic-stable", {"alpha": 1.3}, dimension=2)
    assert pruitt_h(m, lam * r).h == pytest.approx(lam ** -1.3 * pruitt_h(m, r).h, rel=1e-7)


_TEMPERED = M.make_model("tempered-stable", {"alpha": 0.8, "lam": 2.0}, dimension=2)


@settings(max_examples=25, deadline=None)
@given(r=st.floats(1e-3, 1e2), f=st.floats(1.01, 10.0))
def test_h_nonincreasing_and_h1_between(r, f):
    a, b = pruitt_h(_TEMPERED, r).h, pruitt_h(_TEMPERED, f * r).h
    assert b <= a * (1 + 1e-9)
    v = h1(_TEMPERED, r)
    assert a / 2 * (1 - 1e-9) <= v <= a * (1 + 1e-9)


def test_script_J_stable_constant():
    # L(rho) V(rho)^2 is constant for stable laws, so J equals that constant
    d, a = 1, 1.0
    m = M.make_model("isotropic-stable", {"alpha": a}, dimension=d)
    V = lambda x: np.asarray(x) ** (a / 2) / math.gamma(1 + a / 2)
    _, L = _stable_KL(d, a)
    j = script_J(m, 2.0, V)
    assert j.value == pytest.approx(L / math.gamma(1 + a / 2) ** 2, rel=1e-8)
    assert not j.degenerate
    i = script_I(m, 2.0, V)
    assert 0 < i.value < j.value


def test_script_J_degenerate_for_truncated_jumps():
    m = M.make_model("truncated-stable", {"alpha": 1.5, "radius": 1.0}, dimension=1)
    V = lambda x: np.sqrt(np.asarray(x))
    assert script_J(m, 10.0, V).degenerate
    assert not script_J(m, 0.5, V).degenerate


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_scaling_recovers_stable_index(alpha):
    m = M.make_model("isotropic-stable", {"alpha": alpha}, dimension=1)
    sc = scaling_indices(m, (1e-3, 1e3))
    assert sc.wlsc.alpha == pytest.approx(alpha, abs=0.01)
    assert sc.wusc.alpha == pytest.approx(alpha, abs=0.01)
    assert sc.wlsc.constant == pytest.approx(1.0, abs=0.02)
    assert sc.wusc.constant == pytest.approx(1.0, abs=0.02)


def test_scaling_brownian_has_no_upper_index():
    m = M.make_model("brownian", {}, dimension=1)
    sc = scaling_indices(m, (1e-3, 1e3))
    assert sc.wusc is None and sc.wlsc.alpha == pytest.approx(2.0, abs=1e-6)


def test_scaling_relativistic_restricted_range():
    m = M.make_model("relativistic-stable", {"alpha": 1.0, "m": 1.0}, dimension=1)
    sc = scaling_indices(m, (1e-3, 1e3), theta=10.0)
    # at large u psi ~ u, at small u psi ~ u^2 / 2
    assert sc.wlsc.alpha == pytest.approx(1.0, abs=0.1)
    # over the full range the local index reaches 2, so no upper index below 2 exists
    assert scaling_indices(m, (1e-3, 1e3)).wusc is None


def test_scaling_range_validation():
    m = M.make_model("isotropic-stable", {"alpha": 1.0}, dimension=1)
    with pytest.raises(ValueError):
        scaling_indices(m, (1.0, 10.0))


def test_pruitt_table_matches_direct():
    m = M.make_model("layered-stable", {"alpha": 1.5, "alpha1": 0.8, "radius": 1.0}, dimension=2)
    t = pruitt_table(m, 1e-3, 1e3, 10)
    for k in (0, 17, len(t.s) - 1):
        v = pruitt_h(m, float(t.s[k]))
        assert t.h[k] == pytest.approx(v.h, rel=1e-8)
        assert t.L[k] == pytest.approx(v.L, rel=1e-8)


def test_profile_round_trip(tmp_path):
    m = M.make_model("tempered-stable", {"alpha": 1.5}, dimension=2)
    table = renewal_V(m, log_grid(1e-5, 1e3, 6))
    prof = build_profile(m, log_grid(1e-2, 10, 2), table=table, u_range=(1e-3, 1e3))
    prof.to_json(tmp_path / "p.json")
    back = CharacteristicProfile.from_json(tmp_path / "p.json")
    assert dumps_json(back.to_dict()) == (tmp_path / "p.json").read_text()
    np.testing.assert_array_equal(back.h, prof.h)
    prof.to_csv(tmp_path / "p.csv")
    header = (tmp_path / "p.csv").read_text().splitlines()[0].split(",")
    assert header[:5] == ["r", "K", "L", "h", "h1"] and "hV2" in header
