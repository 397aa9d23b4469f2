import math

import numba as nb
import numpy as np
import pytest
from scipy import stats

from levy_exit_lab import rng as R


def test_splitmix64_known_answer():
    # reference values of the public SplitMix64 generator for seed 1234567
    expected = [6457827717110365317, 3203168211198807973, 9817491932198370423,
                4593380528125082431, 16408922859458223821]
    assert [int(v) for v in R.splitmix64(1234567, 5)] == expected


def test_streams_are_distinct_and_reproducible():
    a = R.replica_uniforms(7, 0, 1000)
    b = R.replica_uniforms(7, 1, 1000)
    c = R.replica_uniforms(8, 0, 1000)
    np.testing.assert_array_equal(a, R.replica_uniforms(7, 0, 1000))
    assert not np.array_equal(a, b) and not np.array_equal(a, c)
    assert a.min() > 0.0 and a.max() < 1.0
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.1


@nb.njit
def _draw(kind, seed, n, param):
    s = R.stream_state(np.uint64(seed), np.uint64(0))
    out = np.empty(n)
    for i in range(n):
        if kind == 0:
            out[i] = R.normal(s)
        elif kind == 1:
            out[i] = R.exponential(s)
        elif kind == 2:
            out[i] = R.positive_stable(s, param)
        else:
            out[i] = R.poisson(s, param)
    return out


def test_ziggurat_normal():
    z = _draw(0, 3, 400_000, 0.0)
    assert abs(z.mean()) < 4 / math.sqrt(z.size)
    assert abs(z.var() - 1) < 0.01
    assert stats.kstest(z, "norm").pvalue > 1e-3
    # tail beyond the base strip
    assert np.mean(np.abs(z) > 3.5) == pytest.approx(2 * stats.norm.sf(3.5), rel=0.2)


def test_exponential():
    e = _draw(1, 4, 200_000, 0.0)
    assert stats.kstest(e, "expon").pvalue > 1e-3


@pytest.mark.parametrize("a", [0.25, 0.5, 0.75])
def test_positive_stable_laplace_transform(a):
    s = _draw(2, 5, 200_000, a)
    for lam in (0.5, 1.0, 3.0):
        emp = np.mean(np.exp(-lam * s))
        assert emp == pytest.approx(math.exp(-lam ** a), abs=4 * 0.5 / math.sqrt(s.size))


def test_positive_stable_half_is_levy():
    # a = 1/2 with transform exp(-sqrt(lam)) is the Levy law with scale 1/2
    s = _draw(2, 6, 100_000, 0.5)
    assert stats.kstest(s, stats.levy(scale=0.5).cdf).pvalue > 1e-3


@pytest.mark.parametrize("mu", [0.3, 4.0, 11.9, 12.0, 55.0, 900.0])
def test_poisson_moments_and_pmf(mu):
    k = _draw(3, 7, 200_000, mu)
    assert k.mean() == pytest.approx(mu, abs=5 * math.sqrt(mu / k.size))
    assert k.var() == pytest.approx(mu, rel=0.03)
    vals, counts = np.unique(k.astype(int), return_counts=True)
    lo, hi = stats.poisson.ppf([1e-4, 1 - 1e-4], mu)
    keep = (vals >= lo) & (vals <= hi)
    exp = stats.poisson.pmf(vals[keep], mu) * k.size
    chi = np.sum((counts[keep] - exp) ** 2 / exp)
    assert stats.chi2.sf(chi, keep.sum() - 1) > 1e-4
