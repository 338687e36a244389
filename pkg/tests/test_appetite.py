import math

import numpy as np
import pytest
from scipy import integrate

from allocperc.appetite import (
    AppetiteConfigError,
    AppetiteDistribution,
    moment_report,
    sample_appetite,
    sample_appetites,
)
from allocperc.geometry import replica_rng


def expected_truncated_exponential_mean(mean, floor):
    """Quadrature oracle for E[max(V, floor)] with V exponential."""

    def integrand(v):
        return max(v, floor) * math.exp(-v / mean) / mean

    head, _ = integrate.quad(integrand, 0.0, floor)
    tail, _ = integrate.quad(integrand, floor, np.inf)
    return head + tail


def test_constant_family():
    dist = AppetiteDistribution("constant", {"value": 1.0}, scale=0.5)
    assert sample_appetite(dist, replica_rng(0)) == 0.5


def test_zero_scale_is_zero():
    for family, params in [
        ("constant", {"value": 3.0}),
        ("exponential", {"mean": 1.0}),
        ("pareto", {"scale": 1.0, "index": 3.0}),
        ("lognormal", {"mu": 0.0, "sigma": 1.0}),
    ]:
        dist = AppetiteDistribution(family, params, scale=0.0)
        assert np.all(sample_appetites(dist, 100, replica_rng(1)) == 0.0)


def test_truncated_exponential_empirical_mean():
    dist = AppetiteDistribution("exponential", {"mean": 1.0}, scale=1.0, floor=0.2)
    samples = sample_appetites(dist, 100_000, replica_rng(2))
    want = expected_truncated_exponential_mean(1.0, 0.2)
    assert want == pytest.approx(0.2 + math.exp(-0.2), abs=1e-9)
    assert np.mean(samples) == pytest.approx(want, abs=0.01)


def test_samples_never_below_floor():
    dist = AppetiteDistribution("exponential", {"mean": 1.0}, scale=0.7, floor=0.3)
    samples = sample_appetites(dist, 10_000, replica_rng(3))
    assert np.all(samples >= 0.7 * 0.3)


def test_floor_monotone_pathwise():
    # same uniforms, larger floor -> samplewise >=
    lo = AppetiteDistribution("lognormal", {"mu": 0.0, "sigma": 0.5}, floor=0.1)
    hi = AppetiteDistribution("lognormal", {"mu": 0.0, "sigma": 0.5}, floor=0.8)
    u = replica_rng(4).random(5000)
    assert np.all(hi.quantile(u) >= lo.quantile(u))


def test_invalid_parameters_rejected():
    with pytest.raises(AppetiteConfigError):
        AppetiteDistribution("exponential", {"mean": -1.0})
    with pytest.raises(AppetiteConfigError):
        AppetiteDistribution("pareto", {"scale": 1.0})
    with pytest.raises(AppetiteConfigError):
        AppetiteDistribution("gamma", {})


def test_moment_report_constant():
    dist = AppetiteDistribution("constant", {"value": 2.0}, tail_exponent=1.0)
    rep = moment_report(dist)
    assert rep.mean == pytest.approx(2.0)
    assert rep.variance == pytest.approx(0.0)
    assert rep.upper_moment == pytest.approx(8.0)
    assert rep.finite


def test_moment_report_exponential_third_moment():
    # E[V^3] = Gamma(4) = 6 for a unit exponential
    dist = AppetiteDistribution("exponential", {"mean": 1.0}, tail_exponent=1.0)
    rep = moment_report(dist)
    assert rep.mean == pytest.approx(1.0, abs=1e-8)
    assert rep.variance == pytest.approx(1.0, abs=1e-7)
    assert rep.upper_moment == pytest.approx(6.0, abs=1e-6)


def test_moment_report_heavy_pareto_flags_divergence():
    dist = AppetiteDistribution("pareto", {"scale": 1.0, "index": 2.5}, tail_exponent=1.0)
    rep = moment_report(dist)
    assert not rep.finite
    assert rep.upper_moment == math.inf


def test_empirical_upper_moment_matches_report():
    dist = AppetiteDistribution("exponential", {"mean": 1.0}, floor=0.5, tail_exponent=1.0)
    rep = moment_report(dist)
    v = np.maximum(dist.base_quantile(replica_rng(6).random(100_000)), 0.5)
    emp = np.mean(v ** 3)
    assert abs(emp - rep.upper_moment) / rep.upper_moment < 0.1
