import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specshare import analytic, geometry, simulate
from specshare.model import ScenarioParams, ServiceMode, validate
from specshare.quadrature import (
    DEFAULT_SPEC,
    QuadratureError,
    QuadratureSpec,
    cdf_moment_integrals,
    convolve_cdf_pdf,
    integrate,
    safe_exp_neg,
)

PARAMS = validate(ScenarioParams())


def test_integrate_polynomial():
    assert integrate(lambda x: x, 0.0, 1.0) == pytest.approx(0.5, abs=1e-12)


def test_integrate_sine():
    assert integrate(math.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-10)


def test_integrate_empty_interval():
    assert integrate(math.sin, 1.0, 1.0) == 0.0


def test_integrate_rejects_reversed_bounds():
    with pytest.raises(ValueError):
        integrate(math.sin, 1.0, 0.0)


def test_integrate_reports_non_convergence():
    spec = QuadratureSpec(rel_tol=1e-12, abs_tol=1e-14, max_subdivisions=1)
    with pytest.raises(QuadratureError):
        integrate(lambda x: math.sin(1.0 / x), 1e-6, 1.0, spec)


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(max_subdivisions=0)


def test_service_cdf_integral_matches_dense_riemann_sum():
    # independent oracle: 1e7-point midpoint Riemann sum of the proprietary
    # service-delay CDF over the deadline window
    t_out = PARAMS.t_out
    n = 10_000_000
    midpoints = (np.arange(n) + 0.5) * (t_out / n)
    riemann = float(np.sum(analytic.service_cdf(
        PARAMS, ServiceMode.PROPRIETARY_ONLY, midpoints))) * (t_out / n)
    adaptive = integrate(
        lambda t: float(analytic.service_cdf(PARAMS, ServiceMode.PROPRIETARY_ONLY, t)),
        0.0, t_out)
    assert adaptive == pytest.approx(riemann, rel=1e-8)


def test_cdf_moment_integrals_constant_one():
    t_out = 0.01
    i1, i2, i3 = cdf_moment_integrals(lambda t: 1.0, t_out)
    assert i1 == pytest.approx(t_out, rel=1e-12)
    assert i2 == pytest.approx(t_out ** 2 / 2, rel=1e-12)
    assert i3 == pytest.approx(t_out ** 3 / 3, rel=1e-12)


def test_cdf_moment_integrals_constant_zero():
    assert cdf_moment_integrals(lambda t: 0.0, 0.01) == (0.0, 0.0, 0.0)


def test_cdf_moment_integrals_linear_cdf():
    i1, i2, i3 = cdf_moment_integrals(lambda t: t, 1.0)
    assert (i1, i2, i3) == pytest.approx((0.5, 1.0 / 3.0, 0.25), rel=1e-10)


def test_cdf_moment_integrals_ordering():
    # I2 <= t_out * I1 and I3 <= t_out * I2 for any CDF-like integrand
    F = lambda t: float(analytic.service_cdf(PARAMS, ServiceMode.PROPRIETARY_ONLY, t))
    t_out = PARAMS.t_out
    i1, i2, i3 = cdf_moment_integrals(F, t_out)
    assert i2 <= t_out * i1 * (1 + 1e-12)
    assert i3 <= t_out * i2 * (1 + 1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_integrate_linearity(a, b):
    f = lambda x: x * x
    g = lambda x: math.cos(3.0 * x)
    combined = integrate(lambda x: a * f(x) + b * g(x), 0.0, 2.0)
    separate = a * integrate(f, 0.0, 2.0) + b * integrate(g, 0.0, 2.0)
    scale = max(abs(combined), abs(separate), 1.0)
    assert abs(combined - separate) <= 10 * DEFAULT_SPEC.rel_tol * scale


def test_convolve_zero_argument():
    assert convolve_cdf_pdf(lambda t: 1.0, lambda u: 1.0, 0.0) == 0.0


def test_convolve_with_saturated_cdf_returns_pdf_mass():
    # F1 == 1 turns the convolution into the plain mass of f2 below z
    pdf = lambda u: math.exp(-u)  # unit-mean exponential density
    value = convolve_cdf_pdf(lambda t: 1.0, pdf, 20.0)
    assert value == pytest.approx(1.0, abs=1e-8)


def test_convolve_monotone_and_bounded():
    f1 = analytic._scalar_shared_cdf(PARAMS)
    f2 = analytic._scalar_proprietary_pdf(PARAMS)
    cutoff = analytic.proprietary_tail_cutoff(PARAMS)
    zs = np.linspace(1e6, 1e9, 60)
    values = [convolve_cdf_pdf(f1, f2, z, u_max=cutoff, u_tail=1e-12) for z in zs]
    assert all(0.0 <= v <= 1.0 for v in values)
    assert all(b >= a - 1e-10 for a, b in zip(values, values[1:]))


def test_convolve_matches_capacity_sum_samples():
    # Monte Carlo oracle: empirical CDF of sampled shared + proprietary
    # capacity sums against the convolution integral
    rng = np.random.default_rng(2024)
    capacities = geometry.sample_total_capacities(PARAMS, ServiceMode.COMBINED,
                                                  100_000, rng)
    emp = simulate.EmpiricalDistribution(capacities)
    zs = np.quantile(capacities, np.linspace(0.001, 0.999, 400))
    worst = max(abs(analytic.combined_capacity_cdf(PARAMS, float(z)) - emp.cdf(float(z)))
                for z in zs)
    assert worst <= 0.01


def test_safe_exp_neg_values():
    assert safe_exp_neg(0.0) == 1.0
    assert safe_exp_neg(math.inf) == 0.0
    assert safe_exp_neg(1000.0) == 0.0
    assert safe_exp_neg(1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)


def test_safe_exp_neg_array():
    out = safe_exp_neg(np.array([0.0, 5.0, 800.0, np.inf]))
    assert out[0] == 1.0 and out[-1] == 0.0 and out[2] == 0.0
    assert not np.any(np.isnan(out))


@given(st.floats(min_value=0.0, max_value=1e6), st.floats(min_value=0.0, max_value=1e6))
def test_safe_exp_neg_monotone_in_unit_interval(x, y):
    fx, fy = safe_exp_neg(x), safe_exp_neg(y)
    assert 0.0 <= fx <= 1.0
    if x <= y:
        assert fx >= fy
