"""Closed-form results: outage probabilities, the shared-band power budget,
service-delay CDFs for all three spectrum modes, truncated service moments,
and M/G/1 mean delay and jitter.

Every formula here has an independent Monte Carlo counterpart in
``specshare.simulate``; the test suite holds the two sides together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .model import ScenarioParams, ServiceMode, with_updates
from .quadrature import (
    DEFAULT_SPEC,
    QuadratureSpec,
    cdf_moment_integrals,
    convolve_cdf_pdf,
    safe_exp_neg,
)

# f2 mass ignored beyond the convolution cutoff
_CONV_TAIL = 1e-12


class UnstableQueueError(RuntimeError):
    """Arrival rate times mean service delay is at least one."""


class InfeasiblePowerError(RuntimeError):
    """No shared-band transmit power satisfies the outage tolerance."""


class PowerBudget(NamedTuple):
    power: float     # admissible shared-band power, capped at p_max (W)
    bound: float     # raw outage-tolerance bound before the cap (W)
    feasible: bool   # bound > 0; False means even zero power violates the tolerance
    clamped: bool    # the p_max cap is the binding constraint


class WaitingTime(NamedTuple):
    mean: float      # s
    variance: float  # s^2


@dataclass(frozen=True)
class TruncatedMoments:
    """Moments of the deadline-truncated service delay min(S, t_out)."""

    m1: float         # s
    m2: float         # s^2
    m3: float         # s^3
    fail_prob: float  # P(raw service delay >= t_out)


@dataclass(frozen=True)
class DelayReport:
    """Steady-state delay metrics of the MTC downlink queue."""

    mean_service: float  # E[min(S, t_out)] (s)
    mean_waiting: float  # mean queueing delay (s)
    mean_delay: float    # mean sojourn = service + waiting (s)
    jitter: float        # sojourn variance: service variance + waiting variance (s^2)
    load: float          # arrival rate x mean service, < 1
    fail_prob: float     # deadline-miss probability per packet


def _interference_coeff(lambda_h: float, alpha: float) -> float:
    # multiplies distance^2 * s^(2/alpha) in every PPP Laplace-transform exponent
    return lambda_h * 2.0 * math.pi ** 2 / (alpha * math.sin(2.0 * math.pi / alpha))


def _htc_exponent(params: ScenarioParams) -> float:
    """Exponent of the licensed network's success probability (noise + interference)."""
    p = params
    noise_term = p.x0 ** p.alpha * p.theta_h * p.noise_psd * p.b_h / (p.n_h * p.p_h)
    interference_term = _interference_coeff(p.lambda_h, p.alpha) \
        * p.x0 ** 2 * p.theta_h ** (2.0 / p.alpha)
    return noise_term + interference_term


def outage_no_sharing(params: ScenarioParams) -> float:
    """Outage probability of the typical licensed user, licensed traffic only."""
    return -math.expm1(-_htc_exponent(params))


def outage_with_sharing(params: ScenarioParams) -> float:
    """Outage probability of the typical licensed user with the MTC BS active.

    The single cross link at distance y0 contributes a 1/(1 + c) prefactor to
    the success probability; everything else matches the no-sharing form.
    """
    p = params
    cross = p.x0 ** p.alpha * p.theta_h * (p.p_m_shared / p.p_h) * p.y0 ** (-p.alpha)
    return -math.expm1(-(_htc_exponent(params) + math.log1p(cross)))


def outage_increment(params: ScenarioParams) -> float:
    """Relative outage increase caused by sharing: (P' - P) / P."""
    base = outage_no_sharing(params)
    if base == 0.0:
        raise ValueError("baseline outage probability is zero; relative increment undefined")
    return (outage_with_sharing(params) - base) / base


def max_mbs_power(params: ScenarioParams) -> PowerBudget:
    """Largest shared-band MTC power keeping licensed outage within epsilon.

    The returned bound is the raw tolerance limit (it may exceed p_max or be
    nonpositive); power is the usable value after the p_max cap.
    """
    eps = params.epsilon
    if eps is None:
        raise ValueError("epsilon must be set to derive a power budget")
    if not 0.0 < eps < 1.0:
        raise ValueError("epsilon must lie in (0,1)")
    p = params
    if p.theta_h == 0.0:
        bound = math.inf  # outage is identically zero, any power is admissible
    else:
        bracket = 1.0 / ((1.0 - eps) * math.exp(_htc_exponent(params))) - 1.0
        bound = bracket * p.x0 ** (-p.alpha) * (p.p_h / p.theta_h) * p.y0 ** p.alpha
    feasible = bound > 0.0
    power = min(p.p_max, bound) if feasible else 0.0
    return PowerBudget(power, bound, feasible, feasible and bound >= p.p_max)


def apply_power_budget(params: ScenarioParams) -> ScenarioParams:
    """Replace the shared-band power with the epsilon-capped budget.

    No-op when epsilon is unset; raises InfeasiblePowerError when the
    tolerance is below the no-sharing outage floor.
    """
    if params.epsilon is None:
        return params
    budget = max_mbs_power(params)
    if not budget.feasible:
        raise InfeasiblePowerError(
            f"outage tolerance {params.epsilon} is below the no-sharing outage "
            f"{outage_no_sharing(params):.6g}; no shared-band power is admissible")
    return with_updates(params, p_m_shared=budget.power)


def _as_given(values: np.ndarray, scalar_input: bool):
    return float(values) if scalar_input else values


def _tail_exponent(beta, c_noise: float, c_int: float, two_over_alpha: float):
    """c_noise*beta + c_int*beta^(2/alpha) with exact handling of beta = inf."""
    beta = np.asarray(beta, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        noise_term = np.where(np.isinf(beta), math.inf if c_noise > 0 else 0.0,
                              c_noise * beta)
        interference_term = np.where(np.isinf(beta), math.inf if c_int > 0 else 0.0,
                                     c_int * np.power(beta, two_over_alpha))
    return noise_term + interference_term


def _shared_coeffs(params: ScenarioParams) -> tuple[float, float]:
    p = params
    c_noise = p.y0 ** p.alpha * p.noise_psd * p.b_h / (p.p_m_shared * p.n_m)
    c_int = _interference_coeff(p.lambda_h, p.alpha) * p.y0 ** 2 \
        * (p.p_h / p.p_m_shared) ** (2.0 / p.alpha)
    return c_noise, c_int


def _proprietary_coeff(params: ScenarioParams) -> float:
    p = params
    return p.y0 ** p.alpha * p.noise_psd * p.b_m / (p.p_m * p.n_m)


def capacity_cdf_shared(params: ScenarioParams, tau):
    """CDF of the shared-band capacity B_h log2(1 + SINR) at tau bits/s."""
    scalar = np.isscalar(tau)
    tau = np.asarray(tau, dtype=float)
    with np.errstate(over="ignore"):
        beta = np.exp2(tau / params.b_h) - 1.0
    c_noise, c_int = _shared_coeffs(params)
    exponent = _tail_exponent(beta, c_noise, c_int, 2.0 / params.alpha)
    return _as_given(1.0 - safe_exp_neg(exponent), scalar)


def capacity_cdf_proprietary(params: ScenarioParams, tau):
    """CDF of the proprietary-band capacity B_m log2(1 + SNR) at tau bits/s."""
    scalar = np.isscalar(tau)
    tau = np.asarray(tau, dtype=float)
    with np.errstate(over="ignore"):
        beta = np.exp2(tau / params.b_m) - 1.0
    exponent = _tail_exponent(beta, _proprietary_coeff(params), 0.0, 1.0)
    return _as_given(1.0 - safe_exp_neg(exponent), scalar)


def capacity_pdf_proprietary(params: ScenarioParams, tau):
    """Density of the proprietary-band capacity; integrates to one.

    Computed in log space so the double-exponential tail underflows cleanly
    to zero instead of producing inf * 0.
    """
    scalar = np.isscalar(tau)
    tau = np.asarray(tau, dtype=float)
    coeff = _proprietary_coeff(params)
    if coeff == 0.0:  # no noise: capacity is almost surely infinite
        return _as_given(np.zeros_like(tau), scalar)
    ln2 = math.log(2.0)
    with np.errstate(over="ignore"):
        arg = coeff * (np.exp2(tau / params.b_m) - 1.0)
    log_density = math.log(coeff * ln2 / params.b_m) + tau * (ln2 / params.b_m) - arg
    density = np.where(log_density < -745.0, 0.0, np.exp(np.maximum(log_density, -745.0)))
    return _as_given(density, scalar)


def proprietary_tail_cutoff(params: ScenarioParams, tail: float = _CONV_TAIL) -> float:
    """Capacity beyond which the proprietary-band distribution holds < tail mass."""
    coeff = _proprietary_coeff(params)
    if coeff == 0.0:
        return math.inf
    return params.b_m * math.log2(1.0 + math.log(1.0 / tail) / coeff)


def _scalar_shared_cdf(params: ScenarioParams):
    """Plain-float version of capacity_cdf_shared for quadrature integrands."""
    c_noise, c_int = _shared_coeffs(params)
    two_over_alpha = 2.0 / params.alpha
    inv_bh = 1.0 / params.b_h
    saturation = 0.0 if (c_noise == 0.0 and c_int == 0.0) else 1.0

    def F1(tau: float) -> float:
        e = tau * inv_bh
        if e > 1020.0:  # 2**e overflows; the exponent is astronomically large
            return saturation
        beta = 2.0 ** e - 1.0
        x = c_noise * beta + c_int * beta ** two_over_alpha
        if x >= 746.0:
            return saturation
        return 1.0 - math.exp(-x)

    return F1


def _scalar_proprietary_pdf(params: ScenarioParams):
    """Plain-float version of capacity_pdf_proprietary for quadrature integrands."""
    coeff = _proprietary_coeff(params)
    if coeff == 0.0:
        return lambda u: 0.0
    inv_bm = 1.0 / params.b_m
    ln2 = math.log(2.0)
    log_prefactor = math.log(coeff * ln2 * inv_bm)

    def f2(u: float) -> float:
        e = u * inv_bm
        if e > 1020.0:
            return 0.0
        log_density = log_prefactor + e * ln2 - coeff * (2.0 ** e - 1.0)
        if log_density < -745.0:
            return 0.0
        return math.exp(log_density)

    return f2


def combined_capacity_cdf(params: ScenarioParams, z: float,
                          spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """CDF of the summed shared + proprietary capacity at z bits/s."""
    return convolve_cdf_pdf(
        _scalar_shared_cdf(params), _scalar_proprietary_pdf(params),
        z, spec, u_max=proprietary_tail_cutoff(params), u_tail=_CONV_TAIL)


def service_cdf(params: ScenarioParams, mode: ServiceMode, t,
                spec: QuadratureSpec = DEFAULT_SPEC):
    """CDF of the per-packet service delay at time t for the given mode.

    Equals one minus the mode's capacity CDF evaluated at the required rate
    u_m * n_m / t; returns exactly zero as t -> 0+.
    """
    scalar = np.isscalar(t)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("service delay argument must be nonnegative")
    with np.errstate(divide="ignore"):
        z = np.where(t > 0, params.u_m * params.n_m / t, math.inf)

    if mode is ServiceMode.SHARED_ONLY:
        with np.errstate(over="ignore"):
            beta = np.exp2(z / params.b_h) - 1.0
        c_noise, c_int = _shared_coeffs(params)
        cdf = safe_exp_neg(_tail_exponent(beta, c_noise, c_int, 2.0 / params.alpha))
    elif mode is ServiceMode.PROPRIETARY_ONLY:
        with np.errstate(over="ignore"):
            beta = np.exp2(z / params.b_m) - 1.0
        cdf = safe_exp_neg(_tail_exponent(beta, _proprietary_coeff(params), 0.0, 1.0))
    else:
        cdf = np.array([1.0 - combined_capacity_cdf(params, zi, spec)
                        for zi in np.atleast_1d(z)]).reshape(z.shape)
    return _as_given(np.asarray(cdf), scalar)


@lru_cache(maxsize=256)
def truncated_service_moments(params: ScenarioParams, mode: ServiceMode,
                              spec: QuadratureSpec = DEFAULT_SPEC) -> TruncatedMoments:
    """First three moments of min(S, t_out) plus the deadline-miss probability.

    The k-th truncated moment is t_out^k minus k times the integral of
    t^(k-1) F(t) over [0, t_out]. Results are cached; params are immutable.
    """
    F = lambda t: float(service_cdf(params, mode, t, spec))
    i1, i2, i3 = cdf_moment_integrals(F, params.t_out, spec)
    t_out = params.t_out
    fail = min(1.0, max(0.0, 1.0 - F(t_out)))
    return TruncatedMoments(
        m1=max(0.0, t_out - i1),
        m2=max(0.0, t_out ** 2 - 2.0 * i2),
        m3=max(0.0, t_out ** 3 - 3.0 * i3),
        fail_prob=fail,
    )


def mg1_waiting(moments: TruncatedMoments, lambda_md: float) -> WaitingTime:
    """Mean and variance of the FCFS M/G/1 waiting delay.

    Mean is lambda * m2 / (2 (1 - rho)); the variance adds the third-moment
    term lambda * m3 / (3 (1 - rho)) to the squared mean.
    """
    if lambda_md < 0:
        raise ValueError("arrival rate must be nonnegative")
    if lambda_md == 0.0:
        return WaitingTime(0.0, 0.0)
    rho = lambda_md * moments.m1
    if rho >= 1.0:
        raise UnstableQueueError(
            f"queue unstable: load {rho:.6g} >= 1 "
            f"(lambda_md={lambda_md:.6g}/s, mean service {moments.m1:.6g} s)")
    mean = lambda_md * moments.m2 / (2.0 * (1.0 - rho))
    variance = mean * mean + lambda_md * moments.m3 / (3.0 * (1.0 - rho))
    return WaitingTime(mean, variance)


def delay_report(params: ScenarioParams, mode: ServiceMode,
                 spec: QuadratureSpec = DEFAULT_SPEC) -> DelayReport:
    """Mean delay and jitter of the downlink queue in the given mode.

    When epsilon is set and the mode transmits on the shared band, the
    shared-band power is first capped by the outage-tolerance budget.
    """
    effective = params
    if mode is not ServiceMode.PROPRIETARY_ONLY and params.epsilon is not None:
        effective = apply_power_budget(params)
    tm = truncated_service_moments(effective, mode, spec)
    wt = mg1_waiting(tm, effective.lambda_md)
    service_variance = max(0.0, tm.m2 - tm.m1 ** 2)
    return DelayReport(
        mean_service=tm.m1,
        mean_waiting=wt.mean,
        mean_delay=tm.m1 + wt.mean,
        jitter=service_variance + wt.variance,
        load=effective.lambda_md * tm.m1,
        fail_prob=tm.fail_prob,
    )
