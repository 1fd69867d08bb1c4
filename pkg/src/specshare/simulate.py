"""Monte Carlo oracles: outage estimation over interferer fields, empirical
service-delay distributions, and a deadline-truncated FCFS M/G/1 queue.

These estimators share no code path with the closed forms in
``specshare.analytic``; agreement between the two is the package's core
correctness argument.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .model import ScenarioParams, ServiceMode

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProbEstimate:
    """Binomial frequency estimate with its standard error."""

    mean: float
    std_error: float
    n_trials: int


@dataclass(frozen=True)
class QueueStats:
    """Steady-state statistics of one simulated queue run."""

    mean_sojourn: float       # s
    sojourn_variance: float   # s^2, unbiased over post-warmup packets
    mean_waiting: float       # s
    fail_fraction: float      # fraction of packets missing the deadline
    n_packets: int            # total packets simulated (warmup included)
    warmup_discarded: int     # leading packets excluded from statistics


def estimate_outage_mc(params: ScenarioParams, sharing: bool, n_trials: int,
                       rng: np.random.Generator) -> ProbEstimate:
    """Estimate licensed-user outage probability over fresh interferer fields.

    Each trial draws the PPP field, the serving-link fading, and the cross-link
    fading; the cross draw happens whether or not sharing is enabled so that
    two runs from identically seeded generators are coupled trial by trial.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    p = params
    interference = geometry.sample_interference_batch(
        p.p_h, p.lambda_h, p.mc_radius, p.alpha, n_trials, rng)
    h0 = rng.exponential(size=n_trials)
    g0 = rng.exponential(size=n_trials)

    denominator = interference + p.noise_psd * p.b_h / p.n_h
    if sharing:
        denominator = denominator + p.p_m_shared * p.y0 ** (-p.alpha) * g0
    signal = p.p_h * p.x0 ** (-p.alpha) * h0
    outages = int(np.count_nonzero(signal < p.theta_h * denominator))

    mean = outages / n_trials
    return ProbEstimate(mean, math.sqrt(mean * (1.0 - mean) / n_trials), n_trials)


class EmpiricalDistribution:
    """Sorted i.i.d. sample exposing CDF evaluation and truncated moments."""

    def __init__(self, samples):
        self.samples = np.sort(np.asarray(samples, dtype=float))
        self.n = int(self.samples.size)
        if self.n == 0:
            raise ValueError("empirical distribution needs at least one sample")

    def cdf(self, t):
        """Empirical CDF, right-continuous; accepts scalars or arrays."""
        positions = np.searchsorted(self.samples, np.asarray(t, dtype=float),
                                    side="right") / self.n
        return float(positions) if positions.ndim == 0 else positions

    def truncated_moment(self, order: int, cap: float) -> float:
        """Sample mean of min(sample, cap) ** order."""
        return float(np.mean(np.minimum(self.samples, cap) ** order))

    def ks_distance(self, cdf) -> float:
        """Sup-norm distance to a reference CDF, evaluated at every jump."""
        reference = np.asarray(cdf(self.samples), dtype=float)
        upper = np.arange(1, self.n + 1) / self.n
        return float(np.max(np.maximum(np.abs(reference - upper),
                                       np.abs(reference - upper + 1.0 / self.n))))


def empirical_service_distribution(params: ScenarioParams, mode: ServiceMode,
                                   n: int, rng: np.random.Generator) -> EmpiricalDistribution:
    """n i.i.d. per-packet service delays, wrapped for CDF and moment queries."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return EmpiricalDistribution(geometry.sample_service_delays(params, mode, n, rng))


def lindley_waits(arrival_times, services) -> np.ndarray:
    """FCFS waiting time of each packet from arrival times and service times.

    Solves the waiting-time recursion w[i] = max(0, w[i-1] + s[i-1] - a[i] + a[i-1])
    in closed form as a running maximum of cumulative sums.
    """
    arrivals = np.asarray(arrival_times, dtype=float)
    services = np.asarray(services, dtype=float)
    if arrivals.shape != services.shape:
        raise ValueError("arrival and service arrays must have equal length")
    if arrivals.size == 0:
        return np.empty(0)
    increments = services[:-1] - np.diff(arrivals)
    cumulative = np.concatenate(([0.0], np.cumsum(increments)))
    return cumulative - np.minimum.accumulate(cumulative)


def queue_stats_from_trace(interarrivals, raw_services, t_out: float,
                           warmup: int) -> QueueStats:
    """Statistics of an FCFS single-server run with deadline truncation.

    A packet whose raw service delay reaches t_out is a deadline miss but
    still occupies the server for exactly t_out, matching the truncated
    moments the closed forms use.
    """
    interarrivals = np.asarray(interarrivals, dtype=float)
    raw = np.asarray(raw_services, dtype=float)
    n = raw.size
    if interarrivals.size != n:
        raise ValueError("interarrival and service arrays must have equal length")
    if not 0 <= warmup < n:
        raise ValueError(f"warmup must lie in [0, n), got {warmup} of {n}")

    effective = np.minimum(raw, t_out)
    waits = lindley_waits(np.cumsum(interarrivals), effective)
    sojourns = waits + effective

    kept = sojourns[warmup:]
    variance = float(kept.var(ddof=1)) if kept.size > 1 else 0.0
    return QueueStats(
        mean_sojourn=float(kept.mean()),
        sojourn_variance=variance,
        mean_waiting=float(waits[warmup:].mean()),
        fail_fraction=float(np.mean(raw[warmup:] >= t_out)),
        n_packets=int(n),
        warmup_discarded=int(warmup),
    )


@dataclass(frozen=True)
class QueueErrorBars:
    """Standard errors of the post-warmup sojourn mean and variance.

    Moment-based, treating packets as independent; autocorrelation in heavy
    traffic makes these slightly optimistic.
    """

    se_mean_sojourn: float
    se_sojourn_variance: float


def _simulate_queue(params: ScenarioParams, mode: ServiceMode, n_packets: int,
                    rng: np.random.Generator, warmup_frac: float):
    if params.lambda_md <= 0:
        raise ValueError("lambda_md must be positive to drive arrivals")
    if n_packets < 1:
        raise ValueError("n_packets must be at least 1")
    arrival_rng, service_rng = rng.spawn(2)
    interarrivals = arrival_rng.exponential(1.0 / params.lambda_md, size=n_packets)
    raw = geometry.sample_service_delays(params, mode, n_packets, service_rng)

    warmup = min(int(round(warmup_frac * n_packets)), n_packets - 1)
    observed_load = params.lambda_md * float(np.minimum(raw, params.t_out).mean())
    if observed_load >= 1.0:
        logger.warning("observed load %.3f >= 1; queue statistics will not converge",
                       observed_load)

    effective = np.minimum(raw, params.t_out)
    waits = lindley_waits(np.cumsum(interarrivals), effective)
    sojourns = waits + effective
    kept = sojourns[warmup:]
    variance = float(kept.var(ddof=1)) if kept.size > 1 else 0.0
    stats = QueueStats(
        mean_sojourn=float(kept.mean()),
        sojourn_variance=variance,
        mean_waiting=float(waits[warmup:].mean()),
        fail_fraction=float(np.mean(raw[warmup:] >= params.t_out)),
        n_packets=int(n_packets),
        warmup_discarded=int(warmup),
    )
    return stats, kept


def run_mg1(params: ScenarioParams, mode: ServiceMode, n_packets: int,
            rng: np.random.Generator, warmup_frac: float = 0.1) -> QueueStats:
    """Simulate the MTC downlink queue: Poisson arrivals, fresh per-packet
    service delays, FCFS, deadline truncation.

    Arrivals and service draws come from independent sub-streams of the given
    generator, so the same seed reproduces the run bit for bit.
    """
    stats, _ = _simulate_queue(params, mode, n_packets, rng, warmup_frac)
    return stats


def run_mg1_detailed(params: ScenarioParams, mode: ServiceMode, n_packets: int,
                     rng: np.random.Generator,
                     warmup_frac: float = 0.1) -> tuple[QueueStats, QueueErrorBars]:
    """run_mg1 plus standard errors for confidence intervals on its outputs."""
    stats, kept = _simulate_queue(params, mode, n_packets, rng, warmup_frac)
    n = kept.size
    centered = kept - kept.mean()
    m4 = float(np.mean(centered ** 4))
    var = stats.sojourn_variance
    se_mean = math.sqrt(var / n) if n else 0.0
    se_var = math.sqrt(max(m4 - var * var, 0.0) / n) if n else 0.0
    return stats, QueueErrorBars(se_mean, se_var)
