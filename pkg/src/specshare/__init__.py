"""Spectrum-sharing coexistence analyzer.

Closed-form outage probability for the licensed network and closed-form mean
delay / delay jitter for the machine-type network that shares its spectrum,
each verified by independent Monte Carlo simulation.
"""

from .model import (
    ConfigError,
    ScenarioParams,
    ServiceMode,
    ValidationError,
    dbm_to_watts,
    device_count,
    emit_config,
    parse_config,
    validate,
    watts_to_dbm,
    with_updates,
)
from .quadrature import (
    QuadratureError,
    QuadratureSpec,
    cdf_moment_integrals,
    convolve_cdf_pdf,
    integrate,
    safe_exp_neg,
)
from .geometry import (
    ChannelRealization,
    Link,
    aggregate_interference,
    instantaneous_sinr,
    sample_fading,
    sample_ppp,
    sample_service_delay,
    sample_service_delays,
)
from .analytic import (
    DelayReport,
    InfeasiblePowerError,
    PowerBudget,
    TruncatedMoments,
    UnstableQueueError,
    apply_power_budget,
    capacity_cdf_shared,
    capacity_pdf_proprietary,
    combined_capacity_cdf,
    delay_report,
    max_mbs_power,
    mg1_waiting,
    outage_increment,
    outage_no_sharing,
    outage_with_sharing,
    service_cdf,
    truncated_service_moments,
)
from .simulate import (
    EmpiricalDistribution,
    ProbEstimate,
    QueueStats,
    empirical_service_distribution,
    estimate_outage_mc,
    lindley_waits,
    run_mg1,
)

__version__ = "0.1.0"
