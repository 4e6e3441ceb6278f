"""Distortion outage of quasi-stationary Gaussian sources over block fading channels.

Four transmission schemes are solved in closed form (Rayleigh) or by
quadrature (tabulated/custom fading): SCOPA-MDO, COPA-MDO, CORACP and CRCP.
"""

from .asymptotics import (
    ExponentEstimate,
    GainResult,
    UnattainableTargetError,
    empirical_gain,
    empirical_gain_at_power,
    exponent,
    exponent_constant_power,
    exponent_copa,
    exponent_scopa,
    gain_copa_vs_coracp,
    gain_coracp_vs_crcp,
    gain_scopa_vs_copa,
    power_for_target,
)
from .models import (
    FadingChannel,
    SourceModel,
    StateSample,
    SystemParams,
    build_experimental_source,
    capacity,
    db_to_linear,
    instantaneous_distortion,
    linear_to_db,
    sample_state,
    sample_states,
)
from .numerics import (
    Tolerance,
    exp_integral_e1,
    find_root_monotone,
    integrate_tail,
)
from .schemes import (
    COPA,
    CORACP,
    CRCP,
    SCHEMES,
    SCOPA,
    DegenerateSourceError,
    PowerRatePolicy,
    SchemeSolution,
    rate_candidates,
    solve,
    solve_copa,
    solve_coracp,
    solve_crcp,
    solve_q1,
    solve_q2,
    solve_scopa,
)
from .simulate import SimReport, probabilistic_policy_check, run_sim

__version__ = "0.1.0"
