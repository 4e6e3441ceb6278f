"""High-SNR scaling: outage distortion exponents and asymptotic power gains.

The exponents of the adaptive-power schemes grow like ``P/ln P`` and have
no finite limit, so they are reported as the limit expression evaluated at
the given finite power. The power gains are dB differences between the
average powers two schemes need for the same (small) outage probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .models import FadingChannel, SourceModel, SystemParams
from .numerics import BracketError, Tolerance, find_log_root_monotone
from .schemes import (
    COPA,
    CORACP,
    CRCP,
    SCOPA,
    DegenerateSourceError,
    canonical_scheme,
    solve,
)

ORDER_P_OVER_LN_P = "O(P/lnP)"
ORDER_ONE = "O(1)"


@dataclass(frozen=True)
class ExponentEstimate:
    scheme: str
    p_bar: Optional[float]
    value: float
    order: str


@dataclass(frozen=True)
class GainResult:
    """dB gain of ``scheme1`` over ``scheme2``; ``p_bar2`` only for power-dependent pairs."""

    scheme1: str
    scheme2: str
    value_db: float
    p_bar2: Optional[float] = None


def _excess_terms(source: SourceModel, sys: SystemParams):
    mask = (source.variances > sys.d_max) & (source.pmf > 0)
    if not np.any(mask):
        raise DegenerateSourceError("no state has variance above the distortion limit")
    excess = np.expm1(np.log(source.variances[mask] / sys.d_max) / sys.b)
    pmf = source.pmf[mask]
    mean_excess = math.fsum(excess * pmf)  # sum over qualifying states of T_s P(s)
    max_excess = float(np.expm1(np.log(source.variances.max() / sys.d_max) / sys.b))
    return mean_excess, max_excess, math.fsum(pmf)


def exponent_scopa(source: SourceModel, sys: SystemParams) -> ExponentEstimate:
    """``P / (ln P * sum_s T_s P(s))`` evaluated at ``sys.p_avg``."""
    p = sys.p_avg
    if p <= 1:
        raise ValueError("exponent estimate needs p_avg > 1")
    mean_excess, _, _ = _excess_terms(source, sys)
    return ExponentEstimate(SCOPA, p, p / (math.log(p) * mean_excess), ORDER_P_OVER_LN_P)


def exponent_copa(source: SourceModel, sys: SystemParams) -> ExponentEstimate:
    """``(P / T_max - ln Pr(sigma^2 > D_m)) / ln P`` evaluated at ``sys.p_avg``."""
    p = sys.p_avg
    if p <= 1:
        raise ValueError("exponent estimate needs p_avg > 1")
    _, max_excess, pr_above = _excess_terms(source, sys)
    value = (p / max_excess - math.log(pr_above)) / math.log(p)
    return ExponentEstimate(COPA, p, value, ORDER_P_OVER_LN_P)


def exponent_constant_power(scheme: str) -> ExponentEstimate:
    """Both constant-power schemes decay like 1/P: exponent 1."""
    scheme = canonical_scheme(scheme)
    if scheme not in (CORACP, CRCP):
        raise ValueError(f"{scheme} is not a constant-power scheme")
    return ExponentEstimate(scheme, None, 1.0, ORDER_ONE)


def exponent(scheme: str, source: SourceModel, sys: SystemParams) -> ExponentEstimate:
    scheme = canonical_scheme(scheme)
    if scheme == SCOPA:
        return exponent_scopa(source, sys)
    if scheme == COPA:
        return exponent_copa(source, sys)
    return exponent_constant_power(scheme)


def gain_scopa_vs_copa(source: SourceModel, sys: SystemParams) -> GainResult:
    mean_excess, max_excess, _ = _excess_terms(source, sys)
    value = 10 * math.log10(max_excess) - 10 * math.log10(mean_excess)
    return GainResult(SCOPA, COPA, _snap_zero(value))


def gain_copa_vs_coracp(source: SourceModel, sys: SystemParams, p_bar2: float) -> GainResult:
    """Power-dependent gain; ``p_bar2`` is the CORACP power (linear).

    For a stationary source this is ``10 log10(X / ln X)`` with
    ``X = p_bar2 / T``.
    """
    mean_excess, max_excess, _ = _excess_terms(source, sys)
    ln_arg = math.log(p_bar2 / mean_excess)
    if not (p_bar2 / max_excess > 0) or ln_arg <= 0:
        raise ValueError(f"p_bar2={p_bar2!r} too small: ln(P2/sum) must be > 0")
    value = 10 * math.log10(p_bar2 / max_excess) - 10 * math.log10(ln_arg)
    return GainResult(COPA, CORACP, value, p_bar2)


def gain_coracp_vs_crcp(source: SourceModel, sys: SystemParams) -> GainResult:
    mean_excess, max_excess, pr_above = _excess_terms(source, sys)
    value = 10 * math.log10(max_excess * pr_above) - 10 * math.log10(mean_excess)
    return GainResult(CORACP, CRCP, _snap_zero(value))


def _snap_zero(value_db: float) -> float:
    # max == mean up to rounding (stationary source) means exactly no gain
    return 0.0 if abs(value_db) < 1e-12 else value_db


# ---------------------------------------------------------------------------
# Gains measured on the outage curves
# ---------------------------------------------------------------------------

_GAIN_TOL = Tolerance(rel=1e-10, abs=1e-12, max_iter=200)


def power_for_target(
    scheme: str,
    source: SourceModel,
    sys: SystemParams,
    target_pdout: float,
    channel: Optional[FadingChannel] = None,
    log_target: Optional[float] = None,
) -> float:
    """Smallest average power (linear) at which ``scheme`` reaches the target outage.

    Inverts the nonincreasing curve ``ln p_dout(P)`` by bracketing and
    bisection in ``ln P``. ``log_target`` may be passed instead of (or to
    refine) ``target_pdout`` for targets below the float range.
    """
    channel = channel or FadingChannel.rayleigh()
    scheme = canonical_scheme(scheme)
    if log_target is None:
        if not (0 < target_pdout < 1):
            raise ValueError(f"target_pdout must lie in (0, 1), got {target_pdout!r}")
        log_target = math.log(target_pdout)
    floor = source.prob_above(sys.d_max)
    if floor <= 0 or log_target >= math.log(floor):
        raise UnattainableTargetError(
            f"{scheme}: target outage exp({log_target:.6g}) not below Pr(sigma^2 > D_m) = {floor:.6g}"
        )

    def log_p(log_power):
        return solve(scheme, source, channel, sys.with_power(math.exp(log_power))).log_p_dout

    seed = math.log(sys.p_avg)
    try:
        lp = find_log_root_monotone(
            lambda y: log_p(y), seed, False, log_target, _GAIN_TOL
        )
    except BracketError as exc:
        raise UnattainableTargetError(f"{scheme}: {exc}") from exc
    return math.exp(lp)


class UnattainableTargetError(ValueError):
    """Target outage cannot be reached by the scheme at any power."""


def empirical_gain(
    scheme1: str,
    scheme2: str,
    source: SourceModel,
    sys: SystemParams,
    target_pdout: float,
    channel: Optional[FadingChannel] = None,
    log_target: Optional[float] = None,
) -> float:
    """``10 log10 P2 - 10 log10 P1`` where each scheme just reaches the target outage."""
    s1, s2 = canonical_scheme(scheme1), canonical_scheme(scheme2)
    p1 = power_for_target(s1, source, sys, target_pdout, channel, log_target)
    p2 = p1 if s1 == s2 else power_for_target(s2, source, sys, target_pdout, channel, log_target)
    return 10 * math.log10(p2) - 10 * math.log10(p1)


def empirical_gain_at_power(
    scheme1: str,
    scheme2: str,
    source: SourceModel,
    sys: SystemParams,
    p_bar2: float,
    channel: Optional[FadingChannel] = None,
) -> float:
    """Gain read off the curves with the target set by ``scheme2`` at power ``p_bar2``."""
    channel = channel or FadingChannel.rayleigh()
    ref = solve(scheme2, source, channel, sys.with_power(p_bar2))
    p1 = power_for_target(scheme1, source, sys.with_power(p_bar2), ref.p_dout, channel, ref.log_p_dout)
    return 10 * math.log10(p_bar2) - 10 * math.log10(p1)
