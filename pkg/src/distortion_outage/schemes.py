"""Power/rate adaptation schemes and their distortion outage probabilities.

Four schemes are solved here:

``SCOPA-MDO``
    power and rate adapted to both the source state and the fading gain
    (truncated channel inversion per state, one common cutoff ``q2``);
``COPA-MDO``
    one optimized fixed rate, power adapted to the fading gain only
    (truncated channel inversion with cutoff ``q1``);
``CORACP``
    constant power, rate equal to the instantaneous capacity;
``CRCP``
    constant power, one optimized fixed rate.

Outage probabilities are carried in log form next to their linear value,
because the adaptive-power schemes reach values far below 1e-300 at
moderate power. Cutoffs ``q`` are likewise solved and stored as ``ln q``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .models import RATE_SLACK, FadingChannel, SourceModel, SystemParams, capacity
from .numerics import (
    EULER_GAMMA,
    ROOT_TOL,
    exp_integral_e1_log,
    find_log_root_monotone,
    log1mexp,
    logsumexp,
)

SCOPA = "SCOPA-MDO"
COPA = "COPA-MDO"
CORACP = "CORACP"
CRCP = "CRCP"
SCHEMES = (SCOPA, COPA, CORACP, CRCP)

_ALIASES = {
    "SCOPA": SCOPA,
    "SCOPA-MDO": SCOPA,
    "COPA": COPA,
    "COPA-MDO": COPA,
    "CORACP": CORACP,
    "CRCP": CRCP,
}


def canonical_scheme(name: str) -> str:
    try:
        return _ALIASES[str(name).strip().upper().replace("_", "-")]
    except KeyError:
        raise ValueError(f"unknown scheme {name!r}; expected one of {SCHEMES}") from None


class DegenerateSourceError(ValueError):
    """No source state has variance above the distortion limit."""


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------

class PowerRatePolicy:
    """Deterministic map from (state index, gain) to (power, rate).

    ``power`` and ``rate`` accept scalars or equally shaped numpy arrays and
    are safe to share read-only between threads.
    """

    scheme: str = ""

    def power(self, s, alpha):
        raise NotImplementedError

    def rate(self, s, alpha):
        raise NotImplementedError

    @property
    def descriptor(self) -> dict:
        return {"scheme": self.scheme}

    def __repr__(self):
        fields = ", ".join(f"{k}={v!r}" for k, v in self.descriptor.items())
        return f"{type(self).__name__}({fields})"


def _shape(s, alpha):
    s = np.asarray(s)
    alpha = np.asarray(alpha, dtype=float)
    return np.broadcast_arrays(s, alpha)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


class FixedRateInversionPolicy(PowerRatePolicy):
    """Fixed rate R; power ``T/alpha`` when ``alpha >= T/q1``, else 0 (T = 2^{2R}-1)."""

    scheme = COPA

    def __init__(self, rate_value: float, excess: float, log_q: float):
        self.rate_value = float(rate_value)
        self.excess = float(excess)
        self.log_q = float(log_q)
        if self.excess > 0:
            self.alpha_threshold = math.exp(math.log(self.excess) - self.log_q)
        else:
            self.alpha_threshold = 0.0

    def transmits(self, s, alpha):
        s, alpha = _shape(s, alpha)
        if self.excess <= 0:
            return np.zeros(alpha.shape, dtype=bool)
        return (alpha >= self.alpha_threshold) & (alpha > 0)

    def power(self, s, alpha):
        s, alpha = _shape(s, alpha)
        on = self.transmits(s, alpha)
        with np.errstate(divide="ignore"):
            out = np.where(on, self.excess / np.where(on, alpha, 1.0), 0.0)
        return _out(out)

    def rate(self, s, alpha):
        s, alpha = _shape(s, alpha)
        return _out(np.full(alpha.shape, self.rate_value))

    @property
    def descriptor(self):
        return {"scheme": self.scheme, "r_star": self.rate_value, "log_q1": self.log_q}


class TruncatedInversionPolicy(PowerRatePolicy):
    """Per-state inversion to exactly meet the distortion limit, cut off at q2.

    In state s with ``sigma_s^2 > D_m`` the target excess is
    ``T_s = (sigma_s^2/D_m)^{1/b} - 1``; the transmitter spends ``T_s/alpha``
    at rate ``log2(sigma_s^2/D_m)/(2b)`` when ``T_s/alpha <= q2`` and is
    silent otherwise.
    """

    scheme = SCOPA

    def __init__(self, variances, d_max: float, b: int, log_q: float):
        var = np.asarray(variances, dtype=float)
        self.log_q = float(log_q)
        self.qualifies = var > d_max
        ratio = var / d_max
        self.excess = np.where(self.qualifies, np.expm1(np.log(ratio) / b), 0.0)
        self.rates = np.where(self.qualifies, np.log2(ratio) / (2.0 * b), 0.0)
        with np.errstate(divide="ignore"):
            self.alpha_threshold = np.where(
                self.qualifies, np.exp(np.log(self.excess) - self.log_q), np.inf
            )

    def transmits(self, s, alpha):
        s, alpha = _shape(s, alpha)
        return self.qualifies[s] & (alpha >= self.alpha_threshold[s]) & (alpha > 0)

    def power(self, s, alpha):
        s, alpha = _shape(s, alpha)
        on = self.transmits(s, alpha)
        out = np.where(on, self.excess[s] / np.where(on, alpha, 1.0), 0.0)
        return _out(out)

    def rate(self, s, alpha):
        s, alpha = _shape(s, alpha)
        return _out(np.where(self.transmits(s, alpha), self.rates[s], 0.0))

    @property
    def descriptor(self):
        return {"scheme": self.scheme, "log_q2": self.log_q}


class ConstantPowerAdaptiveRatePolicy(PowerRatePolicy):
    """Power fixed at the average limit; rate tracks the instantaneous capacity."""

    scheme = CORACP

    def __init__(self, p_avg: float):
        self.p_avg = float(p_avg)

    def power(self, s, alpha):
        s, alpha = _shape(s, alpha)
        return _out(np.full(alpha.shape, self.p_avg))

    def rate(self, s, alpha):
        s, alpha = _shape(s, alpha)
        return _out(np.asarray(capacity(alpha, self.p_avg)))

    @property
    def descriptor(self):
        return {"scheme": self.scheme, "p_avg": self.p_avg}


class ConstantPowerFixedRatePolicy(PowerRatePolicy):
    scheme = CRCP

    def __init__(self, p_avg: float, rate_value: float):
        self.p_avg = float(p_avg)
        self.rate_value = float(rate_value)

    def power(self, s, alpha):
        s, alpha = _shape(s, alpha)
        return _out(np.full(alpha.shape, self.p_avg))

    def rate(self, s, alpha):
        s, alpha = _shape(s, alpha)
        return _out(np.full(alpha.shape, self.rate_value))

    @property
    def descriptor(self):
        return {"scheme": self.scheme, "p_avg": self.p_avg, "r_star": self.rate_value}


@dataclass(frozen=True)
class SchemeSolution:
    """Solved scheme: policy, analytic outage and the optimized constants.

    ``r_star`` is set for the fixed-rate schemes, ``threshold`` (the cutoff
    q, possibly ``inf`` when ``log_threshold`` exceeds the float range) for
    the adaptive-power ones.
    """

    scheme: str
    policy: PowerRatePolicy
    p_dout: float
    log_p_dout: float
    p_avg: float
    r_star: Optional[float] = None
    threshold: Optional[float] = None
    log_threshold: Optional[float] = None
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (0.0 <= self.p_dout <= 1.0):
            raise ValueError(f"p_dout out of range: {self.p_dout!r}")


# ---------------------------------------------------------------------------
# Shared pieces
# ---------------------------------------------------------------------------

def _excess_from_ratio(ratio, b):
    # (ratio)^{1/b} - 1 without cancellation near ratio = 1
    return np.expm1(np.log(ratio) / b)


def _qualifying(source: SourceModel, sys: SystemParams):
    """States strictly above D_m: (excess T_s, pmf) arrays."""
    mask = source.variances > sys.d_max
    var = source.variances[mask]
    return _excess_from_ratio(var / sys.d_max, sys.b), source.pmf[mask]


def _log_cdf(channel: FadingChannel, log_a: float) -> float:
    """ln Pr(alpha < a)."""
    if log_a == -math.inf:
        return -math.inf
    if channel.is_rayleigh:
        return log1mexp(log_a)
    c = channel.cdf(math.exp(log_a))
    return math.log(c) if c > 0 else -math.inf


def _log_sf(channel: FadingChannel, log_a: float) -> float:
    """ln Pr(alpha >= a)."""
    if log_a == -math.inf:
        return 0.0
    if channel.is_rayleigh:
        return -math.exp(log_a)
    c = channel.cdf(math.exp(log_a))
    return math.log1p(-c) if c < 1 else -math.inf


def _tail_moment_log(channel: FadingChannel, log_a: float) -> float:
    """int_{a}^inf f(t)/t dt at a = exp(log_a)."""
    if channel.log_tail_moment is not None:
        return channel.log_tail_moment(log_a)
    a = math.exp(log_a)
    if a == 0.0:
        return math.inf
    return channel.tail_moment(a)


def _log_or_neg_inf(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _candidate_variances(source: SourceModel, sys: SystemParams) -> np.ndarray:
    return np.unique(source.variances[source.variances >= sys.d_max])


def rate_candidates(source: SourceModel, sys: SystemParams) -> list:
    """Ascending fixed-rate candidates ``log2(sigma_s^2/D_m)/(2b)``, ``sigma_s^2 >= D_m``.

    Between two consecutive candidates the fixed-rate objectives only lose
    channel success probability, so the optimum is always one of these.
    """
    v = _candidate_variances(source, sys)
    rates = np.log2(v / sys.d_max) / (2.0 * sys.b)
    return sorted(set(float(r) for r in rates))


def _band_probability(source: SourceModel, sys: SystemParams, top_variance: float) -> float:
    """Pr(D_m < sigma_s^2 <= top): the states a fixed rate tuned to ``top`` rescues."""
    v = source.variances
    return math.fsum(source.pmf[(v > sys.d_max) & (v <= top_variance)])


# ---------------------------------------------------------------------------
# COPA-MDO
# ---------------------------------------------------------------------------

def _log_q_seed(excess: float, p_avg: float) -> float:
    # small-argument form of E1 gives q ~ T exp(P/T - gamma)
    return math.log(excess) + max(p_avg / excess - EULER_GAMMA, 0.0)


@functools.lru_cache(maxsize=4096)
def _solve_log_q1_cached(excess: float, p_avg: float, channel: FadingChannel) -> float:
    log_t = math.log(excess)

    def spent(log_q):
        return excess * _tail_moment_log(channel, log_t - log_q)

    return find_log_root_monotone(spent, _log_q_seed(excess, p_avg), True, p_avg, ROOT_TOL)


def solve_log_q1(rate: float, channel: FadingChannel, p_avg: float) -> float:
    """``ln q1`` for a fixed rate: the cutoff that spends exactly ``p_avg``.

    Solves ``T * int_{alpha >= T/q1} f(alpha)/alpha d alpha = p_avg`` with
    ``T = 2^{2R} - 1``; for Rayleigh fading the integral is ``E1(T/q1)``.
    """
    if not (rate > 0):
        raise ValueError(f"rate must be > 0, got {rate!r}")
    if not (p_avg > 0):
        raise ValueError(f"p_avg must be > 0, got {p_avg!r}")
    excess = math.expm1(2.0 * rate * math.log(2.0))
    return _solve_log_q1_cached(float(excess), float(p_avg), channel)


def solve_q1(rate: float, channel: FadingChannel, p_avg: float) -> float:
    """Cutoff q1 (``inf`` once it exceeds the float range; see :func:`solve_log_q1`)."""
    lq = solve_log_q1(rate, channel, p_avg)
    return math.exp(lq) if lq < 709.0 else math.inf


def _solve_log_q1_excess(excess: float, channel: FadingChannel, p_avg: float) -> float:
    return _solve_log_q1_cached(float(excess), float(p_avg), channel)


def _fixed_rate_outage(source, sys, channel, top_variance, log_threshold):
    """Outage of a fixed-rate scheme with channel success iff alpha >= threshold.

    Returns ``(log_p_dout, log_objective)`` where the objective is
    Pr(success) * Pr(D_m < sigma^2 <= top).
    """
    pr_above = source.prob_above(sys.d_max)
    pr_left = source.prob_above(top_variance)  # still in outage after decoding
    band = _band_probability(source, sys, top_variance)
    log_fail = _log_cdf(channel, log_threshold)
    log_succ = _log_sf(channel, log_threshold)
    log_p = logsumexp([log_fail + _log_or_neg_inf(pr_above), log_succ + _log_or_neg_inf(pr_left)])
    return log_p, log_succ + _log_or_neg_inf(band)


def _zero_solution(scheme, sys, policy, **kw):
    return SchemeSolution(scheme, policy, 0.0, -math.inf, sys.p_avg, **kw)


def _rescued_probability(rate: float, source: SourceModel, sys: SystemParams) -> float:
    """Pr(sigma^2 > D_m) - Pr(sigma^2 2^{-2bR} > D_m), decided on variances.

    A state counts as rescued when ``sigma^2 <= D_m 2^{2bR}`` up to
    ``RATE_SLACK``, so a rate read off a candidate rescues its own state.
    """
    top = sys.d_max * 2.0 ** (2.0 * sys.b * rate) * (1.0 + RATE_SLACK)
    return _band_probability(source, sys, top)


def copa_objective(rate: float, source: SourceModel, channel: FadingChannel, sys: SystemParams) -> float:
    """Fixed-rate success objective at an arbitrary rate (not just candidates).

    ``Pr(alpha >= (2^{2R}-1)/q1(R)) * (Pr(sigma^2 > D_m) - Pr(sigma^2 2^{-2bR} > D_m))``.
    """
    if rate <= 0:
        return 0.0
    log_q = solve_log_q1(rate, channel, sys.p_avg)
    excess = math.expm1(2.0 * rate * math.log(2.0))
    succ = math.exp(_log_sf(channel, math.log(excess) - log_q))
    gap = _rescued_probability(rate, source, sys)
    return succ * gap


def crcp_objective(rate: float, source: SourceModel, channel: FadingChannel, sys: SystemParams) -> float:
    """Constant-power counterpart of :func:`copa_objective` (threshold ``T/P``)."""
    if rate <= 0:
        return 0.0
    excess = math.expm1(2.0 * rate * math.log(2.0))
    succ = math.exp(_log_sf(channel, math.log(excess) - math.log(sys.p_avg)))
    gap = _rescued_probability(rate, source, sys)
    return succ * gap


def _best_fixed_rate(source, sys, channel, log_cutoff_of_excess):
    """Scan the candidates; ties go to the smallest rate."""
    best = None
    for top in _candidate_variances(source, sys):
        excess = float(_excess_from_ratio(top / sys.d_max, sys.b))
        rate = math.log2(top / sys.d_max) / (2.0 * sys.b)
        if excess <= 0:
            continue  # zero rate rescues nothing
        log_cut = log_cutoff_of_excess(excess)
        log_threshold = math.log(excess) - log_cut
        log_p, log_obj = _fixed_rate_outage(source, sys, channel, top, log_threshold)
        if best is None or log_obj > best[0]:
            best = (log_obj, rate, excess, log_cut, log_p)
    return best


def solve_copa(source: SourceModel, channel: FadingChannel, sys: SystemParams) -> SchemeSolution:
    """Optimal fixed rate with channel-inversion power control (COPA-MDO)."""
    best = _best_fixed_rate(
        source, sys, channel, lambda t: _solve_log_q1_excess(t, channel, sys.p_avg)
    )
    if best is None or best[0] == -math.inf:
        policy = FixedRateInversionPolicy(0.0, 0.0, math.inf)
        if source.prob_above(sys.d_max) > 0:
            # nothing can be rescued; every qualifying state is in outage
            lp = math.log(source.prob_above(sys.d_max))
            return SchemeSolution(COPA, policy, math.exp(lp), lp, sys.p_avg, 0.0, math.inf, math.inf)
        return _zero_solution(COPA, sys, policy, r_star=0.0, threshold=math.inf, log_threshold=math.inf)
    _, rate, excess, log_q, log_p = best
    policy = FixedRateInversionPolicy(rate, excess, log_q)
    return SchemeSolution(
        COPA, policy, _clip_prob(math.exp(log_p)), log_p, sys.p_avg,
        r_star=rate, threshold=_exp_or_inf(log_q), log_threshold=log_q,
    )


def _exp_or_inf(x):
    return math.exp(x) if x < 709.0 else math.inf


def _clip_prob(p):
    return min(1.0, max(0.0, p))


# ---------------------------------------------------------------------------
# SCOPA-MDO
# ---------------------------------------------------------------------------

def solve_log_q2(source: SourceModel, channel: FadingChannel, sys: SystemParams) -> float:
    """``ln q2``: the common cutoff spending exactly ``p_avg`` across states.

    ``sum_s P(s) T_s int_{alpha >= T_s/q2} f(alpha)/alpha d alpha = p_avg``
    over states with ``sigma_s^2 > D_m``.
    """
    excess, pmf = _qualifying(source, sys)
    keep = pmf > 0
    excess, pmf = excess[keep], pmf[keep]
    if excess.size == 0:
        raise DegenerateSourceError("no state has variance above the distortion limit")
    log_t = np.log(excess)
    weights = excess * pmf

    def spent(log_q):
        return math.fsum(
            w * _tail_moment_log(channel, lt - log_q) for w, lt in zip(weights, log_t)
        )

    total = math.fsum(weights)
    mean_log = math.fsum(weights * log_t) / total
    seed = mean_log + max(sys.p_avg / total - EULER_GAMMA, 0.0)
    return find_log_root_monotone(spent, seed, True, sys.p_avg, ROOT_TOL)


def solve_q2(source: SourceModel, channel: FadingChannel, sys: SystemParams) -> float:
    return _exp_or_inf(solve_log_q2(source, channel, sys))


def solve_scopa(source: SourceModel, channel: FadingChannel, sys: SystemParams) -> SchemeSolution:
    """Source- and channel-adaptive power and rate (SCOPA-MDO)."""
    excess, pmf = _qualifying(source, sys)
    if not np.any(pmf > 0):
        policy = TruncatedInversionPolicy(source.variances, sys.d_max, sys.b, math.inf)
        return _zero_solution(SCOPA, sys, policy, threshold=math.inf, log_threshold=math.inf)
    log_q = solve_log_q2(source, channel, sys)
    terms = [
        math.log(p) + _log_cdf(channel, math.log(t) - log_q)
        for t, p in zip(excess, pmf)
        if p > 0
    ]
    log_p = logsumexp(terms)
    policy = TruncatedInversionPolicy(source.variances, sys.d_max, sys.b, log_q)
    return SchemeSolution(
        SCOPA, policy, _clip_prob(math.exp(log_p)), log_p, sys.p_avg,
        threshold=_exp_or_inf(log_q), log_threshold=log_q,
    )


# ---------------------------------------------------------------------------
# Constant-power benchmarks
# ---------------------------------------------------------------------------

def solve_coracp(source: SourceModel, channel: FadingChannel, sys: SystemParams) -> SchemeSolution:
    """Constant power with capacity-tracking rate (CORACP)."""
    excess, pmf = _qualifying(source, sys)
    log_p_avg = math.log(sys.p_avg)
    terms = [
        math.log(p) + _log_cdf(channel, math.log(t) - log_p_avg)
        for t, p in zip(excess, pmf)
        if p > 0
    ]
    log_p = logsumexp(terms)
    return SchemeSolution(
        CORACP, ConstantPowerAdaptiveRatePolicy(sys.p_avg),
        _clip_prob(math.exp(log_p)), log_p, sys.p_avg,
    )


def solve_crcp(source: SourceModel, channel: FadingChannel, sys: SystemParams) -> SchemeSolution:
    """Constant power with an optimized fixed rate (CRCP)."""
    log_p_avg = math.log(sys.p_avg)
    best = _best_fixed_rate(source, sys, channel, lambda t: log_p_avg)
    if best is None or best[0] == -math.inf:
        pr = source.prob_above(sys.d_max)
        lp = _log_or_neg_inf(pr)
        return SchemeSolution(
            CRCP, ConstantPowerFixedRatePolicy(sys.p_avg, 0.0), pr, lp, sys.p_avg, r_star=0.0
        )
    _, rate, _, _, log_p = best
    return SchemeSolution(
        CRCP, ConstantPowerFixedRatePolicy(sys.p_avg, rate),
        _clip_prob(math.exp(log_p)), log_p, sys.p_avg, r_star=rate,
    )


_SOLVERS = {SCOPA: solve_scopa, COPA: solve_copa, CORACP: solve_coracp, CRCP: solve_crcp}


def solve(scheme: str, source: SourceModel, channel: FadingChannel, sys: SystemParams) -> SchemeSolution:
    """Dispatch on the scheme label (aliases ``SCOPA``/``COPA`` accepted)."""
    return _SOLVERS[canonical_scheme(scheme)](source, channel, sys)


def expected_power(solution: SchemeSolution, source: SourceModel, channel: FadingChannel) -> float:
    """Average transmit power of a solved policy, from the closed-form tail moments."""
    pol = solution.policy
    if isinstance(pol, (ConstantPowerAdaptiveRatePolicy, ConstantPowerFixedRatePolicy)):
        return pol.p_avg
    if isinstance(pol, FixedRateInversionPolicy):
        if pol.excess <= 0:
            return 0.0
        return pol.excess * _tail_moment_log(channel, math.log(pol.excess) - pol.log_q)
    if isinstance(pol, TruncatedInversionPolicy):
        idx = np.flatnonzero(pol.qualifies & (source.pmf > 0))
        return math.fsum(
            source.pmf[i] * pol.excess[i]
            * _tail_moment_log(channel, math.log(pol.excess[i]) - pol.log_q)
            for i in idx
        )
    raise TypeError(f"unsupported policy {pol!r}")
