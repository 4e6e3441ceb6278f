"""Monte Carlo check of the analytic outage and power figures.

Each trial is one block: draw the source state and the fading gain, apply
the policy, and declare an outage when the end-to-end distortion exceeds
``d_max``. Trials are split over ``workers`` independent streams spawned
from one seed, so a fixed (seed, trials, workers) triple always gives the
same report whatever the thread scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .models import FadingChannel, SourceModel, SystemParams, capacity, instantaneous_distortion, sample_states
from .schemes import FixedRateInversionPolicy, PowerRatePolicy, TruncatedInversionPolicy

Z95 = 1.959963984540054
# Relative slack on the distortion test; policies built to hit d_max exactly
# land within a few ulps of it.
OUTAGE_SLACK = 1e-9
_BATCH = 1 << 18


@dataclass(frozen=True)
class SimReport:
    trials: int
    outages: int
    p_dout_hat: float
    power_mean: float
    power_ci_halfwidth: float
    p_ci_halfwidth: float
    seed: int
    workers: int = 1
    scheme: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


class PolicyStructureError(AssertionError):
    """A policy violated the on/off structure it is supposed to have."""


def _is_outage(distortion, d_max):
    return distortion > d_max * (1.0 + OUTAGE_SLACK)


def _split(trials: int, workers: int):
    base, extra = divmod(trials, workers)
    return [base + (1 if w < extra else 0) for w in range(workers)]


def _worker_streams(seed: int, workers: int):
    return [np.random.Generator(np.random.PCG64(ss)) for ss in np.random.SeedSequence(seed).spawn(workers)]


def _run_chunk(policy, source, channel, sys, n, rng, shift):
    outages = 0
    dev_sums = []
    dev_sq_sums = []
    done = 0
    while done < n:
        m = min(_BATCH, n - done)
        s, sigma2, alpha = sample_states(source, channel, rng, m)
        gamma = np.asarray(policy.power(s, alpha), dtype=float)
        rate = np.asarray(policy.rate(s, alpha), dtype=float)
        cap = capacity(alpha, gamma)
        d = instantaneous_distortion(sigma2, rate, cap, sys.b)
        outages += int(np.count_nonzero(_is_outage(d, sys.d_max)))
        dev = gamma - shift
        dev_sums.append(math.fsum(dev))
        dev_sq_sums.append(math.fsum(dev * dev))
        done += m
    return outages, dev_sums, dev_sq_sums


def run_sim(
    policy: PowerRatePolicy,
    source: SourceModel,
    channel: FadingChannel,
    sys: SystemParams,
    trials: int,
    seed: int,
    workers: int = 1,
) -> SimReport:
    """Estimate outage probability and mean power of ``policy`` over ``trials`` blocks."""
    trials = int(trials)
    workers = int(workers)
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    sizes = _split(trials, workers)
    rngs = _worker_streams(seed, workers)
    # accumulate power as deviations from p_avg: constant-power policies then
    # report exactly p_avg, and the variance estimate stays well conditioned
    shift = sys.p_avg

    def job(w):
        return _run_chunk(policy, source, channel, sys, sizes[w], rngs[w], shift)

    if workers == 1:
        results = [job(0)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(workers)))

    outages = sum(r[0] for r in results)
    dev_sum = math.fsum(x for r in results for x in r[1])
    dev_sq = math.fsum(x for r in results for x in r[2])
    mean_dev = dev_sum / trials
    power_mean = shift + mean_dev
    var = max(dev_sq / trials - mean_dev * mean_dev, 0.0)
    if trials > 1:
        var *= trials / (trials - 1)
    p_hat = outages / trials
    return SimReport(
        trials=trials,
        outages=outages,
        p_dout_hat=p_hat,
        power_mean=power_mean,
        power_ci_halfwidth=Z95 * math.sqrt(var / trials),
        p_ci_halfwidth=Z95 * math.sqrt(p_hat * (1.0 - p_hat) / trials),
        seed=int(seed),
        workers=workers,
        scheme=getattr(policy, "scheme", ""),
    )


@dataclass(frozen=True)
class StructureReport:
    trials: int
    transmitting: int
    silent: int
    scheme: str


def probabilistic_policy_check(
    policy: PowerRatePolicy,
    source: SourceModel,
    channel: FadingChannel,
    sys: SystemParams,
    trials: int,
    seed: int,
) -> StructureReport:
    """Check the on/off structure of an adaptive-power policy on random blocks.

    SCOPA-MDO: a transmitting block must end at distortion ``d_max`` (1e-9
    relative) and a silent one at ``sigma_s^2``. COPA-MDO: blocks at or
    above the gain threshold must support the fixed rate, blocks below it
    must be silent. Raises :class:`PolicyStructureError` on the first
    offending (s, alpha).
    """
    if not isinstance(policy, (TruncatedInversionPolicy, FixedRateInversionPolicy)):
        raise TypeError("structure check applies to SCOPA-MDO and COPA-MDO policies")
    rng = _worker_streams(seed, 1)[0]
    s, sigma2, alpha = sample_states(source, channel, rng, int(trials))
    gamma = np.asarray(policy.power(s, alpha), dtype=float)
    rate = np.asarray(policy.rate(s, alpha), dtype=float)
    cap = capacity(alpha, gamma)
    on = gamma > 0

    def fail(mask, what):
        i = int(np.flatnonzero(mask)[0])
        raise PolicyStructureError(
            f"{policy.scheme}: {what} at s={int(s[i])}, alpha={float(alpha[i])!r}"
        )

    if isinstance(policy, TruncatedInversionPolicy):
        d = instantaneous_distortion(sigma2, rate, cap, sys.b)
        bad_on = on & (np.abs(d - sys.d_max) > 1e-9 * sys.d_max)
        if np.any(bad_on):
            fail(bad_on, "transmitting block missed d_max")
        bad_off = ~on & (d != sigma2)
        if np.any(bad_off):
            fail(bad_off, "silent block did not return sigma^2")
    else:
        above = (alpha >= policy.alpha_threshold) if policy.excess > 0 else np.zeros_like(on)
        supported = rate <= cap + 1e-12 * np.maximum(1.0, cap)
        bad = above & ~supported
        if np.any(bad):
            fail(bad, "fixed rate not supported above the threshold")
        if np.any(on != above):
            fail(on != above, "transmit region differs from the gain threshold")
    n_on = int(np.count_nonzero(on))
    return StructureReport(int(trials), n_on, int(trials) - n_on, policy.scheme)
