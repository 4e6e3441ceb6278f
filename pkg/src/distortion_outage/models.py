"""Source, channel and system descriptions, plus the per-block link equations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .numerics import QUAD_TOL, exp_integral_e1_log, integrate_tail

# Slack when comparing a rate against the capacity it was designed to meet:
# alpha * (T / alpha) need not reproduce T to the last bit.
RATE_SLACK = 1e-12

EXPERIMENTAL_LABELS = ("G1", "G2", "G3", "U", "S")
_KERNEL_VARIANCE = {"G1": 0.05, "G2": 0.48, "G3": 1.07}
_N_STATES = 25
_SIGMA_MEAN = 3.0


@dataclass(frozen=True)
class SourceModel:
    """Finite-state quasi-stationary Gaussian source.

    ``variances[s]`` is the signal power in state ``s`` and ``pmf[s]`` its
    probability. Both are stored as read-only float arrays.
    """

    variances: np.ndarray
    pmf: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        var = np.array(self.variances, dtype=float).ravel()
        pmf = np.array(self.pmf, dtype=float).ravel()
        if var.size == 0 or var.size != pmf.size:
            raise ValueError(
                f"variances and pmf must be non-empty and of equal length "
                f"(got {var.size} and {pmf.size})"
            )
        if not np.all(np.isfinite(var)) or np.any(var <= 0):
            raise ValueError("every state variance must be finite and > 0")
        if not np.all(np.isfinite(pmf)) or np.any(pmf < 0):
            raise ValueError("pmf entries must be finite and >= 0")
        total = math.fsum(pmf)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"pmf must sum to 1 (got {total!r})")
        var.setflags(write=False)
        pmf.setflags(write=False)
        object.__setattr__(self, "variances", var)
        object.__setattr__(self, "pmf", pmf)

    @classmethod
    def from_weights(cls, variances, weights, label="custom") -> "SourceModel":
        """Build a source from unnormalized state weights."""
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or not w.sum() > 0:
            raise ValueError("weights must be nonnegative with a positive sum")
        return cls(variances, w / math.fsum(w), label)

    @classmethod
    def stationary(cls, variance: float, label="stationary") -> "SourceModel":
        return cls([variance], [1.0], label)

    @property
    def n_states(self) -> int:
        return int(self.variances.size)

    def prob_above(self, level: float) -> float:
        """``Pr(sigma_s^2 > level)`` with a strict inequality."""
        return math.fsum(self.pmf[self.variances > level])

    def __hash__(self):
        return hash((self.variances.tobytes(), self.pmf.tobytes(), self.label))

    def __eq__(self, other):
        if not isinstance(other, SourceModel):
            return NotImplemented
        return (
            np.array_equal(self.variances, other.variances)
            and np.array_equal(self.pmf, other.pmf)
            and self.label == other.label
        )


@dataclass(frozen=True)
class SystemParams:
    """Bandwidth expansion ``b``, distortion limit ``d_max`` and power limit ``p_avg``.

    ``d_max`` and ``p_avg`` are linear; see :meth:`from_db`.
    """

    b: int
    d_max: float
    p_avg: float

    def __post_init__(self):
        if isinstance(self.b, bool) or int(self.b) != self.b or self.b < 1:
            raise ValueError(f"b must be a positive integer, got {self.b!r}")
        object.__setattr__(self, "b", int(self.b))
        if not (math.isfinite(self.d_max) and self.d_max > 0):
            raise ValueError(f"d_max must be finite and > 0, got {self.d_max!r}")
        if not (math.isfinite(self.p_avg) and self.p_avg > 0):
            raise ValueError(f"p_avg must be finite and > 0, got {self.p_avg!r}")

    @classmethod
    def from_db(cls, b: int, d_max_db: float, p_avg_db: float) -> "SystemParams":
        return cls(b, db_to_linear(d_max_db), db_to_linear(p_avg_db))

    def with_power(self, p_avg: float) -> "SystemParams":
        return SystemParams(self.b, self.d_max, p_avg)


@dataclass(frozen=True)
class StateSample:
    s: int
    sigma2: float
    alpha: float


@dataclass(frozen=True, eq=False)
class FadingChannel:
    """Block-fading power-gain law.

    ``pdf``, ``cdf`` and ``tail_moment`` (``a -> int_a^inf f(t)/t dt``) are
    scalar callables. ``inv_cdf``, when set, maps uniforms to gains and must
    accept numpy arrays; it is only used for sampling.
    """

    kind: str
    pdf: Callable[[float], float]
    cdf: Callable[[float], float]
    tail_moment: Callable[[float], float]
    inv_cdf: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""
    # log-argument tail moment, only for channels that provide one in closed form
    log_tail_moment: Optional[Callable[[float], float]] = field(default=None, repr=False)

    @property
    def is_rayleigh(self) -> bool:
        return self.kind == "rayleigh"

    @classmethod
    def rayleigh(cls) -> "FadingChannel":
        """Unit-mean exponential power gain (Rayleigh amplitude)."""
        return _RAYLEIGH

    @classmethod
    def custom(
        cls,
        pdf: Callable[[float], float],
        cdf: Optional[Callable[[float], float]] = None,
        tail_moment: Optional[Callable[[float], float]] = None,
        inv_cdf=None,
        name: str = "custom",
        check: bool = True,
    ) -> "FadingChannel":
        """Generic channel; missing ``cdf``/``tail_moment`` are computed by quadrature.

        With ``check`` the pdf must integrate to 1 within 1e-6.
        """
        if check:
            mass = integrate_tail(pdf, 0.0)
            if abs(mass - 1.0) > 1e-6:
                raise ValueError(f"pdf integrates to {mass!r}, expected 1")
        if cdf is None:
            def cdf(a, _pdf=pdf):
                if a <= 0:
                    return 0.0
                return min(1.0, max(0.0, 1.0 - integrate_tail(_pdf, a)))
        if tail_moment is None:
            def tail_moment(a, _pdf=pdf):
                if a <= 0:
                    return math.inf
                return integrate_tail(lambda t: _pdf(t) / t, a, QUAD_TOL)
        return cls("custom", pdf, cdf, tail_moment, inv_cdf, name)

    @classmethod
    def tabulated(cls, alpha: Sequence[float], pdf_values: Sequence[float], name="tabulated"):
        """Piecewise-linear pdf through ``(alpha[i], pdf_values[i])``, zero outside.

        The table is renormalized; cdf and tail moment are exact integrals of
        the interpolant.
        """
        return _tabulated_channel(np.asarray(alpha, float), np.asarray(pdf_values, float), name)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` gains by inverse-cdf sampling."""
        u = rng.random(size)
        if self.inv_cdf is not None:
            return np.asarray(self.inv_cdf(u), dtype=float)
        return _invert_cdf_numeric(self.cdf, u)


def _rayleigh_tail_moment(a: float) -> float:
    if a <= 0:
        return math.inf
    return exp_integral_e1_log(math.log(a))


_RAYLEIGH = FadingChannel(
    kind="rayleigh",
    pdf=lambda a: math.exp(-a) if a >= 0 else 0.0,
    cdf=lambda a: -math.expm1(-a) if a > 0 else 0.0,
    tail_moment=_rayleigh_tail_moment,
    # 1 - u lies in (0, 1] for u in [0, 1)
    inv_cdf=lambda u: -np.log1p(-u),
    name="rayleigh",
    log_tail_moment=exp_integral_e1_log,
)


def _tabulated_channel(x: np.ndarray, y: np.ndarray, name: str) -> FadingChannel:
    if x.ndim != 1 or x.size < 2 or x.size != y.size:
        raise ValueError("tabulated channel needs matching 1-d arrays with >= 2 points")
    if np.any(np.diff(x) <= 0) or x[0] < 0:
        raise ValueError("tabulated alpha grid must be nonnegative and strictly increasing")
    if np.any(y < 0) or not np.all(np.isfinite(y)):
        raise ValueError("tabulated pdf values must be finite and >= 0")
    seg_mass = 0.5 * (y[1:] + y[:-1]) * np.diff(x)
    total = seg_mass.sum()
    if not total > 0:
        raise ValueError("tabulated pdf has zero mass")
    y = y / total
    seg_mass = seg_mass / total
    cum = np.concatenate([[0.0], np.cumsum(seg_mass)])
    slope = np.diff(y) / np.diff(x)
    intercept = y[:-1] - slope * x[:-1]

    def pdf(a):
        if a < x[0] or a > x[-1]:
            return 0.0
        return float(np.interp(a, x, y))

    def _partial(i, lo, hi):
        # int_lo^hi (intercept + slope t) dt on segment i
        return intercept[i] * (hi - lo) + 0.5 * slope[i] * (hi * hi - lo * lo)

    def cdf(a):
        if a <= x[0]:
            return 0.0
        if a >= x[-1]:
            return 1.0
        i = int(np.searchsorted(x, a, side="right") - 1)
        return float(min(1.0, cum[i] + _partial(i, x[i], a)))

    def _seg_moment(i, lo, hi):
        # int_lo^hi (intercept + slope t)/t dt
        if lo <= 0.0:
            return slope[i] * (hi - lo) if intercept[i] == 0.0 else math.inf
        return intercept[i] * math.log(hi / lo) + slope[i] * (hi - lo)

    def tail_moment(a):
        if a >= x[-1]:
            return 0.0
        a_eff = max(a, x[0])
        i = int(np.searchsorted(x, a_eff, side="right") - 1)
        acc = [_seg_moment(i, a_eff, x[i + 1])]
        acc.extend(_seg_moment(j, x[j], x[j + 1]) for j in range(i + 1, x.size - 1))
        return math.fsum(acc)

    def inv_cdf(u):
        u = np.asarray(u, dtype=float)
        i = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, x.size - 2)
        # solve intercept*(t - x_i) + slope/2 (t^2 - x_i^2) = u - cum_i for t in segment i
        rem = u - cum[i]
        s, c = slope[i], intercept[i]
        x0 = x[i]
        lin = c + s * x0  # pdf at x0
        with np.errstate(divide="ignore", invalid="ignore"):
            disc = np.maximum(lin * lin + 2.0 * s * rem, 0.0)
            t_quad = x0 + 2.0 * rem / (lin + np.sqrt(disc))
        t = np.where(lin + np.sqrt(disc) > 0, t_quad, x0)
        return np.clip(t, x[0], x[-1])

    return FadingChannel("custom", pdf, cdf, tail_moment, inv_cdf, name)


def _invert_cdf_numeric(cdf, u: np.ndarray, iters: int = 80) -> np.ndarray:
    """Vectorized bisection on a scalar cdf (slow; fallback only)."""
    out = np.empty_like(u)
    for k, uk in enumerate(u):
        lo, hi = 0.0, 1.0
        while cdf(hi) < uk:
            hi *= 2.0
            if hi > 1e300:
                break
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if cdf(mid) < uk:
                lo = mid
            else:
                hi = mid
        out[k] = 0.5 * (lo + hi)
    return out


# ---------------------------------------------------------------------------
# Link equations
# ---------------------------------------------------------------------------

def capacity(alpha, gamma):
    """Instantaneous capacity ``0.5 log2(1 + alpha gamma)`` in bits per channel use.

    Accepts scalars or numpy arrays.
    """
    alpha = np.asarray(alpha, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if np.any(alpha < 0) or np.any(gamma < 0):
        raise ValueError("capacity needs alpha >= 0 and gamma >= 0")
    out = 0.5 * np.log1p(alpha * gamma) / math.log(2.0)
    return float(out) if out.ndim == 0 else out


def instantaneous_distortion(sigma2, rate, cap, b: int):
    """End-to-end distortion of one block.

    ``sigma2 * 2**(-2 b rate)`` when the rate is supported by the channel,
    otherwise the decoder outputs the mean and the distortion is ``sigma2``.
    """
    sigma2 = np.asarray(sigma2, dtype=float)
    rate = np.asarray(rate, dtype=float)
    cap = np.asarray(cap, dtype=float)
    if np.any(sigma2 <= 0) or np.any(rate < 0) or np.any(cap < 0):
        raise ValueError("need sigma2 > 0, rate >= 0, cap >= 0")
    ok = rate <= cap + RATE_SLACK * np.maximum(1.0, cap)
    out = np.where(ok, sigma2 * np.exp2(-2.0 * b * rate), sigma2)
    return float(out) if out.ndim == 0 else out


def db_to_linear(x_db: float) -> float:
    x_db = float(x_db)
    if not math.isfinite(x_db):
        raise ValueError(f"dB value must be finite, got {x_db!r}")
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    x = float(x)
    if not (x > 0) or not math.isfinite(x):
        raise ValueError(f"linear value must be finite and > 0, got {x!r}")
    return 10.0 * math.log10(x)


# ---------------------------------------------------------------------------
# Sources used in the numerical experiments
# ---------------------------------------------------------------------------

def experimental_sigmas() -> np.ndarray:
    """Standard deviations ``1 + s/6`` for s = 0..24."""
    return 1.0 + np.arange(_N_STATES) / 6.0


def build_experimental_source(label: str) -> SourceModel:
    """One of the five reference sources.

    G1, G2, G3 weight the 25 states by a Gaussian kernel in sigma centred at 3
    with variance 0.05, 0.48, 1.07; U is uniform; S is stationary with sigma 3.
    """
    label = str(label).upper()
    if label == "S":
        return SourceModel([_SIGMA_MEAN ** 2], [1.0], "S")
    sig = experimental_sigmas()
    if label == "U":
        return SourceModel.from_weights(sig ** 2, np.ones(_N_STATES), "U")
    if label in _KERNEL_VARIANCE:
        v = _KERNEL_VARIANCE[label]
        w = np.exp(-((sig - _SIGMA_MEAN) ** 2) / (2.0 * v))
        return SourceModel.from_weights(sig ** 2, w, label)
    raise ValueError(f"unknown source label {label!r}; expected one of {EXPERIMENTAL_LABELS}")


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_states(source: SourceModel, channel: FadingChannel, rng: np.random.Generator, size: int):
    """Vectorized draw of ``size`` independent (state, gain) pairs.

    Returns ``(s, sigma2, alpha)`` arrays. The state is drawn before the gain
    in each call so a fixed generator state gives a fixed sequence.
    """
    if source.n_states == 1:
        rng.random(size)  # keep the stream layout independent of N_s
        s = np.zeros(size, dtype=np.int64)
    else:
        cum = np.cumsum(source.pmf)
        cum[-1] = 1.0
        s = np.searchsorted(cum, rng.random(size), side="right")
        s = np.minimum(s, source.n_states - 1)
    alpha = channel.sample(rng, size)
    return s, source.variances[s], alpha


def sample_state(source: SourceModel, channel: FadingChannel, rng: np.random.Generator) -> StateSample:
    s, sigma2, alpha = sample_states(source, channel, rng, 1)
    return StateSample(int(s[0]), float(sigma2[0]), float(alpha[0]))
