"""Analytic achievability chain for the threshold-scan decoder.

The error bound is a sum of four pieces: a Berry-Esseen Gaussian tail for
missing the true alignment, the Berry-Esseen residual, a change-of-measure
tail for derangement (fixed-point-free) misalignments, and a Sanov-type
term for the fixed-point block of the worst misalignment.  On top of the
bound sit an achievability check at a target error level and a minimum
sample-size search.

Conventions: thresholds and information quantities are in nats; the
Berry-Esseen constant 6T/V^{3/2} (b_be) appears with the Gaussian term,
while the change-of-measure constant 6T/V (b_ppv) appears inside the
derangement term.  Sample-size bookkeeping follows the family-size model
M = 2c n^alpha + 1 with a fixed-point fraction gamma_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

from .info_measures import (
    DegenerateDistributionError,
    InfeasibleThresholdError,
    InfoMoments,
    JointPMF,
    RateEval,
    moments,
    rate_function,
)

_SQRT2 = math.sqrt(2.0)
_DERANGEMENT_LEAD = 6.0 * math.sqrt(3.0)
_GAUSS_KERNEL = math.log(2.0) / math.sqrt(2.0 * math.pi)


def q_function(tau: float) -> float:
    """Standard Gaussian upper-tail probability Q(tau)."""
    if not math.isfinite(tau):
        raise ValueError("tau must be finite")
    return 0.5 * math.erfc(tau / _SQRT2)


def _gauss_pdf(tau: float) -> float:
    return math.exp(-0.5 * tau * tau) / math.sqrt(2.0 * math.pi)


def q_inverse(eps: float) -> float:
    """tau with Q(tau) = eps, by bisection then Newton polish."""
    if not (0.0 < eps < 1.0):
        raise ValueError("q_inverse requires 0 < eps < 1")
    lo, hi = -40.0, 40.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if q_function(mid) > eps:
            lo = mid
        else:
            hi = mid
    tau = 0.5 * (lo + hi)
    for _ in range(8):
        pdf = _gauss_pdf(tau)
        if pdf <= 0.0:
            break
        step = (q_function(tau) - eps) / pdf
        tau += step
        if abs(step) < 1e-15:
            break
    return tau


class TailBound(NamedTuple):
    """A probability bound kept raw (it may exceed 1) plus its clamp."""

    raw: float
    clamped: float


def berry_esseen_cdf_bound(mom: InfoMoments, n: int, delta: float) -> TailBound:
    """Bound on P[iota(n samples) <= delta]: Q((nI - delta)/sqrt(nV)) + b_be/sqrt(n)."""
    if mom.degenerate or mom.b_be is None:
        raise DegenerateDistributionError("dispersion is zero; CDF bound undefined")
    if n < 1:
        raise ValueError("n must be >= 1")
    tau = (n * mom.mi - delta) / math.sqrt(n * mom.dispersion)
    raw = q_function(tau) + mom.b_be / math.sqrt(n)
    return TailBound(raw=raw, clamped=min(max(raw, 0.0), 1.0))


@dataclass(frozen=True)
class SanovBound:
    """Polynomial-times-exponential tail bound with its rate evaluation."""

    value: float
    c_n: float
    rate: RateEval
    vacuous: bool


def sanov_tail_bound(p: JointPMF, n: int, t: float) -> SanovBound:
    """Bound on P[iota(n samples) >= n t]: (n+1)^{|X||Y|} exp(-n rate(t))."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rate = rate_function(p, t)
    log_cn = p.x_size * p.y_size * math.log(n + 1.0)
    log_value = log_cn - n * rate.rate
    value = math.inf if log_value > 700 else math.exp(log_value)
    return SanovBound(
        value=value, c_n=math.exp(log_cn), rate=rate, vacuous=value >= 1.0
    )


def derangement_tail_bound(mom: InfoMoments, n: int, delta: float) -> float:
    """Bound on P[iota(X; Y o pi) >= delta] for a derangement pi:
    6 sqrt(3) (log2/sqrt(2 pi) + 2 b_ppv) / sqrt(n V) * exp(-delta/3)."""
    if mom.degenerate or mom.b_ppv is None:
        raise DegenerateDistributionError("dispersion is zero; tail bound undefined")
    if n < 3:
        raise ValueError("n must be >= 3")
    lead = _DERANGEMENT_LEAD * (_GAUSS_KERNEL + 2.0 * mom.b_ppv)
    return lead / math.sqrt(n * mom.dispersion) * math.exp(-delta / 3.0)


@dataclass(frozen=True)
class BoundReport:
    """The four additive error-bound terms and every intermediate quantity."""

    n: int
    m: float
    alpha: float
    c: float
    gamma_n: float
    delta: float
    delta1: float
    delta2: float
    tau: float
    term_cdf: float
    term_be_residual: float
    term_derangement: float
    term_sanov: float
    total: float
    vacuous: bool
    rate_threshold_t: float
    rate_value: float
    lambda_star: float
    b_be: float
    b_ppv: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def feinstein_error_bound(
    p: JointPMF, n: int, alpha: float, c: float, gamma_n: float, delta: float
) -> BoundReport:
    """Four-term error bound for the threshold-scan decoder at threshold delta.

    Requires delta >= 3 alpha log n + gamma_n n I + 3 log c (natural logs)
    and 0 < gamma_n < 1.  The threshold splits as delta2 = 3 alpha log n +
    3 log c (spent on the derangement part) and delta1 = delta - delta2
    (spent on the fixed-point block at per-sample level t1 = delta1 /
    (gamma_n n)); t1 above the maximum density raises
    InfeasibleThresholdError.  Totals above 1 are reported raw and flagged
    vacuous, never silently clamped.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    if not (0.0 < gamma_n < 1.0):
        raise ValueError("gamma_n must lie in (0, 1)")
    if c <= 0.0:
        raise ValueError("c must be positive")
    mom = moments(p)
    if mom.degenerate:
        raise DegenerateDistributionError("dispersion is zero; bound undefined")
    delta2 = 3.0 * alpha * math.log(n) + 3.0 * math.log(c)
    delta_min = delta2 + gamma_n * n * mom.mi
    if delta < delta_min - 1e-9:
        raise ValueError(
            f"delta={delta!r} below the admissible minimum {delta_min!r}"
        )
    delta1 = delta - delta2
    block = gamma_n * n
    t1 = delta1 / block
    rate = rate_function(p, t1)
    tau = (n * mom.mi - delta) / math.sqrt(n * mom.dispersion)
    be_residual = mom.b_be / math.sqrt(n)
    term_cdf = q_function(tau) + be_residual
    m = 2.0 * c * n**alpha + 1.0
    log_sanov = (
        math.log(c)
        + alpha * math.log(n)
        + p.x_size * p.y_size * math.log(block + 1.0)
        - block * rate.rate
    )
    term_sanov = math.inf if log_sanov > 700 else math.exp(log_sanov)
    term_derangement = (
        _DERANGEMENT_LEAD
        * (_GAUSS_KERNEL + 2.0 * mom.b_ppv)
        / math.sqrt((1.0 - gamma_n) * n)
    )
    total = term_cdf + term_sanov + term_derangement
    return BoundReport(
        n=n,
        m=m,
        alpha=alpha,
        c=c,
        gamma_n=gamma_n,
        delta=delta,
        delta1=delta1,
        delta2=delta2,
        tau=tau,
        term_cdf=term_cdf,
        term_be_residual=be_residual,
        term_derangement=term_derangement,
        term_sanov=term_sanov,
        total=total,
        vacuous=total > 1.0,
        rate_threshold_t=t1,
        rate_value=rate.rate,
        lambda_star=rate.lambda_star,
        b_be=mom.b_be,
        b_ppv=mom.b_ppv,
    )


@dataclass(frozen=True)
class AchievabilityResult:
    """Threshold-interval test at one sample size, with diagnostics.

    ok holds iff the threshold window [delta_lb, delta_ub] is nonempty and
    the Sanov-rate side condition holds at the window's top (t1 above the
    maximum density counts as rate +inf).  small_terms carries the
    sub-polynomial residuals (b_be, derangement lead, c/sqrt(n)) for
    reporting; eps_margin_ok records whether eps exceeds them.
    """

    ok: bool
    n: int
    epsilon: float
    delta_lb: float
    delta_ub: float
    small_terms: float
    eps_margin_ok: bool
    side_condition_ok: bool
    side_lhs: float
    side_rate: float
    rate_threshold_t1: float
    degenerate: bool


def achievability_check(
    p: JointPMF, n: int, eps: float, alpha: float, c: float, gamma_n: float
) -> AchievabilityResult:
    """Does some threshold achieve error <= eps at this sample size?"""
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    if n < 2:
        raise ValueError("n must be >= 2")
    if not (0.0 < gamma_n < 1.0):
        raise ValueError("gamma_n must lie in (0, 1)")
    mom = moments(p)
    if mom.degenerate or mom.mi <= 0.0:
        return AchievabilityResult(
            ok=False,
            n=n,
            epsilon=eps,
            delta_lb=math.nan,
            delta_ub=math.nan,
            small_terms=math.nan,
            eps_margin_ok=False,
            side_condition_ok=False,
            side_lhs=math.nan,
            side_rate=math.nan,
            rate_threshold_t1=math.nan,
            degenerate=True,
        )
    delta2 = 3.0 * alpha * math.log(n) + 3.0 * math.log(c)
    delta_lb = gamma_n * n * mom.mi + delta2
    delta_ub = n * mom.mi - math.sqrt(n * mom.dispersion) * q_inverse(eps)
    small_terms = (
        mom.b_be / math.sqrt(n)
        + _DERANGEMENT_LEAD
        * (_GAUSS_KERNEL + 2.0 * mom.b_ppv)
        / math.sqrt((1.0 - gamma_n) * n)
        + c / math.sqrt(n)
    )
    block = gamma_n * n
    t1 = (delta_ub - delta2) / block
    if t1 < mom.mi:
        side_rate = 0.0
    else:
        try:
            side_rate = rate_function(p, t1).rate
        except InfeasibleThresholdError:
            side_rate = math.inf
    side_lhs = math.log1p(block) / block
    side_ok = side_lhs <= side_rate / (2.0 * p.x_size * p.y_size)
    ok = delta_lb <= delta_ub and side_ok
    return AchievabilityResult(
        ok=ok,
        n=n,
        epsilon=eps,
        delta_lb=delta_lb,
        delta_ub=delta_ub,
        small_terms=small_terms,
        eps_margin_ok=eps > small_terms,
        side_condition_ok=side_ok,
        side_lhs=side_lhs,
        side_rate=side_rate,
        rate_threshold_t1=t1,
        degenerate=False,
    )


def inv_sqrt_gamma(n: int) -> float:
    """Default fixed-point fraction schedule gamma_n = n^{-1/2}."""
    return n**-0.5


@dataclass(frozen=True)
class SampleSizeResult:
    epsilon: float
    channel: str
    n_min: int | None
    cap: int
    witness: AchievabilityResult | None
    side_condition_ok: bool | None


def min_sample_size(
    p: JointPMF,
    eps: float,
    alpha: float = 5.0,
    c: float = 0.5,
    gamma: Callable[[int], float] = inv_sqrt_gamma,
    cap: int = 200_000,
    channel: str = "",
) -> SampleSizeResult:
    """Smallest n <= cap passing the achievability check.

    The predicate is not proven monotone in n, so the search is a linear
    scan in increasing n; "not found" is a value, not an error.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    for n in range(2, cap + 1):
        g = gamma(n)
        if not (0.0 < g < 1.0):
            continue
        res = achievability_check(p, n, eps, alpha, c, g)
        if res.degenerate:
            break
        if res.ok:
            return SampleSizeResult(
                epsilon=eps,
                channel=channel,
                n_min=n,
                cap=cap,
                witness=res,
                side_condition_ok=res.side_condition_ok,
            )
    return SampleSizeResult(
        epsilon=eps, channel=channel, n_min=None, cap=cap, witness=None,
        side_condition_ok=None,
    )
