"""Method-of-types counting for cyclically shifted sequences.

A delay type is the empirical pair distribution of a sequence against its
own cyclic shift; for shift 1 it is the classical cyclic first-order
Markov type, and Whittle's count applies.  For a general shift with kappa
= gcd(n, k) cycles the analytic band is centered at n (H(pair) - H(marg))
+ kappa log2 r with half-width kappa r^2 log2(1 + n/kappa).  Everything in
this module is in bits; the information-density modules use nats, and the
boundary between the two is the explicit conversion point.

Exact class sizes come from exhaustive enumeration under a budget; the
analytic bands are always available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import Scenario
from .decoders import DecoderSpec, run_error_counts

ENUMERATION_BUDGET = 10_000_000
_CHUNK = 1 << 14


class BudgetExceededError(RuntimeError):
    """Exhaustive enumeration would exceed the sequence budget."""


class InsufficientErrorsError(RuntimeError):
    """Too few decoding errors to estimate a log-probability gap."""


def kappa_of_shift(n: int, k: int) -> int:
    """Number of cycles of the shift-by-k permutation; k = 0 gives n."""
    return n if k == 0 else math.gcd(n, k)


@dataclass(frozen=True)
class DelayType:
    """Empirical distribution of (x_i, x_{i+k mod n}) as integer counts."""

    n: int
    k: int
    r: int
    counts: np.ndarray  # (r, r) int64, sums to n

    @property
    def q(self) -> np.ndarray:
        return self.counts / self.n

    def key(self) -> tuple:
        return tuple(int(v) for v in self.counts.ravel())


@dataclass(frozen=True)
class JointDelayType:
    """Empirical distribution of (x_i, x_{i+k mod n}, y_i) as integer counts."""

    n: int
    k: int
    r_x: int
    r_y: int
    counts: np.ndarray  # (r_x, r_x, r_y) int64

    def key(self) -> tuple:
        return tuple(int(v) for v in self.counts.ravel())


def _as_seq(xs, r: int) -> np.ndarray:
    a = np.asarray(xs, dtype=np.int64)
    if a.ndim != 1 or a.size < 1:
        raise ValueError("sequence must be a nonempty 1-D array")
    if a.min() < 0 or a.max() >= r:
        raise ValueError("symbol outside the declared alphabet")
    return a


def delay_type_of(xs, k: int, r: int) -> DelayType:
    a = _as_seq(xs, r)
    n = a.size
    if not (0 <= k < n):
        raise ValueError(f"shift k={k} outside [0, {n})")
    shifted = np.roll(a, -k)
    counts = np.bincount(a * r + shifted, minlength=r * r).reshape(r, r)
    return DelayType(n=n, k=k, r=r, counts=counts)


def joint_delay_type_of(xs, ys, k: int, r_x: int, r_y: int) -> JointDelayType:
    a = _as_seq(xs, r_x)
    b = _as_seq(ys, r_y)
    if a.size != b.size:
        raise ValueError("sequence length mismatch")
    n = a.size
    if not (0 <= k < n):
        raise ValueError(f"shift k={k} outside [0, {n})")
    shifted = np.roll(a, -k)
    codes = (a * r_x + shifted) * r_y + b
    counts = np.bincount(codes, minlength=r_x * r_x * r_y).reshape(r_x, r_x, r_y)
    return JointDelayType(n=n, k=k, r_x=r_x, r_y=r_y, counts=counts)


def entropy_bits(counts) -> float:
    """Entropy in bits of the normalized count vector, 0 log 0 := 0."""
    c = np.asarray(counts, dtype=np.float64).ravel()
    n = c.sum()
    if n <= 0:
        raise ValueError("counts must have positive total")
    pos = c[c > 0]
    return float(np.dot(pos / n, np.log2(n) - np.log2(pos)))


def _all_sequences_chunked(n: int, r: int, budget: int):
    total = r**n
    if total > budget:
        raise BudgetExceededError(f"{r}^{n} = {total} exceeds budget {budget}")
    powers = r ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        yield (codes[:, None] // powers) % r


def exact_type_class_size(q: DelayType, budget: int = ENUMERATION_BUDGET) -> int:
    """Number of sequences in [r]^n whose delay type at shift k equals q,
    by exhaustive enumeration."""
    n, k, r = q.n, q.k, q.r
    if int(q.counts.sum()) != n:
        return 0
    target = q.counts.ravel()
    cells = r * r
    total = 0
    for seqs in _all_sequences_chunked(n, r, budget):
        m = seqs.shape[0]
        codes = seqs * r + np.roll(seqs, -k, axis=1)
        codes += (np.arange(m, dtype=np.int64) * cells)[:, None]
        counts = np.bincount(codes.ravel(), minlength=m * cells).reshape(m, cells)
        total += int((counts == target).all(axis=1).sum())
    return total


def delay_type_census(n: int, r: int, k: int, budget: int = ENUMERATION_BUDGET) -> dict:
    """Exact class size of every realizable delay type at shift k."""
    cells = r * r
    census: dict[tuple, int] = {}
    for seqs in _all_sequences_chunked(n, r, budget):
        m = seqs.shape[0]
        codes = seqs * r + np.roll(seqs, -k, axis=1)
        codes += (np.arange(m, dtype=np.int64) * cells)[:, None]
        counts = np.bincount(codes.ravel(), minlength=m * cells).reshape(m, cells)
        for row in counts:
            key = tuple(int(v) for v in row)
            census[key] = census.get(key, 0) + 1
    return census


def marginal_type_class_size(counts) -> int:
    """Exact multinomial count of sequences with the given symbol counts."""
    c = [int(v) for v in np.asarray(counts).ravel()]
    n = sum(c)
    size = math.factorial(n)
    for v in c:
        size //= math.factorial(v)
    return size


def type0_bounds(n: int, r: int, counts) -> tuple[float, float]:
    """log2 band for a marginal type class: [-r log2(n+1) + nH, nH]."""
    h = entropy_bits(counts)
    return (-r * math.log2(n + 1.0) + n * h, n * h)


def whittle_bounds(n: int, r: int, q: DelayType) -> tuple[float, float]:
    """log2 band for a cyclic first-order Markov type class (single-cycle
    shift): log2 r - (r^2 + r) log2(n+1) + n dH <= log2|T| <= log2 r + n dH
    with dH = H(pair) - H(marginal)."""
    if int(q.counts.sum()) != n:
        raise ValueError("counts do not sum to n")
    row = q.counts.sum(axis=1)
    col = q.counts.sum(axis=0)
    if not np.array_equal(row, col):
        raise ValueError("not a cyclic Markov type: marginals disagree")
    dh = entropy_bits(q.counts) - entropy_bits(row)
    base = math.log2(r)
    return (base - (r * r + r) * math.log2(n + 1.0) + n * dh, base + n * dh)


@dataclass(frozen=True)
class TypeCountReport:
    """Exact class size (log2, when enumerated) against the analytic band."""

    kind: str  # "delay" | "conditional"
    n: int
    r: int
    k: int
    kappa: int
    analytic_lb: float
    analytic_ub: float
    exact_size: int | None
    exact_log2_size: float | None
    in_band: bool | None
    budget_exceeded: bool


def delay_type_size_bounds(
    q: DelayType, budget: int = ENUMERATION_BUDGET, want_exact: bool = True
) -> TypeCountReport:
    """Analytic band for log2 of a delay-type class size, with the exact
    count folded in when the enumeration budget allows.

    Band: n (H(pair) - H(marg)) + kappa log2 r, half-width
    kappa r^2 log2(1 + n/kappa).
    """
    n, k, r = q.n, q.k, q.r
    kappa = kappa_of_shift(n, k)
    dh = entropy_bits(q.counts) - entropy_bits(q.counts.sum(axis=1))
    center = n * dh + kappa * math.log2(r)
    half = kappa * r * r * math.log2(1.0 + n / kappa)
    lb, ub = center - half, center + half
    exact = exact_log2 = in_band = None
    budget_exceeded = False
    if want_exact:
        try:
            exact = exact_type_class_size(q, budget)
            exact_log2 = math.log2(exact) if exact > 0 else -math.inf
            in_band = lb <= exact_log2 <= ub
        except BudgetExceededError:
            budget_exceeded = True
    return TypeCountReport(
        kind="delay",
        n=n,
        r=r,
        k=k,
        kappa=kappa,
        analytic_lb=lb,
        analytic_ub=ub,
        exact_size=exact,
        exact_log2_size=exact_log2,
        in_band=in_band,
        budget_exceeded=budget_exceeded,
    )


def exact_conditional_class_size(
    xs, jq: JointDelayType, budget: int = ENUMERATION_BUDGET
) -> int:
    """Number of sequences ys whose joint delay type with xs equals jq."""
    a = _as_seq(xs, jq.r_x)
    n, k = jq.n, jq.k
    if a.size != n:
        raise ValueError("conditioning sequence length does not match the type")
    base = (a * jq.r_x + np.roll(a, -k)) * jq.r_y
    cells = jq.r_x * jq.r_x * jq.r_y
    target = jq.counts.ravel()
    total = 0
    for ys in _all_sequences_chunked(n, jq.r_y, budget):
        m = ys.shape[0]
        codes = base[None, :] + ys
        codes += (np.arange(m, dtype=np.int64) * cells)[:, None]
        counts = np.bincount(codes.ravel(), minlength=m * cells).reshape(m, cells)
        total += int((counts == target).all(axis=1).sum())
    return total


def conditional_type_size_bounds(
    xs, jq: JointDelayType, budget: int = ENUMERATION_BUDGET, want_exact: bool = True
) -> TypeCountReport:
    """Analytic band for log2 of a conditional delay-type class size.

    Centered at n (H(pair, y) - H(pair)) with half-width
    kappa r_x^2 r_y log2(1 + n/kappa).  (The zero-slack lower edge one
    might hope for fails already for small n: conditioning on a constant
    sequence reduces the conditional class to a plain multinomial, which
    sits a polynomial factor below 2^{n dH}.)
    """
    n, k = jq.n, jq.k
    kappa = kappa_of_shift(n, k)
    pair = jq.counts.sum(axis=2)
    dh = entropy_bits(jq.counts) - entropy_bits(pair)
    center = n * dh
    half = kappa * jq.r_x * jq.r_x * jq.r_y * math.log2(1.0 + n / kappa)
    lb, ub = center - half, center + half
    exact = exact_log2 = in_band = None
    budget_exceeded = False
    if want_exact:
        try:
            exact = exact_conditional_class_size(xs, jq, budget)
            exact_log2 = math.log2(exact) if exact > 0 else -math.inf
            in_band = lb <= exact_log2 <= ub
        except BudgetExceededError:
            budget_exceeded = True
    return TypeCountReport(
        kind="conditional",
        n=n,
        r=jq.r_x,
        k=k,
        kappa=kappa,
        analytic_lb=lb,
        analytic_ub=ub,
        exact_size=exact,
        exact_log2_size=exact_log2,
        in_band=in_band,
        budget_exceeded=budget_exceeded,
    )


@dataclass(frozen=True)
class ExponentGapReport:
    """Cycle-count-driven corrections around the error exponent.

    gap_upper bounds (1/n)[log2 Pe(mmi) - log2 Pe(ml)] in bits per symbol;
    it is the exact sum of the mmi-side and ml-side corrections.  The
    exponent level itself enters additively and is supplied by the caller
    when absolute exponent bounds are wanted.
    """

    n: int
    kappa: int
    r: int
    gap_upper: float
    mmi_lower_correction: float
    ml_upper_correction: float
    vacuous: bool
    e_star: float | None
    mmi_exponent_lower: float | None
    ml_exponent_upper: float | None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def exponent_gap_bound(
    n: int, kappa: int, r: int, e_star: float | None = None
) -> ExponentGapReport:
    """Corrections and the MMI-vs-ML gap bound for cycle count kappa."""
    if not (1 <= kappa <= n):
        raise ValueError("kappa must lie in [1, n]")
    if r < 2:
        raise ValueError("r must be >= 2")
    lg = math.log2(1.0 + n / kappa)
    frac = kappa / n
    mmi_corr = (
        frac * r * r * (r + 1) * lg
        + r**3 * math.log2(1.0 + n) / n
        + frac * math.log2(r)
        + math.log2(kappa) / n
    )
    ml_corr = frac * r * r * lg - frac * math.log2(r)
    gap = (
        frac * r * r * (r + 2) * lg
        + r**3 * math.log2(1.0 + n) / n
        + math.log2(kappa) / n
    )
    return ExponentGapReport(
        n=n,
        kappa=kappa,
        r=r,
        gap_upper=gap,
        mmi_lower_correction=mmi_corr,
        ml_upper_correction=ml_corr,
        vacuous=gap >= r * r * (r + 2),
        e_star=e_star,
        mmi_exponent_lower=None if e_star is None else e_star - mmi_corr,
        ml_exponent_upper=None if e_star is None else e_star + ml_corr,
    )


@dataclass(frozen=True)
class EmpiricalGap:
    """Plug-in per-symbol log2 error-rate gap with a delta-method 1-sigma."""

    gap_hat: float
    gap_ci: float
    p_ml: float
    p_mmi: float
    errors_ml: int
    errors_mmi: int
    trials: int


def empirical_gap(
    scenario: Scenario, trials: int, seed: int, threads: int = 1
) -> EmpiricalGap:
    """Paired Monte Carlo of ML and MMI on common instances.

    Requires at least 20 errors per decoder; the returned gap_ci is the
    delta-method standard error of gap_hat (paired runs make the
    independence approximation conservative for the difference).
    """
    counts = run_error_counts(
        scenario, (DecoderSpec("ml"), DecoderSpec("mmi")), trials, seed, threads
    )
    e_ml, e_mmi = int(counts[0]), int(counts[1])
    if min(e_ml, e_mmi) < 20:
        raise InsufficientErrorsError(
            f"only ({e_ml}, {e_mmi}) errors in {trials} trials; "
            "increase trials or use a noisier channel"
        )
    p_ml, p_mmi = e_ml / trials, e_mmi / trials
    n = scenario.n
    gap = (math.log2(p_mmi) - math.log2(p_ml)) / n
    var = (1 - p_ml) / (trials * p_ml) + (1 - p_mmi) / (trials * p_mmi)
    return EmpiricalGap(
        gap_hat=gap,
        gap_ci=math.sqrt(var) / (n * math.log(2.0)),
        p_ml=p_ml,
        p_mmi=p_mmi,
        errors_ml=e_ml,
        errors_mmi=e_mmi,
        trials=trials,
    )
