"""Alignment decoders and the Monte Carlo error-probability harness.

Three decoders over an ordered transformation family:

* ml: argmax of the conditional log-likelihood sum (channel-aware, Bayes
  optimal under the uniform transformation prior);
* mmi: argmax of empirical mutual information (channel-agnostic);
* feinstein: first member, in family order, whose summed information
  density crosses a threshold; no crossing decodes to nothing and counts
  as an error.

All scores are computed from the per-member cell-count matrix and a fixed
per-cell score table, so members with identical counts produce bitwise
identical scores and ties resolve deterministically to the earliest family
index.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channels import Scenario, _draw_fields, _joint_cdf, trial_rng
from .info_measures import (
    JointPMF,
    info_density_table,
    sequence_info_density,
)
from .permutations import (
    Permutation,
    TransformationFamily,
    inverse,
    worst_case_transform,
)

_WILSON_Z = 1.959963984540054  # 97.5% normal quantile


@dataclass(frozen=True)
class DecodeResult:
    chosen: Permutation | None
    index_in_family: int | None
    score: float | None
    threshold_used: float | None = None
    degenerate: bool = False


@dataclass(frozen=True)
class ErrorEstimate:
    trials: int
    errors: int
    p_hat: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class DecoderSpec:
    kind: str  # "ml" | "mmi" | "feinstein"
    delta: float | None = None

    def __post_init__(self):
        if self.kind not in ("ml", "mmi", "feinstein"):
            raise ValueError(f"unknown decoder kind {self.kind!r}")
        if self.kind == "feinstein" and self.delta is None:
            raise ValueError("feinstein decoder requires a threshold delta")


@dataclass(frozen=True)
class TermEstimates:
    """Monte Carlo estimates of the miss and worst-case false-alarm terms."""

    trials: int
    p1_hat: float
    p1_ci: tuple[float, float]
    p2_hat: float
    p2_ci: tuple[float, float]


def wilson_interval(errors: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    z2 = _WILSON_Z * _WILSON_Z
    phat = errors / trials
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2 * trials)) / denom
    half = (_WILSON_Z / denom) * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials * trials))
    return max(center - half, 0.0), min(center + half, 1.0)


def _mapping_matrix(family: TransformationFamily) -> np.ndarray:
    return np.asarray([m.mapping for m in family.members], dtype=np.int64)


def _member_counts(xs, ys, family, x_size, y_size, mappings=None) -> np.ndarray:
    """Cell-count matrix per member: counts[j, a, b] = #{i: xs[i]=a, ys[pi_j(i)]=b}."""
    xa = np.asarray(xs, dtype=np.int64)
    ya = np.asarray(ys, dtype=np.int64)
    if xa.shape[0] != family.n or ya.shape[0] != family.n:
        raise ValueError("sequence length does not match the family's ground set")
    if mappings is None:
        mappings = _mapping_matrix(family)
    m = mappings.shape[0]
    k = x_size * y_size
    codes = xa[None, :] * y_size + ya[mappings]
    codes += (np.arange(m) * k)[:, None]
    counts = np.bincount(codes.ravel(), minlength=m * k)
    return counts.reshape(m, k)


def _scores_from_counts(counts: np.ndarray, table_flat: np.ndarray) -> np.ndarray:
    """Dot counts with a score table; cells where the table is -inf make the
    whole member score -inf (never NaN)."""
    neg = np.isneginf(table_flat)
    finite = np.where(neg, 0.0, table_flat)
    scores = counts @ finite
    if np.any(neg):
        scores[(counts[:, neg] > 0).any(axis=1)] = -np.inf
    return scores


def _mi_from_counts(counts: np.ndarray, x_size: int, y_size: int) -> np.ndarray:
    """Empirical mutual information (nats) per member from count rows."""
    c = counts.reshape(counts.shape[0], x_size, y_size).astype(np.float64)
    n = c[0].sum()
    cx = c.sum(axis=2)
    cy = c.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.log(c * n) - np.log(cx[:, :, None]) - np.log(cy[:, None, :])
        terms = np.where(c > 0, c * ratio, 0.0)
    return np.maximum(terms.sum(axis=(1, 2)) / n, 0.0)


def conditional_log_table(p: JointPMF) -> np.ndarray:
    """log W(y|x) = log p(x,y) - log p_X(x); -inf on zero cells."""
    if np.any(p.marginal_x <= 0):
        raise ValueError("conditional undefined: an x-marginal is zero")
    with np.errstate(divide="ignore"):
        return np.log(p.probs) - np.log(p.marginal_x)[:, None]


def ml_decode(p: JointPMF, xs, ys, family: TransformationFamily) -> DecodeResult:
    """Maximum-likelihood member: argmax_j sum_i log W(ys[pi_j(i)] | xs[i])."""
    counts = _member_counts(xs, ys, family, p.x_size, p.y_size)
    scores = _scores_from_counts(counts, conditional_log_table(p).ravel())
    best = int(np.argmax(scores))
    if math.isinf(scores[best]) and scores[best] < 0:
        return DecodeResult(
            chosen=family.members[0], index_in_family=0, score=-math.inf, degenerate=True
        )
    return DecodeResult(
        chosen=family.members[best], index_in_family=best, score=float(scores[best])
    )


def mmi_decode(xs, ys, family: TransformationFamily, x_size: int, y_size: int) -> DecodeResult:
    """Max empirical mutual information member (nats); argmax is base-invariant."""
    counts = _member_counts(xs, ys, family, x_size, y_size)
    scores = _mi_from_counts(counts, x_size, y_size)
    best = int(np.argmax(scores))
    return DecodeResult(
        chosen=family.members[best], index_in_family=best, score=float(scores[best])
    )


def feinstein_decode(
    p: JointPMF, xs, ys, family: TransformationFamily, delta: float
) -> DecodeResult:
    """First member in order whose summed information density reaches delta."""
    counts = _member_counts(xs, ys, family, p.x_size, p.y_size)
    scores = _scores_from_counts(counts, info_density_table(p).ravel())
    hits = scores >= delta
    if not hits.any():
        return DecodeResult(chosen=None, index_in_family=None, score=None, threshold_used=delta)
    first = int(np.argmax(hits))
    return DecodeResult(
        chosen=family.members[first],
        index_in_family=first,
        score=float(scores[first]),
        threshold_used=delta,
    )


def lrt_equivalence_check(p: JointPMF, xs, ys, pi: Permutation) -> tuple[float, float]:
    """Density vs. likelihood-plus-constant, both in nats.

    lhs = iota(xs; ys o pi); rhs = sum_i log p(xs[i], ys[pi(i)]) + C with
    C = -sum log p_X(xs) - sum log p_Y(ys).  Requires full support.
    """
    if np.any(p.probs <= 0):
        raise ValueError("equivalence check requires a full-support joint")
    xa = np.asarray(xs, dtype=np.int64)
    ya = np.asarray(ys, dtype=np.int64)
    y_perm = ya[np.asarray(pi.mapping)]
    lhs = sequence_info_density(p, xa, y_perm)
    joint_ll = float(np.log(p.probs[xa, y_perm]).sum())
    c = -float(np.log(p.marginal_x[xa]).sum()) - float(np.log(p.marginal_y[ya]).sum())
    return lhs, joint_ll + c


class _TrialHarness:
    """Shared per-trial sampling + scoring used by the Monte Carlo entry points."""

    def __init__(self, scenario: Scenario, specs: tuple[DecoderSpec, ...]):
        self.scenario = scenario
        self.specs = specs
        self.cdf = _joint_cdf(scenario.prior, scenario.dmc)
        self.mappings = _mapping_matrix(scenario.family)
        p = scenario.joint()
        self.x_size, self.y_size = p.x_size, p.y_size
        self.tables = []
        for spec in specs:
            if spec.kind == "ml":
                self.tables.append(conditional_log_table(p).ravel())
            elif spec.kind == "feinstein":
                self.tables.append(info_density_table(p).ravel())
            else:
                self.tables.append(None)
        inv_idx = []
        for m in scenario.family.members:
            j = scenario.family.index_of(inverse(m))
            if j is None:
                raise ValueError("family is not closed under inverses")
            inv_idx.append(j)
        self.inverse_index = np.asarray(inv_idx)

    def run(self, seed: int, start: int, stop: int) -> np.ndarray:
        errors = np.zeros(len(self.specs), dtype=np.int64)
        sc = self.scenario
        for t in range(start, stop):
            rng = trial_rng(seed, t)
            xs, ys_clean, true_index = _draw_fields(
                rng, self.cdf, sc.dmc, sc.family.size, sc.n
            )
            ys = ys_clean[np.asarray(sc.family.members[true_index].mapping)]
            counts = _member_counts(
                xs, ys, sc.family, self.x_size, self.y_size, self.mappings
            )
            correct = self.inverse_index[true_index]
            for si, spec in enumerate(self.specs):
                if spec.kind == "mmi":
                    scores = _mi_from_counts(counts, self.x_size, self.y_size)
                    chosen = int(np.argmax(scores))
                else:
                    scores = _scores_from_counts(counts, self.tables[si])
                    if spec.kind == "ml":
                        chosen = int(np.argmax(scores))
                    else:
                        hits = scores >= spec.delta
                        chosen = int(np.argmax(hits)) if hits.any() else -1
                if chosen != correct:
                    errors[si] += 1
        return errors


def _harness_worker(args):
    harness, seed, start, stop = args
    return harness.run(seed, start, stop)


def run_error_counts(
    scenario: Scenario,
    specs: tuple[DecoderSpec, ...],
    trials: int,
    seed: int,
    threads: int = 1,
) -> np.ndarray:
    """Error counts per decoder over shared instances; scheduling-independent."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    harness = _TrialHarness(scenario, tuple(specs))
    if threads <= 1 or trials < 2 * threads:
        return harness.run(seed, 0, trials)
    bounds = np.linspace(0, trials, threads + 1).astype(int)
    jobs = [(harness, seed, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_harness_worker, jobs))
    return np.sum(parts, axis=0)


def monte_carlo_error(
    decoder_spec: DecoderSpec,
    scenario: Scenario,
    trials: int,
    seed: int,
    threads: int = 1,
) -> ErrorEstimate:
    """Fraction of trials where the decoded member is not the inverse of the
    true transformation (a no-decision from the threshold decoder counts
    as an error), with a 95% Wilson interval."""
    errors = int(run_error_counts(scenario, (decoder_spec,), trials, seed, threads)[0])
    lo, hi = wilson_interval(errors, trials)
    return ErrorEstimate(
        trials=trials, errors=errors, p_hat=errors / trials, ci_low=lo, ci_high=hi
    )


def term_estimates(
    scenario: Scenario,
    delta: float,
    trials: int,
    seed: int,
    threads: int = 1,
) -> TermEstimates:
    """Estimates of P[iota(X;Y) <= delta] and P[iota(X;Y_pi') > delta], where
    pi' is the family's worst-case (most fixed points) transformation."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = scenario.joint()
    table = info_density_table(p).ravel()
    pi_worst = np.asarray(worst_case_transform(scenario.family).mapping)
    cdf = _joint_cdf(scenario.prior, scenario.dmc)

    def count_range(start: int, stop: int) -> np.ndarray:
        c = np.zeros(2, dtype=np.int64)
        for t in range(start, stop):
            rng = trial_rng(seed, t)
            xs, ys, _ = _draw_fields(rng, cdf, scenario.dmc, scenario.family.size, scenario.n)
            codes = xs * p.y_size
            aligned = float(table[codes + ys].sum())
            misaligned = float(table[codes + ys[pi_worst]].sum())
            if aligned <= delta:
                c[0] += 1
            if misaligned > delta:
                c[1] += 1
        return c

    if threads <= 1 or trials < 2 * threads:
        counts = count_range(0, trials)
    else:
        bounds = np.linspace(0, trials, threads + 1).astype(int)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(
                pool.map(
                    _term_worker,
                    [
                        (scenario, delta, seed, int(a), int(b))
                        for a, b in zip(bounds[:-1], bounds[1:])
                    ],
                )
            )
        counts = np.sum(parts, axis=0)
    return TermEstimates(
        trials=trials,
        p1_hat=counts[0] / trials,
        p1_ci=wilson_interval(int(counts[0]), trials),
        p2_hat=counts[1] / trials,
        p2_ci=wilson_interval(int(counts[1]), trials),
    )


def _term_worker(args):
    scenario, delta, seed, start, stop = args
    p = scenario.joint()
    table = info_density_table(p).ravel()
    pi_worst = np.asarray(worst_case_transform(scenario.family).mapping)
    cdf = _joint_cdf(scenario.prior, scenario.dmc)
    c = np.zeros(2, dtype=np.int64)
    for t in range(start, stop):
        rng = trial_rng(seed, t)
        xs, ys, _ = _draw_fields(rng, cdf, scenario.dmc, scenario.family.size, scenario.n)
        codes = xs * p.y_size
        if float(table[codes + ys].sum()) <= delta:
            c[0] += 1
        if float(table[codes + ys[pi_worst]].sum()) > delta:
            c[1] += 1
    return c
