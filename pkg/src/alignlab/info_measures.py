"""Discrete joint distributions and information-density machinery.

Everything here works in nats on finite alphabets.  The information density
iota(x, y) = log p(x,y) / (p_X(x) p_Y(y)) and its first three moments drive
both the decoders and the analytic bounds; the cumulant generating function
and its Legendre transform supply the large-deviations rate used by the
tail bounds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

PROB_SUM_TOL = 1e-12
DEGENERATE_DISPERSION_TOL = 1e-12


class AlphabetError(ValueError):
    """A symbol or index falls outside the declared alphabet."""


class DegenerateDistributionError(ValueError):
    """An operation is undefined because a marginal or moment vanishes."""


class SupportViolationError(ValueError):
    """q puts mass where p has none (absolute continuity fails)."""


class InfeasibleThresholdError(ValueError):
    """A tail threshold exceeds the largest attainable information density."""


@dataclass(frozen=True)
class JointPMF:
    """A joint pmf p(x, y) on [x_size] x [y_size] with cached marginals.

    Immutable after construction; the arrays are marked read-only so
    instances can be shared freely across threads.
    """

    x_size: int
    y_size: int
    probs: np.ndarray
    marginal_x: np.ndarray
    marginal_y: np.ndarray

    @classmethod
    def from_probs(cls, probs) -> "JointPMF":
        m = np.asarray(probs, dtype=np.float64)
        if m.ndim != 2:
            raise ValueError("probs must be a 2-D matrix")
        x_size, y_size = m.shape
        if x_size < 2 or y_size < 2:
            raise AlphabetError("alphabet sizes must be at least 2")
        if np.any(m < 0):
            raise ValueError("probabilities must be nonnegative")
        total = float(m.sum())
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        mx = m.sum(axis=1)
        my = m.sum(axis=0)
        for a in (m, mx, my):
            a.setflags(write=False)
        return cls(x_size=x_size, y_size=y_size, probs=m, marginal_x=mx, marginal_y=my)

    def to_json(self) -> str:
        return json.dumps(
            {
                "x_size": self.x_size,
                "y_size": self.y_size,
                "probs": [float(v) for v in self.probs.ravel()],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "JointPMF":
        obj = json.loads(text)
        for key in ("x_size", "y_size", "probs"):
            if key not in obj:
                raise ValueError(f"missing key {key!r} in JointPMF JSON")
        x_size, y_size = int(obj["x_size"]), int(obj["y_size"])
        flat = np.asarray(obj["probs"], dtype=np.float64)
        if flat.size != x_size * y_size:
            raise ValueError("probs length does not match x_size * y_size")
        return cls.from_probs(flat.reshape(x_size, y_size))


@dataclass(frozen=True)
class InfoMoments:
    """Moment bundle of the information density.

    mi, dispersion and third_abs are the mean, variance and third absolute
    central moment of iota (nats, nats^2, nats^3).  b_be = 6 T / V^{3/2} is
    the Berry-Esseen constant, b_ppv = 6 T / V the constant used by the
    change-of-measure tail bound; both are None when the density is
    degenerate (V = 0).  lautum is KL(p_X p_Y || p_XY), +inf if the product
    support exceeds the joint support.
    """

    mi: float
    dispersion: float
    third_abs: float
    b_be: float | None
    b_ppv: float | None
    lautum: float
    degenerate: bool


def info_density_table(p: JointPMF) -> np.ndarray:
    """Matrix of iota(x, y) in nats; -inf on zero-probability cells."""
    if np.any(p.marginal_x <= 0) or np.any(p.marginal_y <= 0):
        raise DegenerateDistributionError("a marginal probability is zero")
    with np.errstate(divide="ignore"):
        t = np.log(p.probs) - np.log(np.outer(p.marginal_x, p.marginal_y))
    t.setflags(write=False)
    return t


def info_density(p: JointPMF, x: int, y: int) -> float:
    """iota(x, y) = log p(x,y)/(p_X(x) p_Y(y)) in nats."""
    if not (0 <= x < p.x_size) or not (0 <= y < p.y_size):
        raise AlphabetError(f"symbol pair ({x}, {y}) outside alphabet")
    px = p.marginal_x[x]
    py = p.marginal_y[y]
    if px <= 0 or py <= 0:
        raise DegenerateDistributionError("a marginal probability is zero")
    pxy = p.probs[x, y]
    if pxy == 0.0:
        return -math.inf
    return math.log(pxy) - math.log(px) - math.log(py)


def moments(p: JointPMF) -> InfoMoments:
    """Exact moments of the information density by finite summation."""
    table = info_density_table(p)
    mask = p.probs > 0
    w = p.probs[mask]
    v = table[mask]
    mi = float(np.dot(w, v))
    dev = v - mi
    dispersion = float(np.dot(w, dev * dev))
    third_abs = float(np.dot(w, np.abs(dev) ** 3))
    mi = max(mi, 0.0) if abs(mi) < 1e-15 else mi
    degenerate = dispersion <= DEGENERATE_DISPERSION_TOL
    if degenerate:
        b_be = b_ppv = None
    else:
        b_be = 6.0 * third_abs / dispersion**1.5
        b_ppv = 6.0 * third_abs / dispersion
    prod = np.outer(p.marginal_x, p.marginal_y)
    if np.any((prod > 0) & (p.probs == 0)):
        lautum = math.inf
    else:
        pm = prod > 0
        lautum = float(np.dot(prod[pm], np.log(prod[pm]) - np.log(p.probs[pm])))
        lautum = max(lautum, 0.0)
    return InfoMoments(
        mi=mi,
        dispersion=max(dispersion, 0.0),
        third_abs=max(third_abs, 0.0),
        b_be=b_be,
        b_ppv=b_ppv,
        lautum=lautum,
        degenerate=degenerate,
    )


def _check_sequences(xs, ys, x_size: int, y_size: int) -> tuple[np.ndarray, np.ndarray]:
    xa = np.asarray(xs, dtype=np.int64)
    ya = np.asarray(ys, dtype=np.int64)
    if xa.ndim != 1 or ya.ndim != 1:
        raise ValueError("sequences must be 1-D")
    if xa.shape[0] != ya.shape[0]:
        raise ValueError(f"length mismatch: {xa.shape[0]} vs {ya.shape[0]}")
    if xa.shape[0] < 1:
        raise ValueError("sequences must be nonempty")
    if xa.size and (xa.min() < 0 or xa.max() >= x_size):
        raise AlphabetError("x symbol outside alphabet")
    if ya.size and (ya.min() < 0 or ya.max() >= y_size):
        raise AlphabetError("y symbol outside alphabet")
    return xa, ya


def sequence_info_density(p: JointPMF, xs, ys) -> float:
    """Sum of per-position information densities, iota(xs; ys) in nats."""
    xa, ya = _check_sequences(xs, ys, p.x_size, p.y_size)
    table = info_density_table(p)
    return float(table[xa, ya].sum())


def empirical_joint(xs, ys, x_size: int, y_size: int) -> JointPMF:
    """Empirical joint distribution of paired sequences on a declared alphabet."""
    xa, ya = _check_sequences(xs, ys, x_size, y_size)
    n = xa.shape[0]
    counts = np.bincount(xa * y_size + ya, minlength=x_size * y_size)
    return JointPMF.from_probs(counts.reshape(x_size, y_size) / n)


def mi_of(p: JointPMF) -> float:
    """Mutual information of a joint pmf in nats, with 0 log 0 := 0."""
    mask = p.probs > 0
    w = p.probs[mask]
    denom = np.outer(p.marginal_x, p.marginal_y)[mask]
    return max(float(np.dot(w, np.log(w) - np.log(denom))), 0.0)


def empirical_mi(xs, ys, x_size: int, y_size: int) -> float:
    """Empirical mutual information of paired sequences in nats."""
    return mi_of(empirical_joint(xs, ys, x_size, y_size))


def kl_divergence(q: JointPMF, p: JointPMF) -> float:
    """KL(q || p) in nats; raises if q is not absolutely continuous wrt p."""
    if q.probs.shape != p.probs.shape:
        raise ValueError("shape mismatch between q and p")
    bad = (q.probs > 0) & (p.probs == 0)
    if np.any(bad):
        a, b = np.argwhere(bad)[0]
        raise SupportViolationError(f"q({a},{b}) > 0 but p({a},{b}) = 0")
    mask = q.probs > 0
    w = q.probs[mask]
    return max(float(np.dot(w, np.log(w) - np.log(p.probs[mask]))), 0.0)


def _kl_vector(qv: np.ndarray, pv: np.ndarray) -> float:
    mask = qv > 0
    if np.any(mask & (pv == 0)):
        raise SupportViolationError("marginal support violation")
    w = qv[mask]
    return float(np.dot(w, np.log(w) - np.log(pv[mask])))


def density_mi_residual(p: JointPMF, xs, ys) -> tuple[float, float]:
    """Both sides of the identity linking empirical MI and average density.

    lhs = empirical MI - (1/n) iota(xs; ys)
    rhs = KL(emp || p) - KL(emp_X || p_X) - KL(emp_Y || p_Y)

    The two agree to within accumulated rounding (callers check ~1e-10).
    """
    xa, ya = _check_sequences(xs, ys, p.x_size, p.y_size)
    n = xa.shape[0]
    emp = empirical_joint(xa, ya, p.x_size, p.y_size)
    lhs = mi_of(emp) - sequence_info_density(p, xa, ya) / n
    rhs = (
        kl_divergence(emp, p)
        - _kl_vector(emp.marginal_x, p.marginal_x)
        - _kl_vector(emp.marginal_y, p.marginal_y)
    )
    return lhs, rhs


def _density_support(p: JointPMF) -> tuple[np.ndarray, np.ndarray]:
    """(values, weights) of iota restricted to the support of p."""
    table = info_density_table(p)
    mask = p.probs > 0
    return table[mask], p.probs[mask]


def cgf(p: JointPMF, lam: float) -> float:
    """log E[exp(lam * iota)] in nats, evaluated by log-sum-exp."""
    if not math.isfinite(lam):
        raise ValueError("lambda must be finite")
    v, w = _density_support(p)
    expo = np.log(w) + lam * v
    m = float(expo.max())
    return m + math.log(float(np.exp(expo - m).sum()))


@dataclass(frozen=True)
class RateEval:
    """Legendre transform of the density CGF at threshold t.

    rate = sup_{lam >= 0} lam * t - cgf(lam), attained at lambda_star.
    lambda_star is math.inf when t equals the maximum attainable density
    (the supremum is a point-mass tilt, rate = -log P[iota = max]).
    """

    threshold_t: float
    lambda_star: float
    rate: float
    cgf_at_lambda: float


def _tilted_mean(v: np.ndarray, logw: np.ndarray, lam: float) -> float:
    expo = logw + lam * v
    expo -= expo.max()
    w = np.exp(expo)
    return float(np.dot(w, v) / w.sum())


_RATE_LAMBDA_TOL = 1e-10
_RATE_LAMBDA_CAP = 1e6


def rate_function(p: JointPMF, t: float) -> RateEval:
    """Large-deviations rate of the density at per-sample threshold t.

    Concave 1-D maximization of g(lam) = lam*t - cgf(lam): bracket the
    stationary point, golden-section, then Newton polish on g' to
    tolerance 1e-10 in lambda.  Requires I <= t <= max iota; t above the
    maximum attainable density raises InfeasibleThresholdError (the rate
    there is +inf).
    """
    v, w = _density_support(p)
    logw = np.log(w)
    mean = float(np.dot(w, v))
    vmax = float(v.max())
    if t < mean - 1e-9:
        raise ValueError(f"threshold t={t!r} is below the mean density {mean!r}")
    if t > vmax + 1e-12:
        raise InfeasibleThresholdError(
            f"threshold t={t!r} exceeds the maximum density {vmax!r}; rate is +inf"
        )
    if t <= mean + 1e-15:
        return RateEval(threshold_t=t, lambda_star=0.0, rate=0.0, cgf_at_lambda=0.0)
    p_top = float(w[v >= vmax - 1e-12].sum())
    if t >= vmax - 1e-12:
        return RateEval(
            threshold_t=t,
            lambda_star=math.inf,
            rate=-math.log(p_top),
            cgf_at_lambda=math.inf,
        )

    def gprime(lam: float) -> float:
        return t - _tilted_mean(v, logw, lam)

    lo, hi = 0.0, 1.0
    while gprime(hi) > 0:
        lo, hi = hi, hi * 2.0
        if hi > _RATE_LAMBDA_CAP:
            # tilted mean saturates below t only at the point-mass limit
            return RateEval(
                threshold_t=t,
                lambda_star=math.inf,
                rate=-math.log(p_top),
                cgf_at_lambda=math.inf,
            )

    def g(lam: float) -> float:
        return lam * t - cgf(p, lam)

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c1 = b - invphi * (b - a)
    c2 = a + invphi * (b - a)
    f1, f2 = g(c1), g(c2)
    while b - a > 1e-8:
        if f1 < f2:
            a, c1, f1 = c1, c2, f2
            c2 = a + invphi * (b - a)
            f2 = g(c2)
        else:
            b, c2, f2 = c2, c1, f1
            c1 = b - invphi * (b - a)
            f1 = g(c1)
    lam = 0.5 * (a + b)
    for _ in range(100):
        expo = logw + lam * v
        expo -= expo.max()
        ww = np.exp(expo)
        m1 = float(np.dot(ww, v) / ww.sum())
        var = float(np.dot(ww, (v - m1) ** 2) / ww.sum())
        if var <= 0:
            break
        step = (t - m1) / var
        lam_new = min(max(lam + step, lo), hi)
        if abs(lam_new - lam) < _RATE_LAMBDA_TOL:
            lam = lam_new
            break
        lam = lam_new
    c = cgf(p, lam)
    return RateEval(
        threshold_t=t,
        lambda_star=lam,
        rate=max(lam * t - c, 0.0),
        cgf_at_lambda=c,
    )
